use impactlab::harness::Moments;
use impactlab::orderflow::{
    gen_fundamental, gen_levy_flow, gen_unit_flow, gen_volume_flow, path_rng, sample_imbalance_on_grid, AfterMode,
    Channel, FlowModel, FundamentalSpec, MetaOrderSchedule,
};
use impactlab::specfun::{stable_sample, StableLawParams};

const PATHS: u64 = 40_000;

fn moments(values: impl Iterator<Item = f64>) -> Moments {
    let mut m = Moments::default();
    values.for_each(|v| m.push(v));
    m
}

/// Asserts mean and variance within three standard errors of their targets.
fn assert_moments(m: &Moments, mean: f64, var: f64, what: &str) {
    let n = m.count as f64;
    let se_mean = (m.variance() / n).sqrt();
    assert!(
        (m.mean - mean).abs() <= 3.0 * se_mean,
        "{what}: mean {} vs {mean}",
        m.mean
    );
    // near-normal counts: the sample variance has stderr σ²√(2/n)
    let se_var = var * (2.0 / n).sqrt();
    assert!(
        (m.variance() - var).abs() <= 3.0 * se_var,
        "{what}: var {} vs {var}",
        m.variance()
    );
}

fn buys(schedule: &MetaOrderSchedule, t_max: usize, t: usize, seed: u64) -> Moments {
    moments((0..PATHS).map(|p| {
        let path = gen_unit_flow(schedule, t_max, &mut path_rng(seed, p, Channel::Flow));
        path.n_buys(t) as f64
    }))
}

#[test]
fn unit_flow_counts_are_binomial() {
    let (nu, t) = (0.2, 200);
    for direction in [1i8, -1] {
        let s = MetaOrderSchedule::new(direction, nu, t, AfterMode::Stop).unwrap();
        let m = buys(&s, t, t, 5);
        let g = f64::from(direction);
        let n = t as f64;
        assert_moments(&m, (1.0 + nu * g) * n / 2.0, (1.0 - nu * nu) * n / 4.0, "binomial");
    }
}

#[test]
fn stopped_order_reduces_count_variance() {
    let (nu, horizon, t) = (0.3, 100, 300);
    let s = MetaOrderSchedule::new(1, nu, horizon, AfterMode::Stop).unwrap();
    let m = buys(&s, t, t, 7);
    let q = nu * horizon as f64;
    let tf = t as f64;
    assert_moments(&m, tf / 2.0 + q / 2.0, tf / 4.0 - nu * q / 4.0, "stop mode");
}

#[test]
fn reversed_order_drifts_back() {
    let (nu, horizon) = (0.2, 100);
    let s = MetaOrderSchedule::new(-1, nu, horizon, AfterMode::Reverse).unwrap();
    for t in [150usize, 200] {
        let m = buys(&s, t, t, 11);
        let tf = t as f64;
        let q = nu * horizon as f64;
        let mean = tf / 2.0 - (q - nu * tf / 2.0);
        let se = (m.variance() / m.count as f64).sqrt();
        assert!((m.mean - mean).abs() <= 3.0 * se, "t {t}: {} vs {mean}", m.mean);
    }
}

#[test]
fn unit_paths_have_sign_steps_and_parity() {
    let s = MetaOrderSchedule::new(1, 0.5, 50, AfterMode::Reverse).unwrap();
    let path = gen_unit_flow(&s, 120, &mut path_rng(3, 0, Channel::Flow));
    assert!(path.steps.iter().all(|&x| x == 1.0 || x == -1.0));
    for (t, &y) in path.cum_imbalance.iter().enumerate() {
        assert_eq!((y as i64 - t as i64).rem_euclid(2), 0);
    }
    assert_eq!(path.fundamental[0], 0.0);
}

#[test]
fn identical_seeds_give_identical_paths() {
    let s = MetaOrderSchedule::new(1, 0.1, 500, AfterMode::Stop).unwrap();
    let levy = FlowModel::LevyVolume {
        alpha: 1.3,
        sigma_v: 2.0,
    };
    let a = gen_levy_flow(&s, &levy, 500, &mut path_rng(9, 4, Channel::Flow), false).unwrap();
    let b = gen_levy_flow(&s, &levy, 500, &mut path_rng(9, 4, Channel::Flow), false).unwrap();
    assert_eq!(a, b);
    let c = gen_levy_flow(&s, &levy, 500, &mut path_rng(9, 5, Channel::Flow), false).unwrap();
    assert_ne!(a, c);
}

#[test]
fn grid_sampler_matches_full_gaussian_paths() {
    let (chi, sigma_v) = (0.1, 1.5);
    let flow = FlowModel::GaussianVolume { sigma_v };
    let s = MetaOrderSchedule::new(1, chi, 300, AfterMode::Stop).unwrap();
    let grid = [10usize, 300, 600];
    let sampled: Vec<Vec<f64>> = (0..PATHS)
        .map(|p| sample_imbalance_on_grid(&s, &flow, &grid, &mut path_rng(13, p, Channel::Flow), false).unwrap())
        .collect();
    let full: Vec<Vec<f64>> = (0..PATHS)
        .map(|p| {
            let path = gen_volume_flow(&s, &flow, 600, &mut path_rng(17, p, Channel::Flow), false).unwrap();
            grid.iter().map(|&t| path.cum_imbalance[t]).collect()
        })
        .collect();
    for (i, &t) in grid.iter().enumerate() {
        let drift = s.cumulative_drift(t);
        let var = sigma_v * sigma_v * t as f64;
        assert_moments(&moments(sampled.iter().map(|v| v[i])), drift, var, "grid sampler");
        assert_moments(&moments(full.iter().map(|v| v[i])), drift, var, "full path");
    }
}

#[test]
fn fundamental_is_a_martingale_with_calibrated_steps() {
    let spec = FundamentalSpec::new(2.0, 0.5).unwrap();
    let nu = 0.04;
    let t = 100;
    let m = moments((0..PATHS).map(|p| gen_fundamental(&spec, nu, t, &mut path_rng(19, p, Channel::Fundamental))[t]));
    let sd = spec.step_std(nu);
    assert!((sd - 0.5 * 2.0 * 0.2).abs() < 1e-15);
    assert_moments(&m, 0.0, sd * sd * t as f64, "fundamental");
}

/// Two-sample Kolmogorov–Smirnov statistic.
fn ks_statistic(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

#[test]
fn stable_sums_are_stable() {
    let n = 10_000usize;
    let terms = 64;
    // two-sample KS critical value at p = 0.01
    let critical = 1.628 * (2.0 / n as f64).sqrt();
    for alpha in [1.0, 1.5, 2.0] {
        let params = StableLawParams::new(alpha, 1.0).unwrap();
        let mut rng = path_rng(23, alpha.to_bits(), Channel::Flow);
        let single: Vec<f64> = (0..n).map(|_| stable_sample(&params, &mut rng)).collect();
        let norm = (terms as f64).powf(1.0 / alpha);
        let sums: Vec<f64> = (0..n)
            .map(|_| (0..terms).map(|_| stable_sample(&params, &mut rng)).sum::<f64>() / norm)
            .collect();
        let d = ks_statistic(single, sums);
        assert!(d < critical, "α {alpha}: KS {d} ≥ {critical}");
    }
}
