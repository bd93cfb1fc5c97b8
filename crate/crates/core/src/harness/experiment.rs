//! Conditioned Monte-Carlo ensembles.

use std::sync::OnceLock;

use rand::Rng;

use super::config::{ExperimentConfig, PricingRule};
use super::stats::{chunked_reduce, merge_all, Moments};
use crate::error::{Error, Result};
use crate::estimators::{
    nu_bayes_cutoff_asym, nu_bayes_exact, nu_bayes_flat_asym, nu_bayes_powerlaw_asym, nu_mle, EstimatorMethod,
};
use crate::marketmaker::{
    posterior_g_cutoff_asym, posterior_g_exact, posterior_g_flat_asym, posterior_g_known_nu, posterior_g_levy_table,
    posterior_g_powerlaw_asym, posterior_g_volume, quote_bid_ask, PosteriorInput, PriorSpec,
};
use crate::orderflow::{
    gen_correlated_flow, gen_fundamental, gen_unit_flow_with, path_rng, sample_imbalance_on_grid, Channel,
    CirculantEmbedding, FlowModel, MetaOrderSchedule,
};
use crate::specfun::{erf, StableTable};
use crate::theory::correlated_sigma;

/// Ensemble statistics of the recorded quantity on the recording grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpactCurve {
    pub grid: Vec<usize>,
    pub mean_dp: Vec<f64>,
    pub var_dp: Vec<f64>,
    /// Standard error of `mean_dp`. With antithetic pairs it is computed
    /// from the pair averages, which are the independent samples.
    pub stderr: Vec<f64>,
    pub n_paths: usize,
}

/// Table of lazily computed values per `(grid index, n_t)`.
struct CellTable {
    cells: Vec<Vec<OnceLock<Result<f64>>>>,
}

impl CellTable {
    fn new(grid: &[usize]) -> Self {
        Self {
            cells: grid
                .iter()
                .map(|&t| (0..=t).map(|_| OnceLock::new()).collect())
                .collect(),
        }
    }

    fn get(&self, gi: usize, n: u64, f: impl FnOnce() -> Result<f64>) -> Result<f64> {
        self.cells[gi][n as usize].get_or_init(f).clone()
    }
}

type CountRule = Box<dyn Fn(u64, u64) -> Result<f64> + Sync>;

/// Maps the observation at a grid point to the recorded quantity.
enum Pricer {
    Counts { table: CellTable, rule: CountRule },
    Volume { sigma_v: f64, p_up: f64 },
    Levy { table: StableTable, sigma_v: f64 },
    Correlated { sigma: Vec<f64> },
}

impl Pricer {
    fn value(&self, gi: usize, t: usize, imbalance: f64) -> Result<f64> {
        match self {
            Pricer::Counts { table, rule } => {
                // ΔV = 2n − t holds exact small integers
                let n = ((t as i64 + imbalance as i64) / 2) as u64;
                table.get(gi, n, || rule(n, t as u64))
            }
            Pricer::Volume { sigma_v, p_up } => posterior_g_volume(imbalance, t as u64, *sigma_v, *p_up),
            Pricer::Levy { table, sigma_v } => Ok(posterior_g_levy_table(imbalance, t as u64, *sigma_v, table)),
            Pricer::Correlated { sigma } => Ok(erf(imbalance / (std::f64::consts::SQRT_2 * sigma[gi]))),
        }
    }
}

fn xi_of(n: u64, t: u64) -> f64 {
    PosteriorInput::Counts { n_buys: n, t }.xi()
}

fn price_rule(config: &ExperimentConfig) -> Result<CountRule> {
    let prior = config.market.prior;
    let nu = config.market.schedule.participation;
    Ok(match config.pricing_rule {
        PricingRule::Exact => Box::new(move |n, t| posterior_g_exact(&PosteriorInput::Counts { n_buys: n, t }, &prior)),
        PricingRule::KnownNu => Box::new(move |n, t| posterior_g_known_nu(n, t, nu)),
        PricingRule::Asymptotic => match prior {
            PriorSpec::Flat => Box::new(|n, t| Ok(posterior_g_flat_asym(xi_of(n, t)))),
            PriorSpec::Cutoff { nu_bar } => {
                Box::new(move |n, t| posterior_g_cutoff_asym(xi_of(n, t), nu_bar * (t as f64).sqrt()))
            }
            PriorSpec::PowerLaw { k } => Box::new(move |n, t| posterior_g_powerlaw_asym(xi_of(n, t), k)),
        },
    })
}

fn estimator_rule(config: &ExperimentConfig, method: EstimatorMethod) -> Result<CountRule> {
    let prior = config.market.prior;
    Ok(match (method, prior) {
        (EstimatorMethod::BayesExact, _) => Box::new(move |n, t| Ok(nu_bayes_exact(n, t, &prior)?.nu_hat)),
        (EstimatorMethod::BayesFlat, _) => Box::new(|n, t| nu_bayes_flat_asym(xi_of(n, t), t as f64)),
        (EstimatorMethod::BayesCutoff, PriorSpec::Cutoff { nu_bar }) => {
            Box::new(move |n, t| nu_bayes_cutoff_asym(xi_of(n, t), t as f64, nu_bar))
        }
        (EstimatorMethod::BayesPowerLaw, PriorSpec::PowerLaw { k }) => {
            Box::new(move |n, t| nu_bayes_powerlaw_asym(xi_of(n, t), t as f64, k))
        }
        (EstimatorMethod::Mle, _) => Box::new(|n, t| {
            let r = nu_mle(xi_of(n, t), t as f64);
            if r.converged {
                Ok(r.nu_hat)
            } else {
                Err(Error::NonConvergence {
                    op: "nu_mle",
                    detail: format!("n = {n}, t = {t}"),
                })
            }
        }),
        (m, p) => return Err(Error::Config(format!("estimator {m:?} does not match prior {p:?}"))),
    })
}

fn impact_pricer(config: &ExperimentConfig, grid: &[usize]) -> Result<Pricer> {
    let market = &config.market;
    Ok(match market.flow {
        FlowModel::UnitBinary => Pricer::Counts {
            table: CellTable::new(grid),
            rule: price_rule(config)?,
        },
        FlowModel::GaussianVolume { sigma_v } => Pricer::Volume {
            sigma_v,
            p_up: market.p_up.unwrap_or(0.5),
        },
        FlowModel::LevyVolume { alpha, sigma_v } => Pricer::Levy {
            table: StableTable::new(alpha, 20.0, 0.01)?,
            sigma_v,
        },
        flow @ (FlowModel::CorrelatedExp { .. } | FlowModel::CorrelatedPower { .. }) => Pricer::Correlated {
            sigma: grid
                .iter()
                .map(|&t| correlated_sigma(t, &flow))
                .collect::<Result<_>>()?,
        },
    })
}

/// Draws paths and records one observation vector per path.
struct Simulator<'a> {
    config: &'a ExperimentConfig,
    grid: &'a [usize],
    embedding: Option<CirculantEmbedding>,
}

/// One simulated path reduced to the grid.
struct Sample {
    imbalance: Vec<f64>,
    fundamental: Option<Vec<f64>>,
}

impl<'a> Simulator<'a> {
    fn new(config: &'a ExperimentConfig, grid: &'a [usize]) -> Result<Self> {
        let flow = config.market.flow;
        let embedding = if flow.is_correlated() {
            Some(CirculantEmbedding::new(&flow, config.t_max.max(2))?)
        } else {
            None
        };
        Ok(Self {
            config,
            grid,
            embedding,
        })
    }

    fn schedule(&self, unit: u64) -> MetaOrderSchedule {
        let mut s = self.config.market.schedule;
        if let Some(p) = self.config.market.p_up {
            let u: f64 = path_rng(self.config.master_seed, unit, Channel::Direction).random();
            s.direction = if u < p { 1 } else { -1 };
        }
        s
    }

    /// The path drawn from stream `unit`, with mirrored noise if asked.
    fn sample(&self, unit: u64, mirror: bool) -> Result<Sample> {
        let cfg = self.config;
        let market = &cfg.market;
        let schedule = self.schedule(unit);
        let mut rng = path_rng(cfg.master_seed, unit, Channel::Flow);
        let imbalance = match market.flow {
            FlowModel::UnitBinary => {
                let path = gen_unit_flow_with(&schedule, cfg.t_max, &mut rng, mirror);
                self.grid.iter().map(|&t| path.cum_imbalance[t]).collect()
            }
            FlowModel::GaussianVolume { .. } | FlowModel::LevyVolume { .. } => {
                sample_imbalance_on_grid(&schedule, &market.flow, self.grid, &mut rng, mirror)?
            }
            FlowModel::CorrelatedExp { .. } | FlowModel::CorrelatedPower { .. } => {
                let embedding = self
                    .embedding
                    .as_ref()
                    .expect("embedding prepared for correlated flows");
                let path = gen_correlated_flow(&schedule, embedding, &mut rng, mirror);
                self.grid.iter().map(|&t| path.cum_imbalance[t]).collect()
            }
        };
        let fundamental = if market.include_fundamental {
            let mut frng = path_rng(cfg.master_seed, unit, Channel::Fundamental);
            let f = gen_fundamental(&market.fundamental, schedule.participation, cfg.t_max, &mut frng);
            let flip = if mirror { -1.0 } else { 1.0 };
            Some(self.grid.iter().map(|&t| flip * f[t]).collect())
        } else {
            None
        };
        Ok(Sample { imbalance, fundamental })
    }
}

#[derive(Clone)]
struct CurveAcc {
    path: Vec<Moments>,
    unit: Vec<Moments>,
}

impl CurveAcc {
    fn new(n: usize) -> Self {
        Self {
            path: vec![Moments::default(); n],
            unit: vec![Moments::default(); n],
        }
    }

    fn merge(&mut self, other: CurveAcc) {
        merge_all(&mut self.path, &other.path);
        merge_all(&mut self.unit, &other.unit);
    }
}

/// Runs the ensemble, recording `record(sample, grid index)` on every path.
fn run_curve<F>(config: &ExperimentConfig, record: F) -> Result<ImpactCurve>
where
    F: Fn(&Sample, usize) -> Result<f64> + Sync,
{
    config.validate()?;
    let grid = &config.record_grid;
    let sim = Simulator::new(config, grid)?;
    let g = grid.len();
    let per_unit = if config.antithetic { 2 } else { 1 };
    let n_units = config.n_paths / per_unit;

    let work = |lo: usize, hi: usize| -> Result<CurveAcc> {
        let mut acc = CurveAcc::new(g);
        let mut values = vec![0.0; g];
        for unit in lo..hi {
            values.iter_mut().for_each(|v| *v = 0.0);
            for k in 0..per_unit {
                let path_index = unit * per_unit + k;
                let sample = sim.sample(unit as u64, k == 1).map_err(|e| e.at_path(path_index))?;
                for (gi, slot) in values.iter_mut().enumerate() {
                    let v = record(&sample, gi).map_err(|e| e.at_path(path_index))?;
                    acc.path[gi].push(v);
                    *slot += v;
                }
            }
            for (gi, v) in values.iter().enumerate() {
                acc.unit[gi].push(v / per_unit as f64);
            }
        }
        Ok(acc)
    };
    let acc = chunked_reduce(n_units, config.workers, CurveAcc::new(g), work, CurveAcc::merge)?;

    Ok(ImpactCurve {
        grid: grid.clone(),
        mean_dp: acc.path.iter().map(|m| m.mean).collect(),
        var_dp: acc.path.iter().map(|m| m.variance()).collect(),
        stderr: acc
            .unit
            .iter()
            .map(|m| (m.variance() / m.count as f64).sqrt())
            .collect(),
        n_paths: config.n_paths,
    })
}

/// Ensemble of `Δp_t = θ·E[G | data_t]` (plus `F_t` when the fundamental is
/// on) conditioned on a meta-order starting at `t = 0`.
pub fn run_impact_experiment(config: &ExperimentConfig) -> Result<ImpactCurve> {
    config.validate()?;
    let pricer = impact_pricer(config, &config.record_grid)?;
    let theta = config.market.theta();
    let grid = &config.record_grid;
    run_curve(config, |s, gi| {
        let mut dp = theta * pricer.value(gi, grid[gi], s.imbalance[gi])?;
        if let Some(f) = &s.fundamental {
            dp += f[gi];
        }
        Ok(dp)
    })
}

/// Ensemble mean of a participation-rate estimator on unit flows.
pub fn run_estimator_experiment(config: &ExperimentConfig, method: EstimatorMethod) -> Result<ImpactCurve> {
    config.validate()?;
    if config.market.flow != FlowModel::UnitBinary {
        return Err(Error::Config("estimator experiments need a unit flow".into()));
    }
    let pricer = Pricer::Counts {
        table: CellTable::new(&config.record_grid),
        rule: estimator_rule(config, method)?,
    };
    let grid = &config.record_grid;
    run_curve(config, |s, gi| pricer.value(gi, grid[gi], s.imbalance[gi]))
}

/// Ensemble mean of the quoted bid-ask spread `ask − bid` for the next
/// trade, on unit or Gaussian-volume flows.
pub fn run_spread_experiment(config: &ExperimentConfig) -> Result<ImpactCurve> {
    config.validate()?;
    let theta = config.market.theta();
    let grid = &config.record_grid;
    let xi_scale = match config.market.flow {
        FlowModel::UnitBinary => 1.0,
        FlowModel::GaussianVolume { sigma_v } => sigma_v,
        _ => {
            return Err(Error::Config(
                "spread experiments need a unit or Gaussian-volume flow".into(),
            ))
        }
    };
    run_curve(config, |s, gi| {
        let t = grid[gi];
        let xi = s.imbalance[gi] / (xi_scale * (t as f64).sqrt());
        Ok(quote_bid_ask(xi, t as u64, theta)?.spread)
    })
}

/// Ensemble variance of `Δp_τ` with the fundamental switched on, to be
/// compared with `σ_τ² + θ²/3`.
pub fn run_variance_experiment(config: &ExperimentConfig) -> Result<ImpactCurve> {
    if !config.market.include_fundamental {
        return Err(Error::Config(
            "variance experiments need include_fundamental = true".into(),
        ));
    }
    run_impact_experiment(config)
}

/// Price change binned by terminal volume imbalance.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatedImpact {
    /// Time at which paths are binned.
    pub t: usize,
    /// `n_bins + 1` bin edges in `ΔV`.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub mean_dv: Vec<f64>,
    pub mean_dp: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Central-difference slope of `E[Δp | ΔV]` at `ΔV = 0`.
    pub lambda: f64,
}

/// Minimum population of each of the two central bins.
pub const MIN_CENTRAL_BIN: usize = 100;

/// Bins paths by `ΔV_{t_max}` over `±4σ_v√t_max` and estimates the
/// aggregated-impact slope `Λ` from the two bins adjacent to zero.
pub fn run_aggregated_impact(config: &ExperimentConfig, n_bins: usize) -> Result<AggregatedImpact> {
    config.validate()?;
    let FlowModel::GaussianVolume { sigma_v } = config.market.flow else {
        return Err(Error::Config("aggregated impact needs a Gaussian-volume flow".into()));
    };
    if n_bins < 2 || !n_bins.is_multiple_of(2) {
        return Err(Error::Config(format!(
            "n_bins must be even and at least 2, got {n_bins}"
        )));
    }
    let t = config.t_max;
    let grid = [t];
    let sim = Simulator::new(config, &grid)?;
    let pricer = impact_pricer(config, &grid)?;
    let theta = config.market.theta();
    let half = 4.0 * sigma_v * (t as f64).sqrt();
    let width = 2.0 * half / n_bins as f64;
    let edges: Vec<f64> = (0..=n_bins).map(|i| -half + width * i as f64).collect();
    let per_unit = if config.antithetic { 2 } else { 1 };

    type BinAcc = (Vec<Moments>, Vec<Moments>);
    let work = |lo: usize, hi: usize| -> Result<BinAcc> {
        let mut dv = vec![Moments::default(); n_bins];
        let mut dp = vec![Moments::default(); n_bins];
        for unit in lo..hi {
            for k in 0..per_unit {
                let path_index = unit * per_unit + k;
                let s = sim.sample(unit as u64, k == 1).map_err(|e| e.at_path(path_index))?;
                let v = s.imbalance[0];
                let mut p = theta * pricer.value(0, t, v).map_err(|e| e.at_path(path_index))?;
                if let Some(f) = &s.fundamental {
                    p += f[0];
                }
                let b = ((v + half) / width).floor();
                if b >= 0.0 && (b as usize) < n_bins {
                    dv[b as usize].push(v);
                    dp[b as usize].push(p);
                }
            }
        }
        Ok((dv, dp))
    };
    let init = (vec![Moments::default(); n_bins], vec![Moments::default(); n_bins]);
    let (dv, dp) = chunked_reduce(config.n_paths / per_unit, config.workers, init, work, |a, b| {
        merge_all(&mut a.0, &b.0);
        merge_all(&mut a.1, &b.1);
    })?;

    let counts: Vec<usize> = dv.iter().map(|m| m.count as usize).collect();
    for bin in [n_bins / 2 - 1, n_bins / 2] {
        if counts[bin] < MIN_CENTRAL_BIN {
            return Err(Error::InsufficientBin {
                bin,
                count: counts[bin],
                required: MIN_CENTRAL_BIN,
            });
        }
    }
    let (lo, hi) = (n_bins / 2 - 1, n_bins / 2);
    let lambda = (dp[hi].mean - dp[lo].mean) / (dv[hi].mean - dv[lo].mean);
    Ok(AggregatedImpact {
        t,
        edges,
        counts,
        mean_dv: dv.iter().map(|m| m.mean).collect(),
        mean_dp: dp.iter().map(|m| m.mean).collect(),
        stderr: dp
            .iter()
            .map(|m| {
                if m.count > 0 {
                    (m.variance() / m.count as f64).sqrt()
                } else {
                    0.0
                }
            })
            .collect(),
        lambda,
    })
}
