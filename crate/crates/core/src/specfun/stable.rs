//! Symmetric α-stable laws with characteristic function `exp(−|c·k|^α)`.
//!
//! Under this parametrization α = 1 is the standard Cauchy law and α = 2 is
//! a Gaussian with variance `2c²`. The centred CDF `𝓛_α(x) = F(x) − ½` and
//! the density are obtained by Fourier inversion on half-period panels, or
//! from the convergent/asymptotic tail series once |x| is large.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rand_distr::{Distribution, Exp1, Open01};

use super::erf::{erf, gamma, ln_gamma};
use super::quad::{integrate_with_breaks, QuadOptions};
use crate::error::{Error, Result};

/// |x| beyond which the tail expansion replaces Fourier inversion.
const TAIL_START: f64 = 20.0;
/// Absolute accuracy requested from the inversion integrals.
const INVERSION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableLawParams {
    pub alpha_stable: f64,
    pub scale: f64,
}

impl StableLawParams {
    pub fn new(alpha_stable: f64, scale: f64) -> Result<Self> {
        check_alpha("StableLawParams", alpha_stable)?;
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::domain(
                "StableLawParams",
                format!("scale must be positive, got {scale}"),
            ));
        }
        Ok(Self { alpha_stable, scale })
    }
}

fn check_alpha(op: &'static str, alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 2.0 {
        Ok(())
    } else {
        Err(Error::domain(
            op,
            format!("alpha_stable must lie in (0, 2], got {alpha}"),
        ))
    }
}

/// Draws one variate by the Chambers–Mallows–Stuck transform.
pub fn stable_sample<R: Rng + ?Sized>(params: &StableLawParams, rng: &mut R) -> f64 {
    params.scale * standard_sample(params.alpha_stable, rng)
}

pub(crate) fn standard_sample<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let u: f64 = Open01.sample(rng);
    let v = PI * (u - 0.5);
    if alpha == 1.0 {
        return v.tan();
    }
    let w: f64 = Exp1.sample(rng);
    if alpha == 2.0 {
        return 2.0 * v.sin() * w.sqrt();
    }
    let cos_v = v.cos();
    (alpha * v).sin() / cos_v.powf(1.0 / alpha) * (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha)
}

/// Centred CDF `𝓛_α(x) = ∫₀ˣ L_α`, odd in `x` with limits `±½`.
pub fn stable_cdf_centered(alpha_stable: f64, x: f64) -> Result<f64> {
    check_alpha("stable_cdf_centered", alpha_stable)?;
    if x.is_nan() {
        return Err(Error::domain("stable_cdf_centered", "x is NaN"));
    }
    let a = alpha_stable;
    if x == 0.0 {
        return Ok(0.0);
    }
    if a == 1.0 {
        return Ok(x.atan() / PI);
    }
    if a == 2.0 {
        return Ok(0.5 * erf(0.5 * x));
    }
    let s = x.signum();
    let y = x.abs();
    if y.is_infinite() {
        return Ok(0.5 * s);
    }
    if y >= TAIL_START || (a < 1.0 && y >= 2.0) {
        if let Some(tail) = tail_series(a, y, false) {
            return Ok(s * (0.5 - tail));
        }
    }
    Ok(s * inversion(a, y, false)?)
}

/// Density of the standard (`c = 1`) law.
pub fn stable_pdf(alpha_stable: f64, x: f64) -> Result<f64> {
    check_alpha("stable_pdf", alpha_stable)?;
    if x.is_nan() {
        return Err(Error::domain("stable_pdf", "x is NaN"));
    }
    let a = alpha_stable;
    let y = x.abs();
    if a == 1.0 {
        return Ok(1.0 / (PI * (1.0 + y * y)));
    }
    if a == 2.0 {
        return Ok((-0.25 * y * y).exp() / (2.0 * PI.sqrt()));
    }
    if y.is_infinite() {
        return Ok(0.0);
    }
    if y >= TAIL_START || (a < 1.0 && y >= 2.0) {
        if let Some(p) = tail_series(a, y, true) {
            return Ok(p);
        }
    }
    inversion(a, y, true)
}

/// Tail expansion of `1 − F(y)` (or of the density when `density`).
///
/// Convergent for α < 1 and asymptotic for α > 1; returns `None` when the
/// terms stop shrinking before reaching double precision.
fn tail_series(alpha: f64, y: f64, density: bool) -> Option<f64> {
    let ly = y.ln();
    let mut sum = 0.0;
    let mut prev_mag = f64::INFINITY;
    for n in 1..200u32 {
        let nf = n as f64;
        let na = nf * alpha;
        // log of |Γ(nα [+1]) / n! · y^{−nα [−1]}|
        let lmag = if density {
            ln_gamma(na + 1.0) - ln_gamma(nf + 1.0) - (na + 1.0) * ly
        } else {
            ln_gamma(na) - ln_gamma(nf + 1.0) - na * ly
        };
        let mag = lmag.exp();
        if n > 1 && mag > prev_mag {
            return None;
        }
        prev_mag = mag;
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        sum += sign * mag * (0.5 * na * PI).sin();
        if mag <= 1e-17 * sum.abs() {
            return Some(sum / PI);
        }
    }
    None
}

/// Fourier inversion on `[0, K]` with breakpoints at the half periods of
/// the oscillating factor. Returns `𝓛_α(y)` or the density.
fn inversion(alpha: f64, y: f64, density: bool) -> Result<f64> {
    // exp(−k^α) < 1e−17 beyond K
    let k_max = 40f64.powf(1.0 / alpha);
    let mut breaks = vec![0.0];
    let half = PI / y;
    let panels = (k_max / half).ceil() as usize;
    if panels <= 20_000 {
        breaks.extend((1..panels).map(|j| j as f64 * half));
    }
    // resolve the decay envelope near the origin as well
    let mut k = 0.25;
    while k < k_max {
        breaks.push(k);
        k *= 2.0;
    }
    breaks.push(k_max);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let opts = QuadOptions {
        abs_tol: INVERSION_TOL,
        rel_tol: 0.0,
        max_intervals: breaks.len() + 4000,
    };
    let r = if density {
        integrate_with_breaks(|k| (k * y).cos() * (-k.powf(alpha)).exp(), &breaks, opts)?
    } else {
        integrate_with_breaks(
            |k| {
                if k == 0.0 {
                    y
                } else {
                    (k * y).sin() / k * (-k.powf(alpha)).exp()
                }
            },
            &breaks,
            opts,
        )?
    };
    Ok(r.value / PI)
}

/// `∫ L_α(u)² du` by quadrature of the squared density on |u| ≤ 50 plus
/// the power-law tail `L_α(u) ≈ C(α)/|u|^{1+α}` beyond.
pub fn k_alpha(alpha_stable: f64) -> Result<f64> {
    check_alpha("k_alpha", alpha_stable)?;
    let a = alpha_stable;
    let table = StableTable::new(a, 50.0, 0.02)?;
    let breaks: Vec<f64> = (0..=50).map(|i| i as f64).collect();
    let core = integrate_with_breaks(
        |u| {
            let p = table.pdf(u);
            p * p
        },
        &breaks,
        QuadOptions {
            abs_tol: 1e-9,
            rel_tol: 1e-9,
            max_intervals: 4000,
        },
    )?
    .value;
    let tail = if a < 2.0 {
        let c = gamma(a + 1.0) * (FRAC_PI_2 * a).sin() / PI;
        c * c * 50f64.powf(-1.0 - 2.0 * a) / (1.0 + 2.0 * a)
    } else {
        0.0
    };
    Ok(2.0 * (core + tail))
}

/// Tabulated `𝓛_α` and density on `[0, x_max]` with cubic Hermite
/// interpolation; outside the table the tail series (or direct inversion)
/// takes over. Used on hot Monte-Carlo paths.
#[derive(Debug, Clone)]
pub struct StableTable {
    alpha: f64,
    step: f64,
    x_max: f64,
    cdf: Vec<f64>,
    pdf: Vec<f64>,
}

impl StableTable {
    pub fn new(alpha_stable: f64, x_max: f64, step: f64) -> Result<Self> {
        check_alpha("StableTable", alpha_stable)?;
        if !(step > 0.0 && x_max > step) {
            return Err(Error::domain("StableTable", "need 0 < step < x_max"));
        }
        let n = (x_max / step).ceil() as usize;
        let mut cdf = Vec::with_capacity(n + 1);
        let mut pdf = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let x = i as f64 * step;
            cdf.push(stable_cdf_centered(alpha_stable, x)?);
            pdf.push(stable_pdf(alpha_stable, x)?);
        }
        Ok(Self {
            alpha: alpha_stable,
            step,
            x_max: n as f64 * step,
            cdf,
            pdf,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Interpolated `𝓛_α(x)`.
    pub fn cdf_centered(&self, x: f64) -> f64 {
        let y = x.abs();
        let v = if y >= self.x_max {
            stable_cdf_centered(self.alpha, y).unwrap_or(0.5)
        } else {
            let (i, s) = self.locate(y);
            let h = self.step;
            // cubic Hermite with the density as derivative
            let (s2, s3) = (s * s, s * s * s);
            let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
            let h10 = s3 - 2.0 * s2 + s;
            let h01 = -2.0 * s3 + 3.0 * s2;
            let h11 = s3 - s2;
            h00 * self.cdf[i] + h10 * h * self.pdf[i] + h01 * self.cdf[i + 1] + h11 * h * self.pdf[i + 1]
        };
        if x < 0.0 {
            -v
        } else {
            v
        }
    }

    /// Linearly interpolated density.
    pub fn pdf(&self, x: f64) -> f64 {
        let y = x.abs();
        if y >= self.x_max {
            return stable_pdf(self.alpha, y).unwrap_or(0.0);
        }
        let (i, s) = self.locate(y);
        // Hermite on the CDF implies a quadratic-in-s density; use its derivative.
        let h = self.step;
        let (c0, c1, p0, p1) = (self.cdf[i], self.cdf[i + 1], self.pdf[i], self.pdf[i + 1]);
        let d00 = 6.0 * s * s - 6.0 * s;
        let d10 = 3.0 * s * s - 4.0 * s + 1.0;
        let d01 = -d00;
        let d11 = 3.0 * s * s - 2.0 * s;
        (d00 * c0 + d01 * c1) / h + d10 * p0 + d11 * p1
    }

    fn locate(&self, y: f64) -> (usize, f64) {
        let u = y / self.step;
        let i = (u.floor() as usize).min(self.cdf.len() - 2);
        (i, u - i as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Independent oracle: trapezoid rule on a fine uniform k-grid.
    fn cdf_oracle(alpha: f64, x: f64) -> f64 {
        let k_max = 40f64.powf(1.0 / alpha);
        let n = 400_000;
        let h = k_max / n as f64;
        let f = |k: f64| {
            if k == 0.0 {
                x
            } else {
                (k * x).sin() / k * (-k.powf(alpha)).exp()
            }
        };
        let mut s = 0.5 * (f(0.0) + f(k_max));
        for i in 1..n {
            s += f(i as f64 * h);
        }
        s * h / PI
    }

    #[test]
    fn closed_forms() {
        assert!((stable_cdf_centered(1.0, 1.0).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(stable_cdf_centered(1.5, 0.0).unwrap(), 0.0);
        assert!((stable_cdf_centered(2.0, 1.0).unwrap() - 0.5 * erf(0.5)).abs() < 1e-15);
    }

    #[test]
    fn inversion_matches_cauchy_and_gauss() {
        for x in [0.1, 1.0, 3.0, 15.0] {
            assert!((inversion(1.0, x, false).unwrap() - x.atan() / PI).abs() < 1e-10);
            assert!((inversion(2.0, x, false).unwrap() - 0.5 * erf(0.5 * x)).abs() < 1e-10);
            let cauchy = 1.0 / (PI * (1.0 + x * x));
            assert!((inversion(1.0, x, true).unwrap() - cauchy).abs() < 1e-10);
        }
    }

    #[test]
    fn alpha_three_halves_against_trapezoid() {
        let v = stable_cdf_centered(1.5, 2.0).unwrap();
        assert!((v - cdf_oracle(1.5, 2.0)).abs() < 1e-8);
    }

    #[test]
    fn tail_series_joins_inversion() {
        for a in [0.7, 1.5, 1.8] {
            let series = 0.5 - tail_series(a, 20.0, false).unwrap();
            let direct = inversion(a, 20.0, false).unwrap();
            assert!((series - direct).abs() < 1e-9, "alpha {a}: {series} vs {direct}");
            let ps = tail_series(a, 20.0, true).unwrap();
            let pd = inversion(a, 20.0, true).unwrap();
            assert!((ps - pd).abs() < 1e-10, "alpha {a}: {ps} vs {pd}");
        }
    }

    #[test]
    fn domain_errors() {
        assert!(stable_cdf_centered(0.0, 1.0).is_err());
        assert!(stable_cdf_centered(2.1, 1.0).is_err());
        assert!(StableLawParams::new(1.5, 0.0).is_err());
    }

    #[test]
    fn k_alpha_matches_parseval() {
        // ∫L² = (1/π)∫₀^∞ e^{−2k^α} dk = Γ(1 + 1/α) / (π 2^{1/α})
        for a in [1.0, 1.5, 2.0] {
            let exact = gamma(1.0 + 1.0 / a) / (PI * 2f64.powf(1.0 / a));
            let k = k_alpha(a).unwrap();
            assert!((k - exact).abs() < 1e-6, "alpha {a}: {k} vs {exact}");
        }
        assert!((k_alpha(1.0).unwrap() - 1.0 / (2.0 * PI)).abs() < 1e-6);
        assert!((k_alpha(2.0).unwrap() - 1.0 / (2.0 * (2.0 * PI).sqrt())).abs() < 1e-6);
    }

    #[test]
    fn table_interpolation_accuracy() {
        let t = StableTable::new(1.5, 20.0, 0.01).unwrap();
        for x in [0.005, 0.37, 1.234, 7.77, -3.3, 19.99, 25.0] {
            let d = stable_cdf_centered(1.5, x).unwrap();
            assert!((t.cdf_centered(x) - d).abs() < 1e-9, "x = {x}");
            let p = stable_pdf(1.5, x).unwrap();
            assert!((t.pdf(x) - p).abs() < 1e-6, "x = {x}");
        }
    }

    #[test]
    fn gaussian_sampler_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 200_000;
        let mut s2 = 0.0;
        for _ in 0..n {
            let x = standard_sample(2.0, &mut rng);
            s2 += x * x;
        }
        assert!((s2 / n as f64 - 2.0).abs() < 0.03);
    }
}
