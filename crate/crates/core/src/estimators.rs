//! Estimators of the participation rate ν from the observed flow.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};
use crate::marketmaker::{posterior_moments, PriorSpec};
use crate::specfun::quad::{integrate_with_breaks, QuadOptions};
use crate::specfun::{erf, erfcx, gamma_ratio, kummer_1f1, KUMMER_MAX_ARG};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorMethod {
    BayesFlat,
    BayesCutoff,
    BayesPowerLaw,
    BayesExact,
    Mle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorResult {
    pub nu_hat: f64,
    pub method: EstimatorMethod,
    pub converged: bool,
    pub iterations: u32,
}

impl EstimatorResult {
    fn direct(nu_hat: f64, method: EstimatorMethod) -> Self {
        Self {
            nu_hat,
            method,
            converged: true,
            iterations: 0,
        }
    }
}

/// Posterior mean of ν by quadrature.
pub fn nu_bayes_exact(n_buys: u64, t: u64, prior: &PriorSpec) -> Result<EstimatorResult> {
    let m = posterior_moments(n_buys, t, prior)?;
    Ok(EstimatorResult::direct(m.expected_nu(), EstimatorMethod::BayesExact))
}

fn check_t(op: &'static str, t: f64) -> Result<()> {
    if t >= 1.0 {
        Ok(())
    } else {
        Err(Error::domain(op, format!("t must be at least 1, got {t}")))
    }
}

/// Flat-prior scaling form `√(2/(πt))e^{−ξ²/2} + (ξ/√t)·erf(ξ/√2)`.
pub fn nu_bayes_flat_asym(xi: f64, t: f64) -> Result<f64> {
    check_t("nu_bayes_flat_asym", t)?;
    Ok((2.0 / (PI * t)).sqrt() * (-0.5 * xi * xi).exp() + xi / t.sqrt() * erf(xi / SQRT_2))
}

/// Power-law-prior scaling form via Kummer functions.
pub fn nu_bayes_powerlaw_asym(xi: f64, t: f64, k: f64) -> Result<f64> {
    check_t("nu_bayes_powerlaw_asym", t)?;
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::domain(
            "nu_bayes_powerlaw_asym",
            format!("k must be positive, got {k}"),
        ));
    }
    let x = 0.5 * xi * xi;
    if x <= KUMMER_MAX_ARG {
        // ₁F₁(−k/2,½,−x)/₁F₁((1−k)/2,½,−x) = ₁F₁((1+k)/2,½,x)/₁F₁(k/2,½,x)
        let num = kummer_1f1(0.5 * (1.0 + k), 0.5, x)?;
        let den = kummer_1f1(0.5 * k, 0.5, x)?;
        return Ok((2.0 / t).sqrt() * gamma_ratio(0.5 * (k + 1.0), 0.5 * k) * num / den);
    }
    // ∫|γ|^k e^{−(γ−ξ)²/2} / ∫|γ|^{k−1} e^{−(γ−ξ)²/2}; the far side is negligible here.
    let a = xi.abs();
    let moment = |m: f64| -> Result<f64> {
        let f = |g: f64| (m * g.ln() - 0.5 * (g - a) * (g - a)).exp();
        Ok(integrate_with_breaks(f, &[(a - 40.0).max(0.0), a, a + 40.0], QuadOptions::relative(1e-12))?.value)
    };
    Ok(moment(k)? / moment(k - 1.0)? / t.sqrt())
}

/// Cutoff-prior scaling form with `s = ν̄√t`.
pub fn nu_bayes_cutoff_asym(xi: f64, t: f64, nu_bar: f64) -> Result<f64> {
    check_t("nu_bayes_cutoff_asym", t)?;
    if !(nu_bar > 0.0) {
        return Err(Error::domain("nu_bayes_cutoff_asym", "nu_bar must be positive"));
    }
    let s = nu_bar * t.sqrt();
    let x = xi.abs();
    if x > s {
        // erf differences cancel here; scale everything by e^{u²}, u = (|ξ|−s)/√2
        let u = (x - s) / SQRT_2;
        let w = (x + s) / SQRT_2;
        let m = x / SQRT_2;
        let decay = |y: f64| ((u - y) * (u + y)).exp();
        let den = erfcx(u) - erfcx(w) * decay(w);
        let bracket = 2.0 * decay(m) - 1.0 - decay(w)
            + (PI / 2.0).sqrt() * x * (erfcx(u) + erfcx(w) * decay(w) - 2.0 * erfcx(m) * decay(m));
        return Ok((2.0 / (PI * t)).sqrt() * bracket / den);
    }
    let g = |y: f64| (-0.5 * y * y).exp();
    let den = erf((s + x) / SQRT_2) + erf((s - x) / SQRT_2);
    let bracket = 2.0 * g(x) - g(x - s) - g(x + s) + (2.0 * PI).sqrt() * x * erf(x / SQRT_2)
        - (PI / 2.0).sqrt() * x * erf((x - s) / SQRT_2)
        - (PI / 2.0).sqrt() * x * erf((x + s) / SQRT_2);
    Ok((2.0 / (PI * t)).sqrt() * bracket / den)
}

const MLE_LO: f64 = 1e-12;
const MLE_HI: f64 = 1.0 - 1e-12;
const MLE_MAX_ITER: u32 = 200;

/// Residual `ν − (ξ/√t)·tanh[(ξ√t/2)·ln((1+ν)/(1−ν))]` of the likelihood equation.
pub fn mle_residual(nu: f64, xi: f64, t: f64) -> f64 {
    let l = nu.ln_1p() - (-nu).ln_1p();
    nu - xi / t.sqrt() * (0.5 * xi * t.sqrt() * l).tanh()
}

/// Maximum-likelihood rate: zero for |ξ| ≤ 1, otherwise the positive root
/// of the likelihood equation found by bisection.
pub fn nu_mle(xi: f64, t: f64) -> EstimatorResult {
    let fail = EstimatorResult {
        nu_hat: 0.0,
        method: EstimatorMethod::Mle,
        converged: false,
        iterations: 0,
    };
    if !(xi.is_finite() && t.is_finite() && t >= 1.0) {
        return fail;
    }
    let a = xi.abs();
    if a <= 1.0 {
        return EstimatorResult::direct(0.0, EstimatorMethod::Mle);
    }
    let (mut lo, mut hi) = (MLE_LO, MLE_HI);
    if mle_residual(hi, a, t) <= 0.0 {
        // |ξ| at its largest value √t: the likelihood peaks at the boundary.
        return EstimatorResult::direct(hi, EstimatorMethod::Mle);
    }
    let mut iterations = 0;
    while iterations < MLE_MAX_ITER {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mle_residual(mid, a, t) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    EstimatorResult {
        nu_hat: 0.5 * (lo + hi),
        method: EstimatorMethod::Mle,
        converged: true,
        iterations,
    }
}
