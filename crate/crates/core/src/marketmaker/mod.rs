//! Pricing rules of the Bayesian market maker.
//!
//! Every rule returns `E[G | data]`; the price contribution of the order
//! flow is `θ` times that value. Asymptotic rules take the normalised
//! imbalance `ξ` directly so that callers choose between the unit-flow and
//! volume-flow normalisations.

mod posterior;
mod prior;

use std::f64::consts::{PI, SQRT_2};

pub use posterior::{posterior_moments, PosteriorMoments};
pub use prior::PriorSpec;

use crate::error::{Error, Result};
use crate::specfun::quad::{integrate_with_breaks, QuadOptions};
use crate::specfun::{erf, erfcx, gamma_ratio, kummer_1f1, ln_erfc, stable_cdf_centered, StableTable, KUMMER_MAX_ARG};

/// Observed evidence at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PosteriorInput {
    Counts { n_buys: u64, t: u64 },
    Volume { delta_v: f64, t: u64, sigma_v: f64 },
}

impl PosteriorInput {
    pub fn t(&self) -> u64 {
        match *self {
            PosteriorInput::Counts { t, .. } | PosteriorInput::Volume { t, .. } => t,
        }
    }

    /// `ξ = (2n_t − t)/√t` or `ΔV/(σ_v √t)`.
    pub fn xi(&self) -> f64 {
        match *self {
            PosteriorInput::Counts { n_buys, t } => (2.0 * n_buys as f64 - t as f64) / (t as f64).sqrt(),
            PosteriorInput::Volume { delta_v, t, sigma_v } => delta_v / (sigma_v * (t as f64).sqrt()),
        }
    }

    /// `z = (2n_t − t)/t` for unit flows.
    pub fn z(&self) -> Option<f64> {
        match *self {
            PosteriorInput::Counts { n_buys, t } => Some((2.0 * n_buys as f64 - t as f64) / t as f64),
            PosteriorInput::Volume { .. } => None,
        }
    }
}

/// `E[G | n_t, ν] = tanh[(n_t − t/2)·ln((1+ν)/(1−ν))]` for a known rate.
pub fn posterior_g_known_nu(n_buys: u64, t: u64, nu: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&nu) {
        return Err(Error::domain(
            "posterior_g_known_nu",
            format!("nu must lie in [0, 1), got {nu}"),
        ));
    }
    if n_buys > t {
        return Err(Error::domain("posterior_g_known_nu", "n_buys exceeds t"));
    }
    let arg = (n_buys as f64 - 0.5 * t as f64) * (nu.ln_1p() - (-nu).ln_1p());
    Ok(arg.clamp(-40.0, 40.0).tanh())
}

/// Exact posterior mean of `G` by quadrature over the participation rate.
pub fn posterior_g_exact(input: &PosteriorInput, prior: &PriorSpec) -> Result<f64> {
    match *input {
        PosteriorInput::Counts { n_buys, t } => Ok(posterior_moments(n_buys, t, prior)?.expected_g()),
        PosteriorInput::Volume { .. } => Err(Error::domain(
            "posterior_g_exact",
            "the exact integral is defined for unit-flow counts",
        )),
    }
}

/// Flat-prior scaling limit `erf(ξ/√2)`.
pub fn posterior_g_flat_asym(xi: f64) -> f64 {
    erf(xi / SQRT_2)
}

/// Cutoff-prior scaling limit with `s = ν̄√t`.
pub fn posterior_g_cutoff_asym(xi: f64, s: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::domain(
            "posterior_g_cutoff_asym",
            format!("s must be positive, got {s}"),
        ));
    }
    let x = xi.abs();
    let g = if x > s {
        // every erf is near 1 here; work with e^{u²}·erfc instead, u = (ξ−s)/√2
        let u = (x - s) / SQRT_2;
        let scaled = |y: f64| erfcx(y) * ((u - y) * (u + y)).exp();
        let base = erfcx(u);
        let num = base - scaled(x / SQRT_2);
        let den = base - scaled((x + s) / SQRT_2);
        2.0 * num / den - 1.0
    } else {
        let a = erf(x / SQRT_2);
        let b = erf((s - x) / SQRT_2);
        let c = erf((s + x) / SQRT_2);
        2.0 * (a + b) / (c + b) - 1.0
    };
    Ok(g.copysign(xi))
}

/// `∫₀^∞ γ^m e^{−(γ−s)²/2} dγ` by quadrature; used where the hypergeometric
/// series would leave its range.
fn gaussian_power_moment(m: f64, s: f64) -> Result<f64> {
    let hi = s.max(0.0) + 40.0;
    let lo = (s - 40.0).max(0.0);
    let mut breaks = vec![lo, hi];
    if s > lo {
        breaks.insert(1, s);
    }
    let f = |g: f64| (m * g.ln() - 0.5 * (g - s) * (g - s)).exp();
    Ok(integrate_with_breaks(f, &breaks, QuadOptions::relative(1e-12))?.value)
}

/// Power-law-prior scaling limit in terms of Kummer functions.
///
/// The Kummer transform turns both series into positive-term sums; the
/// common `e^{−ξ²/2}` factor cancels in the ratio.
pub fn posterior_g_powerlaw_asym(xi: f64, k: f64) -> Result<f64> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::domain(
            "posterior_g_powerlaw_asym",
            format!("k must be positive, got {k}"),
        ));
    }
    if xi == 0.0 {
        return Ok(0.0);
    }
    let x = 0.5 * xi * xi;
    if x <= KUMMER_MAX_ARG {
        let num = kummer_1f1(0.5 + 0.5 * k, 1.5, x)?;
        let den = kummer_1f1(0.5 * k, 0.5, x)?;
        // the series ratio can overshoot ±1 by a few ulps
        return Ok((xi * SQRT_2 * gamma_ratio(0.5 * (1.0 + k), 0.5 * k) * num / den).clamp(-1.0, 1.0));
    }
    let a = xi.abs();
    let up = gaussian_power_moment(k - 1.0, a)?;
    let down = gaussian_power_moment(k - 1.0, -a)?;
    Ok(xi.signum() * (up - down) / (up + down))
}

/// Gaussian-volume pricing for `P(G = +1) = p_up` with unknown speed.
pub fn posterior_g_volume(delta_v: f64, t: u64, sigma_v: f64, p_up: f64) -> Result<f64> {
    if !(sigma_v > 0.0) {
        return Err(Error::domain("posterior_g_volume", "sigma_v must be positive"));
    }
    if !(p_up > 0.0 && p_up < 1.0) {
        return Err(Error::domain(
            "posterior_g_volume",
            format!("p_up must lie in (0, 1), got {p_up}"),
        ));
    }
    if t == 0 {
        return Err(Error::domain("posterior_g_volume", "t must be at least 1"));
    }
    let u = delta_v / ((2.0 * t as f64).sqrt() * sigma_v);
    if p_up == 0.5 {
        return Ok(erf(u));
    }
    // r = (1−p)/p · erfc(u)/erfc(−u); E[G] = (1 − r)/(1 + r)
    let ln_r = ((1.0 - p_up) / p_up).ln() + ln_erfc(u) - ln_erfc(-u);
    Ok(-(0.5 * ln_r).tanh())
}

/// α-stable-volume pricing `2·𝓛_α(ΔV/(σ_v t^{1/α}))`.
pub fn posterior_g_levy(delta_v: f64, t: u64, sigma_v: f64, alpha_stable: f64) -> Result<f64> {
    if !(sigma_v > 0.0) || t == 0 {
        return Err(Error::domain("posterior_g_levy", "need sigma_v > 0 and t >= 1"));
    }
    let x = delta_v / (sigma_v * (t as f64).powf(1.0 / alpha_stable));
    Ok(2.0 * stable_cdf_centered(alpha_stable, x)?)
}

/// [`posterior_g_levy`] through a precomputed table.
pub fn posterior_g_levy_table(delta_v: f64, t: u64, sigma_v: f64, table: &StableTable) -> f64 {
    let x = delta_v / (sigma_v * (t as f64).powf(1.0 / table.alpha()));
    2.0 * table.cdf_centered(x)
}

/// Ask and bid increments over `F_t` and their difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quote {
    pub ask: f64,
    pub bid: f64,
    pub spread: f64,
}

/// Quotes for the next trade to first order in `1/√t`.
///
/// `ask − bid = 2θ√(2/(πt))·e^{−ξ²/2}` and the mid is `θ·erf(ξ/√2)`.
pub fn quote_bid_ask(xi: f64, t: u64, theta: f64) -> Result<Quote> {
    if t == 0 {
        return Err(Error::domain("quote_bid_ask", "t must be at least 1"));
    }
    let mid = theta * erf(xi / SQRT_2);
    let half = theta * (2.0 / (PI * t as f64)).sqrt() * (-0.5 * xi * xi).exp();
    Ok(Quote {
        ask: mid + half,
        bid: mid - half,
        spread: 2.0 * half,
    })
}
