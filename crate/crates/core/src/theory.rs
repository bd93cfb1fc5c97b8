//! Closed-form predictions for impact, spread, variance and exponents.
//!
//! Peak and decay curves use the full `erf` forms so that they join
//! continuously across regimes; the leading power laws are exposed
//! separately and only label regimes.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::marketmaker::posterior_g_powerlaw_asym;
use crate::orderflow::{cumulative_variance, FlowModel};
use crate::specfun::quad::{integrate_with_breaks, QuadOptions};
use crate::specfun::{erf, k_alpha};

/// Expected impact `θ·tanh(ν²t)` when ν is known to the market maker.
pub fn impact_known_nu(t: f64, nu: f64, theta: f64) -> f64 {
    theta * (nu * nu * t).tanh()
}

/// Small-time limit `θν·q` with `q = νt` of [`impact_known_nu`].
pub fn impact_known_nu_leading(t: f64, nu: f64, theta: f64) -> f64 {
    theta * nu * nu * t
}

/// Square-root impact `θ·erf(ν√t/2)`.
pub fn impact_sril(t: f64, nu: f64, theta: f64) -> f64 {
    theta * erf(0.5 * nu * t.max(0.0).sqrt())
}

/// Leading order `θν√t/√π` of [`impact_sril`].
pub fn impact_sril_leading(t: f64, nu: f64, theta: f64) -> f64 {
    theta * nu * t.max(0.0).sqrt() / PI.sqrt()
}

/// Rescaled law `σ_τ √(q/V_τ) / (√π·α)`.
pub fn impact_sril_rescaled(q: f64, sigma_tau: f64, v_tau: f64, alpha_cal: f64) -> f64 {
    sigma_tau * (q / v_tau).sqrt() / (PI.sqrt() * alpha_cal)
}

/// Crossover volume `q* = 4ν/(πν̄²)` where the linear and square-root branches meet.
pub fn crossover_q_star(nu: f64, nu_bar: f64) -> f64 {
    4.0 * nu / (PI * nu_bar * nu_bar)
}

/// Linear branch `½θν̄·q` and leading square-root branch `θ√(νq/π)` at `q = νt`.
pub fn crossover_branches(t: f64, nu: f64, nu_bar: f64, theta: f64) -> (f64, f64) {
    let q = nu * t;
    (0.5 * theta * nu_bar * q, theta * (nu * q / PI).sqrt())
}

/// Cutoff-prior impact: the linear branch at short times, the square-root
/// law afterwards. Returns `(impact, q*)`.
pub fn impact_linear_crossover(t: f64, nu: f64, nu_bar: f64, theta: f64) -> Result<(f64, f64)> {
    if !(nu_bar >= nu && nu > 0.0) {
        return Err(Error::domain(
            "impact_linear_crossover",
            format!("need 0 < nu <= nu_bar, got nu = {nu}, nu_bar = {nu_bar}"),
        ));
    }
    let (linear, _) = crossover_branches(t, nu, nu_bar, theta);
    let impact = linear.min(impact_sril(t, nu, theta));
    Ok((impact, crossover_q_star(nu, nu_bar)))
}

/// Post-horizon impact `θ·erf(Q/(2√t))` of a stopped meta-order.
pub fn impact_decay(t: f64, q_total: f64, theta: f64) -> f64 {
    theta * erf(q_total / (2.0 * t.sqrt()))
}

/// Impact `θ·erf(Q/√t − ν√t/2)` when an opposite meta-order follows at `T`.
pub fn impact_reversal(t: f64, q_total: f64, nu: f64, theta: f64) -> f64 {
    let s = t.sqrt();
    theta * erf(q_total / s - 0.5 * nu * s)
}

/// Expected bid-ask spread `2θ/√(πt)·e^{−ν²t/4}`.
pub fn expected_spread(t: f64, nu: f64, theta: f64) -> f64 {
    2.0 * theta / (PI * t).sqrt() * (-0.25 * nu * nu * t).exp()
}

/// Kyle lambda `4θ√(2/(πt))·p(1−p)/σ_v`.
pub fn kyle_lambda(t: f64, theta: f64, sigma_v: f64, p_up: f64) -> f64 {
    4.0 * theta * (2.0 / (PI * t)).sqrt() * p_up * (1.0 - p_up) / sigma_v
}

/// Variance of the price change conditioned on a meta-order start:
/// `α²θ²ν·τ + θ²/3`.
pub fn conditional_variance(tau: f64, nu: f64, theta: f64, alpha_cal: f64) -> f64 {
    alpha_cal * alpha_cal * theta * theta * nu * tau + theta * theta / 3.0
}

/// Expected flat-prior Bayes estimate `(2/√(πt))e^{−ν²t/4} + ν·erf(ν√t/2)`.
pub fn expected_nu_bayes(t: f64, nu: f64) -> f64 {
    2.0 / (PI * t).sqrt() * (-0.25 * nu * nu * t).exp() + nu * erf(0.5 * nu * t.sqrt())
}

/// Leading-order impact `2θK(α)χt^{1−1/α}/σ_v` of a meta-order hidden in
/// α-stable noise.
pub fn impact_levy(t: f64, chi: f64, sigma_v: f64, alpha_stable: f64, theta: f64) -> Result<f64> {
    Ok(2.0 * theta * k_alpha(alpha_stable)? * chi * t.powf(1.0 - 1.0 / alpha_stable) / sigma_v)
}

/// `Σ_t`, the standard deviation of the cumulative correlated noise volume.
pub fn correlated_sigma(t: usize, flow: &FlowModel) -> Result<f64> {
    Ok(cumulative_variance(flow, t)?.sqrt())
}

/// Large-`t` asymptote of `Σ_t`.
pub fn correlated_sigma_asymptotic(t: f64, flow: &FlowModel) -> Result<f64> {
    match *flow {
        FlowModel::CorrelatedExp { sigma_v, tau_c } => {
            Ok(sigma_v * ((1.0 + 2.0 / ((1.0 / tau_c).exp() - 1.0)) * t).sqrt())
        }
        FlowModel::CorrelatedPower { sigma_v, eta } if eta >= 1.0 => Ok(sigma_v * (2.0 * t * t.ln()).sqrt()),
        FlowModel::CorrelatedPower { sigma_v, eta } => {
            Ok((2.0 / ((1.0 - eta) * (2.0 - eta))).sqrt() * sigma_v * t.powf(1.0 - 0.5 * eta))
        }
        _ => Err(Error::domain(
            "correlated_sigma_asymptotic",
            "flow model is not correlated",
        )),
    }
}

/// Impact `θ·erf(χt/(2Σ_t))` for correlated noise volumes.
pub fn impact_correlated(t: usize, chi: f64, flow: &FlowModel, theta: f64) -> Result<f64> {
    let sigma = correlated_sigma(t, flow)?;
    Ok(theta * erf(chi * t as f64 / (2.0 * sigma)))
}

/// Impact of Gaussian-volume flows `θ·erf(χ√t/(2σ_v))`.
pub fn impact_volume(t: f64, chi: f64, sigma_v: f64, theta: f64) -> f64 {
    theta * erf(chi * t.sqrt() / (2.0 * sigma_v))
}

/// Leading-order spread of the `ξ`-conditional quotes, `2θ√(2/(πt))e^{−ξ²/2}`.
pub fn spread_given_xi(xi: f64, t: f64, theta: f64) -> f64 {
    2.0 * theta * (2.0 / (PI * t)).sqrt() * (-0.5 * xi * xi).exp()
}

/// Small-signal impact prefactor of the power-law prior: the slope
/// `E[Z·f_k(Z)]`, `Z ~ N(0, 1)`, of `E[f_k(ν√t + Z)]` in `ν√t`, where `f_k`
/// is the scaling-limit rule. Equals `1/√π` for the flat prior `k = 1`.
pub fn powerlaw_impact_prefactor(k: f64) -> Result<f64> {
    let mut err = None;
    let f = |z: f64| match posterior_g_powerlaw_asym(z, k) {
        Ok(g) => z * g * (-0.5 * z * z).exp(),
        Err(e) => {
            err.get_or_insert(e);
            0.0
        }
    };
    let v = integrate_with_breaks(f, &[-12.0, -3.0, 0.0, 3.0, 12.0], QuadOptions::relative(1e-10))?.value;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(v / (2.0 * PI).sqrt())
}

/// Standard deviation of `erf(ξ/√2)` for `ξ ~ N(0, 1)`.
pub const FLAT_PRICE_STD: f64 = 0.577_350_269_189_625_8;

/// Regime label attached to each point of a theory curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Linear,
    Sqrt,
    Saturated,
    Decay,
    Reversal,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Linear => "linear",
            Regime::Sqrt => "sqrt",
            Regime::Saturated => "saturated",
            Regime::Decay => "decay",
            Regime::Reversal => "reversal",
        }
    }
}

/// Named closed-form curves that can be evaluated on a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurveKind {
    Sril {
        nu: f64,
        theta: f64,
    },
    KnownNu {
        nu: f64,
        theta: f64,
    },
    Crossover {
        nu: f64,
        nu_bar: f64,
        theta: f64,
    },
    Decay {
        nu: f64,
        horizon: f64,
        theta: f64,
    },
    Reversal {
        nu: f64,
        horizon: f64,
        theta: f64,
    },
    Spread {
        nu: f64,
        theta: f64,
    },
    Estimator {
        nu: f64,
    },
    Variance {
        nu: f64,
        theta: f64,
        alpha_cal: f64,
    },
    Volume {
        chi: f64,
        sigma_v: f64,
        theta: f64,
    },
    Levy {
        chi: f64,
        sigma_v: f64,
        alpha_stable: f64,
        theta: f64,
    },
    /// Evaluated at integer times, since `Σ_t` is a finite sum.
    Correlated {
        chi: f64,
        flow: FlowModel,
        theta: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoryCurve {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub regimes: Vec<Regime>,
}

impl TheoryCurve {
    pub fn evaluate(kind: CurveKind, grid: &[f64]) -> Result<Self> {
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("TheoryCurve", "grid must be strictly increasing"));
        }
        let mut values = Vec::with_capacity(grid.len());
        let mut regimes = Vec::with_capacity(grid.len());
        for &t in grid {
            let (v, r) = match kind {
                CurveKind::Sril { nu, theta } => (impact_sril(t, nu, theta), sril_regime(t, nu)),
                CurveKind::KnownNu { nu, theta } => (impact_known_nu(t, nu, theta), known_regime(t, nu)),
                CurveKind::Crossover { nu, nu_bar, theta } => {
                    let (v, q_star) = impact_linear_crossover(t, nu, nu_bar, theta)?;
                    let r = if nu * t < q_star {
                        Regime::Linear
                    } else {
                        sril_regime(t, nu)
                    };
                    (v, r)
                }
                CurveKind::Decay { nu, horizon, theta } => {
                    if t <= horizon {
                        (impact_sril(t, nu, theta), sril_regime(t, nu))
                    } else {
                        (impact_decay(t, nu * horizon, theta), Regime::Decay)
                    }
                }
                CurveKind::Reversal { nu, horizon, theta } => {
                    if t <= horizon {
                        (impact_sril(t, nu, theta), sril_regime(t, nu))
                    } else {
                        (impact_reversal(t, nu * horizon, nu, theta), Regime::Reversal)
                    }
                }
                CurveKind::Spread { nu, theta } => (expected_spread(t, nu, theta), sril_regime(t, nu)),
                CurveKind::Estimator { nu } => (expected_nu_bayes(t, nu), sril_regime(t, nu)),
                CurveKind::Variance { nu, theta, alpha_cal } => {
                    (conditional_variance(t, nu, theta, alpha_cal), sril_regime(t, nu))
                }
                CurveKind::Volume { chi, sigma_v, theta } => {
                    (impact_volume(t, chi, sigma_v, theta), sril_regime(t, chi / sigma_v))
                }
                CurveKind::Levy {
                    chi,
                    sigma_v,
                    alpha_stable,
                    theta,
                } => (impact_levy(t, chi, sigma_v, alpha_stable, theta)?, Regime::Linear),
                CurveKind::Correlated { chi, flow, theta } => {
                    let steps = t.round().max(1.0) as usize;
                    let v = impact_correlated(steps, chi, &flow, theta)?;
                    let r = if v < 0.5 * theta {
                        Regime::Sqrt
                    } else {
                        Regime::Saturated
                    };
                    (v, r)
                }
            };
            if !v.is_finite() {
                return Err(Error::domain("TheoryCurve", format!("non-finite value at t = {t}")));
            }
            values.push(v);
            regimes.push(r);
        }
        Ok(Self {
            grid: grid.to_vec(),
            values,
            regimes,
        })
    }
}

fn sril_regime(t: f64, nu: f64) -> Regime {
    if nu * nu * t < 1.0 {
        Regime::Sqrt
    } else {
        Regime::Saturated
    }
}

fn known_regime(t: f64, nu: f64) -> Regime {
    if nu * nu * t < 1.0 {
        Regime::Linear
    } else {
        Regime::Saturated
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn powerlaw_prefactor_flat_limit() {
        let c = powerlaw_impact_prefactor(1.0).unwrap();
        assert!((c - 1.0 / PI.sqrt()).abs() < 1e-9, "{c}");
        let c2 = powerlaw_impact_prefactor(2.0).unwrap();
        assert!(c2 > c);
    }

    #[test]
    fn reference_values() {
        assert_eq!(impact_sril(0.0, 0.1, 1.0), 0.0);
        assert!((impact_sril(400.0, 0.1, 1.0) - erf(1.0)).abs() < 1e-15);
        assert!((impact_known_nu(100.0, 0.1, 1.0) - 1f64.tanh()).abs() < 1e-15);
        assert!((crossover_q_star(0.01, 0.1) - 4.0 / PI).abs() < 1e-12);
        assert!((impact_decay(1600.0, 14.0, 1.0) - erf(0.175)).abs() < 1e-15);
        assert!((expected_spread(100.0, 0.0, 1.0) - 0.112_837_916_709_551_26).abs() < 1e-15);
        assert!((kyle_lambda(100.0, 1.0, 1.0, 0.5) - 0.079_788_456_080_286_54).abs() < 1e-15);
        assert!((conditional_variance(100.0, 0.1, 1.0, 1.0) - (10.0 + 1.0 / 3.0)).abs() < 1e-12);
        assert!((conditional_variance(0.0, 0.1, 2.0, 1.0) - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn prefactor_limit() {
        let t = 1e-6;
        let r = impact_sril(t, 0.1, 1.0) / (0.1 * t.sqrt());
        assert!((r - 1.0 / PI.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn reversal_zero_and_slopes() {
        let (nu, big_t) = (0.035, 400.0);
        let q = nu * big_t;
        assert!(impact_reversal(2.0 * big_t, q, nu, 1.0).abs() < 1e-15);
        let peak = impact_sril(big_t, nu, 1.0);
        assert!((impact_reversal(big_t, q, nu, 1.0) - peak).abs() < 1e-15);
        // the linearised early-time slopes need ν√T ≪ 1
        let nu = 0.001;
        let q = nu * big_t;
        let peak = impact_sril(big_t, nu, 1.0);
        let rel = impact_reversal(1.1 * big_t, q, nu, 1.0) / peak;
        assert!((rel - 0.85).abs() < 0.01 * 0.85);
        let rel = impact_decay(1.1 * big_t, q, 1.0) / impact_decay(big_t, q, 1.0);
        assert!((rel - 0.95).abs() < 0.01 * 0.95);
    }

    #[test]
    fn branches_cross_at_q_star() {
        let (nu, nu_bar) = (0.01, 0.2);
        let q_star = crossover_q_star(nu, nu_bar);
        let (lin, sq) = crossover_branches(q_star / nu, nu, nu_bar, 1.0);
        assert!((lin - sq).abs() < 1e-9);
        let (lin, sq) = crossover_branches(0.5 * q_star / nu, nu, nu_bar, 1.0);
        assert!(lin < sq);
    }

    #[test]
    fn correlated_limits() {
        let flow = FlowModel::CorrelatedExp {
            sigma_v: 1.0,
            tau_c: 1e-3,
        };
        let s = correlated_sigma(500, &flow).unwrap();
        assert!((s * s / 500.0 - 1.0).abs() < 1e-12);
        let flow = FlowModel::CorrelatedExp {
            sigma_v: 1.0,
            tau_c: 5.0,
        };
        let exact = correlated_sigma(100_000, &flow).unwrap();
        let asym = correlated_sigma_asymptotic(100_000.0, &flow).unwrap();
        assert!((exact / asym - 1.0).abs() < 1e-3);
    }

    #[test]
    fn curve_regimes() {
        let grid = [1.0, 10.0, 100.0, 1000.0];
        let c = TheoryCurve::evaluate(CurveKind::Sril { nu: 0.1, theta: 1.0 }, &grid).unwrap();
        assert_eq!(c.regimes[0], Regime::Sqrt);
        assert_eq!(c.regimes[3], Regime::Saturated);
        let c = TheoryCurve::evaluate(
            CurveKind::Decay {
                nu: 0.035,
                horizon: 400.0,
                theta: 1.0,
            },
            &[100.0, 800.0],
        )
        .unwrap();
        assert_eq!(c.regimes[1], Regime::Decay);
        assert!(TheoryCurve::evaluate(CurveKind::Sril { nu: 0.1, theta: 1.0 }, &[2.0, 1.0]).is_err());
    }
}
