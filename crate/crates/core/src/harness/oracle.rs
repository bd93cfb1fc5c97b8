//! Brute-force posterior tables for small `t`.
//!
//! A dense midpoint rule over the signed rate `v ∈ (−ν_max, ν_max)` with
//! no adaptivity and no shared code with the quadrature pricing, so the two
//! can check each other.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::marketmaker::PriorSpec;

/// Largest horizon the oracle accepts.
pub const ORACLE_MAX_T: u64 = 20;
/// Midpoint nodes over the signed rate.
pub const ORACLE_NODES: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleCell {
    pub t: u64,
    pub n_buys: u64,
    pub expected_g: f64,
    pub nu_hat: f64,
}

/// Posterior `E[G]` and `E[ν]` for every reachable `(t, n_t)` with
/// `1 ≤ t ≤ t_max`, ordered by `t` then `n_t`.
pub fn oracle_posterior_enumeration(t_max: u64, prior: &PriorSpec) -> Result<Vec<OracleCell>> {
    if t_max > ORACLE_MAX_T {
        return Err(Error::domain(
            "oracle_posterior_enumeration",
            format!("t_max must be at most {ORACLE_MAX_T}, got {t_max}"),
        ));
    }
    prior.validate()?;
    let c = prior.support_max();
    let h = 2.0 * c / ORACLE_NODES as f64;
    let v: Vec<f64> = (0..ORACLE_NODES).map(|i| -c + (i as f64 + 0.5) * h).collect();
    let up: Vec<f64> = v.iter().map(|x| x.ln_1p()).collect();
    let down: Vec<f64> = v.iter().map(|x| (-x).ln_1p()).collect();
    let ln_prior: Vec<f64> = v.iter().map(|x| prior.density(x.abs()).ln()).collect();

    let cells: Vec<(u64, u64)> = (1..=t_max).flat_map(|t| (0..=t).map(move |n| (t, n))).collect();
    Ok(cells
        .into_par_iter()
        .map(|(t, n)| {
            let (a, b) = (n as f64, (t - n) as f64);
            let expo = |i: usize| a * up[i] + b * down[i] + ln_prior[i];
            let peak = (0..ORACLE_NODES).map(expo).fold(f64::NEG_INFINITY, f64::max);
            let (mut mass, mut signed, mut abs) = (0.0, 0.0, 0.0);
            for (i, x) in v.iter().enumerate() {
                let w = (expo(i) - peak).exp();
                mass += w;
                signed += x.signum() * w;
                abs += x.abs() * w;
            }
            OracleCell {
                t,
                n_buys: n,
                expected_g: signed / mass,
                nu_hat: abs / mass,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_step_cell_and_antisymmetry() {
        let table = oracle_posterior_enumeration(3, &PriorSpec::Flat).unwrap();
        assert_eq!(table.len(), 2 + 3 + 4);
        // one buy: ∫₀¹ 2v dv / ∫₋₁¹ (1+v) dv = 1/2
        assert!((table[1].expected_g - 0.5).abs() < 1e-9);
        for cell in &table {
            let mirror = table
                .iter()
                .find(|o| o.t == cell.t && o.n_buys == cell.t - cell.n_buys)
                .unwrap();
            assert!((cell.expected_g + mirror.expected_g).abs() < 1e-12);
            assert!((cell.nu_hat - mirror.nu_hat).abs() < 1e-12);
        }
        assert!(oracle_posterior_enumeration(21, &PriorSpec::Flat).is_err());
    }
}
