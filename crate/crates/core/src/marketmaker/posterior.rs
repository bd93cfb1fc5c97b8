//! Posterior moments of the participation rate given unit-flow counts.
//!
//! With `n` buys out of `t` trades the likelihood of a signed rate `v` is
//! `(1+v)^n (1−v)^{t−n}`. Folding `v ↦ −v` onto `[0, ν_max]` gives two
//! one-sided integrals, one per sign of `G`, which are evaluated in log
//! space relative to the global likelihood maximum.

use crate::error::{Error, Result};
use crate::specfun::coin_loglik;
use crate::specfun::quad::{integrate_with_breaks, QuadOptions};

use super::PriorSpec;

const REL_TOL: f64 = 1e-9;

/// Posterior integrals for one `(n, t)` cell, all scaled by the same factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorMoments {
    /// `∫ φ(v) L(+v) dv`: evidence for `G = +1`.
    pub mass_up: f64,
    /// `∫ φ(v) L(−v) dv`: evidence for `G = −1`.
    pub mass_down: f64,
    /// `∫ v φ(v) [L(+v) + L(−v)] dv`.
    pub first: f64,
}

impl PosteriorMoments {
    pub fn expected_g(&self) -> f64 {
        (self.mass_up - self.mass_down) / (self.mass_up + self.mass_down)
    }

    pub fn expected_nu(&self) -> f64 {
        self.first / (self.mass_up + self.mass_down)
    }
}

/// Breakpoints on `[0, c]` concentrating panels around the peak `peak`
/// of a likelihood with width `width`.
fn breaks_around(peak: f64, width: f64, c: f64) -> Vec<f64> {
    let mut b = vec![0.0, c];
    for k in [-12.0, -6.0, -3.0, -1.0, 0.0, 1.0, 3.0, 6.0, 12.0] {
        let x = peak + k * width;
        if x > 0.0 && x < c {
            b.push(x);
        }
    }
    b.sort_by(f64::total_cmp);
    b.dedup();
    b
}

/// Posterior moments for `n` buys among `t` trades.
pub fn posterior_moments(n_buys: u64, t: u64, prior: &PriorSpec) -> Result<PosteriorMoments> {
    if t == 0 {
        return Err(Error::domain("posterior_moments", "t must be at least 1"));
    }
    if n_buys > t {
        return Err(Error::domain(
            "posterior_moments",
            format!("n_buys = {n_buys} exceeds t = {t}"),
        ));
    }
    prior.validate()?;
    let (n, m) = (n_buys, t - n_buys);
    let c = prior.support_max();
    let tf = t as f64;
    let z = (n as f64 - m as f64) / tf;
    let peak = z.clamp(-c, c);
    let log_max = coin_loglik(n, m, peak);
    let width = ((1.0 - z * z).max(1.0 / tf) / tf).sqrt();
    let opts = QuadOptions {
        abs_tol: 0.0,
        rel_tol: REL_TOL,
        max_intervals: 2000,
    };

    // The density is written out inline so that k v^{k−1} enters as a log.
    let ln_phi = |v: f64| -> f64 {
        match *prior {
            PriorSpec::Flat => 0.0,
            PriorSpec::Cutoff { nu_bar } => -nu_bar.ln(),
            PriorSpec::PowerLaw { k } => k.ln() + (k - 1.0) * v.ln(),
        }
    };
    let side = |a: u64, b: u64, peak: f64, weighted: bool| -> Result<f64> {
        let breaks = breaks_around(peak, width, c);
        let f = |v: f64| {
            let e = (coin_loglik(a, b, v) - log_max + ln_phi(v)).exp();
            if weighted {
                v * e
            } else {
                e
            }
        };
        Ok(integrate_with_breaks(f, &breaks, opts)?.value)
    };

    let mass_up = side(n, m, z, false)?;
    let mass_down = side(m, n, -z, false)?;
    let first = side(n, m, z, true)? + side(m, n, -z, true)?;
    if !(mass_up + mass_down > 0.0) {
        return Err(Error::NonConvergence {
            op: "posterior_moments",
            detail: format!("vanishing evidence at n = {n_buys}, t = {t}"),
        });
    }
    Ok(PosteriorMoments {
        mass_up,
        mass_down,
        first,
    })
}
