//! Kullback–Leibler divergence between two biased coins.

use crate::error::{Error, Result};

/// `x·ln(x/y)` with the convention `0·ln 0 = 0`.
fn xlogx_over_y(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * (x / y).ln()
    }
}

/// Divergence `D(z‖v)` between coins with means `z` and `v` on {−1, +1}.
pub fn kl_divergence(z: f64, v: f64) -> Result<f64> {
    if !(z.abs() < 1.0 && v.abs() < 1.0) {
        return Err(Error::domain(
            "kl_divergence",
            format!("need |z| < 1 and |v| < 1, got z = {z}, v = {v}"),
        ));
    }
    let d = 0.5 * xlogx_over_y(1.0 + z, 1.0 + v) + 0.5 * xlogx_over_y(1.0 - z, 1.0 - v);
    Ok(d.max(0.0))
}

/// Log-likelihood `n·ln(1+v) + m·ln(1−v)` of `n` up-moves and `m` down-moves.
///
/// Equals `−t·D(z‖v)` up to a `v`-independent constant, with `t = n + m` and
/// `z = (n − m)/t`. Zero counts contribute nothing even at `|v| = 1`.
pub fn coin_loglik(n: u64, m: u64, v: f64) -> f64 {
    let up = if n == 0 { 0.0 } else { n as f64 * v.ln_1p() };
    let down = if m == 0 { 0.0 } else { m as f64 * (-v).ln_1p() };
    up + down
}
