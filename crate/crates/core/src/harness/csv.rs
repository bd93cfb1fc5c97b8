//! Curve output in the shared `t,q,mean_dp,var_dp,stderr,n_paths,source` schema.

use std::io::{self, Write};

use super::experiment::ImpactCurve;
use crate::orderflow::MetaOrderSchedule;
use crate::theory::TheoryCurve;

pub const CURVE_HEADER: &str = "t,q,mean_dp,var_dp,stderr,n_paths,source";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Mc,
    Theory,
}

impl Source {
    pub fn as_str(&self) -> &'static str {
        match self {
            Source::Mc => "mc",
            Source::Theory => "theory",
        }
    }
}

/// Formats with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

#[allow(clippy::too_many_arguments)]
fn row<W: Write>(w: &mut W, t: f64, q: f64, mean: f64, var: f64, se: f64, n: usize, src: Source) -> io::Result<()> {
    writeln!(
        w,
        "{},{},{},{},{},{n},{}",
        fmt17(t),
        fmt17(q),
        fmt17(mean),
        fmt17(var),
        fmt17(se),
        src.as_str()
    )
}

/// Writes a Monte-Carlo curve; `q` is the net volume the meta-order has
/// traded in its own direction by time `t`.
pub fn write_curve_csv<W: Write>(mut w: W, curve: &ImpactCurve, schedule: &MetaOrderSchedule) -> io::Result<()> {
    writeln!(w, "{CURVE_HEADER}")?;
    for (i, &t) in curve.grid.iter().enumerate() {
        row(
            &mut w,
            t as f64,
            schedule.cumulative_drift(t) * schedule.sign(),
            curve.mean_dp[i],
            curve.var_dp[i],
            curve.stderr[i],
            curve.n_paths,
            Source::Mc,
        )?;
    }
    Ok(())
}

/// Writes a theory curve with zero variance, stderr and path count.
pub fn write_theory_csv<W: Write>(mut w: W, curve: &TheoryCurve, schedule: &MetaOrderSchedule) -> io::Result<()> {
    writeln!(w, "{CURVE_HEADER}")?;
    for (&t, &v) in curve.grid.iter().zip(&curve.values) {
        let q = schedule.cumulative_drift(t.max(0.0).floor() as usize) * schedule.sign();
        row(&mut w, t, q, v, 0.0, 0.0, 0, Source::Theory)?;
    }
    Ok(())
}
