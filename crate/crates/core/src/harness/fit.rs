//! Power-law and linear fits on recorded curves.

use super::experiment::ImpactCurve;
use crate::error::{Error, Result};

/// Least-squares fit of `ln y = ln A + β ln t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub window: (f64, f64),
    pub r_squared: f64,
    pub n_points: usize,
}

/// Fewest grid points accepted by [`loglog_slope_fit`].
pub const MIN_FIT_POINTS: usize = 8;

/// Ordinary least squares on `(ln t, ln y)` for paired samples.
pub fn loglog_fit_points(t: &[f64], y: &[f64]) -> Result<SlopeFit> {
    if t.len() != y.len() {
        return Err(Error::domain(
            "loglog_slope_fit",
            "abscissa and ordinate lengths differ",
        ));
    }
    if t.len() < MIN_FIT_POINTS {
        return Err(Error::domain(
            "loglog_slope_fit",
            format!("need at least {MIN_FIT_POINTS} points, got {}", t.len()),
        ));
    }
    if let Some((ti, yi)) = t.iter().zip(y).find(|(ti, yi)| !(**ti > 0.0 && **yi > 0.0)) {
        return Err(Error::domain(
            "loglog_slope_fit",
            format!("non-positive point ({ti}, {yi}) in the window"),
        ));
    }
    let x: Vec<f64> = t.iter().map(|v| v.ln()).collect();
    let z: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let mz = z.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxz: f64 = x.iter().zip(&z).map(|(a, b)| (a - mx) * (b - mz)).sum();
    let szz: f64 = z.iter().map(|b| (b - mz) * (b - mz)).sum();
    if sxx == 0.0 {
        return Err(Error::domain("loglog_slope_fit", "window holds a single abscissa"));
    }
    let beta = sxz / sxx;
    let r_squared = if szz == 0.0 { 1.0 } else { sxz * sxz / (sxx * szz) };
    Ok(SlopeFit {
        exponent: beta,
        prefactor: (mz - beta * mx).exp(),
        window: (t[0], t[t.len() - 1]),
        r_squared,
        n_points: t.len(),
    })
}

fn window_points(curve: &ImpactCurve, window: (f64, f64)) -> (Vec<f64>, Vec<f64>) {
    curve
        .grid
        .iter()
        .zip(&curve.mean_dp)
        .filter(|(t, _)| (**t as f64) >= window.0 && (**t as f64) <= window.1)
        .map(|(t, y)| (*t as f64, *y))
        .unzip()
}

/// Log-log slope of `mean_dp` over the grid points inside `window`.
pub fn loglog_slope_fit(curve: &ImpactCurve, window: (f64, f64)) -> Result<SlopeFit> {
    if !(window.0 < window.1) {
        return Err(Error::domain("loglog_slope_fit", "window must satisfy t_lo < t_hi"));
    }
    let (t, y) = window_points(curve, window);
    loglog_fit_points(&t, &y)
}

/// Least-squares slope of `mean_dp = s·t` through the origin over `window`.
pub fn slope_through_origin(curve: &ImpactCurve, window: (f64, f64)) -> Result<f64> {
    let (t, y) = window_points(curve, window);
    if t.is_empty() {
        return Err(Error::domain("slope_through_origin", "empty window"));
    }
    let sty: f64 = t.iter().zip(&y).map(|(a, b)| a * b).sum();
    let stt: f64 = t.iter().map(|a| a * a).sum();
    Ok(sty / stt)
}

/// First time after `after` at which `mean_dp` changes sign, located by
/// linear interpolation between neighbouring grid points.
pub fn zero_crossing(curve: &ImpactCurve, after: usize) -> Option<f64> {
    let pts: Vec<(f64, f64)> = curve
        .grid
        .iter()
        .zip(&curve.mean_dp)
        .filter(|(t, _)| **t > after)
        .map(|(t, y)| (*t as f64, *y))
        .collect();
    pts.windows(2).find_map(|w| {
        let ((t0, y0), (t1, y1)) = (w[0], w[1]);
        if y0 == 0.0 {
            Some(t0)
        } else if y0.signum() != y1.signum() {
            Some(t0 + (t1 - t0) * y0 / (y0 - y1))
        } else {
            None
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(grid: Vec<usize>, f: impl Fn(f64) -> f64) -> ImpactCurve {
        let mean_dp = grid.iter().map(|&t| f(t as f64)).collect();
        let n = grid.len();
        ImpactCurve {
            grid,
            mean_dp,
            var_dp: vec![0.0; n],
            stderr: vec![0.0; n],
            n_paths: 1,
        }
    }

    #[test]
    fn exact_power_law() {
        let c = curve((1..=50).collect(), |t| 3.0 * t.sqrt());
        let fit = loglog_slope_fit(&c, (1.0, 50.0)).unwrap();
        assert!((fit.exponent - 0.5).abs() < 1e-12);
        assert!((fit.prefactor - 3.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(fit.n_points, 50);
    }

    #[test]
    fn fit_errors() {
        let c = curve((1..=50).collect(), |t| t - 5.0);
        assert!(loglog_slope_fit(&c, (1.0, 50.0)).is_err());
        assert!(loglog_slope_fit(&c, (10.0, 14.0)).is_err());
        assert!(loglog_slope_fit(&c, (20.0, 10.0)).is_err());
    }

    #[test]
    fn origin_slope_and_crossing() {
        let c = curve((1..=10).collect(), |t| 0.25 * t);
        assert!((slope_through_origin(&c, (1.0, 8.0)).unwrap() - 0.25).abs() < 1e-15);
        let c = curve((1..=100).collect(), |t| 40.0 - t);
        assert_eq!(zero_crossing(&c, 0), Some(40.0));
        let c = curve(vec![10, 20, 30], |t| 25.0 - t);
        assert!((zero_crossing(&c, 0).unwrap() - 25.0).abs() < 1e-12);
        assert_eq!(zero_crossing(&c, 25), None);
    }
}
