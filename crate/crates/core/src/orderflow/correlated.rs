//! Stationary Gaussian noise by circulant embedding.
//!
//! The autocovariance is wrapped onto a circle of length `m`, whose
//! eigenvalues are the FFT of its first row. Colouring complex white noise
//! with `√(λ/m)` and transforming back yields a sequence whose real part
//! has exactly the target covariance on the first `t_max` entries.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::FlowModel;
use crate::error::{Error, Result};

/// Relative tolerance below which negative eigenvalues are clipped to zero.
const NEG_EIGEN_TOL: f64 = 1e-10;

/// Autocovariance `f(τ)` of a correlated flow model.
pub fn autocovariance(flow: &FlowModel, lag: usize) -> Result<f64> {
    let tau = lag as f64;
    match *flow {
        FlowModel::CorrelatedExp { sigma_v, tau_c } => Ok(sigma_v * sigma_v * (-tau / tau_c).exp()),
        FlowModel::CorrelatedPower { sigma_v, eta } => Ok(sigma_v * sigma_v * (1.0 + tau * tau).powf(-0.5 * eta)),
        _ => Err(Error::domain("autocovariance", "flow model is not correlated")),
    }
}

/// Precomputed spectral factor for one `(flow, t_max)` pair.
#[derive(Clone)]
pub struct CirculantEmbedding {
    t_max: usize,
    sqrt_eigen: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for CirculantEmbedding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CirculantEmbedding")
            .field("t_max", &self.t_max)
            .field("size", &self.sqrt_eigen.len())
            .finish()
    }
}

impl CirculantEmbedding {
    pub fn new(flow: &FlowModel, t_max: usize) -> Result<Self> {
        flow.validate()?;
        if t_max < 2 {
            return Err(Error::domain("CirculantEmbedding", "t_max must be at least 2"));
        }
        let m = 2 * (2 * t_max).next_power_of_two();
        let mut row: Vec<Complex64> = (0..m)
            .map(|j| autocovariance(flow, j.min(m - j)).map(|c| Complex64::new(c, 0.0)))
            .collect::<Result<_>>()?;
        let fft = FftPlanner::new().plan_fft_forward(m);
        fft.process(&mut row);
        let scale = row.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
        let mut sqrt_eigen = Vec::with_capacity(m);
        for (index, z) in row.iter().enumerate() {
            let lambda = z.re;
            if lambda < -NEG_EIGEN_TOL * scale {
                return Err(Error::Embedding {
                    index,
                    eigenvalue: lambda,
                });
            }
            sqrt_eigen.push((lambda.max(0.0) / m as f64).sqrt());
        }
        Ok(Self { t_max, sqrt_eigen, fft })
    }

    pub fn t_max(&self) -> usize {
        self.t_max
    }

    /// Embedding circle length.
    pub fn size(&self) -> usize {
        self.sqrt_eigen.len()
    }

    /// One sample of length `t_max`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut buf: Vec<Complex64> = self
            .sqrt_eigen
            .iter()
            .map(|&s| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(s * re, s * im)
            })
            .collect();
        self.fft.process(&mut buf);
        buf.truncate(self.t_max);
        buf.into_iter().map(|z| z.re).collect()
    }
}

/// Stationary noise sequence `v_1..v_{t_max}` for a correlated flow model.
pub fn gen_correlated_noise<R: Rng + ?Sized>(flow: &FlowModel, t_max: usize, rng: &mut R) -> Result<Vec<f64>> {
    Ok(CirculantEmbedding::new(flow, t_max)?.sample(rng))
}

/// `Σ_t² = Var(v_1 + … + v_t) = t·f(0) + 2 Σ_{τ=1}^{t−1} (t−τ) f(τ)`.
pub fn cumulative_variance(flow: &FlowModel, t: usize) -> Result<f64> {
    let mut s = t as f64 * autocovariance(flow, 0)?;
    for tau in 1..t {
        s += 2.0 * (t - tau) as f64 * autocovariance(flow, tau)?;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn embedding_size_is_padded() {
        let flow = FlowModel::CorrelatedExp {
            sigma_v: 1.0,
            tau_c: 2.0,
        };
        let e = CirculantEmbedding::new(&flow, 1000).unwrap();
        assert_eq!(e.size(), 4096);
        assert_eq!(e.sample(&mut ChaCha8Rng::seed_from_u64(1)).len(), 1000);
    }

    #[test]
    fn rejects_uncorrelated_models() {
        assert!(CirculantEmbedding::new(&FlowModel::UnitBinary, 10).is_err());
        let flow = FlowModel::CorrelatedExp {
            sigma_v: 1.0,
            tau_c: 1.0,
        };
        assert!(CirculantEmbedding::new(&flow, 1).is_err());
    }

    #[test]
    fn cumulative_variance_matches_double_sum() {
        let flow = FlowModel::CorrelatedPower { sigma_v: 1.3, eta: 0.5 };
        let t: usize = 10;
        let mut brute = 0.0;
        for i in 0..t {
            for j in 0..t {
                brute += autocovariance(&flow, i.abs_diff(j)).unwrap();
            }
        }
        let fast = cumulative_variance(&flow, t).unwrap();
        assert!((fast - brute).abs() < 1e-12 * brute);
    }

    #[test]
    fn sample_variance_is_sigma_squared() {
        let flow = FlowModel::CorrelatedExp {
            sigma_v: 2.0,
            tau_c: 3.0,
        };
        let e = CirculantEmbedding::new(&flow, 512).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut s2 = 0.0;
        let mut n = 0.0;
        for _ in 0..400 {
            for v in e.sample(&mut rng) {
                s2 += v * v;
                n += 1.0;
            }
        }
        assert!((s2 / n / 4.0 - 1.0).abs() < 0.05);
    }
}
