//! Order-flow generation: noise traders plus one meta-order.
//!
//! Time is 1-based. Sequences indexed by time (`cum_imbalance`,
//! `fundamental`) carry a leading zero entry for `t = 0`, while the
//! per-step `steps` vector holds trades `1..=t_max` at indices `0..t_max`.
//!
//! Every generator accepts a `mirror_noise` switch that negates the noise
//! traders' contribution while keeping the meta-order's draws. Running a
//! path twice from a cloned stream with the switch off and on gives an
//! antithetic pair.

mod correlated;
mod rng;

use std::io::{self, Write};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub use correlated::{autocovariance, cumulative_variance, gen_correlated_noise, CirculantEmbedding};
pub use rng::{path_rng, Channel, PathRng};

use crate::error::{Error, Result};
use crate::specfun::standard_sample;

/// What the executing trader does once the horizon `T` is reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AfterMode {
    /// Stop trading; the flow is pure noise after `T`.
    Stop,
    /// Immediately start an opposite meta-order at the same rate.
    Reverse,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetaOrderSchedule {
    /// Sign `G` of the meta-order, +1 or −1.
    pub direction: i8,
    /// Participation rate ν for unit flows or trade speed χ for volume flows.
    pub participation: f64,
    /// Horizon `T` in steps.
    pub horizon: usize,
    pub after_mode: AfterMode,
}

impl MetaOrderSchedule {
    pub fn new(direction: i8, participation: f64, horizon: usize, after_mode: AfterMode) -> Result<Self> {
        let s = Self {
            direction,
            participation,
            horizon,
            after_mode,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.direction != 1 && self.direction != -1 {
            return Err(Error::Config(format!(
                "direction must be +1 or -1, got {}",
                self.direction
            )));
        }
        if !(self.participation >= 0.0 && self.participation.is_finite()) {
            return Err(Error::Config(format!(
                "participation must be non-negative, got {}",
                self.participation
            )));
        }
        if self.horizon < 1 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        Ok(())
    }

    pub fn sign(&self) -> f64 {
        f64::from(self.direction)
    }

    /// Total volume `Q = ν·T`.
    pub fn total_volume(&self) -> f64 {
        self.participation * self.horizon as f64
    }

    /// Direction of the informed trade at step `t`, or 0 when idle.
    pub fn informed_direction(&self, t: usize) -> i8 {
        if t <= self.horizon {
            self.direction
        } else {
            match self.after_mode {
                AfterMode::Stop => 0,
                AfterMode::Reverse => -self.direction,
            }
        }
    }

    /// Net signed informed volume traded up to and including step `t`.
    pub fn cumulative_drift(&self, t: usize) -> f64 {
        let g = self.sign() * self.participation;
        let big_t = self.horizon as f64;
        let tf = t as f64;
        if t <= self.horizon {
            g * tf
        } else {
            match self.after_mode {
                AfterMode::Stop => g * big_t,
                AfterMode::Reverse => g * (2.0 * big_t - tf),
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FlowModel {
    UnitBinary,
    GaussianVolume { sigma_v: f64 },
    LevyVolume { alpha: f64, sigma_v: f64 },
    CorrelatedExp { sigma_v: f64, tau_c: f64 },
    CorrelatedPower { sigma_v: f64, eta: f64 },
}

impl FlowModel {
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        match *self {
            FlowModel::UnitBinary => Ok(()),
            FlowModel::GaussianVolume { sigma_v } => pos("sigma_v", sigma_v),
            FlowModel::LevyVolume { alpha, sigma_v } => {
                pos("sigma_v", sigma_v)?;
                if alpha > 0.0 && alpha <= 2.0 {
                    Ok(())
                } else {
                    Err(Error::Config(format!("alpha_stable must lie in (0, 2], got {alpha}")))
                }
            }
            FlowModel::CorrelatedExp { sigma_v, tau_c } => {
                pos("sigma_v", sigma_v)?;
                pos("tau_c", tau_c)
            }
            FlowModel::CorrelatedPower { sigma_v, eta } => {
                pos("sigma_v", sigma_v)?;
                if eta > 0.0 && eta <= 1.0 {
                    Ok(())
                } else {
                    Err(Error::Config(format!("eta must lie in (0, 1], got {eta}")))
                }
            }
        }
    }

    /// Per-step noise scale; 1 for unit flows.
    pub fn sigma_v(&self) -> f64 {
        match *self {
            FlowModel::UnitBinary => 1.0,
            FlowModel::GaussianVolume { sigma_v }
            | FlowModel::LevyVolume { sigma_v, .. }
            | FlowModel::CorrelatedExp { sigma_v, .. }
            | FlowModel::CorrelatedPower { sigma_v, .. } => sigma_v,
        }
    }

    pub fn is_correlated(&self) -> bool {
        matches!(
            self,
            FlowModel::CorrelatedExp { .. } | FlowModel::CorrelatedPower { .. }
        )
    }
}

/// Exogenous martingale component of the asset value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FundamentalSpec {
    /// Information strength θ in price units.
    pub theta: f64,
    /// Calibration constant α of the fundamental volatility.
    pub alpha_cal: f64,
}

impl FundamentalSpec {
    pub fn new(theta: f64, alpha_cal: f64) -> Result<Self> {
        if !(theta >= 0.0 && theta.is_finite()) {
            return Err(Error::Config(format!("theta must be non-negative, got {theta}")));
        }
        if !(alpha_cal >= 0.0 && alpha_cal.is_finite()) {
            return Err(Error::Config(format!(
                "alpha_cal must be non-negative, got {alpha_cal}"
            )));
        }
        Ok(Self { theta, alpha_cal })
    }

    /// Per-step standard deviation `α·θ·√ν`.
    pub fn step_std(&self, nu: f64) -> f64 {
        self.alpha_cal * self.theta * nu.sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TradePath {
    /// Trade signs (unit flow) or signed volumes, one per step.
    pub steps: Vec<f64>,
    /// `ΔV_t` for `t = 0..=t_max`; equals `2n_t − t` for unit flows.
    pub cum_imbalance: Vec<f64>,
    /// `F_t` for `t = 0..=t_max`; all zeros when not simulated.
    pub fundamental: Vec<f64>,
    pub meta: MetaOrderSchedule,
}

impl TradePath {
    fn from_steps(steps: Vec<f64>, meta: MetaOrderSchedule) -> Self {
        let mut cum = Vec::with_capacity(steps.len() + 1);
        let mut acc = 0.0;
        cum.push(acc);
        for &s in &steps {
            acc += s;
            cum.push(acc);
        }
        let fundamental = vec![0.0; steps.len() + 1];
        Self {
            steps,
            cum_imbalance: cum,
            fundamental,
            meta,
        }
    }

    pub fn t_max(&self) -> usize {
        self.steps.len()
    }

    /// Number of buys `n_t` of a unit flow.
    pub fn n_buys(&self, t: usize) -> u64 {
        let imbalance = self.cum_imbalance[t] as i64;
        ((t as i64 + imbalance) / 2) as u64
    }

    /// Attaches a fundamental path of length `t_max + 1`.
    pub fn with_fundamental(mut self, fundamental: Vec<f64>) -> Result<Self> {
        if fundamental.len() != self.steps.len() + 1 {
            return Err(Error::domain("with_fundamental", "length must be t_max + 1"));
        }
        self.fundamental = fundamental;
        Ok(self)
    }

    /// Dumps `t, x_or_v, cum_imbalance, F` as CSV.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,x_or_v,cum_imbalance,F")?;
        for t in 1..=self.t_max() {
            writeln!(
                w,
                "{t},{:.17e},{:.17e},{:.17e}",
                self.steps[t - 1],
                self.cum_imbalance[t],
                self.fundamental[t]
            )?;
        }
        Ok(())
    }
}

/// Unit-volume flow: each step is +1 (buy) or −1 (sell).
///
/// While the meta-order is active a trade is informed with probability ν,
/// otherwise a fair coin; one uniform is drawn per step.
pub fn gen_unit_flow<R: Rng + ?Sized>(schedule: &MetaOrderSchedule, t_max: usize, rng: &mut R) -> TradePath {
    gen_unit_flow_with(schedule, t_max, rng, false)
}

pub fn gen_unit_flow_with<R: Rng + ?Sized>(
    schedule: &MetaOrderSchedule,
    t_max: usize,
    rng: &mut R,
    mirror_noise: bool,
) -> TradePath {
    let nu = schedule.participation;
    let flip = if mirror_noise { -1.0 } else { 1.0 };
    let steps = (1..=t_max)
        .map(|t| {
            let u: f64 = rng.random();
            let informed = schedule.informed_direction(t);
            if informed != 0 {
                if u < nu {
                    return f64::from(informed);
                }
                let w = (u - nu) / (1.0 - nu);
                flip * if w < 0.5 { 1.0 } else { -1.0 }
            } else {
                flip * if u < 0.5 { 1.0 } else { -1.0 }
            }
        })
        .collect();
    TradePath::from_steps(steps, *schedule)
}

fn check_t_max(t_max: usize) -> Result<()> {
    if t_max == 0 {
        Err(Error::domain("order flow", "t_max must be at least 1"))
    } else {
        Ok(())
    }
}

fn with_drift(schedule: &MetaOrderSchedule, noise: Vec<f64>) -> TradePath {
    let chi = schedule.participation;
    let steps = noise
        .into_iter()
        .enumerate()
        .map(|(i, v)| v + f64::from(schedule.informed_direction(i + 1)) * chi)
        .collect();
    TradePath::from_steps(steps, *schedule)
}

/// Gaussian noise volumes of per-step std `σ_v` plus the drift `Gχ`.
pub fn gen_volume_flow<R: Rng + ?Sized>(
    schedule: &MetaOrderSchedule,
    flow: &FlowModel,
    t_max: usize,
    rng: &mut R,
    mirror_noise: bool,
) -> Result<TradePath> {
    check_t_max(t_max)?;
    let FlowModel::GaussianVolume { sigma_v } = *flow else {
        return Err(Error::domain("gen_volume_flow", "flow model must be GaussianVolume"));
    };
    flow.validate()?;
    let s = if mirror_noise { -sigma_v } else { sigma_v };
    let noise = (0..t_max)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            s * z
        })
        .collect();
    Ok(with_drift(schedule, noise))
}

/// Symmetric α-stable noise volumes of scale `σ_v` plus the drift `Gχ`.
pub fn gen_levy_flow<R: Rng + ?Sized>(
    schedule: &MetaOrderSchedule,
    flow: &FlowModel,
    t_max: usize,
    rng: &mut R,
    mirror_noise: bool,
) -> Result<TradePath> {
    check_t_max(t_max)?;
    let FlowModel::LevyVolume { alpha, sigma_v } = *flow else {
        return Err(Error::domain("gen_levy_flow", "flow model must be LevyVolume"));
    };
    flow.validate()?;
    let s = if mirror_noise { -sigma_v } else { sigma_v };
    let noise = (0..t_max).map(|_| s * standard_sample(alpha, rng)).collect();
    Ok(with_drift(schedule, noise))
}

/// Correlated Gaussian noise volumes from a prepared embedding plus the drift.
pub fn gen_correlated_flow<R: Rng + ?Sized>(
    schedule: &MetaOrderSchedule,
    embedding: &CirculantEmbedding,
    rng: &mut R,
    mirror_noise: bool,
) -> TradePath {
    let mut noise = embedding.sample(rng);
    if mirror_noise {
        noise.iter_mut().for_each(|v| *v = -*v);
    }
    with_drift(schedule, noise)
}

/// Noise-volume increments between consecutive grid times, drawn exactly
/// from the stability of the Gaussian and α-stable families. Returns `ΔV`
/// at every grid time without simulating individual steps.
pub fn sample_imbalance_on_grid<R: Rng + ?Sized>(
    schedule: &MetaOrderSchedule,
    flow: &FlowModel,
    grid: &[usize],
    rng: &mut R,
    mirror_noise: bool,
) -> Result<Vec<f64>> {
    flow.validate()?;
    let flip = if mirror_noise { -1.0 } else { 1.0 };
    let mut out = Vec::with_capacity(grid.len());
    let mut prev = 0usize;
    let mut noise = 0.0;
    for &t in grid {
        if t <= prev {
            return Err(Error::domain(
                "sample_imbalance_on_grid",
                "grid must be strictly increasing from 1",
            ));
        }
        let dt = (t - prev) as f64;
        let incr = match *flow {
            FlowModel::GaussianVolume { sigma_v } => {
                let z: f64 = rng.sample(StandardNormal);
                sigma_v * dt.sqrt() * z
            }
            FlowModel::LevyVolume { alpha, sigma_v } => sigma_v * dt.powf(1.0 / alpha) * standard_sample(alpha, rng),
            _ => {
                return Err(Error::domain(
                    "sample_imbalance_on_grid",
                    "only independent Gaussian or stable volumes can skip steps",
                ))
            }
        };
        noise += flip * incr;
        out.push(noise + schedule.cumulative_drift(t));
        prev = t;
    }
    Ok(out)
}

/// Fundamental path `F_0 = 0, F_t = F_{t−1} + αθ√ν·ε_t`.
pub fn gen_fundamental<R: Rng + ?Sized>(spec: &FundamentalSpec, nu: f64, t_max: usize, rng: &mut R) -> Vec<f64> {
    let sd = spec.step_std(nu);
    let mut out = Vec::with_capacity(t_max + 1);
    let mut f = 0.0;
    out.push(f);
    for _ in 0..t_max {
        let z: f64 = StandardNormal.sample(rng);
        f += sd * z;
        out.push(f);
    }
    out
}
