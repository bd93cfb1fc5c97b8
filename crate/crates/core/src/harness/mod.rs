//! Monte-Carlo experiment runner.
//!
//! Each experiment draws an ensemble of paths conditioned on a meta-order
//! starting at `t = 0`, prices them with one of the market-maker rules and
//! reduces the recorded quantity to ensemble statistics on a time grid.
//! Paths are independent work units; results are bit-identical for any
//! number of workers.

mod config;
mod csv;
mod experiment;
mod fit;
mod oracle;
mod stats;

pub use config::{linear_grid, log_grid, ExperimentConfig, MarketConfig, PricingRule, MAX_POINTS_PER_DECADE};
pub use csv::{fmt17, write_curve_csv, write_theory_csv, Source, CURVE_HEADER};
pub use experiment::{
    run_aggregated_impact, run_estimator_experiment, run_impact_experiment, run_spread_experiment,
    run_variance_experiment, AggregatedImpact, ImpactCurve, MIN_CENTRAL_BIN,
};
pub use fit::{loglog_fit_points, loglog_slope_fit, slope_through_origin, zero_crossing, SlopeFit, MIN_FIT_POINTS};
pub use oracle::{oracle_posterior_enumeration, OracleCell, ORACLE_MAX_T, ORACLE_NODES};
pub use stats::Moments;
