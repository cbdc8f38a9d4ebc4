//! Moment oracles, frequency-domain evaluation, poles, passivity, Monte Carlo
//! sweeps, and benchmark circuit generators.

pub mod generators;
pub mod moments;
pub mod montecarlo;
pub mod passivity;
pub mod poles;
pub mod sweep;
pub mod transfer;

pub use generators::{gen_bench, BenchSpec};
pub use moments::{max_relative_deviation, oracle_moments, MomentTable, MultiIndex};
pub use montecarlo::{monte_carlo_poles, McResult, Variation};
pub use passivity::{corners, passivity_check, PassivityReport};
pub use poles::{dominant_poles, paired_relative_errors, PoleSet};
pub use sweep::{log_grid, sweep_compare, Response, SweepResult};
pub use transfer::{eval_transfer, FullEvaluator, TransferModel};
