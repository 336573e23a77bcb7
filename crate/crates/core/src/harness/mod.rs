//! Seeded Monte Carlo experiments.
//!
//! A trial generates a ground truth, observes it according to the scenario,
//! runs the matching solver and compares `‖X − X̄‖_F` with the closed-form
//! bound evaluated on the very inputs the trial used. Trial `i` is seeded
//! with `base_seed + i`; all other randomness is derived from that seed.

mod config;
mod report;
mod run;

pub use config::{DeltaRule, DitherKind, ExperimentConfig, Scenario};
pub use report::{emit_report, fit_rate, write_report, RateFit, CSV_COLUMNS};
pub use run::{median, noise_norm_quantile, run_experiment, summarize, ExperimentOutput, GroupSummary, TrialRecord};
