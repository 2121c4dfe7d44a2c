//! Config-driven sweeps over S, persisted tables, rate fits and verdicts.

pub mod config;
pub mod fit;
pub mod report;
pub mod run;

pub use config::ExperimentConfig;
pub use fit::{fit_rates, top_half, RateFit};
pub use report::{evaluate, render, report, Criterion, Status, Verdict};
pub use run::{approximants, load_config, load_records, run_pipeline, KRecord, KStatus};

/// Environment variable that overrides the output root.
pub const OUTPUT_ENV: &str = "PEAKLAB_OUT";

/// The output root: `$PEAKLAB_OUT` if set, else `runs`.
pub fn output_root() -> std::path::PathBuf {
    std::env::var_os(OUTPUT_ENV).map_or_else(|| "runs".into(), Into::into)
}
