//! Load a TOML experiment config, run it and write the CSV report.
//!
//! Run with `cargo run --release --example run_config -- configs/noisy.toml out.csv`.

use std::path::PathBuf;

use quantmc::harness::{emit_report, run_experiment, ExperimentConfig};
use quantmc::Result;

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let config = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/quantized.toml")));
    let out = args
        .next()
        .map_or_else(|| std::env::temp_dir().join("quantmc-report.csv"), PathBuf::from);

    let cfg = ExperimentConfig::from_file(&config)?;
    let output = run_experiment(&cfg)?;
    emit_report(&output, &out)?;
    for g in &output.summary {
        println!(
            "{:<16} m'={:<5} median err {:.4}  bound {:.4}  satisfied {:.0}%",
            g.bound_id.to_string(),
            g.m_prime,
            g.median_err,
            g.bound_value_median,
            100.0 * g.satisfaction_rate
        );
    }
    println!("report written to {}", out.display());
    Ok(())
}
