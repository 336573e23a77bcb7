//! Empirical error decay over a grid of observation budgets.
//!
//! Run with `cargo run --release --example rate_sweep`.

use quantmc::harness::{fit_rate, run_experiment, ExperimentConfig, Scenario};
use quantmc::Result;

fn main() -> Result<()> {
    let cfg = ExperimentConfig {
        scenario: Scenario::RateSweep,
        n1: 32,
        n2: 32,
        m_prime_grid: vec![128, 256, 512, 1024],
        trials: 10,
        ..ExperimentConfig::default()
    };
    let output = run_experiment(&cfg)?;
    let fit = fit_rate(&output.records)?;
    for (m_prime, err) in &fit.points {
        println!("m' = {m_prime:>5}: median ‖X − X̄‖_F = {err:.4}");
    }
    println!("slope {:.3} ± {:.3} (95%)", fit.slope, fit.half_width);
    Ok(())
}
