//! Tabulate every closed-form bound and the analytic decay of ε in m′.
//!
//! Run with `cargo run --example bounds_table`.

use quantmc::bounds::{compare_tightness, epsilon_decay_rate, epsilon_root, write_bound_csv, BoundInputs, FormulaId};
use quantmc::Result;

fn main() -> Result<()> {
    let base = BoundInputs {
        n1: 50,
        n2: 50,
        r: 3,
        alpha: 1.0,
        resolution: 0.25,
        levels: 8,
        m: 10,
        m_prime: 1500,
        epsilon: 0.3,
        dither_variance: 1.0 / 3.0,
        ..BoundInputs::default()
    };
    let rows: Vec<_> = FormulaId::ALL
        .iter()
        .map(|f| f.evaluate(&base).map(|v| (base, v)))
        .collect::<Result<_>>()?;
    write_bound_csv(std::io::stdout().lock(), &rows)?;

    let t = compare_tightness(&base)?;
    println!("\nuniform vs sub-gaussian: {:?} (gap {:.3})", t.verdict, t.gap);

    // ε only decays like m'^(-2/5) once 6ε dominates 2α²r + 2T, hence tiny α and no dither variance.
    let tiny_alpha = BoundInputs {
        alpha: 1e-3,
        dither_variance: 0.0,
        ..base
    };
    println!("\n{:>10} {:>12}", "m'", "ε at zero exponent");
    for m_prime in [1_000, 10_000, 100_000, 1_000_000] {
        let e = epsilon_root(&BoundInputs { m_prime, ..tiny_alpha }, FormulaId::Subgaussian)?;
        println!("{m_prime:>10} {e:>12.6}");
    }
    let grid = [1_000, 10_000, 100_000, 1_000_000, 10_000_000];
    let slope = epsilon_decay_rate(&tiny_alpha, FormulaId::Subgaussian, &grid)?;
    println!("log-log slope of ε(m'): {slope:.4}");
    Ok(())
}
