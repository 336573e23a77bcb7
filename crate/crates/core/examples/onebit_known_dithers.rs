//! One-bit completion when the dither thresholds are known to the decoder.
//!
//! Run with `cargo run --release --example onebit_known_dithers`.

use quantmc::bounds::{bound_inconsistent, bound_uniform, BoundInputs};
use quantmc::matrix::{generate_low_rank, sample_mask_uniform, Dimensions};
use quantmc::onebit::{build_polyhedron, consistency_report, observe_one_bit, NoiseSpec};
use quantmc::quantize::{generate_dither_tensor, DitherSpec};
use quantmc::solvers::{solve_one_bit_mc, ProxParams};
use quantmc::Result;

fn main() -> Result<()> {
    let dims = Dimensions::new(16, 16)?;
    let (r, alpha, m, m_prime) = (1, 1.0, 20, 160);

    let truth = generate_low_rank(dims, r, alpha, 10)?;
    let mask = sample_mask_uniform(dims, m_prime, 11)?;
    let dithers = DitherSpec::Uniform { half_width: alpha };
    let thresholds = generate_dither_tensor(dithers, m, m_prime, 12)?;
    let obs = observe_one_bit(&truth.matrix, &mask, &thresholds, &NoiseSpec::none(), 13)?;

    let poly = build_polyhedron(&obs)?;
    let report = solve_one_bit_mc(&poly, 1.0, &ProxParams::default())?;
    let consistency = consistency_report(&report.x_bar, &obs, &truth.matrix)?;
    let err = (&report.x_bar - &truth.matrix).norm();

    let inputs = BoundInputs {
        n1: dims.n1,
        n2: dims.n2,
        r,
        alpha,
        m,
        m_prime,
        epsilon: 0.1,
        dither_variance: dithers.variance(),
        zeta: consistency.zeta as u64,
        ..BoundInputs::default()
    };
    println!(
        "{} constraints, violation {:.2e}, ζ = {}",
        poly.len(),
        report.data_residual,
        consistency.zeta
    );
    println!("‖X − X̄‖_F = {err:.4}");
    println!("uniform-dither bound      {:.4}", bound_uniform(&inputs)?.value);
    println!("measured-inconsistency bound {:.4}", bound_inconsistent(&inputs)?.value);
    Ok(())
}
