//! One-bit completion when only the dither distribution is known.
//!
//! Every entry is seen once through a threshold drawn from U[-Δ/2, Δ/2]; the
//! decoder rescales the signs into an unbiased surrogate and runs the
//! Frobenius-ball solver on it.
//!
//! Run with `cargo run --release --example statistics_only`.

use quantmc::bounds::{bound_noisy, bound_statistics_only, BoundInputs};
use quantmc::matrix::{generate_low_rank, sample_mask_uniform, Dimensions};
use quantmc::onebit::{observe_statistics_only, NoiseSpec};
use quantmc::solvers::{noise_radius, solve_statistics_only, ProxParams};
use quantmc::Result;

fn main() -> Result<()> {
    let dims = Dimensions::new(24, 24)?;
    let (r, alpha, resolution, m_prime) = (2, 1.0, 2.0, 400);
    let truth = generate_low_rank(dims, r, alpha, 20)?;
    let mask = sample_mask_uniform(dims, m_prime, 21)?;
    let delta = noise_radius(m_prime, resolution);

    let mut inputs = BoundInputs {
        n1: dims.n1,
        n2: dims.n2,
        r,
        alpha,
        resolution,
        m_prime,
        epsilon: 0.2,
        ..BoundInputs::default()
    };

    for sigma in [0.0, 0.1] {
        let noise = if sigma > 0.0 {
            NoiseSpec::gaussian(sigma)
        } else {
            NoiseSpec::none()
        };
        let obs = observe_statistics_only(&truth.matrix, &mask, resolution, &noise, 22)?;
        let report = solve_statistics_only(&obs, resolution, delta, &ProxParams::default())?;
        let err = (&report.x_bar - &truth.matrix).norm();
        inputs.sigma1 = sigma;
        inputs.sigma2 = sigma;
        inputs.beta = obs.noise_frobenius();
        let bound = if sigma > 0.0 {
            bound_noisy(&inputs)?
        } else {
            bound_statistics_only(&inputs)?
        };
        println!("σ = {sigma}: ‖X − X̄‖_F = {err:.4}, {} bound {:.4}", bound.formula_id, bound.value);
    }
    Ok(())
}
