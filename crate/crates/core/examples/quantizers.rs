//! Scalar quantizers and the unbiasedness that dithering buys.
//!
//! Run with `cargo run --example quantizers`.

use quantmc::quantize::{dithered_quantize, one_bit, scalar_quantize, stochastic_quantize, QuantizerSpec};
use quantmc::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let spec = QuantizerSpec::new(0.5, 4)?;
    println!("alphabet: {:?}", spec.alphabet());

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let draws = 200_000;
    println!("{:>6} {:>10} {:>10} {:>10}", "x", "plain", "dithered", "stochastic");
    for x in [-0.9, -0.3, 0.1, 0.6] {
        let plain = scalar_quantize(x, &spec)?;
        let mut dithered = 0.0;
        let mut stochastic = 0.0;
        for _ in 0..draws {
            dithered += dithered_quantize(x, rng.random_range(-0.25..=0.25), &spec)?;
            stochastic += stochastic_quantize(x, &spec, &mut rng)?;
        }
        println!(
            "{x:>6.2} {plain:>10.4} {:>10.4} {:>10.4}",
            dithered / draws as f64,
            stochastic / draws as f64
        );
    }

    // A uniform threshold on [-λ, λ] turns the sign into an unbiased estimate of x/λ.
    let lambda = 2.0;
    let x = 0.7;
    let mean: f64 = (0..draws)
        .map(|_| one_bit(x, rng.random_range(-lambda..=lambda)).map(f64::from))
        .sum::<Result<f64>>()?
        / draws as f64;
    println!("E sgn(x - τ) = {mean:.4}, x/λ = {:.4}", x / lambda);
    Ok(())
}
