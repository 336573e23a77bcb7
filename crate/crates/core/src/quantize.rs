//! Scalar quantizers and dither generation.
//!
//! Outputs are saturated to the finite alphabet: `±KΔ/2` for the memoryless
//! and dithered quantizers, `±KΔ` for the stochastic one. Inside the
//! unsaturated range both the dithered and the stochastic quantizer are
//! unbiased.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::matrix::SampleMask;
use crate::{Error, Matrix, Result};

/// Resolution `Δ` and alphabet half-count `K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizerSpec {
    pub resolution: f64,
    pub levels: u32,
}

impl QuantizerSpec {
    pub fn new(resolution: f64, levels: u32) -> Result<Self> {
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::Argument(format!("resolution must be positive, got {resolution}")));
        }
        if levels == 0 {
            return Err(Error::Argument("alphabet size K must be at least 1".into()));
        }
        Ok(Self { resolution, levels })
    }

    /// Largest magnitude in the alphabet, `KΔ/2`.
    pub fn max_output(&self) -> f64 {
        self.levels as f64 * self.resolution / 2.0
    }

    /// `{±kΔ/2 : 0 ≤ k ≤ K}`, ascending.
    pub fn alphabet(&self) -> Vec<f64> {
        let half = self.resolution / 2.0;
        let k = self.levels as i64;
        (-k..=k).map(|i| i as f64 * half).collect()
    }

    /// `{±kΔ : 0 ≤ k ≤ K}`, ascending.
    pub fn stochastic_alphabet(&self) -> Vec<f64> {
        let k = self.levels as i64;
        (-k..=k).map(|i| i as f64 * self.resolution).collect()
    }

    pub(crate) fn apply(&self, x: f64) -> f64 {
        let d = self.resolution;
        let v = d * ((x / d).floor() + 0.5);
        v.clamp(-self.max_output(), self.max_output())
    }

    pub(crate) fn apply_stochastic(&self, x: f64, u: f64) -> f64 {
        let d = self.resolution;
        let f = (x / d).floor();
        let p = 1.0 - x / d + f;
        let v = if u < p { f * d } else { (f + 1.0) * d };
        let cap = self.levels as f64 * d;
        v.clamp(-cap, cap)
    }
}

fn finite(x: f64, what: &str) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::Argument(format!("{what} must be finite, got {x}")))
    }
}

/// Memoryless quantizer `Δ(⌊x/Δ⌋ + 1/2)`, saturated to `±KΔ/2`.
pub fn scalar_quantize(x: f64, spec: &QuantizerSpec) -> Result<f64> {
    Ok(spec.apply(finite(x, "input")?))
}

/// Quantizes `x + τ`.
pub fn dithered_quantize(x: f64, tau: f64, spec: &QuantizerSpec) -> Result<f64> {
    Ok(spec.apply(finite(x, "input")? + finite(tau, "dither")?))
}

/// Randomized rounding to `⌊x/Δ⌋Δ` (probability `p = 1 − x/Δ + ⌊x/Δ⌋`) or to
/// the next level up.
pub fn stochastic_quantize<R: Rng + ?Sized>(x: f64, spec: &QuantizerSpec, rng: &mut R) -> Result<f64> {
    let x = finite(x, "input")?;
    Ok(spec.apply_stochastic(x, rng.random::<f64>()))
}

/// Sign comparison of `x` against threshold `tau`; ties give `+1`.
pub fn one_bit(x: f64, tau: f64) -> Result<i8> {
    Ok(sign_against(finite(x, "input")?, finite(tau, "threshold")?))
}

#[inline]
pub(crate) fn sign_against(x: f64, tau: f64) -> i8 {
    if x >= tau {
        1
    } else {
        -1
    }
}

/// Distribution of dither / threshold values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DitherSpec {
    None,
    /// `U[-half_width, half_width]`.
    Uniform {
        half_width: f64,
    },
    Gaussian {
        sigma: f64,
    },
}

impl DitherSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DitherSpec::None => Ok(()),
            DitherSpec::Uniform { half_width } if half_width > 0.0 && half_width.is_finite() => Ok(()),
            DitherSpec::Gaussian { sigma } if sigma > 0.0 && sigma.is_finite() => Ok(()),
            other => Err(Error::Argument(format!("invalid dither {other:?}"))),
        }
    }

    /// `T = Var(τ)`.
    pub fn variance(&self) -> f64 {
        match *self {
            DitherSpec::None => 0.0,
            DitherSpec::Uniform { half_width } => half_width * half_width / 3.0,
            DitherSpec::Gaussian { sigma } => sigma * sigma,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            DitherSpec::None => "none",
            DitherSpec::Uniform { .. } => "uniform",
            DitherSpec::Gaussian { .. } => "gaussian",
        }
    }

    /// Half-width or sigma; 0 for no dither.
    pub fn parameter(&self) -> f64 {
        match *self {
            DitherSpec::None => 0.0,
            DitherSpec::Uniform { half_width } => half_width,
            DitherSpec::Gaussian { sigma } => sigma,
        }
    }

    pub(crate) fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            DitherSpec::None => 0.0,
            DitherSpec::Uniform { half_width } => rng.random_range(-half_width..=half_width),
            DitherSpec::Gaussian { sigma } => sigma * rng.sample::<f64, _>(StandardNormal),
        }
    }
}

/// `m × m′` array of thresholds; row `ℓ` is the `ℓ`-th dithering sequence over
/// the mask in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct DitherTensor {
    values: Vec<f64>,
    m: usize,
    m_prime: usize,
    pub spec: DitherSpec,
    pub seed: u64,
}

impl DitherTensor {
    pub fn from_values(spec: DitherSpec, seed: u64, m: usize, m_prime: usize, values: Vec<f64>) -> Result<Self> {
        if m == 0 || m_prime == 0 || values.len() != m * m_prime {
            return Err(Error::Dimension(format!(
                "{} threshold values for a {m}x{m_prime} tensor",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("thresholds must be finite".into()));
        }
        Ok(Self {
            values,
            m,
            m_prime,
            spec,
            seed,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn m_prime(&self) -> usize {
        self.m_prime
    }

    pub fn row(&self, l: usize) -> &[f64] {
        &self.values[l * self.m_prime..(l + 1) * self.m_prime]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.m_prime)
    }

    pub fn get(&self, l: usize, k: usize) -> f64 {
        self.values[l * self.m_prime + k]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        for row in self.rows() {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R, spec: DitherSpec, seed: u64) -> Result<Self> {
        let x = crate::matrix::read_matrix_csv(input)?;
        let (m, mp) = (x.nrows(), x.ncols());
        let values = (0..m).flat_map(|l| (0..mp).map(move |k| (l, k))).map(|(l, k)| x[(l, k)]).collect();
        Self::from_values(spec, seed, m, mp, values)
    }
}

/// Draws an `m × m′` dither tensor. Row `ℓ` comes from its own ChaCha stream,
/// so any row can be regenerated from `(seed, ℓ)` alone.
pub fn generate_dither_tensor(spec: DitherSpec, m: usize, m_prime: usize, seed: u64) -> Result<DitherTensor> {
    spec.validate()?;
    if m == 0 || m_prime == 0 {
        return Err(Error::Argument(format!("dither tensor needs m ≥ 1 and m′ ≥ 1, got {m}x{m_prime}")));
    }
    let mut values = Vec::with_capacity(m * m_prime);
    for l in 0..m {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(l as u64);
        values.extend((0..m_prime).map(|_| spec.draw(&mut rng)));
    }
    Ok(DitherTensor {
        values,
        m,
        m_prime,
        spec,
        seed,
    })
}

/// Quantized data matrix `Q`: the (dithered) quantization of `X` on `Ω`, zero
/// elsewhere. A uniform dither must have half-width `Δ/2`.
pub fn quantize_matrix(x: &Matrix, mask: &SampleMask, spec: &QuantizerSpec, dither: DitherSpec, seed: u64) -> Result<Matrix> {
    let values = crate::matrix::select_vector(x, mask)?;
    if let DitherSpec::Uniform { half_width } = dither {
        let expected = spec.resolution / 2.0;
        if (half_width - expected).abs() > 1e-12 * expected {
            return Err(Error::Argument(format!(
                "uniform dither half-width {half_width} must equal Δ/2 = {expected}"
            )));
        }
    }
    let taus = match dither {
        DitherSpec::None => vec![0.0; values.len()],
        _ => generate_dither_tensor(dither, 1, values.len(), seed)?.values,
    };
    let q: Vec<f64> = values
        .iter()
        .zip(&taus)
        .map(|(&v, &t)| dithered_quantize(v, t, spec))
        .collect::<Result<_>>()?;
    crate::matrix::scatter(&q, mask)
}

/// Stochastic quantization of `X` on `Ω`, zero elsewhere.
pub fn stochastic_quantize_matrix(x: &Matrix, mask: &SampleMask, spec: &QuantizerSpec, seed: u64) -> Result<Matrix> {
    let values = crate::matrix::select_vector(x, mask)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q: Vec<f64> = values
        .iter()
        .map(|&v| stochastic_quantize(v, spec, &mut rng))
        .collect::<Result<_>>()?;
    crate::matrix::scatter(&q, mask)
}

/// Additive Gaussian noise vector, one draw per observed entry.
pub(crate) fn gaussian_vector(sigma: f64, len: usize, seed: u64) -> Result<Vec<f64>> {
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::Argument(format!("noise sigma {sigma}: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..len).map(|_| rng.sample(normal)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{sample_mask_uniform, Dimensions, SampleMask};
    use proptest::prelude::*;

    fn spec(d: f64, k: u32) -> QuantizerSpec {
        QuantizerSpec::new(d, k).unwrap()
    }

    #[test]
    fn scalar_examples() {
        assert_eq!(scalar_quantize(0.3, &spec(1.0, 4)).unwrap(), 0.5);
        assert_eq!(scalar_quantize(-1.2, &spec(0.5, 8)).unwrap(), -1.25);
        assert_eq!(scalar_quantize(10.0, &spec(1.0, 4)).unwrap(), 2.0);
        assert!(scalar_quantize(f64::NAN, &spec(1.0, 4)).is_err());
    }

    #[test]
    fn dithered_examples() {
        assert_eq!(dithered_quantize(0.3, 0.4, &spec(1.0, 4)).unwrap(), 0.5);
        assert_eq!(dithered_quantize(0.3, -0.4, &spec(1.0, 4)).unwrap(), -0.5);
        assert_eq!(dithered_quantize(0.0, 0.0, &spec(1.0, 4)).unwrap(), 0.5);
        assert!(dithered_quantize(0.0, f64::INFINITY, &spec(1.0, 4)).is_err());
    }

    #[test]
    fn invalid_specs() {
        assert!(QuantizerSpec::new(0.0, 4).is_err());
        assert!(QuantizerSpec::new(1.0, 0).is_err());
        assert!(DitherSpec::Gaussian { sigma: 0.0 }.validate().is_err());
        assert!(generate_dither_tensor(DitherSpec::Gaussian { sigma: 0.0 }, 1, 1, 0).is_err());
    }

    #[test]
    fn alphabets() {
        let s = spec(1.0, 2);
        assert_eq!(s.alphabet(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(s.stochastic_alphabet(), vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
    }

    #[test]
    fn stochastic_exact_level_is_deterministic() {
        let s = spec(0.5, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            assert_eq!(stochastic_quantize(1.5, &s, &mut rng).unwrap(), 1.5);
        }
    }

    #[test]
    fn stochastic_probabilities() {
        // p = 1 - 0.75 + 0 = 0.25 for the lower level
        let s = spec(1.0, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let mut lower = 0usize;
        let mut sum = 0.0;
        for _ in 0..n {
            let q = stochastic_quantize(0.75, &s, &mut rng).unwrap();
            assert!(q == 0.0 || q == 1.0);
            if q == 0.0 {
                lower += 1;
            }
            sum += q;
        }
        let frac = lower as f64 / n as f64;
        assert!((frac - 0.25).abs() < 4.0 * (0.25f64 * 0.75 / n as f64).sqrt());
        assert!((sum / n as f64 - 0.75).abs() <= 0.002);
    }

    #[test]
    fn one_bit_examples() {
        assert_eq!(one_bit(0.3, 0.5).unwrap(), -1);
        assert_eq!(one_bit(0.5, 0.5).unwrap(), 1);
        assert!(one_bit(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn one_bit_matches_dithered_quantizer_on_grid() {
        let d = 1.0;
        let s = spec(d, 4);
        let n = 200;
        for a in 1..n {
            let x = -d / 2.0 + d * a as f64 / n as f64;
            for b in 1..n {
                let tau = -d / 2.0 + d * b as f64 / n as f64;
                let lhs = d / 2.0 * one_bit(x, -tau).unwrap() as f64;
                assert_eq!(lhs, dithered_quantize(x, tau, &s).unwrap(), "x={x} tau={tau}");
            }
        }
    }

    #[test]
    fn memoryless_reduces_to_sign_inside_resolution() {
        let d = 0.8;
        let s = spec(d, 4);
        let n = 10_000;
        for a in 1..n {
            let x = -d + 2.0 * d * a as f64 / n as f64;
            if x == 0.0 {
                continue;
            }
            assert_eq!(scalar_quantize(x, &s).unwrap(), d / 2.0 * x.signum());
        }
    }

    #[test]
    fn dither_mean_cancels_quantization() {
        let s = spec(1.0, 8);
        let dither = DitherSpec::Uniform { half_width: 0.5 };
        let n = 1_000_000usize;
        for (i, &x) in [-2.9, -0.3, 0.0, 1.7].iter().enumerate() {
            let t = generate_dither_tensor(dither, 1, n, 100 + i as u64).unwrap();
            let mean = t.row(0).iter().map(|&tau| dithered_quantize(x, tau, &s).unwrap()).sum::<f64>() / n as f64;
            let tol = 4.0 * 0.5 / (n as f64).sqrt() + 1e-3;
            assert!((mean - x).abs() <= tol, "x={x} mean={mean}");
        }
    }

    #[test]
    fn uniform_dither_variance() {
        let t = generate_dither_tensor(DitherSpec::Uniform { half_width: 1.0 }, 1, 1_000_000, 5).unwrap();
        let v = t.values();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
        assert!((0.330..=0.337).contains(&var), "{var}");
    }

    #[test]
    fn gaussian_dither_variance() {
        let spec = DitherSpec::Gaussian { sigma: 0.7 };
        let t = generate_dither_tensor(spec, 4, 250_000, 9).unwrap();
        let v = t.values();
        let var = v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64;
        assert!((var - spec.variance()).abs() <= 0.01 * spec.variance());
    }

    #[test]
    fn dither_rows_are_reproducible() {
        let spec = DitherSpec::Uniform { half_width: 2.0 };
        let a = generate_dither_tensor(spec, 3, 50, 42).unwrap();
        let b = generate_dither_tensor(spec, 3, 50, 42).unwrap();
        assert_eq!(a, b);
        let c = generate_dither_tensor(spec, 5, 50, 42).unwrap();
        assert_eq!(a.row(2), c.row(2));
        assert_ne!(a.row(0), a.row(1));
    }

    #[test]
    fn dither_csv_round_trip() {
        let spec = DitherSpec::Gaussian { sigma: 1.0 };
        let a = generate_dither_tensor(spec, 3, 7, 1).unwrap();
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        assert_eq!(DitherTensor::read_csv(buf.as_slice(), spec, 1).unwrap(), a);
    }

    #[test]
    fn quantize_matrix_examples() {
        let d = Dimensions::new(1, 1).unwrap();
        let x = Matrix::from_element(1, 1, 0.3);
        let q = quantize_matrix(&x, &SampleMask::full(d), &spec(1.0, 4), DitherSpec::None, 0).unwrap();
        assert_eq!(q[(0, 0)], 0.5);

        let d = Dimensions::new(3, 3).unwrap();
        let x = Matrix::from_element(3, 3, 0.3);
        let mask = SampleMask::new(d, vec![(0, 0), (2, 1)]).unwrap();
        let q = quantize_matrix(&x, &mask, &spec(1.0, 4), DitherSpec::None, 0).unwrap();
        assert_eq!(q[(1, 1)], 0.0);
        assert_eq!(q[(2, 1)], 0.5);

        let bad = DitherSpec::Uniform { half_width: 1.0 };
        assert!(quantize_matrix(&x, &mask, &spec(1.0, 4), bad, 0).is_err());
        assert!(matches!(
            quantize_matrix(&Matrix::zeros(2, 3), &mask, &spec(1.0, 4), DitherSpec::None, 0),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn quantize_matrix_is_unbiased_on_average() {
        let d = Dimensions::new(4, 4).unwrap();
        let s = spec(0.5, 8);
        let x = crate::matrix::generate_low_rank(d, 2, 1.0, 3).unwrap().matrix;
        let mask = sample_mask_uniform(d, 10, 3).unwrap();
        let dither = DitherSpec::Uniform { half_width: 0.25 };
        let n = 100_000;
        let mut acc = Matrix::zeros(4, 4);
        for seed in 0..n {
            acc += quantize_matrix(&x, &mask, &s, dither, seed).unwrap();
        }
        acc /= n as f64;
        let target = crate::matrix::project(&x, &mask).unwrap();
        assert!((acc - target).amax() <= 0.01);
    }

    proptest! {
        #[test]
        fn quantization_error_is_half_step(x in -3.5f64..3.5) {
            // (K-1)Δ/2 = 3.5 for Δ=1, K=8
            let q = scalar_quantize(x, &spec(1.0, 8)).unwrap();
            prop_assert!((q - x).abs() <= 0.5);
        }

        #[test]
        fn outputs_stay_in_alphabet(x in -1e3f64..1e3, tau in -1.0f64..1.0, d in 0.05f64..2.0, k in 1u32..12) {
            let s = spec(d, k);
            let q = dithered_quantize(x, tau, &s).unwrap();
            prop_assert!(q.abs() <= s.max_output());
            let idx = q / (d / 2.0);
            prop_assert!((idx - idx.round()).abs() < 1e-6);
            let mut rng = ChaCha8Rng::seed_from_u64(x.to_bits());
            let qs = stochastic_quantize(x, &s, &mut rng).unwrap();
            prop_assert!(qs.abs() <= k as f64 * d + 1e-12);
        }
    }
}
