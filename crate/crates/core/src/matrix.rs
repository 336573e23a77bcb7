//! Shared matrix types: dimensions, low-rank ground truth, sampling masks and
//! the projection / selection operators.
//!
//! Vectorization is column-major throughout: entry `(i, j)` of an `n1 x n2`
//! matrix sits at flat index `j * n1 + i`. Masks keep their entries sorted in
//! that order so that [`select_vector`], the one-bit constraint rows and the
//! CSV fixtures all agree.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dimensions {
    pub n1: usize,
    pub n2: usize,
}

impl Dimensions {
    pub fn new(n1: usize, n2: usize) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::Argument(format!("dimensions must be positive, got {n1}x{n2}")));
        }
        Ok(Self { n1, n2 })
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn min(&self) -> usize {
        self.n1.min(self.n2)
    }

    /// Column-major flat index of `(row, col)`.
    pub fn flat_index(&self, row: usize, col: usize) -> usize {
        col * self.n1 + row
    }

    pub fn of(m: &Matrix) -> Self {
        Self {
            n1: m.nrows(),
            n2: m.ncols(),
        }
    }

    pub(crate) fn check(&self, m: &Matrix, what: &str) -> Result<()> {
        if m.nrows() != self.n1 || m.ncols() != self.n2 {
            return Err(Error::Dimension(format!(
                "{what} is {}x{}, expected {}x{}",
                m.nrows(),
                m.ncols(),
                self.n1,
                self.n2
            )));
        }
        Ok(())
    }
}

/// A member of the set of rank-`r` matrices with max-norm `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub matrix: Matrix,
    pub rank_budget: usize,
    pub max_norm: f64,
    /// Seed that actually produced `matrix` (may exceed the requested seed if a
    /// degenerate draw was rejected).
    pub seed: u64,
}

impl GroundTruth {
    pub fn dims(&self) -> Dimensions {
        Dimensions::of(&self.matrix)
    }
}

/// Draws `X = A Bᵀ` with standard normal factors and rescales it so that
/// `max |X_ij| = alpha` exactly.
pub fn generate_low_rank(dims: Dimensions, r: usize, alpha: f64, seed: u64) -> Result<GroundTruth> {
    if r == 0 || r > dims.min() {
        return Err(Error::Dimension(format!(
            "rank budget {r} must lie in 1..={} for {}x{}",
            dims.min(),
            dims.n1,
            dims.n2
        )));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Argument(format!("alpha must be positive, got {alpha}")));
    }

    let mut seed_used = seed;
    loop {
        let mut rng = ChaCha8Rng::seed_from_u64(seed_used);
        let a = Matrix::from_fn(dims.n1, r, |_, _| rng.sample::<f64, _>(StandardNormal));
        let b = Matrix::from_fn(dims.n2, r, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut x = &a * b.transpose();

        let (arg, peak) = x
            .iter()
            .enumerate()
            .fold((0, 0.0_f64), |(bi, bv), (i, v)| if v.abs() > bv { (i, v.abs()) } else { (bi, bv) });
        if peak == 0.0 || !peak.is_finite() {
            seed_used = seed_used.wrapping_add(1);
            continue;
        }
        x *= alpha / peak;
        // pin the extreme entry so the max-norm is exactly alpha
        let s = x[arg].signum();
        x[arg] = s * alpha;
        return Ok(GroundTruth {
            matrix: x,
            rank_budget: r,
            max_norm: alpha,
            seed: seed_used,
        });
    }
}

/// Set of observed positions, stored in canonical column-major order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleMask {
    dims: Dimensions,
    entries: Vec<(usize, usize)>,
}

impl SampleMask {
    /// Validates and canonically orders `entries`.
    pub fn new(dims: Dimensions, mut entries: Vec<(usize, usize)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Argument("sample mask must not be empty".into()));
        }
        if let Some(&(i, j)) = entries.iter().find(|&&(i, j)| i >= dims.n1 || j >= dims.n2) {
            return Err(Error::Argument(format!("mask entry ({i},{j}) outside {}x{}", dims.n1, dims.n2)));
        }
        entries.sort_by_key(|&(i, j)| dims.flat_index(i, j));
        if let Some(w) = entries.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Argument(format!("duplicate mask entry ({},{})", w[0].0, w[0].1)));
        }
        Ok(Self { dims, entries })
    }

    /// Every position of the matrix.
    pub fn full(dims: Dimensions) -> Self {
        let entries = (0..dims.n2).flat_map(|j| (0..dims.n1).map(move |i| (i, j))).collect();
        Self { dims, entries }
    }

    pub fn dims(&self) -> Dimensions {
        self.dims
    }

    pub fn entries(&self) -> &[(usize, usize)] {
        &self.entries
    }

    /// `m′ = |Ω|`.
    pub fn m_prime(&self) -> usize {
        self.entries.len()
    }

    pub fn flat_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|&(i, j)| self.dims.flat_index(i, j))
    }

    /// Dense 0/1 indicator matrix of the mask.
    pub fn indicator(&self) -> Matrix {
        let mut m = Matrix::zeros(self.dims.n1, self.dims.n2);
        for &(i, j) in &self.entries {
            m[(i, j)] = 1.0;
        }
        m
    }
}

/// Draws `m_prime` distinct positions uniformly without replacement.
pub fn sample_mask_uniform(dims: Dimensions, m_prime: usize, seed: u64) -> Result<SampleMask> {
    if m_prime == 0 || m_prime > dims.len() {
        return Err(Error::Argument(format!("m′ = {m_prime} must lie in 1..={}", dims.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut flat = rand::seq::index::sample(&mut rng, dims.len(), m_prime).into_vec();
    flat.sort_unstable();
    let entries = flat.into_iter().map(|k| (k % dims.n1, k / dims.n1)).collect();
    Ok(SampleMask { dims, entries })
}

/// `P_Ω(X)`: keeps the observed entries and zeroes the rest.
pub fn project(x: &Matrix, mask: &SampleMask) -> Result<Matrix> {
    mask.dims.check(x, "matrix")?;
    let mut out = Matrix::zeros(mask.dims.n1, mask.dims.n2);
    for &(i, j) in &mask.entries {
        out[(i, j)] = x[(i, j)];
    }
    Ok(out)
}

/// `P vec(X)`: the observed entries of `X` in canonical mask order.
pub fn select_vector(x: &Matrix, mask: &SampleMask) -> Result<Vec<f64>> {
    mask.dims.check(x, "matrix")?;
    Ok(mask.entries.iter().map(|&(i, j)| x[(i, j)]).collect())
}

/// Inverse of [`select_vector`]: scatters `values` onto the mask, zero elsewhere.
pub fn scatter(values: &[f64], mask: &SampleMask) -> Result<Matrix> {
    if values.len() != mask.m_prime() {
        return Err(Error::Dimension(format!(
            "{} values for a mask of size {}",
            values.len(),
            mask.m_prime()
        )));
    }
    let mut out = Matrix::zeros(mask.dims.n1, mask.dims.n2);
    for (&(i, j), &v) in mask.entries.iter().zip(values) {
        out[(i, j)] = v;
    }
    Ok(out)
}

pub fn ensure_finite(x: &Matrix, what: &str) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Argument(format!("{what} contains non-finite entries")))
    }
}

pub fn max_norm(x: &Matrix) -> f64 {
    x.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

pub fn nuclear_norm(x: &Matrix) -> f64 {
    x.singular_values().iter().sum()
}

/// Writes a matrix as CSV, one row per line, shortest round-trip decimals.
pub fn write_matrix_csv<W: Write>(x: &Matrix, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for row in x.row_iter() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn read_matrix_csv<R: Read>(input: R) -> Result<Matrix> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(input);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| Error::Argument(format!("bad number {s:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let n1 = rows.len();
    let n2 = rows.first().map_or(0, Vec::len);
    if n1 == 0 || n2 == 0 {
        return Err(Error::Argument("empty matrix csv".into()));
    }
    if rows.iter().any(|r| r.len() != n2) {
        return Err(Error::Dimension("ragged matrix csv".into()));
    }
    let x = Matrix::from_fn(n1, n2, |i, j| rows[i][j]);
    ensure_finite(&x, "matrix csv")?;
    Ok(x)
}
