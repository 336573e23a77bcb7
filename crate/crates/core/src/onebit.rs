//! Dithered one-bit observations of a partially sampled matrix.
//!
//! Each observed entry `x_k` is compared against `m` thresholds, producing
//! `m × m′` signs. With the thresholds known, the signs define the one-bit
//! polyhedron `{X : s·(x_k − t) ≥ 0}`; [`PolyhedronSystem`] stores its rows as
//! `(ℓ, k, s, t)` tuples. Without them (statistics-only mode) only the dither
//! bound is known and the signs are turned into a surrogate data matrix.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::matrix::{read_matrix_csv, scatter, select_vector, Dimensions, SampleMask};
use crate::quantize::{generate_dither_tensor, sign_against, DitherSpec, DitherTensor};
use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseKind {
    None,
    Gaussian { sigma: f64 },
}

/// Pre-quantization noise with its declared sub-exponential (`σ₁`) and
/// sub-gaussian (`σ₂`) norm proxies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub sigma1: f64,
    pub sigma2: f64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self {
            kind: NoiseKind::None,
            sigma1: 0.0,
            sigma2: 0.0,
        }
    }

    /// Gaussian noise; both norm proxies default to `sigma`.
    pub fn gaussian(sigma: f64) -> Self {
        Self {
            kind: NoiseKind::Gaussian { sigma },
            sigma1: sigma,
            sigma2: sigma,
        }
    }

    pub fn sigma(&self) -> f64 {
        match self.kind {
            NoiseKind::None => 0.0,
            NoiseKind::Gaussian { sigma } => sigma,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = |v: f64| v >= 0.0 && v.is_finite();
        if !ok(self.sigma()) || !ok(self.sigma1) || !ok(self.sigma2) {
            return Err(Error::Argument(format!("invalid noise spec {self:?}")));
        }
        Ok(())
    }

    /// One draw per observed entry; `None` when there is no noise.
    pub fn draw(&self, m_prime: usize, seed: u64) -> Result<Option<Vec<f64>>> {
        self.validate()?;
        match self.kind {
            NoiseKind::None => Ok(None),
            NoiseKind::Gaussian { sigma: 0.0 } => Ok(Some(vec![0.0; m_prime])),
            NoiseKind::Gaussian { sigma } => crate::quantize::gaussian_vector(sigma, m_prime, seed).map(Some),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OneBitObservation {
    /// Row-major `m × m′`, entries in `{−1, +1}`.
    signs: Vec<i8>,
    thresholds: Option<DitherTensor>,
    mask: SampleMask,
    m: usize,
    pub dither_spec: DitherSpec,
    /// Realized noise on `Ω` (shared by all sequences), when noise was applied.
    pub noise: Option<Vec<f64>>,
}

impl OneBitObservation {
    /// Assembles an observation from stored parts (e.g. a CSV replay).
    pub fn from_parts(
        mask: SampleMask,
        m: usize,
        signs: Vec<i8>,
        thresholds: Option<DitherTensor>,
        dither_spec: DitherSpec,
    ) -> Result<Self> {
        let mp = mask.m_prime();
        if m == 0 || signs.len() != m * mp {
            return Err(Error::Dimension(format!("{} signs for m={m}, m′={mp}", signs.len())));
        }
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::Argument("signs must be ±1".into()));
        }
        if let Some(t) = &thresholds {
            if t.m() != m || t.m_prime() != mp {
                return Err(Error::Dimension(format!(
                    "thresholds are {}x{}, signs are {m}x{mp}",
                    t.m(),
                    t.m_prime()
                )));
            }
        }
        Ok(Self {
            signs,
            thresholds,
            mask,
            m,
            dither_spec,
            noise: None,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn m_prime(&self) -> usize {
        self.mask.m_prime()
    }

    pub fn mask(&self) -> &SampleMask {
        &self.mask
    }

    pub fn thresholds(&self) -> Option<&DitherTensor> {
        self.thresholds.as_ref()
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn sign_row(&self, l: usize) -> &[i8] {
        let mp = self.m_prime();
        &self.signs[l * mp..(l + 1) * mp]
    }

    pub fn is_statistics_only(&self) -> bool {
        self.thresholds.is_none()
    }

    /// Forgets the threshold values, keeping only their distribution.
    pub fn without_thresholds(mut self) -> Self {
        self.thresholds = None;
        self
    }

    /// `‖N‖_F` over the observed entries.
    pub fn noise_frobenius(&self) -> f64 {
        self.noise.as_ref().map_or(0.0, |n| n.iter().map(|v| v * v).sum::<f64>().sqrt())
    }

    fn require_thresholds(&self, op: &str) -> Result<&DitherTensor> {
        self.thresholds
            .as_ref()
            .ok_or_else(|| Error::UnsupportedMode(format!("{op} needs threshold values (statistics-only observation)")))
    }

    /// Writes `mask.csv`, `signs.csv` and (when known) `thresholds.csv`.
    ///
    /// `mask.csv` has a `row,col` header and one observed position per line in
    /// canonical order; `signs.csv` and `thresholds.csv` have one line per
    /// dither sequence and one column per observed position.
    pub fn write_csv_triple(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let create = |name: &str| {
            let p = dir.join(name);
            File::create(&p).map(BufWriter::new).map_err(|e| Error::io(p, e))
        };

        let mut w = csv::Writer::from_writer(create("mask.csv")?);
        w.write_record(["row", "col"])?;
        for &(i, j) in self.mask.entries() {
            w.write_record([i.to_string(), j.to_string()])?;
        }
        w.flush().map_err(|e| Error::io(dir.join("mask.csv"), e))?;

        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(create("signs.csv")?);
        for l in 0..self.m {
            w.write_record(self.sign_row(l).iter().map(|s| s.to_string()))?;
        }
        w.flush().map_err(|e| Error::io(dir.join("signs.csv"), e))?;

        if let Some(t) = &self.thresholds {
            t.write_csv(create("thresholds.csv")?)?;
        }
        Ok(())
    }

    /// Reads a triple written by [`write_csv_triple`](Self::write_csv_triple).
    /// A missing `thresholds.csv` yields a statistics-only observation.
    pub fn read_csv_triple(dir: &Path, dims: Dimensions, dither_spec: DitherSpec, seed: u64) -> Result<Self> {
        let open = |name: &str| {
            let p = dir.join(name);
            File::open(&p).map(BufReader::new).map_err(|e| Error::io(p, e))
        };

        let mut r = csv::Reader::from_reader(open("mask.csv")?);
        let mut entries = Vec::new();
        for rec in r.deserialize::<(usize, usize)>() {
            entries.push(rec?);
        }
        let mask = SampleMask::new(dims, entries)?;

        let s = read_matrix_csv(open("signs.csv")?)?;
        let m = s.nrows();
        if s.ncols() != mask.m_prime() {
            return Err(Error::Dimension(format!(
                "signs.csv has {} columns, mask has {} entries",
                s.ncols(),
                mask.m_prime()
            )));
        }
        let signs = (0..m)
            .flat_map(|l| (0..s.ncols()).map(move |k| (l, k)))
            .map(|(l, k)| s[(l, k)] as i8)
            .collect();

        let tpath = dir.join("thresholds.csv");
        let thresholds = if tpath.exists() {
            Some(DitherTensor::read_csv(open("thresholds.csv")?, dither_spec, seed)?)
        } else {
            None
        };
        Self::from_parts(mask, m, signs, thresholds, dither_spec)
    }
}

/// Signs of `X + N` against every threshold row. Noise is drawn once per
/// observed entry and shared across the `m` sequences.
pub fn observe_one_bit(
    x: &Matrix,
    mask: &SampleMask,
    thresholds: &DitherTensor,
    noise: &NoiseSpec,
    seed: u64,
) -> Result<OneBitObservation> {
    let values = select_vector(x, mask)?;
    if thresholds.m_prime() != values.len() {
        return Err(Error::Dimension(format!(
            "threshold tensor has {} columns for {} observed entries",
            thresholds.m_prime(),
            values.len()
        )));
    }
    let noise_draw = noise.draw(values.len(), seed)?;
    let noisy: Vec<f64> = match &noise_draw {
        Some(n) => values.iter().zip(n).map(|(v, e)| v + e).collect(),
        None => values,
    };
    let signs = thresholds
        .rows()
        .flat_map(|row| noisy.iter().zip(row).map(|(&v, &t)| sign_against(v, t)))
        .collect();
    Ok(OneBitObservation {
        signs,
        thresholds: Some(thresholds.clone()),
        mask: mask.clone(),
        m: thresholds.m(),
        dither_spec: thresholds.spec,
        noise: noise_draw,
    })
}

/// Single-sequence observation with `U[−Δ/2, Δ/2]` thresholds whose values
/// are discarded.
pub fn observe_statistics_only(x: &Matrix, mask: &SampleMask, resolution: f64, noise: &NoiseSpec, seed: u64) -> Result<OneBitObservation> {
    let spec = DitherSpec::Uniform {
        half_width: resolution / 2.0,
    };
    let t = generate_dither_tensor(spec, 1, mask.m_prime(), seed)?;
    Ok(observe_one_bit(x, mask, &t, noise, seed.wrapping_add(0x9e37_79b9))?.without_thresholds())
}

/// One row of the one-bit polyhedron: `sign·(x_index − threshold) ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constraint {
    pub seq: usize,
    /// Position in the mask's canonical order.
    pub index: usize,
    pub sign: i8,
    pub threshold: f64,
}

impl Constraint {
    /// Amount by which `x` violates the constraint (0 when satisfied).
    #[inline]
    pub fn violation(&self, x: f64) -> f64 {
        (-(self.sign as f64) * (x - self.threshold)).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolyhedronSystem {
    constraints: Vec<Constraint>,
    mask: SampleMask,
}

impl PolyhedronSystem {
    pub fn from_constraints(mask: SampleMask, constraints: Vec<Constraint>) -> Result<Self> {
        if constraints.is_empty() {
            return Err(Error::Argument("polyhedron has no constraints".into()));
        }
        for c in &constraints {
            if c.index >= mask.m_prime() || (c.sign != 1 && c.sign != -1) || !c.threshold.is_finite() {
                return Err(Error::Argument(format!("invalid constraint {c:?}")));
            }
        }
        Ok(Self { constraints, mask })
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn mask(&self) -> &SampleMask {
        &self.mask
    }

    pub fn dims(&self) -> Dimensions {
        self.mask.dims()
    }

    /// Number of constraints whose sign comparison `x_k` vs `t` (ties → +1)
    /// disagrees with the stored sign.
    pub fn sign_mismatches(&self, x: &Matrix) -> Result<usize> {
        let v = select_vector(x, &self.mask)?;
        Ok(self
            .constraints
            .iter()
            .filter(|c| sign_against(v[c.index], c.threshold) != c.sign)
            .count())
    }
}

pub fn build_polyhedron(obs: &OneBitObservation) -> Result<PolyhedronSystem> {
    let t = obs.require_thresholds("build_polyhedron")?;
    let mp = obs.m_prime();
    let constraints = (0..obs.m)
        .flat_map(|l| {
            (0..mp).map(move |k| Constraint {
                seq: l,
                index: k,
                sign: obs.signs[l * mp + k],
                threshold: t.get(l, k),
            })
        })
        .collect();
    PolyhedronSystem::from_constraints(obs.mask.clone(), constraints)
}

/// `√Σ max(0, −s·(x_k − t))²`; zero iff `X` lies in the polyhedron.
pub fn violation_measure(p: &PolyhedronSystem, x: &Matrix) -> Result<f64> {
    let v = select_vector(x, &p.mask)?;
    Ok(p.constraints.iter().map(|c| c.violation(v[c.index]).powi(2)).sum::<f64>().sqrt())
}

/// Number of positions where two sign vectors differ.
pub fn hamming(a: &[i8], b: &[i8]) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!("sign vectors of length {} and {}", a.len(), b.len())));
    }
    if a.iter().chain(b).any(|&s| s != 1 && s != -1) {
        return Err(Error::Argument("sign vectors must hold ±1".into()));
    }
    Ok(a.iter().zip(b).filter(|(x, y)| x != y).count())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConsistencyReport {
    /// Total Hamming distance `ζ` over all sequences.
    pub zeta: usize,
    pub per_sequence: Vec<usize>,
    pub consistent: bool,
}

/// Compares the sign patterns of `X` and `X̄` against every threshold row on
/// `Ω`.
pub fn consistency_report(x_bar: &Matrix, obs: &OneBitObservation, x: &Matrix) -> Result<ConsistencyReport> {
    let t = obs.require_thresholds("consistency_report")?;
    let truth = select_vector(x, &obs.mask)?;
    let est = select_vector(x_bar, &obs.mask)?;
    let per_sequence = t
        .rows()
        .map(|row| {
            let a: Vec<i8> = truth.iter().zip(row).map(|(&v, &t)| sign_against(v, t)).collect();
            let b: Vec<i8> = est.iter().zip(row).map(|(&v, &t)| sign_against(v, t)).collect();
            hamming(&a, &b)
        })
        .collect::<Result<Vec<_>>>()?;
    let zeta = per_sequence.iter().sum();
    Ok(ConsistencyReport {
        zeta,
        per_sequence,
        consistent: zeta == 0,
    })
}

/// Distance exponent for [`t_ave`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Distance {
    Absolute,
    Squared,
}

/// Average (absolute or squared) distance between the observed entries of
/// `X` and their thresholds, over all `m·m′` comparisons.
pub fn t_ave(x: &Matrix, obs: &OneBitObservation, power: Distance) -> Result<f64> {
    let t = obs.require_thresholds("t_ave")?;
    let v = select_vector(x, &obs.mask)?;
    let total: f64 = t
        .rows()
        .map(|row| {
            v.iter()
                .zip(row)
                .map(|(&a, &b)| match power {
                    Distance::Absolute => (a - b).abs(),
                    Distance::Squared => (a - b).powi(2),
                })
                .sum::<f64>()
        })
        .sum();
    Ok(total / (obs.m * obs.m_prime()) as f64)
}

/// `(Δ/2)·R` on `Ω`, zero elsewhere. Only defined for a single sequence.
pub fn surrogate_data(obs: &OneBitObservation, resolution: f64) -> Result<Matrix> {
    if obs.m != 1 {
        return Err(Error::UnsupportedMode(format!(
            "surrogate data needs exactly one dither sequence, got m={}",
            obs.m
        )));
    }
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(Error::Argument(format!("resolution must be positive, got {resolution}")));
    }
    let vals: Vec<f64> = obs.signs.iter().map(|&s| resolution / 2.0 * s as f64).collect();
    scatter(&vals, &obs.mask)
}
