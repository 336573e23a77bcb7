use super::prox::shrink;
use super::quantized::solve_quantized_mc;
use super::{ProxParams, SolverReport};
use crate::onebit::{surrogate_data, violation_measure, OneBitObservation, PolyhedronSystem};
use crate::{Error, Matrix, Result};

const INITIAL_PENALTY: f64 = 1.0;
const PENALTY_GROWTH: f64 = 10.0;
const MAX_ESCALATIONS: usize = 8;

/// Quadratic exterior penalty over the one-bit rows.
struct Penalty {
    /// (column-major flat index, sign, threshold)
    rows: Vec<(usize, f64, f64)>,
    /// Largest number of rows touching one entry.
    max_rows_per_entry: usize,
    /// Per-entry feasible interval `[lo, hi]` as (flat index, lo, hi); the
    /// upper end already sits strictly below its threshold.
    intervals: Vec<(usize, f64, f64)>,
}

impl Penalty {
    fn new(p: &PolyhedronSystem) -> Self {
        let flat: Vec<usize> = p.mask().flat_indices().collect();
        let rows: Vec<_> = p
            .constraints()
            .iter()
            .map(|c| (flat[c.index], c.sign as f64, c.threshold))
            .collect();
        let n = p.dims().len();
        let mut counts = vec![0usize; n];
        let mut lo = vec![f64::NEG_INFINITY; n];
        let mut hi = vec![f64::INFINITY; n];
        for &(f, s, t) in &rows {
            counts[f] += 1;
            if s > 0.0 {
                lo[f] = lo[f].max(t);
            } else {
                hi[f] = hi[f].min(t.next_down());
            }
        }
        let intervals = flat.iter().map(|&f| (f, lo[f], hi[f])).collect();
        Self {
            rows,
            max_rows_per_entry: counts.into_iter().max().unwrap_or(0),
            intervals,
        }
    }

    fn value(&self, x: &Matrix) -> f64 {
        let xs = x.as_slice();
        self.rows.iter().map(|&(f, s, t)| (s * (t - xs[f])).max(0.0).powi(2)).sum()
    }

    /// Adds `ρ/2 · ∇ value` into `g`.
    fn add_gradient(&self, x: &Matrix, rho: f64, g: &mut Matrix) {
        let xs = x.as_slice();
        let gs = g.as_mut_slice();
        for &(f, s, t) in &self.rows {
            let v = s * (t - xs[f]);
            if v > 0.0 {
                gs[f] -= rho * s * v;
            }
        }
    }

    /// Euclidean projection onto the polyhedron, entry by entry. Entries
    /// whose interval is empty are left alone.
    fn project(&self, x: &mut Matrix) {
        let xs = x.as_mut_slice();
        for &(f, lo, hi) in &self.intervals {
            if lo <= hi {
                xs[f] = xs[f].clamp(lo, hi);
            }
        }
    }
}

/// Objective history of one penalty stage of [`solve_one_bit_traced`].
#[derive(Debug, Clone)]
pub struct StageTrace {
    pub rho: f64,
    pub objective: Vec<f64>,
}

/// [`solve_one_bit_mc`] that also returns the objective history of each stage.
pub fn solve_one_bit_traced(p: &PolyhedronSystem, reg_weight: f64, params: &ProxParams) -> Result<(SolverReport, Vec<StageTrace>)> {
    params.validate()?;
    if p.is_empty() {
        return Err(Error::Argument("polyhedron has no constraints".into()));
    }
    if !(reg_weight >= 0.0 && reg_weight.is_finite()) {
        return Err(Error::Argument(format!(
            "regularization weight must be nonnegative, got {reg_weight}"
        )));
    }

    let dims = p.dims();
    let penalty = Penalty::new(p);
    let mut x = Matrix::zeros(dims.n1, dims.n2);
    let mut nuclear = 0.0;
    let mut used = 0;
    let mut rho = INITIAL_PENALTY;
    let mut traces = Vec::new();
    let mut violation = violation_measure(p, &x)?;

    for stage in 0..=MAX_ESCALATIONS {
        let smooth = |m: &Matrix| 0.5 * m.norm_squared() + 0.5 * rho * penalty.value(m);
        let cap = params.step_size.min(1.0);
        let mut step = cap / (1.0 + rho * penalty.max_rows_per_entry as f64);
        let mut fx = smooth(&x);
        let mut trace = vec![fx + reg_weight * nuclear];

        while used < params.max_iters {
            used += 1;
            let mut grad = x.clone();
            penalty.add_gradient(&x, rho, &mut grad);

            let (xn, nn, fxn, d) = loop {
                let z = &x - &grad * step;
                let (xn, nn) = if reg_weight > 0.0 {
                    shrink(&z, step * reg_weight)?
                } else {
                    (z, 0.0)
                };
                let d = &xn - &x;
                let fxn = smooth(&xn);
                let model = fx + grad.dot(&d) + d.norm_squared() / (2.0 * step);
                if fxn <= model + 1e-15 * fx.abs() || step < 1e-300 {
                    break (xn, nn, fxn, d);
                }
                step *= 0.5;
            };

            let change = d.norm();
            x = xn;
            fx = fxn;
            nuclear = nn;
            trace.push(fx + reg_weight * nuclear);
            step = (step * 2.0).min(cap);

            if change <= (params.tol_rel_change * x.norm()).min(0.1 * params.tol_feas).max(f64::MIN_POSITIVE) {
                break;
            }
        }
        traces.push(StageTrace { rho, objective: trace });

        violation = violation_measure(p, &x)?;
        if violation <= params.tol_feas || used >= params.max_iters || stage == MAX_ESCALATIONS {
            break;
        }
        rho *= PENALTY_GROWTH;
    }

    if violation <= params.tol_feas {
        penalty.project(&mut x);
        violation = violation_measure(p, &x)?;
        nuclear = x.singular_values().iter().sum();
    } else if reg_weight == 0.0 {
        nuclear = x.singular_values().iter().sum();
    }
    let report = SolverReport {
        objective: reg_weight * nuclear + 0.5 * x.norm_squared(),
        iterations: used,
        data_residual: violation,
        converged: violation <= params.tol_feas,
        nuclear_norm: nuclear,
        x_bar: x,
    };
    Ok((report, traces))
}

/// Approximately solves `min λ‖X‖_* + ½‖X‖²_F` over the one-bit polyhedron.
///
/// Each stage runs monotone proximal gradient (backtracking on the step) on
/// `½‖X‖²_F + (ρ/2)·Σ shortfall² + λ‖X‖_*`; `ρ` grows ×10 between stages
/// until the polyhedron violation is within `tol_feas` or eight escalations
/// have run. A feasible-enough iterate is
/// then projected onto the polyhedron, which is separable per entry, so the
/// returned matrix reproduces every sign exactly whenever that is possible.
pub fn solve_one_bit_mc(p: &PolyhedronSystem, reg_weight: f64, params: &ProxParams) -> Result<SolverReport> {
    solve_one_bit_traced(p, reg_weight, params).map(|(r, _)| r)
}

/// Frobenius-ball recovery from the `(Δ/2)·R` surrogate of a single-sequence
/// one-bit observation.
pub fn solve_statistics_only(obs: &OneBitObservation, resolution: f64, delta: f64, params: &ProxParams) -> Result<SolverReport> {
    if obs.m() != 1 {
        return Err(Error::UnsupportedMode(format!(
            "statistics-only recovery needs a single dither sequence, got m={}",
            obs.m()
        )));
    }
    let q = surrogate_data(obs, resolution)?;
    solve_quantized_mc(&q, obs.mask(), delta, params)
}
