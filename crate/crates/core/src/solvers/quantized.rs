use super::prox::shrink;
use super::{ProxParams, SolverReport};
use crate::matrix::{ensure_finite, SampleMask};
use crate::{Error, Matrix, Result};

/// Accepted residual window below `δ` when bridging from the Lagrangian form.
const LOWER_ACCEPT: f64 = 0.95;
const MAX_BISECTIONS: usize = 40;

/// Feasibility radius `√(m′(ε + K²Δ²/4))` guaranteed for the true matrix by
/// the multi-bit recovery bound.
pub fn theorem_radius(m_prime: usize, epsilon: f64, levels: u32, resolution: f64) -> f64 {
    let k = levels as f64;
    (m_prime as f64 * (epsilon + k * k * resolution * resolution / 4.0)).sqrt()
}

/// `(Δ/2)·√m′`: the worst-case per-entry error of deterministic rounding and
/// the worst-case standard deviation of dithered or stochastic rounding.
pub fn noise_radius(m_prime: usize, resolution: f64) -> f64 {
    resolution / 2.0 * (m_prime as f64).sqrt()
}

struct Inner {
    x: Matrix,
    nuclear: f64,
    iterations: usize,
    converged: bool,
}

/// Minimizes `μ‖X‖_* + ½‖P_Ω(X) − Q‖²_F` with FISTA and gradient-based
/// momentum restart. The smooth part is 1-Lipschitz.
fn lagrangian_apg(q: &Matrix, indicator: &Matrix, mu: f64, x0: Matrix, params: &ProxParams, budget: usize) -> Result<Inner> {
    let step = params.step_size.min(1.0);
    let mut x = x0;
    let mut y = x.clone();
    let mut t = 1.0_f64;
    let mut nuclear = f64::NAN;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < budget {
        iterations += 1;
        let grad = y.component_mul(indicator) - q;
        let (xn, nn) = shrink(&(&y - grad * step), step * mu)?;
        let diff = &xn - &x;
        let change = diff.norm();

        let restart = (&y - &xn).dot(&diff) > 0.0;
        let tn = if restart { 1.0 } else { (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0 };
        y = if restart { xn.clone() } else { &xn + diff * ((t - 1.0) / tn) };
        t = tn;
        x = xn;
        nuclear = nn;

        if change <= params.tol_rel_change * x.norm().max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }
    if nuclear.is_nan() {
        nuclear = x.singular_values().iter().sum();
    }
    Ok(Inner {
        x,
        nuclear,
        iterations,
        converged,
    })
}

/// Solves `min ‖X‖_*  s.t. ‖P_Ω(X) − Q‖_F ≤ δ`.
///
/// The Lagrangian residual is increasing in the multiplier `μ`; `μ` is
/// bisected in log space between `δ/√min(n1,n2)` (where the residual is at
/// most `δ`) and `‖Q‖₂` (where the solution is zero) until the residual lands
/// in `[0.95δ, δ(1 + tol_feas)]`.
pub fn solve_quantized_mc(q: &Matrix, mask: &SampleMask, delta: f64, params: &ProxParams) -> Result<SolverReport> {
    params.validate()?;
    let dims = mask.dims();
    dims.check(q, "quantized data")?;
    ensure_finite(q, "quantized data")?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::Argument(format!("δ must be positive, got {delta}")));
    }
    let indicator = mask.indicator();
    if (q - q.component_mul(&indicator)).amax() != 0.0 {
        return Err(Error::Argument("quantized data must vanish outside the mask".into()));
    }

    let q_norm = q.norm();
    let zero = Matrix::zeros(dims.n1, dims.n2);
    if q_norm <= delta {
        return Ok(SolverReport {
            x_bar: zero,
            iterations: 0,
            objective: 0.0,
            data_residual: q_norm,
            converged: true,
            nuclear_norm: 0.0,
        });
    }

    let upper = delta * (1.0 + params.tol_feas);
    let spectral = q.singular_values().max();
    let mut lo = (delta / (dims.min() as f64).sqrt()).min(spectral);
    let mut hi = spectral;

    let mut used = 0;
    let mut warm = zero;
    let mut best: Option<(Inner, f64)> = None;
    let mut last: Option<(Inner, f64)> = None;
    let mut accepted = false;

    for _ in 0..MAX_BISECTIONS {
        if used >= params.max_iters {
            break;
        }
        let mu = (lo * hi).sqrt();
        let inner = lagrangian_apg(q, &indicator, mu, warm.clone(), params, params.max_iters - used)?;
        used += inner.iterations;
        let residual = (inner.x.component_mul(&indicator) - q).norm();
        warm = inner.x.clone();

        if residual <= upper {
            lo = mu;
            let in_window = residual >= LOWER_ACCEPT * delta;
            let closer = best.as_ref().is_none_or(|(_, r)| residual > *r);
            if closer {
                best = Some((inner, residual));
            }
            if in_window {
                accepted = true;
                break;
            }
        } else {
            hi = mu;
            last = Some((inner, residual));
        }
    }

    let feasible = best.is_some();
    let (inner, residual) = best
        .or(last)
        .ok_or_else(|| Error::Numerical("no bisection step ran (iteration budget exhausted)".into()))?;
    Ok(SolverReport {
        converged: feasible && accepted && inner.converged,
        iterations: used,
        objective: inner.nuclear,
        data_residual: residual,
        nuclear_norm: inner.nuclear,
        x_bar: inner.x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{generate_low_rank, nuclear_norm, project, sample_mask_uniform, Dimensions};
    use crate::quantize::{quantize_matrix, DitherSpec, QuantizerSpec};

    #[test]
    fn radii() {
        assert!((theorem_radius(100, 0.05, 4, 0.5) - (100.0f64 * 1.05).sqrt()).abs() < 1e-12);
        assert!((noise_radius(400, 0.5) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn tiny_radius_with_full_mask_pins_the_solution() {
        let d = Dimensions::new(8, 6).unwrap();
        let gt = generate_low_rank(d, 2, 1.0, 1).unwrap();
        let mask = SampleMask::full(d);
        let q = project(&gt.matrix, &mask).unwrap();
        let r = solve_quantized_mc(&q, &mask, 1e-7, &ProxParams::default()).unwrap();
        assert!(r.converged);
        assert!((&r.x_bar - &gt.matrix).norm() <= 1e-6);
    }

    #[test]
    fn large_radius_gives_zero() {
        let d = Dimensions::new(6, 6).unwrap();
        let gt = generate_low_rank(d, 2, 1.0, 2).unwrap();
        let mask = sample_mask_uniform(d, 20, 2).unwrap();
        let q = project(&gt.matrix, &mask).unwrap();
        let r = solve_quantized_mc(&q, &mask, q.norm() * 1.01, &ProxParams::default()).unwrap();
        assert!(r.nuclear_norm <= 1e-8);
        assert!(r.converged);
    }

    #[test]
    fn rejects_data_off_mask() {
        let d = Dimensions::new(2, 2).unwrap();
        let mask = SampleMask::new(d, vec![(0, 0)]).unwrap();
        let q = Matrix::from_element(2, 2, 1.0);
        assert!(solve_quantized_mc(&q, &mask, 0.1, &ProxParams::default()).is_err());
        assert!(solve_quantized_mc(&project(&q, &mask).unwrap(), &mask, 0.0, &ProxParams::default()).is_err());
    }

    #[test]
    fn feasible_and_no_larger_than_truth() {
        let d = Dimensions::new(16, 16).unwrap();
        let gt = generate_low_rank(d, 2, 1.0, 3).unwrap();
        let mask = sample_mask_uniform(d, 150, 3).unwrap();
        let spec = QuantizerSpec::new(0.1, 40).unwrap();
        let q = quantize_matrix(&gt.matrix, &mask, &spec, DitherSpec::Uniform { half_width: 0.05 }, 3).unwrap();
        let truth_res = (project(&gt.matrix, &mask).unwrap() - &q).norm();
        let delta = truth_res / 0.9;
        let p = ProxParams::default();
        let r = solve_quantized_mc(&q, &mask, delta, &p).unwrap();
        assert!(r.converged);
        assert!(r.data_residual <= delta * (1.0 + p.tol_feas));
        assert!(r.iterations <= p.max_iters);
        assert!(r.nuclear_norm <= nuclear_norm(&gt.matrix) + 1e-6);
        assert!((nuclear_norm(&r.x_bar) - r.nuclear_norm).abs() < 1e-8);
    }

    #[test]
    fn nuclear_norm_shrinks_as_radius_grows() {
        let d = Dimensions::new(12, 12).unwrap();
        let gt = generate_low_rank(d, 2, 1.0, 4).unwrap();
        let mask = sample_mask_uniform(d, 90, 4).unwrap();
        let q = project(&gt.matrix, &mask).unwrap();
        let qn = q.norm();
        let p = ProxParams::default();
        let norms: Vec<f64> = [0.05, 0.1, 0.2, 0.4, 0.8]
            .iter()
            .map(|f| solve_quantized_mc(&q, &mask, f * qn, &p).unwrap().nuclear_norm)
            .collect();
        for w in norms.windows(2) {
            assert!(w[1] <= w[0] + 1e-6, "{norms:?}");
        }
    }

    #[test]
    fn iteration_budget_is_respected() {
        let d = Dimensions::new(10, 10).unwrap();
        let gt = generate_low_rank(d, 2, 1.0, 5).unwrap();
        let mask = sample_mask_uniform(d, 50, 5).unwrap();
        let q = project(&gt.matrix, &mask).unwrap();
        let p = ProxParams {
            max_iters: 7,
            ..Default::default()
        };
        let r = solve_quantized_mc(&q, &mask, 0.01, &p).unwrap();
        assert!(r.iterations <= 7);
        assert!(!r.converged);
    }
}
