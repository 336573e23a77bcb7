use nalgebra::SVD;

use crate::matrix::ensure_finite;
use crate::{Error, Matrix, Result};

/// Singular value soft-thresholding: `U·max(Σ − θ, 0)·Vᵀ`, the minimizer of
/// `θ‖X‖_* + ½‖X − Z‖²_F`.
pub fn prox_nuclear(z: &Matrix, theta: f64) -> Result<Matrix> {
    ensure_finite(z, "prox input")?;
    if !(theta >= 0.0 && theta.is_finite()) {
        return Err(Error::Argument(format!("threshold must be nonnegative, got {theta}")));
    }
    if theta == 0.0 {
        return Ok(z.clone());
    }
    shrink(z, theta).map(|(x, _)| x)
}

/// Soft-thresholds `z` and also returns the nuclear norm of the result.
pub(crate) fn shrink(z: &Matrix, theta: f64) -> Result<(Matrix, f64)> {
    let (n1, n2) = z.shape();
    let svd = SVD::try_new(z.clone(), true, true, f64::EPSILON, 0).ok_or_else(|| {
        Error::Numerical(format!(
            "SVD did not converge on {n1}x{n2} matrix (‖Z‖_F = {:.3e}, max |z| = {:.3e})",
            z.norm(),
            z.amax()
        ))
    })?;
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested Vᵀ");

    let kept: Vec<(usize, f64)> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter_map(|(i, &s)| {
            let t = s - theta;
            (t > 0.0).then_some((i, t))
        })
        .collect();
    if kept.is_empty() {
        return Ok((Matrix::zeros(n1, n2), 0.0));
    }

    let k = kept.len();
    let mut us = Matrix::zeros(n1, k);
    let mut vt = Matrix::zeros(k, n2);
    for (c, &(i, s)) in kept.iter().enumerate() {
        us.column_mut(c).copy_from(&(u.column(i) * s));
        vt.row_mut(c).copy_from(&v_t.row(i));
    }
    let nuc = kept.iter().map(|&(_, s)| s).sum();
    Ok((us * vt, nuc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn nuclear(x: &Matrix) -> f64 {
        x.singular_values().iter().sum()
    }

    fn objective(x: &Matrix, z: &Matrix, theta: f64) -> f64 {
        theta * nuclear(x) + 0.5 * (x - z).norm_squared()
    }

    #[test]
    fn diagonal_example() {
        let z = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 1.0]));
        let x = prox_nuclear(&z, 2.0).unwrap();
        let want = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!((x - want).amax() < 1e-12);
    }

    #[test]
    fn zero_threshold_is_identity() {
        let z = Matrix::from_row_slice(2, 3, &[1.0, -2.0, 0.5, 3.0, 0.0, 4.0]);
        assert_eq!(prox_nuclear(&z, 0.0).unwrap(), z);
    }

    #[test]
    fn rejects_bad_inputs() {
        let z = Matrix::from_element(2, 2, f64::NAN);
        assert!(prox_nuclear(&z, 1.0).is_err());
        assert!(prox_nuclear(&Matrix::zeros(2, 2), -1.0).is_err());
    }

    #[test]
    fn output_beats_random_perturbations() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let z = Matrix::from_fn(5, 4, |_, _| rng.sample::<f64, _>(StandardNormal));
        let theta = 0.7;
        let x = prox_nuclear(&z, theta).unwrap();
        let best = objective(&x, &z, theta);
        for i in 0..10_000 {
            let scale = [1e-1, 1e-2, 1e-3][i % 3];
            let p = Matrix::from_fn(5, 4, |_, _| scale * rng.sample::<f64, _>(StandardNormal));
            assert!(objective(&(&x + p), &z, theta) >= best - 1e-12);
        }
    }
}
