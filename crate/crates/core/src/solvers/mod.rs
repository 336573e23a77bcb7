//! Nuclear-norm recovery solvers.
//!
//! - [`solve_quantized_mc`]: `min ‖X‖_*  s.t. ‖P_Ω(X) − Q‖_F ≤ δ`, solved
//!   through its Lagrangian form with accelerated proximal gradient and a
//!   bisection on the multiplier.
//! - [`solve_one_bit_mc`]: `min λ‖X‖_* + ½‖X‖²_F` over the one-bit
//!   polyhedron, solved with an escalating exterior quadratic penalty.
//! - [`solve_statistics_only`]: the Frobenius-ball solver applied to the
//!   `(Δ/2)·R` surrogate when threshold values are unknown.
//!
//! All solvers start from `X₀ = 0`.

mod onebit;
mod prox;
mod quantized;

use serde::{Deserialize, Serialize};

use crate::{Error, Matrix, Result};

pub use onebit::{solve_one_bit_mc, solve_one_bit_traced, solve_statistics_only, StageTrace};
pub use prox::prox_nuclear;
pub use quantized::{noise_radius, solve_quantized_mc, theorem_radius};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProxParams {
    /// Total proximal iterations across all continuation stages.
    pub max_iters: usize,
    /// Multiplier on the inverse Lipschitz constant.
    pub step_size: f64,
    pub tol_rel_change: f64,
    pub tol_feas: f64,
}

impl Default for ProxParams {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            step_size: 1.0,
            tol_rel_change: 1e-7,
            tol_feas: 1e-6,
        }
    }
}

impl ProxParams {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if self.max_iters == 0 || !pos(self.step_size) || !pos(self.tol_rel_change) || !pos(self.tol_feas) {
            return Err(Error::Argument(format!("invalid solver parameters {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    pub x_bar: Matrix,
    pub iterations: usize,
    pub objective: f64,
    /// `‖P_Ω(X̄) − Q‖_F` for the Frobenius-ball solvers, the polyhedron
    /// violation for the one-bit solver.
    pub data_residual: f64,
    pub converged: bool,
    pub nuclear_norm: f64,
}

#[derive(Serialize)]
struct ReportRecord {
    iterations: usize,
    objective: f64,
    residual: f64,
    converged: bool,
    nuclear_norm: f64,
}

impl SolverReport {
    /// JSON record with keys `iterations`, `objective`, `residual`,
    /// `converged`, `nuclear_norm`.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&ReportRecord {
            iterations: self.iterations,
            objective: self.objective,
            residual: self.data_residual,
            converged: self.converged,
            nuclear_norm: self.nuclear_norm,
        })
        .expect("report serializes")
    }
}
