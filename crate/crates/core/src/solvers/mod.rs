//! Two independent routes to the minimum-norm point of `{x : A x ≥ b}`:
//!
//! * [`qp_min_norm`]: dual active-set projection (the CBF-QP route);
//! * [`lc_solve`]: Lemke pivoting on the complementarity system
//!   `0 ≤ λ ⊥ A H λ − b ≥ 0`, `x = H λ`, `H = G(A)` (the LC route);
//!
//! plus the single-constraint closed form and brute-force enumeration oracles.

mod closed_form;
mod lc;
mod lemke;
mod oracle;
mod qp;

pub use closed_form::{predicted_slack_sign, single_constraint_closed_form, SingleConstraintCase};
pub use lc::{lc_solve, lcp_from_problem};
pub use lemke::{lcp_lemke, LcpProblem, LcpStatus};
pub use oracle::{oracle_lcp_enumerate, oracle_qp_enumerate, MAX_ENUMERATION};
pub use qp::qp_min_norm;

use serde::{Deserialize, Serialize};

use crate::constraints::{feasibility_margin, GeneralFormProblem};
use crate::error::Result;
use crate::numkit::{norm, sub};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    /// A solution was produced but its KKT certificate failed the tolerances.
    Degenerate,
}

/// Result of a safe-control solve in shifted coordinates `x = u − u_des`.
#[derive(Debug, Clone, PartialEq)]
pub struct SafeSolve {
    pub x_star: Vec<f64>,
    /// KKT multipliers of `A x ≥ b`, so that `x = Aᵀ λ` at optimality.
    pub lambda_star: Vec<f64>,
    /// Complementarity multipliers in `x = H λ'` form; only set by the LC route.
    pub lcp_lambda: Option<Vec<f64>>,
    pub active_set: Vec<usize>,
    pub status: SolveStatus,
    pub iterations: usize,
}

impl SafeSolve {
    pub(crate) fn infeasible(m: usize, n: usize, iterations: usize) -> Self {
        Self {
            x_star: vec![0.0; n],
            lambda_star: vec![0.0; m],
            lcp_lambda: None,
            active_set: Vec::new(),
            status: SolveStatus::Infeasible,
            iterations,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// Worst-case violations of the four KKT conditions at a solve.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct KktResiduals {
    /// `‖x − Aᵀλ‖`
    pub stationarity: f64,
    /// `max_i |λ_i (A x − b)_i|`
    pub complementarity: f64,
    /// `max(0, −min λ)`
    pub dual_infeasibility: f64,
    /// `max(0, −min (A x − b))`
    pub primal_infeasibility: f64,
}

impl KktResiduals {
    pub fn evaluate(problem: &GeneralFormProblem, solve: &SafeSolve) -> Result<Self> {
        let slack = feasibility_margin(problem, &solve.x_star)?;
        let atl = problem.a().tr_mul_vec(&solve.lambda_star)?;
        Ok(Self {
            stationarity: norm(&sub(&solve.x_star, &atl)),
            complementarity: solve
                .lambda_star
                .iter()
                .zip(&slack)
                .map(|(l, s)| (l * s).abs())
                .fold(0.0, f64::max),
            dual_infeasibility: solve.lambda_star.iter().fold(0.0, |m, &l| {
                if l < 0.0 {
                    m.max(-l)
                } else {
                    m
                }
            }),
            primal_infeasibility: slack
                .iter()
                .fold(0.0, |m, &s| if s < 0.0 { m.max(-s) } else { m }),
        })
    }

    pub fn within(&self, tol: &KktTolerances) -> bool {
        self.stationarity <= tol.stationarity
            && self.complementarity <= tol.complementarity
            && self.dual_infeasibility <= tol.dual
            && self.primal_infeasibility <= tol.primal
    }

    pub fn max(self, other: Self) -> Self {
        Self {
            stationarity: self.stationarity.max(other.stationarity),
            complementarity: self.complementarity.max(other.complementarity),
            dual_infeasibility: self.dual_infeasibility.max(other.dual_infeasibility),
            primal_infeasibility: self.primal_infeasibility.max(other.primal_infeasibility),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktTolerances {
    pub stationarity: f64,
    pub complementarity: f64,
    pub dual: f64,
    pub primal: f64,
}

impl Default for KktTolerances {
    fn default() -> Self {
        Self {
            stationarity: 1e-8,
            complementarity: 1e-8,
            dual: 1e-10,
            primal: 1e-8,
        }
    }
}

/// Marks an `Optimal` solve as `Degenerate` when its certificate fails.
pub(crate) fn certify(problem: &GeneralFormProblem, mut solve: SafeSolve) -> Result<SafeSolve> {
    if solve.status == SolveStatus::Optimal {
        let r = KktResiduals::evaluate(problem, &solve)?;
        let scale =
            1.0 + crate::numkit::norm_inf(problem.b()) + crate::numkit::norm_inf(&solve.x_star);
        let tol = KktTolerances::default();
        let scaled = KktTolerances {
            stationarity: tol.stationarity * scale,
            complementarity: tol.complementarity * scale * scale,
            dual: tol.dual * scale,
            primal: tol.primal * scale,
        };
        if !r.within(&scaled) {
            solve.status = SolveStatus::Degenerate;
        }
    }
    Ok(solve)
}
