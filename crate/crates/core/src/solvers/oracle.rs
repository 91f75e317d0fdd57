//! Brute-force reference solvers: enumerate every subset of constraints.
//! Exponential in `m`, only meant for checking the real solvers.

use crate::constraints::{feasibility_margin, GeneralFormProblem};
use crate::error::{Error, Result};
use crate::numkit::{norm, norm_inf, solve_linear, DenseMatrix, EPS_RANK};

use super::lemke::LcpProblem;
use super::{SafeSolve, SolveStatus};

/// Largest `m` accepted by the enumeration oracles.
pub const MAX_ENUMERATION: usize = 12;

const ORACLE_TOL: f64 = 1e-9;

fn subsets(m: usize) -> impl Iterator<Item = Vec<usize>> {
    (0u32..(1 << m)).map(move |mask| (0..m).filter(|i| mask & (1 << i) != 0).collect())
}

/// Minimum-norm solution of `A_S x = b_S` with its multipliers `x = A_Sᵀ μ`.
fn equality_projection(problem: &GeneralFormProblem, s: &[usize]) -> Option<(Vec<f64>, Vec<f64>)> {
    if s.is_empty() {
        return Some((vec![0.0; problem.n()], Vec::new()));
    }
    let a_s = problem.a().select_rows(s).ok()?;
    let gram = a_s.matmul(&a_s.transpose()).ok()?;
    let b_s: Vec<f64> = s.iter().map(|&i| problem.b()[i]).collect();
    let mu = solve_linear(&gram, &b_s, EPS_RANK).ok()?;
    let x = a_s.tr_mul_vec(&mu).ok()?;
    Some((x, mu.into_inner()))
}

/// Projection of the origin onto `{A x ≥ b}` by enumerating candidate active sets.
pub fn oracle_qp_enumerate(problem: &GeneralFormProblem) -> Result<SafeSolve> {
    let (m, n) = (problem.m(), problem.n());
    if m > MAX_ENUMERATION {
        return Err(Error::TooManyConstraints {
            m,
            max: MAX_ENUMERATION,
        });
    }
    let scale = 1.0 + norm_inf(problem.b());
    let tol = ORACLE_TOL * scale;

    // (‖x‖², x, multipliers, subset)
    type Candidate = (f64, Vec<f64>, Vec<f64>, Vec<usize>);
    let mut best: Option<Candidate> = None;
    let mut any_feasible = false;
    let mut visited = 0;
    for s in subsets(m) {
        visited += 1;
        let Some((x, mu)) = equality_projection(problem, &s) else {
            continue;
        };
        let slack = feasibility_margin(problem, &x)?;
        if slack.iter().any(|v| *v < -tol) {
            continue;
        }
        any_feasible = true;
        if mu.iter().any(|v| *v < -tol) {
            continue;
        }
        let nx = norm(&x);
        if best.as_ref().is_none_or(|b| nx < b.0) {
            best = Some((nx, x, mu, s));
        }
    }

    match best {
        Some((_, x, mu, s)) => {
            let mut lambda = vec![0.0; m];
            for (&i, &l) in s.iter().zip(&mu) {
                lambda[i] = l;
            }
            Ok(SafeSolve {
                x_star: x,
                lambda_star: lambda,
                lcp_lambda: None,
                active_set: s,
                status: SolveStatus::Optimal,
                iterations: visited,
            })
        }
        None => {
            let mut out = SafeSolve::infeasible(m, n, visited);
            if any_feasible {
                // a feasible point exists but no subset certified optimality
                out.status = SolveStatus::Degenerate;
            }
            Ok(out)
        }
    }
}

/// Every solution of the LCP obtainable from a nonsingular principal pivot.
pub fn oracle_lcp_enumerate(lcp: &LcpProblem) -> Result<Vec<Vec<f64>>> {
    let m = lcp.size();
    if m > MAX_ENUMERATION {
        return Err(Error::TooManyConstraints {
            m,
            max: MAX_ENUMERATION,
        });
    }
    let mut out = Vec::new();
    for s in subsets(m) {
        let mut z = vec![0.0; m];
        if !s.is_empty() {
            let rows: Vec<Vec<f64>> = s
                .iter()
                .map(|&i| s.iter().map(|&j| lcp.matrix()[(i, j)]).collect())
                .collect();
            let mss = DenseMatrix::from_rows(&rows)?;
            let rhs: Vec<f64> = s.iter().map(|&i| -lcp.q()[i]).collect();
            let Ok(zs) = solve_linear(&mss, &rhs, EPS_RANK) else {
                continue;
            };
            for (&i, &v) in s.iter().zip(zs.iter()) {
                z[i] = v;
            }
        }
        let w = lcp.slack(&z);
        if z.iter().all(|v| *v >= -1e-10) && w.iter().all(|v| *v >= -1e-10) {
            out.push(z);
        }
    }
    Ok(out)
}
