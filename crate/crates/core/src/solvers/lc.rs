use crate::constraints::GeneralFormProblem;
use crate::error::Result;
use crate::numkit::{g_operator, row_norms, DenseMatrix, EPS_RANK};

use super::lemke::{lcp_lemke, LcpProblem, LcpStatus};
use super::{certify, SafeSolve, SolveStatus};

/// The complementarity system `0 ≤ λ ⊥ A H λ − b ≥ 0` with `H = G(A)`,
/// together with `H`.
pub fn lcp_from_problem(problem: &GeneralFormProblem) -> Result<(LcpProblem, DenseMatrix)> {
    let h = g_operator(problem.a(), EPS_RANK)?;
    let m = problem.a().matmul(&h)?;
    let q = problem.b().iter().map(|v| -v).collect();
    Ok((LcpProblem::new(m, q)?, h))
}

/// Solves the velocity-level complementarity program and maps the
/// multipliers back through `x = H λ`.
///
/// `A H` is diagonally similar to the symmetric PSD row-normalized Gram
/// matrix, so the LCP is solved in that form (`μ = D^{1/2} λ`,
/// `D = diag(1/‖a_i‖²)`). Every complementarity solution gives a KKT point
/// of the projection problem, so no further minimization over the solution
/// set is needed.
pub fn lc_solve(problem: &GeneralFormProblem) -> Result<SafeSolve> {
    let (m, n) = (problem.m(), problem.n());
    let (lcp, h) = lcp_from_problem(problem)?;
    let norms = row_norms(problem.a(), EPS_RANK)?;

    // D^{1/2} (A H) D^{-1/2}, symmetrized against round-off.
    let ah = lcp.matrix();
    let mut sym = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            let v = ah[(i, j)] * norms[j] / norms[i];
            let vt = ah[(j, i)] * norms[i] / norms[j];
            sym[i * m + j] = 0.5 * (v + vt);
        }
    }
    let q_sym = lcp.q().iter().zip(&norms).map(|(q, nrm)| q / nrm).collect();
    let scaled = LcpProblem::new(DenseMatrix::new(m, m, sym)?, q_sym)?;
    let sol = lcp_lemke(&scaled)?;
    if sol.status == LcpStatus::RayTermination {
        return Ok(SafeSolve::infeasible(m, n, sol.pivots));
    }

    let lambda_lcp: Vec<f64> = sol.z.iter().zip(&norms).map(|(mu, nrm)| mu * nrm).collect();
    let x = h.mul_vec(&lambda_lcp)?;
    let lambda_star = lambda_lcp
        .iter()
        .zip(&norms)
        .map(|(l, nrm)| l / (nrm * nrm))
        .collect();
    let active_set = (0..m).filter(|&i| lambda_lcp[i] > 0.0).collect();
    certify(
        problem,
        SafeSolve {
            x_star: x,
            lambda_star,
            lcp_lambda: Some(lambda_lcp),
            active_set,
            status: SolveStatus::Optimal,
            iterations: sol.pivots,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn problem(rows: &[&[f64]], b: &[f64]) -> GeneralFormProblem {
        GeneralFormProblem::new(DenseMatrix::from_rows(rows).unwrap(), b.to_vec()).unwrap()
    }

    #[test]
    fn interior_case_is_zero() {
        let s = lc_solve(&problem(&[&[1.0, 2.0], &[-3.0, 1.0]], &[-0.5, -2.0])).unwrap();
        assert_eq!(s.x_star, vec![0.0, 0.0]);
        assert_eq!(s.lambda_star, vec![0.0, 0.0]);
    }

    #[test]
    fn single_half_plane() {
        let s = lc_solve(&problem(&[&[1.0, 1.0]], &[4.0])).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert_abs_diff_eq!(s.x_star[0], 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.x_star[1], 2.0, epsilon = 1e-14);
        // x = H λ' with H = a/‖a‖², so λ' = b = 4 and λ_QP = λ'/‖a‖² = 2.
        assert_abs_diff_eq!(s.lcp_lambda.as_ref().unwrap()[0], 4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.lambda_star[0], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn infeasible_reports_ray() {
        let s = lc_solve(&problem(&[&[1.0], &[-1.0]], &[1.0, 1.0])).unwrap();
        assert_eq!(s.status, SolveStatus::Infeasible);
    }

    #[test]
    fn lcp_data_matches_g_operator() {
        let p = problem(&[&[2.0, 0.0], &[1.0, 1.0]], &[1.0, -1.0]);
        let (lcp, h) = lcp_from_problem(&p).unwrap();
        assert_eq!(h[(0, 0)], 0.5);
        assert_eq!(lcp.q(), &[-1.0, 1.0]);
        // diag(A H) = 1
        assert_abs_diff_eq!(lcp.matrix()[(0, 0)], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(lcp.matrix()[(1, 1)], 1.0, epsilon = 1e-15);
    }
}
