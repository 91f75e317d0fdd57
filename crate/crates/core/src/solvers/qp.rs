//! Minimum-norm projection onto `{x : A x ≥ b}` by a dual active-set method
//! (Goldfarb–Idnani specialised to the identity Hessian).
//!
//! The iterate starts at the unconstrained minimizer `x = 0` and the most
//! violated constraint is added at each outer step. Every iterate is the
//! projection of the origin onto the affine set of its active constraints,
//! and the active rows are kept linearly independent, so the final active
//! set certifies optimality directly.

use crate::constraints::GeneralFormProblem;
use crate::error::{Error, Result};
use crate::numkit::{axpy, dot, norm};

use super::{certify, SafeSolve, SolveStatus};

/// Relative threshold below which a new row is treated as dependent on the active rows.
const DEPENDENCE_TOL: f64 = 1e-10;

/// Thin QR of the active rows (as columns), rebuilt from scratch on every change.
struct ActiveFactor {
    q: Vec<Vec<f64>>,
    r: Vec<Vec<f64>>,
}

impl ActiveFactor {
    fn build(problem: &GeneralFormProblem, active: &[usize]) -> Self {
        let k = active.len();
        let mut q: Vec<Vec<f64>> = Vec::with_capacity(k);
        let mut r = vec![vec![0.0; k]; k];
        for (j, &row) in active.iter().enumerate() {
            let mut v = problem.a().row(row).to_vec();
            // two Gram–Schmidt passes keep Q orthonormal to working precision
            for _ in 0..2 {
                for (i, qi) in q.iter().enumerate() {
                    let c = dot(qi, &v);
                    axpy(-c, qi, &mut v);
                    r[i][j] += c;
                }
            }
            let nv = norm(&v);
            r[j][j] = nv;
            v.iter_mut().for_each(|x| *x /= nv);
            q.push(v);
        }
        Self { q, r }
    }

    /// `(z, r)` with `z = (I − QQᵀ) a` and `r = R⁻¹ Qᵀ a`.
    fn directions(&self, a: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let qa: Vec<f64> = self.q.iter().map(|qi| dot(qi, a)).collect();
        let mut z = a.to_vec();
        for (qi, c) in self.q.iter().zip(&qa) {
            axpy(-c, qi, &mut z);
        }
        (z, self.back_substitute(qa))
    }

    fn back_substitute(&self, mut y: Vec<f64>) -> Vec<f64> {
        for i in (0..y.len()).rev() {
            for j in i + 1..y.len() {
                y[i] -= self.r[i][j] * y[j];
            }
            y[i] /= self.r[i][i];
        }
        y
    }

    /// Projection of the origin onto `{x : a_jᵀ x = b_j, j active}` and its multipliers.
    fn project(&self, n: usize, b_active: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let k = b_active.len();
        let mut y = b_active.to_vec();
        for i in 0..k {
            for j in 0..i {
                y[i] -= self.r[j][i] * y[j];
            }
            y[i] /= self.r[i][i];
        }
        let mut x = vec![0.0; n];
        for (qi, c) in self.q.iter().zip(&y) {
            axpy(*c, qi, &mut x);
        }
        (x, self.back_substitute(y))
    }
}

/// Unique minimizer of `½‖x‖²` subject to `A x ≥ b`.
pub fn qp_min_norm(problem: &GeneralFormProblem) -> Result<SafeSolve> {
    let (m, n) = (problem.m(), problem.n());
    let a = problem.a();
    let b = problem.b();
    let limit = 100 * m;

    let mut x = vec![0.0; n];
    let mut active: Vec<usize> = Vec::new();
    let mut u: Vec<f64> = Vec::new();
    let mut factor = ActiveFactor::build(problem, &active);
    let mut iterations = 0;

    loop {
        // most violated constraint, lowest index on ties
        let mut pick: Option<(usize, f64)> = None;
        for (i, &bi) in b.iter().enumerate() {
            if active.contains(&i) {
                continue;
            }
            let s = dot(a.row(i), &x) - bi;
            let tol = 1e-13 * (1.0 + bi.abs());
            if s < -tol && pick.is_none_or(|(_, best)| s < best) {
                pick = Some((i, s));
            }
        }
        let Some((p, _)) = pick else { break };
        let ap = a.row(p);
        let ap_norm = norm(ap);
        let mut u_p = 0.0;

        loop {
            iterations += 1;
            if iterations > limit {
                return Err(Error::IterationLimit { limit });
            }
            let (z, r) = factor.directions(ap);
            let z_norm = norm(&z);

            // dual blocking: an active multiplier would hit zero
            let mut t1 = f64::INFINITY;
            let mut drop = None;
            for (j, (&rj, &uj)) in r.iter().zip(&u).enumerate() {
                if rj > 0.0 {
                    let t = uj / rj;
                    if t < t1 {
                        t1 = t;
                        drop = Some(j);
                    }
                }
            }
            // primal step that makes constraint p tight
            let t2 = if z_norm > DEPENDENCE_TOL * ap_norm {
                -(dot(ap, &x) - b[p]) / dot(&z, ap)
            } else {
                f64::INFINITY
            };

            let t = t1.min(t2);
            if t.is_infinite() {
                return Ok(SafeSolve::infeasible(m, n, iterations));
            }
            if t2.is_finite() {
                axpy(t, &z, &mut x);
            }
            axpy(-t, &r, &mut u);
            u_p += t;

            if t2 <= t1 {
                active.push(p);
                u.push(u_p);
                factor = ActiveFactor::build(problem, &active);
                break;
            }
            let j = drop.expect("finite t1 has a blocking index");
            active.remove(j);
            u.remove(j);
            factor = ActiveFactor::build(problem, &active);
        }
    }

    let b_active: Vec<f64> = active.iter().map(|&i| b[i]).collect();
    let (x, mult) = if active.is_empty() {
        (vec![0.0; n], Vec::new())
    } else {
        factor.project(n, &b_active)
    };
    let mut lambda = vec![0.0; m];
    for (&i, &l) in active.iter().zip(&mult) {
        lambda[i] = l.max(0.0);
    }
    let mut active_set = active;
    active_set.sort_unstable();
    certify(
        problem,
        SafeSolve {
            x_star: x,
            lambda_star: lambda,
            lcp_lambda: None,
            active_set,
            status: SolveStatus::Optimal,
            iterations,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::DenseMatrix;
    use approx::assert_abs_diff_eq;

    fn problem(rows: &[&[f64]], b: &[f64]) -> GeneralFormProblem {
        GeneralFormProblem::new(DenseMatrix::from_rows(rows).unwrap(), b.to_vec()).unwrap()
    }

    #[test]
    fn origin_already_feasible() {
        let s = qp_min_norm(&problem(&[&[1.0, 0.0]], &[-1.0])).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert_eq!(s.x_star, vec![0.0, 0.0]);
        assert_eq!(s.lambda_star, vec![0.0]);
        assert!(s.active_set.is_empty());
    }

    #[test]
    fn half_plane_projection() {
        let s = qp_min_norm(&problem(&[&[1.0, 1.0]], &[4.0])).unwrap();
        assert_abs_diff_eq!(s.x_star[0], 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.x_star[1], 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.lambda_star[0], 2.0, epsilon = 1e-14);
        assert_eq!(s.active_set, vec![0]);
    }

    #[test]
    fn box_corner() {
        let s = qp_min_norm(&problem(&[&[1.0, 0.0], &[0.0, 1.0]], &[1.0, 1.0])).unwrap();
        assert_eq!(s.x_star, vec![1.0, 1.0]);
        assert_eq!(s.lambda_star, vec![1.0, 1.0]);
    }

    #[test]
    fn contradictory_constraints_are_infeasible() {
        let s = qp_min_norm(&problem(&[&[1.0], &[-1.0]], &[1.0, 1.0])).unwrap();
        assert_eq!(s.status, SolveStatus::Infeasible);
    }

    #[test]
    fn drops_constraint_that_becomes_slack() {
        // Adding x1 ≥ 1 first (most violated), then x0 + x1 ≥ 3 makes x1 ≥ 1 slack:
        // the projection of the origin onto x0 + x1 ≥ 3 is (1.5, 1.5).
        let s = qp_min_norm(&problem(&[&[0.0, 1.0], &[1.0, 1.0]], &[1.0, 3.0])).unwrap();
        assert_abs_diff_eq!(s.x_star[0], 1.5, epsilon = 1e-14);
        assert_abs_diff_eq!(s.x_star[1], 1.5, epsilon = 1e-14);
        assert_eq!(s.lambda_star[0], 0.0);
        assert_eq!(s.active_set, vec![1]);
    }

    #[test]
    fn duplicate_rows_keep_independent_active_set() {
        let s = qp_min_norm(&problem(&[&[1.0, 1.0], &[2.0, 2.0]], &[4.0, 8.0])).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert_abs_diff_eq!(s.x_star[0], 2.0, epsilon = 1e-13);
        assert_abs_diff_eq!(s.x_star[1], 2.0, epsilon = 1e-13);
        assert_eq!(s.active_set.len(), 1);
    }
}
