//! Lemke's complementary pivoting method for `0 ≤ z ⊥ M z + q ≥ 0`.
//!
//! Covering vector is all ones. Ties in the ratio test are broken with the
//! lexicographic rule on `[rhs | B⁻¹]`, which rules out cycling.

use crate::error::{Error, Result};
use crate::numkit::{DenseMatrix, EPS_RANK};

/// `0 ≤ z ⊥ M z + q ≥ 0`
#[derive(Debug, Clone, PartialEq)]
pub struct LcpProblem {
    m: DenseMatrix,
    q: Vec<f64>,
}

impl LcpProblem {
    pub fn new(m: DenseMatrix, q: Vec<f64>) -> Result<Self> {
        if !m.is_square() || m.rows() != q.len() {
            return Err(Error::DimensionMismatch(format!(
                "LCP needs square M matching q, got {}x{} and {}",
                m.rows(),
                m.cols(),
                q.len()
            )));
        }
        if let Some(i) = q.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { m, q })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.m
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn size(&self) -> usize {
        self.q.len()
    }

    /// `w = M z + q`
    pub fn slack(&self, z: &[f64]) -> Vec<f64> {
        self.m
            .mul_vec(z)
            .expect("dimension checked at construction")
            .iter()
            .zip(&self.q)
            .map(|(a, b)| a + b)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LcpStatus {
    Solved,
    /// The pivot path left along an unbounded ray; no solution was found.
    RayTermination,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LcpSolution {
    pub z: Vec<f64>,
    pub w: Vec<f64>,
    pub status: LcpStatus,
    pub pivots: usize,
}

const PIVOT_TOL: f64 = 1e-12;
const TIE_TOL: f64 = 1e-11;

struct Tableau {
    size: usize,
    /// `size` rows of `2·size + 1` coefficients: columns `w`, `z`, `z0`.
    coef: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn new(lcp: &LcpProblem) -> Self {
        let n = lcp.size();
        let coef = (0..n)
            .map(|i| {
                let mut row = vec![0.0; 2 * n + 1];
                row[i] = 1.0;
                for j in 0..n {
                    row[n + j] = -lcp.m[(i, j)];
                }
                row[2 * n] = -1.0;
                row
            })
            .collect();
        Self {
            size: n,
            coef,
            rhs: lcp.q.clone(),
            basis: (0..n).collect(),
        }
    }

    fn z0(&self) -> usize {
        2 * self.size
    }

    fn complement(&self, var: usize) -> usize {
        if var < self.size {
            var + self.size
        } else {
            var - self.size
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.coef[row][col];
        self.coef[row].iter_mut().for_each(|v| *v /= p);
        self.rhs[row] /= p;
        let pivot_row = self.coef[row].clone();
        let pivot_rhs = self.rhs[row];
        for i in 0..self.size {
            if i == row {
                continue;
            }
            let f = self.coef[i][col];
            if f != 0.0 {
                for (v, pv) in self.coef[i].iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                self.coef[i][col] = 0.0;
                self.rhs[i] -= f * pivot_rhs;
            }
        }
        self.basis[row] = col;
    }

    /// Lexicographic key of row `i` scaled by `1/d`: `[rhs_i, (B⁻¹)_{i,·}] / d`.
    fn key(&self, i: usize, d: f64) -> impl Iterator<Item = f64> + '_ {
        std::iter::once(self.rhs[i] / d).chain(self.coef[i][..self.size].iter().map(move |v| v / d))
    }
}

fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_TOL * (1.0 + a.abs().max(b.abs()))
}

/// Lexicographically smallest key among `rows`.
fn lex_min(tab: &Tableau, rows: &[(usize, f64)]) -> Result<usize> {
    let mut best = rows[0];
    for &cand in &rows[1..] {
        let mut decided = false;
        for (c, b) in tab.key(cand.0, cand.1).zip(tab.key(best.0, best.1)) {
            if approx_eq(c, b) {
                continue;
            }
            if c < b {
                best = cand;
            }
            decided = true;
            break;
        }
        if !decided {
            return Err(Error::PivotBreakdown);
        }
    }
    Ok(best.0)
}

/// Solves the LCP with Lemke's method, capped at `200·m` pivots.
pub fn lcp_lemke(lcp: &LcpProblem) -> Result<LcpSolution> {
    let n = lcp.size();
    if lcp.q.iter().all(|&v| v >= 0.0) {
        return Ok(LcpSolution {
            z: vec![0.0; n],
            w: lcp.q.clone(),
            status: LcpStatus::Solved,
            pivots: 0,
        });
    }
    let limit = 200 * n;
    let mut tab = Tableau::new(lcp);
    let z0 = tab.z0();

    // z0 enters at the level that makes the most negative q_i zero.
    let qmin = lcp.q.iter().copied().fold(f64::INFINITY, f64::min);
    let ties: Vec<(usize, f64)> = (0..n)
        .filter(|&i| approx_eq(lcp.q[i], qmin))
        .map(|i| (i, 1.0))
        .collect();
    let row = lex_min(&tab, &ties)?;
    let leaving = tab.basis[row];
    tab.pivot(row, z0);
    let mut entering = tab.complement(leaving);
    let mut pivots = 1;

    loop {
        if pivots >= limit {
            return Err(Error::IterationLimit { limit });
        }
        let col_scale = (0..n)
            .map(|i| tab.coef[i][entering].abs())
            .fold(1.0, f64::max);
        let cands: Vec<(usize, f64)> = (0..n)
            .map(|i| (i, tab.coef[i][entering]))
            .filter(|&(_, d)| d > PIVOT_TOL * col_scale)
            .collect();
        if cands.is_empty() {
            return Ok(LcpSolution {
                z: vec![0.0; n],
                w: lcp.q.clone(),
                status: LcpStatus::RayTermination,
                pivots,
            });
        }
        let min_ratio = cands
            .iter()
            .map(|&(i, d)| tab.rhs[i] / d)
            .fold(f64::INFINITY, f64::min);
        let ties: Vec<(usize, f64)> = cands
            .iter()
            .copied()
            .filter(|&(i, d)| approx_eq(tab.rhs[i] / d, min_ratio))
            .collect();
        let row = match ties.iter().find(|&&(i, _)| tab.basis[i] == z0) {
            Some(&(i, _)) => i,
            None => lex_min(&tab, &ties)?,
        };
        let leaving = tab.basis[row];
        tab.pivot(row, entering);
        pivots += 1;
        if leaving == z0 {
            break;
        }
        entering = tab.complement(leaving);
    }

    let mut z = vec![0.0; n];
    for (i, &var) in tab.basis.iter().enumerate() {
        if (n..2 * n).contains(&var) {
            z[var - n] = tab.rhs[i].max(0.0);
        }
    }
    let z = polish(lcp, &tab.basis, z);
    let w = lcp.slack(&z);
    Ok(LcpSolution {
        z,
        w,
        status: LcpStatus::Solved,
        pivots,
    })
}

/// Re-solves `M_SS z_S = −q_S` on the final basis to strip accumulated pivoting error.
fn polish(lcp: &LcpProblem, basis: &[usize], z: Vec<f64>) -> Vec<f64> {
    let n = lcp.size();
    let support: Vec<usize> = basis
        .iter()
        .filter(|v| (n..2 * n).contains(*v))
        .map(|v| v - n)
        .collect();
    if support.is_empty() {
        return z;
    }
    let rows: Vec<Vec<f64>> = support
        .iter()
        .map(|&i| support.iter().map(|&j| lcp.m[(i, j)]).collect())
        .collect();
    let rhs: Vec<f64> = support.iter().map(|&i| -lcp.q[i]).collect();
    let Ok(mss) = DenseMatrix::from_rows(&rows) else {
        return z;
    };
    let Ok(zs) = crate::numkit::solve_linear(&mss, &rhs, EPS_RANK) else {
        return z;
    };
    let mut polished = vec![0.0; n];
    for (&i, &v) in support.iter().zip(zs.iter()) {
        polished[i] = v.max(0.0);
    }
    if residual(lcp, &polished) <= residual(lcp, &z) {
        polished
    } else {
        z
    }
}

fn residual(lcp: &LcpProblem, z: &[f64]) -> f64 {
    let w = lcp.slack(z);
    z.iter()
        .zip(&w)
        .map(|(zi, wi)| (-wi).max(0.0).max((zi * wi).abs()))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn lcp(rows: &[&[f64]], q: &[f64]) -> LcpProblem {
        LcpProblem::new(DenseMatrix::from_rows(rows).unwrap(), q.to_vec()).unwrap()
    }

    #[test]
    fn nonnegative_q_is_trivial() {
        let s = lcp_lemke(&lcp(&[&[1.0, 2.0], &[3.0, 4.0]], &[0.0, 1.0])).unwrap();
        assert_eq!(s.z, vec![0.0, 0.0]);
        assert_eq!(s.status, LcpStatus::Solved);
    }

    #[test]
    fn scalar_case() {
        let s = lcp_lemke(&lcp(&[&[1.0]], &[-2.0])).unwrap();
        assert_eq!(s.z, vec![2.0]);
        assert_eq!(s.w, vec![0.0]);
    }

    #[test]
    fn two_by_two_all_active() {
        // All-active system [[2,1],[1,2]] z = (1,1) gives z = (1/3, 1/3), w = 0.
        let s = lcp_lemke(&lcp(&[&[2.0, 1.0], &[1.0, 2.0]], &[-1.0, -1.0])).unwrap();
        assert_abs_diff_eq!(s.z[0], 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.z[1], 1.0 / 3.0, epsilon = 1e-15);
        assert!(s.w.iter().all(|w| w.abs() < 1e-15));
    }

    #[test]
    fn ray_on_infeasible_psd_problem() {
        // z1 − z2 − 1 ≥ 0 and −z1 + z2 − 1 ≥ 0 cannot both hold.
        let s = lcp_lemke(&lcp(&[&[1.0, -1.0], &[-1.0, 1.0]], &[-1.0, -1.0])).unwrap();
        assert_eq!(s.status, LcpStatus::RayTermination);
    }

    #[test]
    fn degenerate_duplicate_rows() {
        let s = lcp_lemke(&lcp(&[&[1.0, 1.0], &[1.0, 1.0]], &[-1.0, -1.0])).unwrap();
        assert_eq!(s.status, LcpStatus::Solved);
        assert_abs_diff_eq!(s.z[0] + s.z[1], 1.0, epsilon = 1e-14);
        assert!(s.w.iter().all(|w| *w >= -1e-14));
    }

    #[test]
    fn rejects_non_square() {
        let m = DenseMatrix::from_rows(&[[1.0, 2.0]]).unwrap();
        assert!(LcpProblem::new(m, vec![1.0]).is_err());
    }
}
