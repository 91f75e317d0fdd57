//! Randomized cross-check of the two safe-control solvers.
//!
//! Each instance is a random general-form problem `A x ≥ b`. The active-set
//! projection, the complementarity route and (for small `m`) the
//! enumeration oracle must agree on status and on the minimizer.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::constraints::GeneralFormProblem;
use crate::error::Error;
use crate::numkit::{norm, sub, DenseMatrix};
use crate::solvers::{
    lc_solve, oracle_qp_enumerate, qp_min_norm, KktResiduals, SafeSolve, SolveStatus,
    MAX_ENUMERATION,
};

#[derive(Debug, Clone, PartialEq)]
pub struct FuzzConfig {
    pub seed: u64,
    pub count: usize,
    pub m_max: usize,
    pub n_max: usize,
    /// Relative agreement tolerance on `x`, scaled by `1 + ‖x‖`.
    pub tol: f64,
    /// Rows shorter than this are redrawn.
    pub min_row_norm: f64,
    /// Probability of deliberately emitting an all-zero row. Non-zero values
    /// break the generator contract and are reported as violations.
    pub zero_row_probability: f64,
    /// Run the enumeration oracle on instances with at most this many constraints.
    pub oracle_m_max: usize,
}

impl FuzzConfig {
    pub fn new(seed: u64, count: usize, m_max: usize, n_max: usize, tol: f64) -> Self {
        Self {
            seed,
            count,
            m_max,
            n_max,
            tol,
            min_row_norm: 0.1,
            zero_row_probability: 0.0,
            oracle_m_max: m_max.min(MAX_ENUMERATION),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceKind {
    General,
    /// `b ≤ 0`, so `x = 0` is feasible and optimal.
    NonPositiveB,
    /// Two constraints share a row direction.
    DuplicatedRows,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FuzzReport {
    pub seed: u64,
    pub instances: usize,
    pub optimal: usize,
    pub infeasible: usize,
    /// `max ‖x_QP − x_LC‖ / (1 + ‖x_QP‖)` over instances where both are optimal.
    pub max_error: f64,
    /// Same against the enumeration oracle.
    pub max_oracle_error: f64,
    pub oracle_checked: usize,
    pub status_disagreements: usize,
    pub oracle_disagreements: usize,
    /// Solves that ended `Degenerate` or returned an error.
    pub solver_failures: usize,
    /// Instances the generator produced outside its contract (zero rows).
    pub contract_violations: usize,
    /// `b ≤ 0` instances where a solver did not return exactly `x = 0`.
    pub zero_shortcut_violations: usize,
    pub max_stationarity: f64,
    pub max_complementarity: f64,
    pub max_dual_infeasibility: f64,
    pub max_primal_infeasibility: f64,
    /// Index of the instance with the largest QP/LC discrepancy.
    pub worst_instance: Option<usize>,
    pub success: bool,
}

pub struct InstanceGenerator {
    rng: ChaCha8Rng,
    m_max: usize,
    n_max: usize,
    min_row_norm: f64,
    zero_row_probability: f64,
}

impl InstanceGenerator {
    pub fn new(config: &FuzzConfig) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            m_max: config.m_max.max(1),
            n_max: config.n_max.max(1),
            min_row_norm: config.min_row_norm,
            zero_row_probability: config.zero_row_probability,
        }
    }

    fn row(&mut self, n: usize) -> Vec<f64> {
        if self.zero_row_probability > 0.0 && self.rng.gen_bool(self.zero_row_probability) {
            return vec![0.0; n];
        }
        loop {
            let r: Vec<f64> = (0..n).map(|_| self.rng.gen_range(-1.0..=1.0)).collect();
            if norm(&r) >= self.min_row_norm {
                return r;
            }
        }
    }

    /// Draws the next `(A, b)` pair with its kind.
    pub fn next_instance(&mut self) -> (InstanceKind, Vec<Vec<f64>>, Vec<f64>) {
        let m = self.rng.gen_range(1..=self.m_max);
        let n = self.rng.gen_range(1..=self.n_max);
        let roll = self.rng.gen_range(0..10);
        let kind = match roll {
            0 => InstanceKind::NonPositiveB,
            1 if m >= 2 => InstanceKind::DuplicatedRows,
            _ => InstanceKind::General,
        };
        let mut rows: Vec<Vec<f64>> = (0..m).map(|_| self.row(n)).collect();
        let shift = self.rng.gen_range(-0.5..=1.0);
        let mut b: Vec<f64> = (0..m)
            .map(|_| self.rng.gen_range(-1.0..=1.0) + shift)
            .collect();
        match kind {
            InstanceKind::NonPositiveB => b.iter_mut().for_each(|v| *v = -v.abs()),
            InstanceKind::DuplicatedRows => {
                let i = self.rng.gen_range(0..m);
                let j = (i + self.rng.gen_range(1..m)) % m;
                let c = self.rng.gen_range(0.5..=2.0);
                rows[j] = rows[i].iter().map(|v| c * v).collect();
                if self.rng.gen_bool(0.5) {
                    // same half-space, scaled
                    b[j] = c * b[i];
                }
            }
            InstanceKind::General => {}
        }
        (kind, rows, b)
    }
}

fn relative_gap(a: &[f64], b: &[f64]) -> f64 {
    norm(&sub(a, b)) / (1.0 + norm(a))
}

fn accumulate_kkt(report: &mut FuzzReport, problem: &GeneralFormProblem, solve: &SafeSolve) {
    if let Ok(r) = KktResiduals::evaluate(problem, solve) {
        report.max_stationarity = report.max_stationarity.max(r.stationarity);
        report.max_complementarity = report.max_complementarity.max(r.complementarity);
        report.max_dual_infeasibility = report.max_dual_infeasibility.max(r.dual_infeasibility);
        report.max_primal_infeasibility =
            report.max_primal_infeasibility.max(r.primal_infeasibility);
    }
}

/// Runs `count` random instances and aggregates discrepancies.
pub fn fuzz_equivalence(config: &FuzzConfig) -> FuzzReport {
    let mut gen = InstanceGenerator::new(config);
    let mut report = FuzzReport {
        seed: config.seed,
        ..Default::default()
    };

    for idx in 0..config.count {
        let (kind, rows, b) = gen.next_instance();
        report.instances += 1;
        let problem =
            match DenseMatrix::from_rows(&rows).and_then(|a| GeneralFormProblem::new(a, b)) {
                Ok(p) => p,
                Err(Error::DegenerateRow { .. }) => {
                    report.contract_violations += 1;
                    continue;
                }
                Err(_) => {
                    report.solver_failures += 1;
                    continue;
                }
            };
        let (qp, lc) = match (qp_min_norm(&problem), lc_solve(&problem)) {
            (Ok(qp), Ok(lc)) => (qp, lc),
            _ => {
                report.solver_failures += 1;
                continue;
            }
        };
        if qp.status == SolveStatus::Degenerate || lc.status == SolveStatus::Degenerate {
            report.solver_failures += 1;
        }
        if qp.status != lc.status {
            report.status_disagreements += 1;
        }
        if qp.is_optimal() {
            report.optimal += 1;
            accumulate_kkt(&mut report, &problem, &qp);
        } else if qp.status == SolveStatus::Infeasible {
            report.infeasible += 1;
        }
        if lc.is_optimal() {
            accumulate_kkt(&mut report, &problem, &lc);
        }
        if qp.is_optimal() && lc.is_optimal() {
            let gap = relative_gap(&qp.x_star, &lc.x_star);
            if gap > report.max_error || report.worst_instance.is_none() {
                report.worst_instance = Some(idx);
            }
            report.max_error = report.max_error.max(gap);
        }
        if kind == InstanceKind::NonPositiveB
            && (qp.x_star.iter().any(|v| *v != 0.0) || lc.x_star.iter().any(|v| *v != 0.0))
        {
            report.zero_shortcut_violations += 1;
        }
        if problem.m() <= config.oracle_m_max {
            match oracle_qp_enumerate(&problem) {
                Ok(oracle) => {
                    report.oracle_checked += 1;
                    if oracle.status != qp.status {
                        report.oracle_disagreements += 1;
                    } else if oracle.is_optimal() {
                        report.max_oracle_error = report
                            .max_oracle_error
                            .max(relative_gap(&oracle.x_star, &qp.x_star))
                            .max(relative_gap(&oracle.x_star, &lc.x_star));
                    }
                }
                Err(_) => report.oracle_disagreements += 1,
            }
        }
    }

    // KKT quality enters through `solver_failures`: a solve whose scaled
    // certificate fails is reported as degenerate. The absolute maxima above
    // are informational.
    report.success = report.max_error <= config.tol
        && report.max_oracle_error <= config.tol
        && report.status_disagreements == 0
        && report.oracle_disagreements == 0
        && report.solver_failures == 0
        && report.contract_violations == 0
        && report.zero_shortcut_violations == 0;
    report
}
