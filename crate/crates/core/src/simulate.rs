//! Zero-order-hold closed-loop simulation of a velocity-controlled arm.
//!
//! At every sample both safety filters are evaluated from the same state;
//! one of them is applied for the whole interval and the joint state is
//! advanced exactly (`q̇ = u` is constant over the hold).

use serde::{Deserialize, Serialize};

use crate::constraints::{assemble, reduced_constraint, KappaMap, MarginKind, MarginSpec};
use crate::error::{Error, Result};
use crate::numkit::{norm, solve_linear, symmetric_eigenvalues, DenseMatrix, EPS_RANK};
use crate::robot::{
    contact_pairs, end_effector, end_effector_jacobian, DiskObstacle, JointState, Point, RobotModel,
};
use crate::solvers::{lc_solve, qp_min_norm, SafeSolve, SolveStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Controller {
    Cbf,
    Lc,
    Both,
}

/// Which filter drives the arm when both are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Applied {
    #[default]
    Cbf,
    Lc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub model: RobotModel,
    pub obstacles: Vec<DiskObstacle>,
    pub q0: JointState,
    pub goal: Point,
    /// End-effector speed of the nominal policy (m/s).
    pub k_p: f64,
    pub tau: f64,
    /// One margin per (obstacle, link) pair, or a single value for all.
    pub delta: Vec<f64>,
    /// Class-κ gain (1/s); `1/tau` makes the two filters coincide.
    pub kappa_gain: f64,
    pub max_steps: usize,
    pub goal_tol: f64,
    pub controller: Controller,
    pub applied: Applied,
}

pub const DEFAULT_K_P: f64 = 0.05;
pub const DEFAULT_GOAL_TOL: f64 = 1e-3;
pub const DEFAULT_MAX_STEPS: usize = 20_000;

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidModel(msg));
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return bad(format!("tau must be positive, got {}", self.tau));
        }
        if self.max_steps == 0 {
            return bad("max_steps must be at least 1".into());
        }
        if !(self.goal_tol.is_finite() && self.goal_tol > 0.0) {
            return bad(format!("goal_tol must be positive, got {}", self.goal_tol));
        }
        if !(self.k_p.is_finite() && self.k_p > 0.0) {
            return bad(format!("k_p must be positive, got {}", self.k_p));
        }
        if !self.goal.iter().all(|v| v.is_finite()) {
            return bad("goal must be finite".into());
        }
        if self.q0.len() != self.model.dof() {
            return Err(Error::DimensionMismatch(format!(
                "q0 has {} entries for {} joints",
                self.q0.len(),
                self.model.dof()
            )));
        }
        if self.obstacles.is_empty() {
            return bad("at least one obstacle is required".into());
        }
        KappaMap::new(self.kappa_gain)?;
        let m = self.constraint_count();
        if self.delta.len() != 1 && self.delta.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "{} margins given for {m} constraints",
                self.delta.len()
            )));
        }
        MarginSpec::new(self.margins(), MarginKind::Lc)?;
        Ok(())
    }

    pub fn constraint_count(&self) -> usize {
        self.obstacles.len() * self.model.dof()
    }

    /// Per-constraint margins, broadcasting a single value.
    pub fn margins(&self) -> Vec<f64> {
        match self.delta.as_slice() {
            [d] => vec![*d; self.constraint_count()],
            ds => ds.to_vec(),
        }
    }
}

/// Nominal joint velocity driving the end effector towards `goal` at speed `k_p`:
/// `u_des = J⁺ · k_p (p_g − p_ee)/‖p_g − p_ee‖`.
///
/// Returns zeros when the end effector already sits exactly on the goal.
pub fn desired_velocity(
    model: &RobotModel,
    q: &JointState,
    goal: Point,
    k_p: f64,
) -> Result<Vec<f64>> {
    let ee = end_effector(model, q)?;
    let d = [goal[0] - ee[0], goal[1] - ee[1]];
    let dist = d[0].hypot(d[1]);
    if dist == 0.0 {
        return Ok(vec![0.0; model.dof()]);
    }
    let v = [k_p * d[0] / dist, k_p * d[1] / dist];
    let j = end_effector_jacobian(model, q)?;
    least_squares_pinv(&j, &v)
}

/// `J⁺ v` for a full-rank 2×n Jacobian.
fn least_squares_pinv(j: &DenseMatrix, v: &[f64; 2]) -> Result<Vec<f64>> {
    let n = j.cols();
    let jt = j.transpose();
    if n == 1 {
        let jtj = j[(0, 0)] * j[(0, 0)] + j[(1, 0)] * j[(1, 0)];
        let sigma = jtj.sqrt();
        if sigma <= EPS_RANK {
            return Err(Error::SingularJacobian { sigma_min: sigma });
        }
        return Ok(vec![(j[(0, 0)] * v[0] + j[(1, 0)] * v[1]) / jtj]);
    }
    let jjt = j.matmul(&jt)?;
    let eig = symmetric_eigenvalues(&jjt)?;
    let (smin, smax) = (eig[0].max(0.0).sqrt(), eig[1].max(0.0).sqrt());
    if smin <= EPS_RANK * smax.max(1.0) {
        return Err(Error::SingularJacobian { sigma_min: smin });
    }
    let y = solve_linear(&jjt, v, EPS_RANK)?;
    jt.mul_vec(&y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub k: usize,
    pub t: f64,
    pub q: Vec<f64>,
    pub u_des: Vec<f64>,
    pub u_cbf: Option<Vec<f64>>,
    pub u_lc: Option<Vec<f64>>,
    /// Input held over `[t, t + τ)`.
    pub u: Vec<f64>,
    pub h: Vec<f64>,
    pub hprime: f64,
    /// `‖u_LC − u_CBF‖` when both filters ran.
    pub e: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "reason")]
pub enum Termination {
    GoalReached,
    MaxSteps,
    SolverFailure(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub records: Vec<StepRecord>,
    pub final_q: Vec<f64>,
    /// Reduced constraint at `final_q`, when the geometry there is well defined.
    pub final_hprime: Option<f64>,
    pub termination: Termination,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub e_min: Option<f64>,
    pub e_mean: Option<f64>,
    pub e_max: Option<f64>,
    pub hprime_min: f64,
    pub steps: usize,
    pub goal_error: f64,
}

fn kappa_map(config: &SimConfig) -> Result<KappaMap> {
    if config.kappa_gain == 1.0 / config.tau {
        KappaMap::matching(config.tau)
    } else {
        KappaMap::new(config.kappa_gain)
    }
}

fn filter(
    config: &SimConfig,
    q: &JointState,
    u_des: &[f64],
    kind: MarginKind,
) -> Result<SafeSolve> {
    let margins = MarginSpec::new(config.margins(), kind)?;
    let problem = assemble(
        &config.model,
        q,
        &config.obstacles,
        u_des,
        config.tau,
        &margins,
        kappa_map(config)?,
    )?;
    let solve = match kind {
        MarginKind::Cbf => qp_min_norm(&problem)?,
        MarginKind::Lc => lc_solve(&problem)?,
    };
    match solve.status {
        SolveStatus::Optimal => Ok(solve),
        SolveStatus::Infeasible => Err(Error::SolverFailure(format!(
            "{kind:?} safety filter is infeasible at this state"
        ))),
        SolveStatus::Degenerate => Err(Error::SolverFailure(format!(
            "{kind:?} safety filter failed its KKT certificate"
        ))),
    }
}

fn shifted(u_des: &[f64], x: &[f64]) -> Vec<f64> {
    u_des.iter().zip(x).map(|(a, b)| a + b).collect()
}

/// One sample: filter(s) at `q_k`, hold the input for `τ`, integrate.
pub fn step(config: &SimConfig, k: usize, q: &JointState) -> Result<(JointState, StepRecord)> {
    let u_des = desired_velocity(&config.model, q, config.goal, config.k_p)?;
    let pairs = contact_pairs(&config.model, q, &config.obstacles)?;
    let h: Vec<f64> = pairs.iter().map(|p| p.h).collect();
    let hprime = reduced_constraint(&h, &config.margins());

    let run_cbf = matches!(config.controller, Controller::Cbf | Controller::Both);
    let run_lc = matches!(config.controller, Controller::Lc | Controller::Both);
    let u_cbf = if run_cbf {
        Some(shifted(
            &u_des,
            &filter(config, q, &u_des, MarginKind::Cbf)?.x_star,
        ))
    } else {
        None
    };
    let u_lc = if run_lc {
        Some(shifted(
            &u_des,
            &filter(config, q, &u_des, MarginKind::Lc)?.x_star,
        ))
    } else {
        None
    };
    let e = match (&u_cbf, &u_lc) {
        (Some(a), Some(b)) => Some(norm(&crate::numkit::sub(b, a))),
        _ => None,
    };
    let u = match (config.controller, config.applied) {
        (Controller::Cbf, _) | (Controller::Both, Applied::Cbf) => u_cbf.clone(),
        (Controller::Lc, _) | (Controller::Both, Applied::Lc) => u_lc.clone(),
    }
    .expect("applied controller was evaluated");

    let next: Vec<f64> = q
        .iter()
        .zip(&u)
        .map(|(qi, ui)| qi + config.tau * ui)
        .collect();
    let record = StepRecord {
        k,
        t: k as f64 * config.tau,
        q: q.to_vec(),
        u_des,
        u_cbf,
        u_lc,
        u,
        h,
        hprime,
        e,
    };
    Ok((JointState::new(next)?, record))
}

/// Runs until the end effector is within `goal_tol` of the goal, the step
/// budget is exhausted, or a filter fails. A failure ends the run but keeps
/// the partial log.
pub fn run(config: &SimConfig) -> Result<(TrajectoryLog, RunMetrics)> {
    config.validate()?;
    let mut q = config.q0.clone();
    let mut records = Vec::new();
    let mut termination = Termination::MaxSteps;
    for k in 0..=config.max_steps {
        let ee = end_effector(&config.model, &q)?;
        if (config.goal[0] - ee[0]).hypot(config.goal[1] - ee[1]) <= config.goal_tol {
            termination = Termination::GoalReached;
            break;
        }
        if k == config.max_steps {
            break;
        }
        match step(config, k, &q) {
            Ok((next, rec)) => {
                records.push(rec);
                q = next;
            }
            Err(err) => {
                termination = Termination::SolverFailure(err.to_string());
                break;
            }
        }
    }

    let final_hprime = contact_pairs(&config.model, &q, &config.obstacles)
        .ok()
        .map(|pairs| {
            let h: Vec<f64> = pairs.iter().map(|p| p.h).collect();
            reduced_constraint(&h, &config.margins())
        });
    let ee = end_effector(&config.model, &q)?;
    let log = TrajectoryLog {
        records,
        final_q: q.to_vec(),
        final_hprime,
        termination,
    };
    let metrics = metrics(&log, ee, config.goal);
    Ok((log, metrics))
}

fn metrics(log: &TrajectoryLog, ee: Point, goal: Point) -> RunMetrics {
    let es: Vec<f64> = log.records.iter().filter_map(|r| r.e).collect();
    let (e_min, e_mean, e_max) = if es.is_empty() {
        (None, None, None)
    } else {
        let min = es.iter().copied().fold(f64::INFINITY, f64::min);
        let max = es.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = (es.iter().sum::<f64>() / es.len() as f64).clamp(min, max);
        (Some(min), Some(mean), Some(max))
    };
    let hprime_min = log
        .records
        .iter()
        .map(|r| r.hprime)
        .chain(log.final_hprime)
        .fold(f64::INFINITY, f64::min);
    RunMetrics {
        e_min,
        e_mean,
        e_max,
        hprime_min,
        steps: log.records.len(),
        goal_error: (goal[0] - ee[0]).hypot(goal[1] - ee[1]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_link_tangent_goal() {
        let model = RobotModel::new(vec![1.0], [0.0, 0.0]).unwrap();
        let q = JointState::new(vec![0.0]).unwrap();
        let u = desired_velocity(&model, &q, [1.0, 5.0], 0.3).unwrap();
        assert_abs_diff_eq!(u[0], 0.3, epsilon = 1e-15);
    }

    #[test]
    fn unit_direction_scaling() {
        // p_g − p_ee = (3, 4) at the zero pose of a 2-link arm; J u_des = (0.6, 0.8).
        let model = RobotModel::new(vec![1.0, 1.0], [0.0, 0.0]).unwrap();
        let q = JointState::new(vec![0.3, 0.9]).unwrap();
        let ee = end_effector(&model, &q).unwrap();
        let goal = [ee[0] + 3.0, ee[1] + 4.0];
        let u = desired_velocity(&model, &q, goal, 1.0).unwrap();
        let v = end_effector_jacobian(&model, &q)
            .unwrap()
            .mul_vec(&u)
            .unwrap();
        assert_abs_diff_eq!(v[0], 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(v[1], 0.8, epsilon = 1e-12);
    }

    #[test]
    fn stretched_arm_is_singular() {
        let model = RobotModel::new(vec![1.0, 1.0], [0.0, 0.0]).unwrap();
        let q = JointState::new(vec![0.0, 0.0]).unwrap();
        assert!(matches!(
            desired_velocity(&model, &q, [3.0, 0.0], 1.0),
            Err(Error::SingularJacobian { .. })
        ));
    }

    fn far_obstacle_config() -> SimConfig {
        SimConfig {
            model: RobotModel::new(vec![0.1, 0.05, 0.05], [0.0, 0.0]).unwrap(),
            obstacles: vec![DiskObstacle::new([5.0, 5.0], 0.05).unwrap()],
            q0: JointState::new(vec![0.3, 0.6, 0.6]).unwrap(),
            goal: [-0.05, 0.15],
            k_p: DEFAULT_K_P,
            tau: 0.005,
            delta: vec![0.01],
            kappa_gain: 200.0,
            max_steps: 5,
            goal_tol: DEFAULT_GOAL_TOL,
            controller: Controller::Both,
            applied: Applied::Cbf,
        }
    }

    #[test]
    fn inactive_filters_pass_nominal_input() {
        let cfg = far_obstacle_config();
        let (_, rec) = step(&cfg, 0, &cfg.q0).unwrap();
        assert_eq!(rec.u, rec.u_des);
        assert_eq!(rec.u_lc.as_deref(), Some(rec.u_des.as_slice()));
        assert_eq!(rec.e, Some(0.0));
    }

    #[test]
    fn run_respects_step_budget() {
        let cfg = far_obstacle_config();
        let (log, m) = run(&cfg).unwrap();
        assert_eq!(log.termination, Termination::MaxSteps);
        assert_eq!(m.steps, 5);
        assert_eq!(m.e_max, Some(0.0));
    }

    #[test]
    fn invalid_config_is_rejected() {
        let mut cfg = far_obstacle_config();
        cfg.tau = 0.0;
        assert!(run(&cfg).is_err());
        let mut cfg = far_obstacle_config();
        cfg.delta = vec![0.01, 0.01];
        assert!(matches!(cfg.validate(), Err(Error::DimensionMismatch(_))));
    }
}
