//! Assembly of the shared general-form problem `A x ≥ b` (with
//! `x = u − u_des`) from robot state, obstacles and margins.
//!
//! Both safe-control formulations reduce to the same data:
//!
//! * complementarity (LC): `b_i = (δ_i − h_i)/τ − a_i·u_des`
//! * sampled-data CBF:     `b_i = γ(δ_i − h_i)  − a_i·u_des`
//!
//! with `A = ∂h/∂q`. For `γ = 1/τ` and equal margins the two are identical.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{dot, DenseMatrix, DenseVector, EPS_RANK};
use crate::robot::{contact_pairs, ContactPair, DiskObstacle, JointState, RobotModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarginKind {
    Lc,
    Cbf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginSpec {
    pub delta: Vec<f64>,
    pub kind: MarginKind,
}

impl MarginSpec {
    pub fn new(delta: Vec<f64>, kind: MarginKind) -> Result<Self> {
        if let Some((i, d)) = delta
            .iter()
            .enumerate()
            .find(|(_, d)| !(d.is_finite() && **d >= 0.0))
        {
            return Err(Error::InvalidModel(format!(
                "margin {i} must be non-negative, got {d}"
            )));
        }
        Ok(Self { delta, kind })
    }

    /// Same margin for all `m` constraints.
    pub fn uniform(delta: f64, m: usize, kind: MarginKind) -> Result<Self> {
        Self::new(vec![delta; m], kind)
    }
}

/// Linear class-κ map `α(x) = gain · x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaMap {
    gain: f64,
    /// Set by [`KappaMap::matching`]: apply as `x / τ`, the exact expression
    /// of the LC margin, so both kinds agree bit for bit.
    period: Option<f64>,
}

impl KappaMap {
    pub fn new(gain: f64) -> Result<Self> {
        if !(gain.is_finite() && gain > 0.0) {
            return Err(Error::InvalidModel(format!(
                "class-kappa gain must be positive, got {gain}"
            )));
        }
        Ok(Self { gain, period: None })
    }

    /// The gain `1/τ`, under which CBF and LC data coincide.
    pub fn matching(tau: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::InvalidModel(format!(
                "timestep must be positive, got {tau}"
            )));
        }
        Ok(Self {
            gain: 1.0 / tau,
            period: Some(tau),
        })
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn apply(&self, x: f64) -> f64 {
        match self.period {
            Some(tau) => x / tau,
            None => self.gain * x,
        }
    }
}

/// State the problem was assembled from, kept for logging and diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct AssemblyContext {
    pub tau: f64,
    pub u_des: Vec<f64>,
    pub h: Vec<f64>,
    pub pairs: Vec<ContactPair>,
}

/// `{x : A x ≥ b}` with every row of `A` bounded away from zero.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralFormProblem {
    a: DenseMatrix,
    b: DenseVector,
    context: Option<AssemblyContext>,
}

impl GeneralFormProblem {
    pub fn new(a: DenseMatrix, b: Vec<f64>) -> Result<Self> {
        if a.rows() != b.len() {
            return Err(Error::DimensionMismatch(format!(
                "A has {} rows but b has {} entries",
                a.rows(),
                b.len()
            )));
        }
        crate::numkit::row_norms(&a, EPS_RANK)?;
        Ok(Self {
            a,
            b: DenseVector::new(b)?,
            context: None,
        })
    }

    pub fn a(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// Number of constraints.
    pub fn m(&self) -> usize {
        self.a.rows()
    }

    /// Number of decision variables.
    pub fn n(&self) -> usize {
        self.a.cols()
    }

    pub fn context(&self) -> Option<&AssemblyContext> {
        self.context.as_ref()
    }
}

/// Builds `(A, b)` at state `q` for the given margin kind.
///
/// `kappa` is only consulted for [`MarginKind::Cbf`].
#[allow(clippy::too_many_arguments)]
pub fn assemble(
    model: &RobotModel,
    q: &JointState,
    obstacles: &[DiskObstacle],
    u_des: &[f64],
    tau: f64,
    margins: &MarginSpec,
    kappa: KappaMap,
) -> Result<GeneralFormProblem> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::InvalidModel(format!(
            "timestep must be positive, got {tau}"
        )));
    }
    if u_des.len() != model.dof() {
        return Err(Error::DimensionMismatch(format!(
            "u_des has {} entries for {} joints",
            u_des.len(),
            model.dof()
        )));
    }
    let pairs = contact_pairs(model, q, obstacles)?;
    if pairs.is_empty() {
        return Err(Error::DimensionMismatch("scene has no constraints".into()));
    }
    if margins.delta.len() != pairs.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} margins for {} constraints",
            margins.delta.len(),
            pairs.len()
        )));
    }
    let rows: Vec<&[f64]> = pairs.iter().map(|p| p.jac_row.as_slice()).collect();
    let a = DenseMatrix::from_rows(&rows)?;
    crate::numkit::row_norms(&a, EPS_RANK)?;
    let h: Vec<f64> = pairs.iter().map(|p| p.h).collect();
    let b = pairs
        .iter()
        .zip(&margins.delta)
        .map(|(p, &delta)| {
            let gap = delta - p.h;
            let shift = match margins.kind {
                MarginKind::Lc => gap / tau,
                MarginKind::Cbf => kappa.apply(gap),
            };
            shift - dot(&p.jac_row, u_des)
        })
        .collect();
    Ok(GeneralFormProblem {
        a,
        b: DenseVector::new(b)?,
        context: Some(AssemblyContext {
            tau,
            u_des: u_des.to_vec(),
            h,
            pairs,
        }),
    })
}

/// `A x − b`; all entries non-negative iff `x` is feasible.
pub fn feasibility_margin(problem: &GeneralFormProblem, x: &[f64]) -> Result<Vec<f64>> {
    let ax = problem.a.mul_vec(x)?;
    Ok(ax
        .iter()
        .zip(problem.b.iter())
        .map(|(l, r)| l - r)
        .collect())
}

/// Reduced constraint `min_i (h_i − δ_i)`; positive iff every link keeps its margin.
pub fn reduced_constraint(h: &[f64], delta: &[f64]) -> f64 {
    h.iter()
        .zip(delta)
        .map(|(h, d)| h - d)
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn single_link_scene() -> (RobotModel, JointState, Vec<DiskObstacle>) {
        // Obstacle straight above the tip of a unit link at clearance 0.5.
        let model = RobotModel::new(vec![1.0], [0.0, 0.0]).unwrap();
        let q = JointState::new(vec![0.0]).unwrap();
        let obs = vec![DiskObstacle::new([1.0, -0.6], 0.1).unwrap()];
        (model, q, obs)
    }

    #[test]
    fn lc_and_cbf_b_hand_evaluated() {
        let (model, q, obs) = single_link_scene();
        // Tip moves along +y, the normal points up (+y), so a = [1] and a·u_des = u_des.
        let pairs = contact_pairs(&model, &q, &obs).unwrap();
        assert_abs_diff_eq!(pairs[0].h, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(pairs[0].jac_row[0], 1.0, epsilon = 1e-15);

        let lc = MarginSpec::uniform(0.01, 1, MarginKind::Lc).unwrap();
        let p = assemble(
            &model,
            &q,
            &obs,
            &[1.0],
            0.05,
            &lc,
            KappaMap::new(1.0).unwrap(),
        )
        .unwrap();
        assert_abs_diff_eq!(p.b()[0], -10.8, epsilon = 1e-12);

        let cbf = MarginSpec::uniform(0.01, 1, MarginKind::Cbf).unwrap();
        let p = assemble(
            &model,
            &q,
            &obs,
            &[1.0],
            0.05,
            &cbf,
            KappaMap::new(20.0).unwrap(),
        )
        .unwrap();
        assert_abs_diff_eq!(p.b()[0], 20.0 * (0.01 - 0.5) - 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.b()[0], -10.8, epsilon = 1e-12);
    }

    #[test]
    fn margin_surface_with_zero_input_gives_zero_b() {
        let (model, q, obs) = single_link_scene();
        let m = MarginSpec::uniform(0.5, 1, MarginKind::Lc).unwrap();
        let p = assemble(
            &model,
            &q,
            &obs,
            &[0.0],
            0.05,
            &m,
            KappaMap::new(1.0).unwrap(),
        )
        .unwrap();
        assert_abs_diff_eq!(p.b()[0], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn matching_gain_gives_identical_data() {
        let model = RobotModel::new(vec![0.1, 0.05, 0.05], [0.0, 0.0]).unwrap();
        let q = JointState::new(vec![0.7, 0.4, -0.3]).unwrap();
        let obs = vec![DiskObstacle::new([0.03, 0.17], 0.05).unwrap()];
        let tau = 0.005;
        let u = [0.3, -0.1, 0.2];
        let lc = assemble(
            &model,
            &q,
            &obs,
            &u,
            tau,
            &MarginSpec::uniform(0.01, 3, MarginKind::Lc).unwrap(),
            KappaMap::new(1.0).unwrap(),
        )
        .unwrap();
        let cbf = assemble(
            &model,
            &q,
            &obs,
            &u,
            tau,
            &MarginSpec::uniform(0.01, 3, MarginKind::Cbf).unwrap(),
            KappaMap::matching(tau).unwrap(),
        )
        .unwrap();
        assert_eq!(lc.a(), cbf.a());
        assert_eq!(lc.b(), cbf.b());
    }

    #[test]
    fn feasibility_margin_examples() {
        let a = DenseMatrix::from_rows(&[[1.0, 0.0]]).unwrap();
        let p = GeneralFormProblem::new(a.clone(), vec![2.0]).unwrap();
        assert_eq!(feasibility_margin(&p, &[2.0, 0.0]).unwrap(), vec![0.0]);
        let p = GeneralFormProblem::new(a, vec![-0.5]).unwrap();
        assert_eq!(feasibility_margin(&p, &[0.0, 0.0]).unwrap(), vec![0.5]);
        assert!(feasibility_margin(&p, &[0.0]).is_err());
    }

    #[test]
    fn degenerate_gradient_aborts_assembly() {
        // Obstacle below the base, beyond the start of link 0: closest point is the
        // base itself, whose Jacobian vanishes.
        let model = RobotModel::new(vec![0.1, 0.1], [0.0, 0.0]).unwrap();
        let q = JointState::new(vec![0.0, 0.0]).unwrap();
        let obs = vec![DiskObstacle::new([-0.5, 0.0], 0.1).unwrap()];
        let m = MarginSpec::uniform(0.01, 2, MarginKind::Lc).unwrap();
        let err = assemble(
            &model,
            &q,
            &obs,
            &[0.0, 0.0],
            0.01,
            &m,
            KappaMap::new(1.0).unwrap(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::DegenerateRow { row: 0, .. }));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(MarginSpec::new(vec![-0.1], MarginKind::Lc).is_err());
        assert!(KappaMap::new(0.0).is_err());
        let a = DenseMatrix::from_rows(&[[0.0, 0.0]]).unwrap();
        assert!(matches!(
            GeneralFormProblem::new(a, vec![1.0]),
            Err(Error::DegenerateRow { row: 0, .. })
        ));
    }
}
