#![allow(dead_code)]

use cbflcp_core::constraints::GeneralFormProblem;
use cbflcp_core::numkit::{norm, DenseMatrix};
use cbflcp_core::robot::{DiskObstacle, JointState, RobotModel};
use proptest::prelude::*;

pub fn rows_strategy(m_max: usize, n_max: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1..=m_max, 1..=n_max)
        .prop_flat_map(|(m, n)| prop::collection::vec(prop::collection::vec(-1.0..1.0f64, n), m))
        .prop_filter("rows must be clearly nonzero", |rows| {
            rows.iter().all(|r| norm(r) >= 0.1)
        })
}

pub fn problem_strategy(m_max: usize, n_max: usize) -> impl Strategy<Value = GeneralFormProblem> {
    rows_strategy(m_max, n_max).prop_flat_map(|rows| {
        let m = rows.len();
        (Just(rows), prop::collection::vec(-1.0..1.5f64, m)).prop_map(|(rows, b)| {
            GeneralFormProblem::new(DenseMatrix::from_rows(&rows).unwrap(), b).unwrap()
        })
    })
}

pub fn to_na(a: &DenseMatrix) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_row_slice(a.rows(), a.cols(), a.as_slice())
}

pub fn rank(a: &nalgebra::DMatrix<f64>, tol: f64) -> usize {
    a.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .filter(|s| **s > tol)
        .count()
}

pub fn arm() -> RobotModel {
    RobotModel::new(vec![0.1, 0.05, 0.05], [0.0, 0.0]).unwrap()
}

pub fn disk() -> DiskObstacle {
    DiskObstacle::new([0.03, 0.17], 0.05).unwrap()
}

pub fn js(q: &[f64]) -> JointState {
    JointState::new(q.to_vec()).unwrap()
}
