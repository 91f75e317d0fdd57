//! Planar revolute serial chains: forward kinematics, Jacobians and
//! link–disk closest-point geometry.
//!
//! Links are zero-thickness segments between consecutive joint origins.
//! Joint angles are relative, so link `k` points along `Σ_{j≤k} q_j`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{DenseMatrix, EPS_RANK};

pub type Point = [f64; 2];

/// Tolerance for deciding that a point lies on a link segment.
pub const ON_LINK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotModel {
    link_lengths: Vec<f64>,
    base_position: Point,
}

impl RobotModel {
    pub fn new(link_lengths: Vec<f64>, base_position: Point) -> Result<Self> {
        if link_lengths.is_empty() {
            return Err(Error::InvalidModel("robot needs at least one link".into()));
        }
        if let Some((i, l)) = link_lengths
            .iter()
            .enumerate()
            .find(|(_, l)| !(l.is_finite() && **l > 0.0))
        {
            return Err(Error::InvalidModel(format!(
                "link {i} has non-positive length {l}"
            )));
        }
        if !base_position.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidModel("base position must be finite".into()));
        }
        Ok(Self {
            link_lengths,
            base_position,
        })
    }

    pub fn dof(&self) -> usize {
        self.link_lengths.len()
    }

    pub fn link_lengths(&self) -> &[f64] {
        &self.link_lengths
    }

    pub fn base_position(&self) -> Point {
        self.base_position
    }

    pub fn reach(&self) -> f64 {
        self.link_lengths.iter().sum()
    }

    fn check(&self, q: &JointState) -> Result<()> {
        if q.len() != self.dof() {
            return Err(Error::DimensionMismatch(format!(
                "robot has {} joints, state has {}",
                self.dof(),
                q.len()
            )));
        }
        Ok(())
    }
}

/// Joint angles in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JointState(Vec<f64>);

impl JointState {
    pub fn new(q: Vec<f64>) -> Result<Self> {
        if let Some(i) = q.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self(q))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl std::ops::Deref for JointState {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskObstacle {
    pub center: Point,
    pub radius: f64,
}

impl DiskObstacle {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidModel(format!(
                "obstacle radius must be positive, got {radius}"
            )));
        }
        if !center.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidModel("obstacle center must be finite".into()));
        }
        Ok(Self { center, radius })
    }
}

/// Closest-point data between one link and one obstacle.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactPair {
    pub link_index: usize,
    /// Closest point on the link.
    pub p_c: Point,
    /// Closest point on the obstacle boundary.
    pub p_o: Point,
    /// Unit normal pointing from the obstacle towards the link.
    pub normal: Point,
    /// Signed clearance; negative under penetration.
    pub h: f64,
    /// Segment parameter of `p_c` in `[0, 1]`.
    pub t: f64,
    /// `∂h/∂q = nᵀ J_c`.
    pub jac_row: Vec<f64>,
}

fn rot90(v: Point) -> Point {
    [-v[1], v[0]]
}

fn sub2(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn norm2(a: Point) -> f64 {
    a[0].hypot(a[1])
}

/// Joint positions from the base through the end effector (`n + 1` points).
pub fn forward_kinematics(model: &RobotModel, q: &JointState) -> Result<Vec<Point>> {
    model.check(q)?;
    let mut pts = Vec::with_capacity(model.dof() + 1);
    let mut p = model.base_position;
    let mut angle = 0.0;
    pts.push(p);
    for (l, qi) in model.link_lengths.iter().zip(q.iter()) {
        angle += qi;
        p = [p[0] + l * angle.cos(), p[1] + l * angle.sin()];
        pts.push(p);
    }
    Ok(pts)
}

pub fn end_effector(model: &RobotModel, q: &JointState) -> Result<Point> {
    Ok(*forward_kinematics(model, q)?
        .last()
        .expect("at least the base point"))
}

fn jacobian_from_origins(origins: &[Point], dof: usize, upto: usize, p: Point) -> DenseMatrix {
    let mut j = DenseMatrix::zeros(2, dof);
    for (col, o) in origins.iter().enumerate().take(upto + 1) {
        let c = rot90(sub2(p, *o));
        j.set(0, col, c[0]);
        j.set(1, col, c[1]);
    }
    j
}

/// 2×n end-effector Jacobian.
pub fn end_effector_jacobian(model: &RobotModel, q: &JointState) -> Result<DenseMatrix> {
    let pts = forward_kinematics(model, q)?;
    let n = model.dof();
    Ok(jacobian_from_origins(&pts[..n], n, n - 1, pts[n]))
}

/// Distance from `p` to link `link` and the segment parameter of the closest point.
fn segment_projection(a: Point, b: Point, p: Point) -> (f64, Point) {
    let d = sub2(b, a);
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = ((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2;
    let t = t.clamp(0.0, 1.0);
    (t, [a[0] + t * d[0], a[1] + t * d[1]])
}

/// 2×n Jacobian of a point rigidly attached to link `link_index`.
pub fn point_jacobian(
    model: &RobotModel,
    q: &JointState,
    link_index: usize,
    p: Point,
) -> Result<DenseMatrix> {
    let pts = forward_kinematics(model, q)?;
    let n = model.dof();
    if link_index >= n {
        return Err(Error::DimensionMismatch(format!(
            "link index {link_index} out of range for {n} links"
        )));
    }
    let (_, foot) = segment_projection(pts[link_index], pts[link_index + 1], p);
    let off = norm2(sub2(p, foot));
    if off > ON_LINK_TOL {
        return Err(Error::PointOffLink {
            link: link_index,
            distance: off,
        });
    }
    Ok(jacobian_from_origins(&pts[..n], n, link_index, p))
}

/// Closest points between link `link_index` and a disk.
pub fn closest_pair(
    model: &RobotModel,
    q: &JointState,
    link_index: usize,
    obstacle: &DiskObstacle,
) -> Result<ContactPair> {
    let pts = forward_kinematics(model, q)?;
    let n = model.dof();
    if link_index >= n {
        return Err(Error::DimensionMismatch(format!(
            "link index {link_index} out of range for {n} links"
        )));
    }
    let (t, p_c) = segment_projection(pts[link_index], pts[link_index + 1], obstacle.center);
    let diff = sub2(p_c, obstacle.center);
    let dist = norm2(diff);
    if dist <= EPS_RANK {
        return Err(Error::DegenerateNormal { link: link_index });
    }
    let normal = [diff[0] / dist, diff[1] / dist];
    let p_o = [
        obstacle.center[0] + obstacle.radius * normal[0],
        obstacle.center[1] + obstacle.radius * normal[1],
    ];
    let jac = jacobian_from_origins(&pts[..n], n, link_index, p_c);
    let jac_row = (0..n)
        .map(|j| normal[0] * jac[(0, j)] + normal[1] * jac[(1, j)])
        .collect();
    Ok(ContactPair {
        link_index,
        p_c,
        p_o,
        normal,
        h: dist - obstacle.radius,
        t,
        jac_row,
    })
}

/// One pair per (obstacle, link), obstacle-major.
pub fn contact_pairs(
    model: &RobotModel,
    q: &JointState,
    obstacles: &[DiskObstacle],
) -> Result<Vec<ContactPair>> {
    let mut out = Vec::with_capacity(obstacles.len() * model.dof());
    for obs in obstacles {
        for link in 0..model.dof() {
            out.push(closest_pair(model, q, link, obs)?);
        }
    }
    Ok(out)
}
