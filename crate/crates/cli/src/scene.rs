//! Scene files: a flat TOML description of one closed-loop experiment.
//!
//! ```toml
//! tau = 0.005
//! delta = 0.01          # or one value per (obstacle, link) pair
//! goal = [-0.05, 0.15]
//! q0 = [1.2, -0.4, 0.3]
//!
//! [robot]
//! link_lengths = [0.1, 0.05, 0.05]
//! base = [0.0, 0.0]
//!
//! [[obstacles]]
//! center = [0.03, 0.17]
//! radius = 0.05
//! ```
//!
//! Optional keys: `k_p`, `kappa_gain` (defaults to `1/tau`), `controller`
//! (`cbf`, `lc`, `both`), `applied` (`cbf`, `lc`), `max_steps`, `goal_tol`.

use std::path::Path;

use cbflcp_core::robot::{DiskObstacle, JointState, RobotModel};
use cbflcp_core::simulate::{
    Applied, Controller, SimConfig, DEFAULT_GOAL_TOL, DEFAULT_K_P, DEFAULT_MAX_STEPS,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Syntax(String),
    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },
}

fn field_err(field: impl Into<String>, message: impl Into<String>) -> SceneError {
    SceneError::Field {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Margins {
    Uniform(f64),
    PerConstraint(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotSection {
    pub link_lengths: Vec<f64>,
    #[serde(default)]
    pub base: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleSection {
    pub center: [f64; 2],
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub robot: RobotSection,
    pub obstacles: Vec<ObstacleSection>,
    pub q0: Vec<f64>,
    pub goal: [f64; 2],
    pub tau: f64,
    pub delta: Margins,
    #[serde(default)]
    pub k_p: Option<f64>,
    #[serde(default)]
    pub kappa_gain: Option<f64>,
    #[serde(default)]
    pub controller: Option<Controller>,
    #[serde(default)]
    pub applied: Option<Applied>,
    #[serde(default)]
    pub max_steps: Option<usize>,
    #[serde(default)]
    pub goal_tol: Option<f64>,
}

impl SceneFile {
    pub fn parse(text: &str) -> Result<Self, SceneError> {
        toml::from_str(text).map_err(|e| SceneError::Syntax(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, SceneError> {
        let text = std::fs::read_to_string(path).map_err(|source| SceneError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Checks every field and builds the simulator configuration.
    pub fn to_config(&self) -> Result<SimConfig, SceneError> {
        for (i, l) in self.robot.link_lengths.iter().enumerate() {
            if !(l.is_finite() && *l > 0.0) {
                return Err(field_err(
                    format!("robot.link_lengths[{i}]"),
                    format!("link length must be positive, got {l}"),
                ));
            }
        }
        let model = RobotModel::new(self.robot.link_lengths.clone(), self.robot.base)
            .map_err(|e| field_err("robot", e.to_string()))?;

        let obstacles = self
            .obstacles
            .iter()
            .enumerate()
            .map(|(i, o)| {
                DiskObstacle::new(o.center, o.radius)
                    .map_err(|e| field_err(format!("obstacles[{i}]"), e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if obstacles.is_empty() {
            return Err(field_err("obstacles", "at least one obstacle is required"));
        }

        if self.q0.len() != model.dof() {
            return Err(field_err(
                "q0",
                format!(
                    "expected {} joint angles, got {}",
                    model.dof(),
                    self.q0.len()
                ),
            ));
        }
        let q0 = JointState::new(self.q0.clone()).map_err(|e| field_err("q0", e.to_string()))?;

        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(field_err(
                "tau",
                format!("must be positive, got {}", self.tau),
            ));
        }
        let delta = match &self.delta {
            Margins::Uniform(d) => vec![*d],
            Margins::PerConstraint(ds) => ds.clone(),
        };
        let m = obstacles.len() * model.dof();
        if delta.len() != 1 && delta.len() != m {
            return Err(field_err(
                "delta",
                format!("expected 1 or {m} margins, got {}", delta.len()),
            ));
        }
        if let Some(d) = delta.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
            return Err(field_err(
                "delta",
                format!("margins must be non-negative, got {d}"),
            ));
        }

        let k_p = self.k_p.unwrap_or(DEFAULT_K_P);
        if !(k_p.is_finite() && k_p > 0.0) {
            return Err(field_err("k_p", format!("must be positive, got {k_p}")));
        }
        let kappa_gain = self.kappa_gain.unwrap_or(1.0 / self.tau);
        if !(kappa_gain.is_finite() && kappa_gain > 0.0) {
            return Err(field_err(
                "kappa_gain",
                format!("must be positive, got {kappa_gain}"),
            ));
        }
        let max_steps = self.max_steps.unwrap_or(DEFAULT_MAX_STEPS);
        if max_steps == 0 {
            return Err(field_err("max_steps", "must be at least 1"));
        }
        let goal_tol = self.goal_tol.unwrap_or(DEFAULT_GOAL_TOL);
        if !(goal_tol.is_finite() && goal_tol > 0.0) {
            return Err(field_err(
                "goal_tol",
                format!("must be positive, got {goal_tol}"),
            ));
        }
        if !self.goal.iter().all(|v| v.is_finite()) {
            return Err(field_err("goal", "must be finite"));
        }

        let config = SimConfig {
            model,
            obstacles,
            q0,
            goal: self.goal,
            k_p,
            tau: self.tau,
            delta,
            kappa_gain,
            max_steps,
            goal_tol,
            controller: self.controller.unwrap_or(Controller::Both),
            applied: self.applied.unwrap_or_default(),
        };
        config
            .validate()
            .map_err(|e| field_err("scene", e.to_string()))?;
        Ok(config)
    }
}
