//! Safe whole-body velocity control for planar serial arms.
//!
//! Collision-avoidance constraints between links and disk obstacles are
//! assembled into a shared general form `A x ≥ b` (with `x = u − u_des`).
//! Two formulations consume it:
//!
//! * the sampled-data control-barrier-function QP, solved by a dual
//!   active-set projection ([`solvers::qp_min_norm`]);
//! * the velocity-level linear complementarity program, solved by Lemke
//!   pivoting ([`solvers::lc_solve`]).
//!
//! With class-κ gain `1/τ` and equal margins both produce the same input.
//! [`simulate`] runs the two side by side in closed loop and [`fuzz`]
//! cross-checks them on random instances against brute-force oracles.

pub mod constraints;
pub mod error;
pub mod fuzz;
pub mod numkit;
pub mod robot;
pub mod simulate;
pub mod solvers;

pub use error::{Error, Result};
