use serde::{Deserialize, Serialize};

/// Which branch of the single-constraint analysis applies, by the sign of
/// the predicted slack `s = h + τ·a·u_des − δ`.
///
/// `s` counts as zero when it is within a few ulps of the magnitudes that
/// produced it, see [`predicted_slack_sign`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SingleConstraintCase {
    /// `s > 0`: constraint inactive.
    A,
    /// `s = 0`: on the boundary, no correction needed.
    B,
    /// `s < 0`: correction `λ* = −s/τ`.
    C,
}

/// Optimal complementarity multiplier for one constraint, given the clearance
/// `h`, the nominal rate `a·u_des`, the timestep and the margin.
pub fn single_constraint_closed_form(
    h: f64,
    a_dot_udes: f64,
    tau: f64,
    delta: f64,
) -> (f64, SingleConstraintCase) {
    debug_assert!(tau > 0.0);
    match predicted_slack_sign(h, a_dot_udes, tau, delta) {
        std::cmp::Ordering::Greater => (0.0, SingleConstraintCase::A),
        std::cmp::Ordering::Equal => (0.0, SingleConstraintCase::B),
        std::cmp::Ordering::Less => (
            (delta - (h + tau * a_dot_udes)) / tau,
            SingleConstraintCase::C,
        ),
    }
}

/// Sign of `h + τ·a·u_des − δ`, with cancellation down to round-off read as zero.
pub fn predicted_slack_sign(h: f64, a_dot_udes: f64, tau: f64, delta: f64) -> std::cmp::Ordering {
    let step = tau * a_dot_udes;
    let s = h + step - delta;
    let noise = 4.0 * f64::EPSILON * (h.abs() + step.abs() + delta.abs());
    if s.abs() <= noise {
        std::cmp::Ordering::Equal
    } else if s > 0.0 {
        std::cmp::Ordering::Greater
    } else {
        std::cmp::Ordering::Less
    }
}
