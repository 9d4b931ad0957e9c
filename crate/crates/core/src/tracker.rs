//! PD tracking feedback around a motion plan.
//!
//! Every axis that a step shapes is a double integrator (exactly, or with
//! the coupling gain pinned at 1), so each gets the same law: the planned
//! feedforward plus proportional-derivative correction on its reference
//! error. The per-step allocation keeps u1 silent while xi2 is in transit,
//! and regulates xi2 at its constant reference whenever u1 is busy moving
//! another axis, so the coupling term can never smear xi2 deviations into
//! xi3.

use crate::chained::{ChainedInput, ChainedState};
use crate::planner::{self, MotionPlan, PlanError};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Proportional and derivative gains shared by every tracked axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdGains {
    pub kp: f64,
    pub kd: f64,
}

impl Default for PdGains {
    fn default() -> Self {
        PdGains { kp: 1.0, kd: 1.0 }
    }
}

/// Reference-minus-actual error of one axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisError {
    pub e_pos: f64,
    pub e_vel: f64,
}

impl AxisError {
    pub fn between(reference: (f64, f64), actual: (f64, f64)) -> Self {
        AxisError {
            e_pos: reference.0 - actual.0,
            e_vel: reference.1 - actual.1,
        }
    }
}

/// Feedforward value corrected by PD feedback on one axis.
pub fn pd_input(q_ref: f64, err: AxisError, gains: PdGains) -> f64 {
    q_ref + gains.kp * err.e_pos + gains.kd * err.e_vel
}

/// Roots of the closed-loop error polynomial s^2 + kd*s + kp.
pub fn closed_loop_eigen(gains: PdGains) -> (Complex64, Complex64) {
    let half_kd = gains.kd / 2.0;
    let discriminant = half_kd * half_kd - gains.kp;
    if discriminant >= 0.0 {
        let root = discriminant.sqrt();
        (
            Complex64::new(-half_kd - root, 0.0),
            Complex64::new(-half_kd + root, 0.0),
        )
    } else {
        let root = (-discriminant).sqrt();
        (
            Complex64::new(-half_kd, -root),
            Complex64::new(-half_kd, root),
        )
    }
}

/// Both closed-loop eigenvalues strictly in the left half plane, which for
/// s^2 + kd*s + kp comes down to both gains positive.
pub fn is_hurwitz(gains: PdGains) -> bool {
    gains.kp > 0.0 && gains.kd > 0.0
}

/// Closed-loop input at time `t`, resolved through the plan's step windows.
pub fn control_law(
    plan: &MotionPlan,
    t: f64,
    state: ChainedState,
    gains: PdGains,
) -> Result<ChainedInput, PlanError> {
    let k = plan.step_index(t)?;
    Ok(control_law_at_step(plan, k, t, state, gains))
}

/// Closed-loop input evaluated as if inside step `k`.
///
/// Steps 1, 3, 5 shape xi2: its PD-corrected sinusoid goes to u2 and u1
/// stays zero. Step 2 shapes xi3 through u1 (coupling gain held at 1), step
/// 4 shapes xi1 through u1; in both, u2 regulates xi2 at its constant
/// reference with a zero feedforward.
pub fn control_law_at_step(
    plan: &MotionPlan,
    k: usize,
    t: f64,
    state: ChainedState,
    gains: PdGains,
) -> ChainedInput {
    let (xi_ref, q_ref) = planner::reference_at_step(plan, k, t);
    let err = |axis| {
        AxisError::between(
            (xi_ref.position(axis), xi_ref.velocity(axis)),
            (state.position(axis), state.velocity(axis)),
        )
    };
    let step = &plan.steps[k - 1];
    match k {
        1 | 3 | 5 => ChainedInput::new(0.0, pd_input(q_ref.u2, err(step.axis), gains)),
        2 | 4 => ChainedInput::new(
            pd_input(q_ref.u1, err(step.axis), gains),
            pd_input(0.0, err(crate::chained::Axis::Xi2), gains),
        ),
        _ => unreachable!("step index is validated to 1..=5"),
    }
}
