//! Five-step sinusoidal motion planning for rest-to-rest transfers.
//!
//! A transfer is decomposed into five step windows of equal period `T`. Each
//! window drives exactly one input channel with `a_k * w^2 * sin(w*t)` at
//! `w = 2*pi/T`, which displaces the affected double-integrator axis by
//! `2*pi*a_k` and leaves it at rest again. The step order transits `xi2` to 1,
//! moves `xi3` while the coupling gain is pinned at 1 (dragging `xi1` along
//! with the same displacement), returns `xi2` to 0, corrects `xi1`, and
//! finally places `xi2` on its target. Amplitudes solve those five
//! displacement requirements in closed form; a zero amplitude still occupies
//! its window with zero input so the schedule is always `5T` long.

use crate::chained::{Axis, ChainedInput, ChainedState, Channel};
use serde::Serialize;
use std::f64::consts::TAU;
use thiserror::Error;

/// Rest states bracketing the transfer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryConditions {
    pub xi0: ChainedState,
    pub xi_star: ChainedState,
}

impl BoundaryConditions {
    /// Boundary pair from bare position triples, velocities zero.
    pub fn rest_to_rest(xi0: [f64; 3], xi_star: [f64; 3]) -> Self {
        BoundaryConditions {
            xi0: ChainedState::at_rest(xi0[0], xi0[1], xi0[2]),
            xi_star: ChainedState::at_rest(xi_star[0], xi_star[1], xi_star[2]),
        }
    }
}

/// One window of the schedule: the sinusoid amplitude on `channel` moves
/// `axis` by `2*pi*amplitude` over `window`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepPlan {
    pub k: usize,
    pub axis: Axis,
    pub channel: Channel,
    pub amplitude: f64,
    pub window: (f64, f64),
}

/// The full five-step schedule with its nominal rest waypoints.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionPlan {
    pub period: f64,
    pub omega: f64,
    pub steps: [StepPlan; 5],
    /// Nominal states at t = 0, T, ..., 5T; all at rest.
    pub waypoints: [ChainedState; 6],
}

/// JSON shape emitted for a plan.
#[derive(Debug, Clone, Serialize)]
pub struct PlanDocument {
    #[serde(rename = "T")]
    pub period: f64,
    pub omega: f64,
    pub amplitudes: [f64; 5],
    pub waypoints: [ChainedState; 6],
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("boundary conditions must be rest states (zero velocities)")]
    NonRestBoundary,
    #[error("step period must be positive, got {period}")]
    NonpositivePeriod { period: f64 },
    #[error("time {t} outside plan horizon [0, {horizon}]")]
    OutOfWindow { t: f64, horizon: f64 },
}

/// Which axis each step transits and over which channel it is driven.
const STEP_AXES: [Axis; 5] = [Axis::Xi2, Axis::Xi3, Axis::Xi2, Axis::Xi1, Axis::Xi2];

/// Build the five-step schedule for a rest-to-rest transfer with period `T`.
///
/// The amplitudes are the closed-form solution of the per-step displacement
/// requirements; step 4's amplitude subtracts the `2*pi*a2` drift that step 2
/// leaves on `xi1` while the coupling gain is held at 1.
pub fn plan(bc: &BoundaryConditions, period: f64) -> Result<MotionPlan, PlanError> {
    if period <= 0.0 || period.is_nan() {
        return Err(PlanError::NonpositivePeriod { period });
    }
    if !bc.xi0.is_rest() || !bc.xi_star.is_rest() {
        return Err(PlanError::NonRestBoundary);
    }

    let xi0 = bc.xi0;
    let xi_star = bc.xi_star;
    let a1 = (1.0 - xi0.xi2) / TAU;
    let a2 = (xi_star.xi3 - xi0.xi3) / TAU;
    let a3 = -1.0 / TAU;
    let a4 = (xi_star.xi1 - (xi0.xi1 + TAU * a2)) / TAU;
    let a5 = xi_star.xi2 / TAU;
    let amplitudes = [a1, a2, a3, a4, a5];

    let waypoints = [
        xi0,
        ChainedState::at_rest(xi0.xi1, 1.0, xi0.xi3),
        ChainedState::at_rest(xi0.xi1 + TAU * a2, 1.0, xi_star.xi3),
        ChainedState::at_rest(xi0.xi1 + TAU * a2, 0.0, xi_star.xi3),
        ChainedState::at_rest(xi_star.xi1, 0.0, xi_star.xi3),
        ChainedState::at_rest(xi_star.xi1, xi_star.xi2, xi_star.xi3),
    ];

    let mut steps = [StepPlan {
        k: 0,
        axis: Axis::Xi2,
        channel: Channel::U2,
        amplitude: 0.0,
        window: (0.0, 0.0),
    }; 5];
    for (i, step) in steps.iter_mut().enumerate() {
        let axis = STEP_AXES[i];
        *step = StepPlan {
            k: i + 1,
            axis,
            channel: axis.channel(),
            amplitude: amplitudes[i],
            window: (i as f64 * period, (i + 1) as f64 * period),
        };
    }

    Ok(MotionPlan {
        period,
        omega: TAU / period,
        steps,
        waypoints,
    })
}

impl MotionPlan {
    pub fn horizon(&self) -> f64 {
        5.0 * self.period
    }

    pub fn amplitudes(&self) -> [f64; 5] {
        [
            self.steps[0].amplitude,
            self.steps[1].amplitude,
            self.steps[2].amplitude,
            self.steps[3].amplitude,
            self.steps[4].amplitude,
        ]
    }

    /// Step index 1..=5 whose window contains `t`. Boundaries belong to the
    /// later step, except the horizon end which belongs to step 5.
    pub fn step_index(&self, t: f64) -> Result<usize, PlanError> {
        let horizon = self.horizon();
        if !(0.0..=horizon).contains(&t) {
            return Err(PlanError::OutOfWindow { t, horizon });
        }
        Ok(((t / self.period) as usize + 1).min(5))
    }

    pub fn document(&self) -> PlanDocument {
        PlanDocument {
            period: self.period,
            omega: self.omega,
            amplitudes: self.amplitudes(),
            waypoints: self.waypoints,
        }
    }
}

/// Position and velocity along a driven sinusoid arc at absolute time `t`,
/// starting from `(pos0, vel0)` at the window start `t0`. The sinusoid phase
/// uses absolute time; `w*t0` is a multiple of `2*pi` at every window start,
/// so the arc begins on the initial values.
fn sinusoid_arc(pos0: f64, vel0: f64, a: f64, w: f64, t0: f64, t: f64) -> (f64, f64) {
    let pos = pos0 + vel0 * (t - t0) - a * (w * t).sin() + a * w * (t - t0);
    let vel = vel0 - a * w * (w * t).cos() + a * w;
    (pos, vel)
}

/// Reference state and feedforward value at time `t`, resolved through the
/// plan's own step windows.
pub fn reference(plan: &MotionPlan, t: f64) -> Result<(ChainedState, ChainedInput), PlanError> {
    let k = plan.step_index(t)?;
    Ok(reference_at_step(plan, k, t))
}

/// Reference state and feedforward value at time `t`, evaluated as if inside
/// step `k` regardless of which window `t` falls in. Segmented simulation
/// pins `k` so that window-final evaluations cannot bleed into the next
/// step's input assignment.
pub fn reference_at_step(plan: &MotionPlan, k: usize, t: f64) -> (ChainedState, ChainedInput) {
    assert!((1..=5).contains(&k), "step index must be 1..=5");
    let step = &plan.steps[k - 1];
    let start = plan.waypoints[k - 1];
    let (t0, _) = step.window;
    let w = plan.omega;
    let a = step.amplitude;

    let mut xi_ref = start;
    let (pos, vel) = sinusoid_arc(
        start.position(step.axis),
        start.velocity(step.axis),
        a,
        w,
        t0,
        t,
    );
    set_axis(&mut xi_ref, step.axis, pos, vel);

    // Step 2 drives u1 while the coupling gain sits at 1, so xi1 traces the
    // same arc as xi3.
    if k == 2 {
        let (pos1, vel1) = sinusoid_arc(start.xi1, start.dxi1, a, w, t0, t);
        set_axis(&mut xi_ref, Axis::Xi1, pos1, vel1);
    }

    (xi_ref, feedforward_input_at_step(plan, k, t))
}

/// Feedforward input at time `t`, resolved through the plan's step windows.
pub fn feedforward_input(plan: &MotionPlan, t: f64) -> Result<ChainedInput, PlanError> {
    let k = plan.step_index(t)?;
    Ok(feedforward_input_at_step(plan, k, t))
}

/// Feedforward input evaluated as if inside step `k`: the step's sinusoid on
/// its channel, zero on the other.
pub fn feedforward_input_at_step(plan: &MotionPlan, k: usize, t: f64) -> ChainedInput {
    assert!((1..=5).contains(&k), "step index must be 1..=5");
    let step = &plan.steps[k - 1];
    let q = step.amplitude * plan.omega * plan.omega * (plan.omega * t).sin();
    match step.channel {
        Channel::U1 => ChainedInput::new(q, 0.0),
        Channel::U2 => ChainedInput::new(0.0, q),
    }
}

fn set_axis(state: &mut ChainedState, axis: Axis, pos: f64, vel: f64) {
    match axis {
        Axis::Xi1 => {
            state.xi1 = pos;
            state.dxi1 = vel;
        }
        Axis::Xi2 => {
            state.xi2 = pos;
            state.dxi2 = vel;
        }
        Axis::Xi3 => {
            state.xi3 = pos;
            state.dxi3 = vel;
        }
    }
}
