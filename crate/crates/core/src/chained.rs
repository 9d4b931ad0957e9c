//! Dynamics of the second-order chained form and its decomposition into
//! double-integrator subsystems.
//!
//! The canonical system has three generalized coordinates driven by two
//! inputs: the first two coordinates are plain double integrators, while the
//! third is accelerated by the first input scaled by the current value of the
//! second coordinate. Holding that second coordinate at `1` turns the third
//! subsystem into a copy of the double integrator; holding it at `0` makes
//! the third subsystem autonomous.

use serde::{Deserialize, Serialize};

/// Full state of the chained form: positions then velocities,
/// ordered `[xi1, xi2, xi3, dxi1, dxi2, dxi3]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ChainedState {
    pub xi1: f64,
    pub xi2: f64,
    pub xi3: f64,
    pub dxi1: f64,
    pub dxi2: f64,
    pub dxi3: f64,
}

impl ChainedState {
    pub const DIM: usize = 6;

    /// State at rest (zero velocities) with the given positions.
    pub fn at_rest(xi1: f64, xi2: f64, xi3: f64) -> Self {
        ChainedState {
            xi1,
            xi2,
            xi3,
            dxi1: 0.0,
            dxi2: 0.0,
            dxi3: 0.0,
        }
    }

    pub fn from_array(x: &[f64; 6]) -> Self {
        ChainedState {
            xi1: x[0],
            xi2: x[1],
            xi3: x[2],
            dxi1: x[3],
            dxi2: x[4],
            dxi3: x[5],
        }
    }

    pub fn from_slice(x: &[f64]) -> Self {
        assert_eq!(x.len(), Self::DIM, "chained state needs 6 components");
        ChainedState {
            xi1: x[0],
            xi2: x[1],
            xi3: x[2],
            dxi1: x[3],
            dxi2: x[4],
            dxi3: x[5],
        }
    }

    pub fn to_array(self) -> [f64; 6] {
        [self.xi1, self.xi2, self.xi3, self.dxi1, self.dxi2, self.dxi3]
    }

    pub fn positions(self) -> [f64; 3] {
        [self.xi1, self.xi2, self.xi3]
    }

    pub fn velocities(self) -> [f64; 3] {
        [self.dxi1, self.dxi2, self.dxi3]
    }

    pub fn position(self, axis: Axis) -> f64 {
        match axis {
            Axis::Xi1 => self.xi1,
            Axis::Xi2 => self.xi2,
            Axis::Xi3 => self.xi3,
        }
    }

    pub fn velocity(self, axis: Axis) -> f64 {
        match axis {
            Axis::Xi1 => self.dxi1,
            Axis::Xi2 => self.dxi2,
            Axis::Xi3 => self.dxi3,
        }
    }

    pub fn is_rest(self) -> bool {
        self.dxi1 == 0.0 && self.dxi2 == 0.0 && self.dxi3 == 0.0
    }

    pub fn is_finite(self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Generalized input vector `[u1, u2]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ChainedInput {
    pub u1: f64,
    pub u2: f64,
}

impl ChainedInput {
    pub const ZERO: ChainedInput = ChainedInput { u1: 0.0, u2: 0.0 };

    pub fn new(u1: f64, u2: f64) -> Self {
        ChainedInput { u1, u2 }
    }

    pub fn channel(self, channel: Channel) -> f64 {
        match channel {
            Channel::U1 => self.u1,
            Channel::U2 => self.u2,
        }
    }
}

/// One of the three generalized coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Xi1,
    Xi2,
    Xi3,
}

impl Axis {
    /// The input channel that accelerates this axis.
    pub fn channel(self) -> Channel {
        match self {
            Axis::Xi1 | Axis::Xi3 => Channel::U1,
            Axis::Xi2 => Channel::U2,
        }
    }
}

/// One of the two input channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    U1,
    U2,
}

/// A single axis seen as a double integrator `accel = input_gain * u`,
/// where `u` is the value on the axis' input channel.
///
/// The first two axes always have unit gain; the third axis' gain equals the
/// current value of `xi2`, which is what makes it switchable between a
/// controllable copy of the double integrator (`xi2 = 1`) and an autonomous
/// drift (`xi2 = 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubsystemView {
    pub axis: Axis,
    pub position: f64,
    pub velocity: f64,
    pub input_gain: f64,
}

/// Right-hand side of the chained form:
/// `[dxi1, dxi2, dxi3, u1, u2, xi2 * u1]`.
pub fn dynamics(state: ChainedState, input: ChainedInput) -> [f64; 6] {
    [
        state.dxi1,
        state.dxi2,
        state.dxi3,
        input.u1,
        input.u2,
        state.xi2 * input.u1,
    ]
}

/// Split a state into its three double-integrator views.
pub fn decompose(state: ChainedState) -> (SubsystemView, SubsystemView, SubsystemView) {
    (
        SubsystemView {
            axis: Axis::Xi1,
            position: state.xi1,
            velocity: state.dxi1,
            input_gain: 1.0,
        },
        SubsystemView {
            axis: Axis::Xi2,
            position: state.xi2,
            velocity: state.dxi2,
            input_gain: 1.0,
        },
        SubsystemView {
            axis: Axis::Xi3,
            position: state.xi3,
            velocity: state.dxi3,
            input_gain: state.xi2,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn dynamics_with_unit_xi2_copies_u1_into_xi3() {
        let state = ChainedState::at_rest(0.0, 1.0, 0.0);
        let d = dynamics(state, ChainedInput::new(2.0, 0.0));
        assert_eq!(d, [0.0, 0.0, 0.0, 2.0, 0.0, 2.0]);
    }

    #[test]
    fn dynamics_with_zero_xi2_decouples_xi3() {
        let state = ChainedState::at_rest(0.5, 0.0, -1.0);
        let d = dynamics(state, ChainedInput::new(5.0, 0.0));
        assert_eq!(d[5], 0.0);
    }

    #[test]
    fn dynamics_direct_substitution() {
        let state = ChainedState::at_rest(0.0, 0.5, 0.0);
        let d = dynamics(state, ChainedInput::new(1.0, 1.0));
        assert_eq!(&d[3..], &[1.0, 1.0, 0.5]);
    }

    #[test]
    fn decompose_gain_follows_xi2() {
        let (_, _, v3) = decompose(ChainedState::at_rest(0.0, 1.0, 0.0));
        assert_eq!(v3.input_gain, 1.0);
        let (_, _, v3) = decompose(ChainedState::at_rest(0.0, 0.0, 0.0));
        assert_eq!(v3.input_gain, 0.0);
    }

    #[test]
    fn decompose_views_carry_the_full_state() {
        let state = ChainedState {
            xi1: 1.0,
            xi2: -2.0,
            xi3: 3.0,
            dxi1: 0.1,
            dxi2: -0.2,
            dxi3: 0.3,
        };
        let (v1, v2, v3) = decompose(state);
        let rebuilt = ChainedState {
            xi1: v1.position,
            xi2: v2.position,
            xi3: v3.position,
            dxi1: v1.velocity,
            dxi2: v2.velocity,
            dxi3: v3.velocity,
        };
        assert_eq!(rebuilt, state);
    }

    #[test]
    fn axis_to_channel_mapping() {
        assert_eq!(Axis::Xi1.channel(), Channel::U1);
        assert_eq!(Axis::Xi2.channel(), Channel::U2);
        assert_eq!(Axis::Xi3.channel(), Channel::U1);
    }

    fn arbitrary_state() -> impl Strategy<Value = ChainedState> {
        (
            -10.0..10.0_f64,
            -10.0..10.0_f64,
            -10.0..10.0_f64,
            -5.0..5.0_f64,
            -5.0..5.0_f64,
            -5.0..5.0_f64,
        )
            .prop_map(|(xi1, xi2, xi3, dxi1, dxi2, dxi3)| ChainedState {
                xi1,
                xi2,
                xi3,
                dxi1,
                dxi2,
                dxi3,
            })
    }

    proptest! {
        // Assembling the three double-integrator equations must reproduce
        // the full right-hand side exactly.
        #[test]
        fn decomposition_matches_dynamics(state in arbitrary_state(),
                                          u1 in -5.0..5.0_f64,
                                          u2 in -5.0..5.0_f64) {
            let input = ChainedInput::new(u1, u2);
            let (v1, v2, v3) = decompose(state);
            let assembled = [
                v1.velocity,
                v2.velocity,
                v3.velocity,
                v1.input_gain * input.channel(v1.axis.channel()),
                v2.input_gain * input.channel(v2.axis.channel()),
                v3.input_gain * input.channel(v3.axis.channel()),
            ];
            prop_assert_eq!(assembled, dynamics(state, input));
        }

        // The input-to-acceleration map is affine: the difference of two
        // responses only depends on the position part of the state.
        #[test]
        fn input_linearity_is_velocity_independent(state in arbitrary_state(),
                                                   dv in -3.0..3.0_f64,
                                                   u in -5.0..5.0_f64,
                                                   v in -5.0..5.0_f64,
                                                   w in -5.0..5.0_f64,
                                                   z in -5.0..5.0_f64) {
            let mut shifted = state;
            shifted.dxi1 += dv;
            shifted.dxi2 -= dv;
            shifted.dxi3 += 2.0 * dv;
            let delta = |s: ChainedState| {
                let a = dynamics(s, ChainedInput::new(u + w, v + z));
                let b = dynamics(s, ChainedInput::new(u, v));
                [a[3] - b[3], a[4] - b[4], a[5] - b[5]]
            };
            prop_assert_eq!(delta(state), delta(shifted));
        }

        // Every rest state with zero input is an equilibrium.
        #[test]
        fn rest_states_are_equilibria(xi1 in -10.0..10.0_f64,
                                      xi2 in -10.0..10.0_f64,
                                      xi3 in -10.0..10.0_f64) {
            let d = dynamics(ChainedState::at_rest(xi1, xi2, xi3), ChainedInput::ZERO);
            prop_assert_eq!(d, [0.0; 6]);
        }
    }
}
