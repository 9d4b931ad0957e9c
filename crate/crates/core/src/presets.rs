//! Canonical experiment definitions and their recorded reference outcomes.
//!
//! These are the scenarios the `reproduce` command and the acceptance suite
//! run: a pure chained-form transfer, a manipulator transfer to a straight
//! pose, and an angled manipulator transfer whose robustness to initial
//! angle errors is tabulated in [`SWEEP_REFERENCE`].

use crate::manipulator::ManipulatorParams;
use crate::simulation::{Plant, Scenario};

/// Third-link parameters used by all manipulator experiments.
pub fn link_params() -> ManipulatorParams {
    ManipulatorParams::new(0.6, 0.3, 4.5e-3)
}

/// Rest-to-rest transfer in chained coordinates, xi [3, 0.5, 1] -> [1, 1, 0]
/// with a one-second step period.
pub fn chained_transfer() -> Scenario {
    Scenario::new(Plant::Chained, [3.0, 0.5, 1.0], [1.0, 1.0, 0.0], 1.0)
}

/// Manipulator transfer to a straight pose: chi [3.33 m, 1 m, 0.46 rad] ->
/// [1 m, 0 m, 0 rad].
pub fn manipulator_transfer() -> Scenario {
    Scenario::new(
        Plant::Manipulator(link_params()),
        [3.33, 1.0, 0.46],
        [1.0, 0.0, 0.0],
        1.0,
    )
}

/// Manipulator transfer to an angled pose: chi [3.33 m, 1 m, 0.46 rad] ->
/// [1.33 m, 0 m, 0.78 rad]. The initial-angle-error sweep perturbs this
/// scenario.
pub fn manipulator_angled_transfer() -> Scenario {
    Scenario::new(
        Plant::Manipulator(link_params()),
        [3.33, 1.0, 0.46],
        [1.33, 0.0, 0.78],
        1.0,
    )
}

/// Relative magnitudes of the initial theta error in the sweep.
pub const SWEEP_FRACTIONS: [f64; 3] = [0.01, 0.10, 0.30];

/// Reference terminal errors chi(5T) - chi* as [x m, y m, theta rad], one
/// row per signed theta perturbation of [`manipulator_angled_transfer`],
/// baseline first. Reproduction runs are compared against these rows.
pub const SWEEP_REFERENCE: [(f64, [f64; 3]); 7] = [
    (0.0, [4.5e-8, 4.4e-7, 4.9e-9]),
    (0.01, [2.9e-3, -6.9e-4, -8.5e-4]),
    (-0.01, [-2.9e-3, 7.4e-4, 8.5e-4]),
    (0.10, [3.0e-2, -4.8e-3, -8.8e-3]),
    (-0.10, [-2.9e-2, 9.9e-3, 8.3e-3]),
    (0.30, [9.1e-2, 3.3e-3, -2.8e-2]),
    (-0.30, [-8.5e-2, 4.3e-2, 2.3e-2]),
];
