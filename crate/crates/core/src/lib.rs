//! Rest-to-rest motion planning, tracking, and simulation for the
//! second-order chained form.

pub mod chained;
pub mod manipulator;
pub mod integrator;
pub mod planner;
pub mod presets;
pub mod simulation;
pub mod tracker;

pub use chained::{Axis, ChainedInput, ChainedState, Channel, SubsystemView};
pub use planner::{plan, BoundaryConditions, MotionPlan, PlanError, StepPlan};
pub use tracker::{closed_loop_eigen, control_law, is_hurwitz, pd_input, AxisError, PdGains};
pub use manipulator::{AccelInput, ManipulatorParams, ManipulatorState, TransformError};
pub use simulation::{perturb, run, write_csv, Perturbation, Plant, Sample, Scenario, SimError, SimResult};
pub use integrator::{
    dense_sample, integrate, IntegratorError, OdeProblem, SolverConfig, SolverStats, Trajectory,
};
