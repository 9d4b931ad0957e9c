//! Scenario files: the on-disk JSON description of one experiment.

use std::fs;
use std::path::Path;

use chained_motion::{PdGains, Perturbation, Plant, Scenario, SolverConfig};
use serde::{Deserialize, Serialize};

/// JSON mirror of [`Scenario`]. Unknown keys are rejected so a typo fails
/// loudly instead of silently falling back to a default.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub plant: Plant,
    /// Initial rest pose in the plant's native coordinates.
    pub x0: [f64; 3],
    /// Target rest pose in the plant's native coordinates.
    pub target: [f64; 3],
    /// Per-step duration in seconds.
    #[serde(rename = "T")]
    pub period: f64,
    #[serde(default)]
    pub gains: PdGains,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<Perturbation>,
}

impl ScenarioFile {
    pub fn load(path: &Path) -> Result<ScenarioFile, String> {
        let text = fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let file: ScenarioFile =
            serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        file.validate()?;
        Ok(file)
    }

    /// Every physical quantity must be finite before a run is attempted;
    /// errors name the offending key.
    fn validate(&self) -> Result<(), String> {
        fn finite(value: f64, key: &str) -> Result<(), String> {
            if value.is_finite() {
                Ok(())
            } else {
                Err(format!("field `{key}` must be finite"))
            }
        }
        fn positive(value: f64, key: &str) -> Result<(), String> {
            finite(value, key)?;
            if value > 0.0 {
                Ok(())
            } else {
                Err(format!("field `{key}` must be positive"))
            }
        }

        for (i, v) in self.x0.iter().enumerate() {
            finite(*v, &format!("x0[{i}]"))?;
        }
        for (i, v) in self.target.iter().enumerate() {
            finite(*v, &format!("target[{i}]"))?;
        }
        positive(self.period, "T")?;
        finite(self.gains.kp, "gains.kp")?;
        finite(self.gains.kd, "gains.kd")?;
        positive(self.solver.rel_tol, "solver.rel_tol")?;
        positive(self.solver.abs_tol, "solver.abs_tol")?;
        if let Some(h) = self.solver.h_init {
            positive(h, "solver.h_init")?;
        }
        if let Some(h) = self.solver.h_max {
            positive(h, "solver.h_max")?;
        }
        if let (Some(h0), Some(hm)) = (self.solver.h_init, self.solver.h_max) {
            if hm < h0 {
                return Err("field `solver.h_max` must be at least `solver.h_init`".into());
            }
        }
        if self.solver.max_steps == 0 {
            return Err("field `solver.max_steps` must be positive".into());
        }
        if let Plant::Manipulator(p) = &self.plant {
            positive(p.m3, "plant.manipulator.m3")?;
            positive(p.d3, "plant.manipulator.d3")?;
            positive(p.i3, "plant.manipulator.I3")?;
        }
        if let Some(p) = &self.perturbation {
            finite(p.fraction, "perturbation.fraction")?;
        }
        Ok(())
    }

    pub fn to_scenario(&self) -> Scenario {
        Scenario {
            plant: self.plant,
            nominal_x0: self.x0,
            target: self.target,
            period: self.period,
            gains: self.gains,
            perturbation: self.perturbation.clone(),
            solver: self.solver,
        }
    }

    /// Echo form of a built-in scenario, for reports.
    pub fn from_scenario(scenario: &Scenario) -> ScenarioFile {
        ScenarioFile {
            plant: scenario.plant,
            x0: scenario.nominal_x0,
            target: scenario.target,
            period: scenario.period,
            gains: scenario.gains,
            solver: scenario.solver,
            perturbation: scenario.perturbation.clone(),
        }
    }
}
