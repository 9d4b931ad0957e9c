//! Report documents the harness emits: one simulation, a sweep, and the
//! consolidated reproduction run. Everything here serializes with serde_json
//! so numbers keep full round-trip precision.

use chained_motion::integrator::SolverStats;
use chained_motion::simulation::SimResult;
use serde::Serialize;

use crate::config::ScenarioFile;

/// Terminal-error bounds an unperturbed run is judged against.
pub const CHAINED_TERMINAL_TOL: f64 = 1e-6;
pub const MANIPULATOR_TERMINAL_TOL: f64 = 1e-4;
/// Bounds for the reproduction checks on the recorded sweep.
pub const SWEEP_BASELINE_TOL: f64 = 1e-5;
pub const SWEEP_X_FACTOR: f64 = 3.0;

pub fn timestamp(suppress: bool) -> Option<String> {
    (!suppress).then(|| chrono::Utc::now().to_rfc3339())
}

pub fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Bounds recorded next to the errors they gate, so pass/fail can be
/// re-derived from the document alone.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Thresholds {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub position: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub velocity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub native: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<String>,
    pub scenario: ScenarioFile,
    pub amplitudes: [f64; 5],
    pub terminal_error_pos: [f64; 3],
    pub terminal_error_vel: [f64; 3],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub native_terminal_error: Option<[f64; 3]>,
    /// Absent for perturbed scenarios: a run that starts off the planned
    /// pose records its errors but has no pass bound.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<Thresholds>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
    pub solver_stats: SolverStats,
}

impl Report {
    pub fn new(
        file: &ScenarioFile,
        amplitudes: [f64; 5],
        result: &SimResult,
        generated_at: Option<String>,
    ) -> Report {
        let judged = file.perturbation.is_none();
        let (thresholds, pass) = if !judged {
            (None, None)
        } else if let Some(chi_err) = result.native_terminal_error {
            let ok = max_abs(&chi_err) <= MANIPULATOR_TERMINAL_TOL;
            (
                Some(Thresholds {
                    position: None,
                    velocity: None,
                    native: Some(MANIPULATOR_TERMINAL_TOL),
                }),
                Some(ok),
            )
        } else {
            let ok = max_abs(&result.terminal_error_pos) <= CHAINED_TERMINAL_TOL
                && max_abs(&result.terminal_error_vel) <= CHAINED_TERMINAL_TOL;
            (
                Some(Thresholds {
                    position: Some(CHAINED_TERMINAL_TOL),
                    velocity: Some(CHAINED_TERMINAL_TOL),
                    native: None,
                }),
                Some(ok),
            )
        };
        Report {
            generated_at,
            scenario: file.clone(),
            amplitudes,
            terminal_error_pos: result.terminal_error_pos,
            terminal_error_vel: result.terminal_error_vel,
            native_terminal_error: result.native_terminal_error,
            thresholds,
            pass,
            solver_stats: result.stats,
        }
    }
}

/// One sweep row. Exactly one of `terminal_error` and `error` is present:
/// a failed run is recorded and the sweep moves on.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub fraction: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub terminal_error: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver_stats: Option<SolverStats>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<String>,
    pub scenario: ScenarioFile,
    /// Perturbed component of the initial pose.
    pub component: String,
    /// Column labels for the `terminal_error` triples.
    pub components: [&'static str; 3],
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn render_text(&self) -> String {
        let mut text = format!(
            "{} initial-error sweep, {} row{}\n{:>9}  {:>13}  {:>13}  {:>13}\n",
            self.component,
            self.rows.len(),
            if self.rows.len() == 1 { "" } else { "s" },
            "fraction",
            self.components[0],
            self.components[1],
            self.components[2],
        );
        for row in &self.rows {
            match (&row.terminal_error, &row.error) {
                (Some(e), _) => text.push_str(&format!(
                    "{:>+9.3}  {:>+13.6e}  {:>+13.6e}  {:>+13.6e}\n",
                    row.fraction, e[0], e[1], e[2]
                )),
                (None, Some(message)) => text.push_str(&format!(
                    "{:>+9.3}  run failed: {message}\n",
                    row.fraction
                )),
                (None, None) => unreachable!("row carries a result or an error"),
            }
        }
        text
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

/// Consolidated document for the built-in experiments.
#[derive(Debug, Clone, Serialize)]
pub struct ReproduceReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<String>,
    pub rel_tol: f64,
    pub chained: Report,
    pub manipulator: Report,
    pub sweep: SweepReport,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl ReproduceReport {
    pub fn render_text(&self) -> String {
        let mut text = String::new();
        for check in &self.checks {
            text.push_str(&format!(
                "{} {}: {}\n",
                if check.pass { "[ok]  " } else { "[FAIL]" },
                check.name,
                check.detail
            ));
        }
        let failed = self.checks.iter().filter(|c| !c.pass).count();
        if failed == 0 {
            text.push_str(&format!("all {} checks passed\n", self.checks.len()));
        } else {
            text.push_str(&format!(
                "{failed} of {} checks failed\n",
                self.checks.len()
            ));
        }
        text
    }
}
