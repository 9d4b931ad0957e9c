//! Subcommand implementations and the exit-code contract.
//!
//! Exit codes: 0 success, 1 reproduction check failure, 2 configuration
//! problem, 3 non-rest boundary, 4 integrator failure, 5 transform
//! singularity. Nothing else is emitted.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chained_motion::chained::{Axis, Channel};
use chained_motion::planner::{plan, MotionPlan, PlanError};
use chained_motion::presets::{
    chained_transfer, manipulator_angled_transfer, manipulator_transfer, SWEEP_FRACTIONS,
    SWEEP_REFERENCE,
};
use chained_motion::simulation::{perturb, run, write_csv, Scenario, SimError, SimResult};

use crate::config::ScenarioFile;
use crate::report::{
    max_abs, timestamp, Check, Report, ReproduceReport, SweepReport, SweepRow,
    CHAINED_TERMINAL_TOL, MANIPULATOR_TERMINAL_TOL, SWEEP_BASELINE_TOL, SWEEP_X_FACTOR,
};

pub enum CliError {
    Config(String),
    NonRestBoundary(String),
    Integrator(String),
    Singularity(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::NonRestBoundary(_) => 3,
            CliError::Integrator(_) => 4,
            CliError::Singularity(_) => 5,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m)
            | CliError::NonRestBoundary(m)
            | CliError::Integrator(m)
            | CliError::Singularity(m) => m,
        }
    }
}

impl From<SimError> for CliError {
    fn from(error: SimError) -> CliError {
        let message = error.to_string();
        match error {
            SimError::Plan(PlanError::NonRestBoundary) => CliError::NonRestBoundary(message),
            SimError::Plan(PlanError::NonpositivePeriod { .. }) => CliError::Config(message),
            SimError::Plan(PlanError::OutOfWindow { .. }) => CliError::Integrator(message),
            SimError::Integrator(_) => CliError::Integrator(message),
            SimError::Transform(_) => CliError::Singularity(message),
            SimError::UnknownComponent { .. } => CliError::Config(message),
        }
    }
}

impl From<PlanError> for CliError {
    fn from(error: PlanError) -> CliError {
        CliError::from(SimError::Plan(error))
    }
}

/// Flags shared by the document-emitting commands.
pub struct OutputOptions {
    pub json: bool,
    pub no_timestamp: bool,
    pub out: Option<PathBuf>,
}

fn emit(document: &str, out: Option<&Path>) -> Result<(), CliError> {
    print!("{document}");
    if let Some(path) = out {
        fs::write(path, document)
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn apply_rel_tol(file: &mut ScenarioFile, rel_tol: Option<f64>) -> Result<(), CliError> {
    if let Some(rel) = rel_tol {
        if !rel.is_finite() || rel <= 0.0 {
            return Err(CliError::Config(
                "flag --rel-tol must be positive and finite".into(),
            ));
        }
        file.solver.rel_tol = rel;
    }
    Ok(())
}

fn axis_name(axis: Axis) -> &'static str {
    match axis {
        Axis::Xi1 => "xi1",
        Axis::Xi2 => "xi2",
        Axis::Xi3 => "xi3",
    }
}

fn channel_name(channel: Channel) -> &'static str {
    match channel {
        Channel::U1 => "u1",
        Channel::U2 => "u2",
    }
}

fn render_plan_text(motion: &MotionPlan) -> String {
    let mut text = format!(
        "five-step plan, T = {}, horizon = {}\nomega = {}\n",
        motion.period,
        motion.horizon(),
        motion.omega
    );
    for step in &motion.steps {
        text.push_str(&format!(
            "  step {}: {} via {}, amplitude {:+.11e}, window [{}, {}]\n",
            step.k,
            axis_name(step.axis),
            channel_name(step.channel),
            step.amplitude,
            step.window.0,
            step.window.1
        ));
    }
    text.push_str("rest waypoints:\n");
    for (k, waypoint) in motion.waypoints.iter().enumerate() {
        let p = waypoint.positions();
        text.push_str(&format!(
            "  t = {}: [{}, {}, {}]\n",
            k as f64 * motion.period,
            p[0],
            p[1],
            p[2]
        ));
    }
    text
}

pub fn cmd_plan(config: &Path, json: bool, out: Option<&Path>) -> Result<ExitCode, CliError> {
    let file = ScenarioFile::load(config).map_err(CliError::Config)?;
    let scenario = file.to_scenario();
    let bc = scenario.chained_boundary()?;
    let motion = plan(&bc, scenario.period)?;
    let document = if json {
        let body = serde_json::to_string_pretty(&motion.document()).expect("plan serializes");
        format!("{body}\n")
    } else {
        render_plan_text(&motion)
    };
    emit(&document, out)?;
    Ok(ExitCode::SUCCESS)
}

pub fn cmd_simulate(
    config: &Path,
    out_csv: &Path,
    rel_tol: Option<f64>,
    no_timestamp: bool,
) -> Result<ExitCode, CliError> {
    let mut file = ScenarioFile::load(config).map_err(CliError::Config)?;
    apply_rel_tol(&mut file, rel_tol)?;
    let scenario = file.to_scenario();
    let bc = scenario.chained_boundary()?;
    let motion = plan(&bc, scenario.period)?;
    let result = run(&scenario)?;

    let csv = fs::File::create(out_csv)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", out_csv.display())))?;
    write_csv(&result, io::BufWriter::new(csv))
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", out_csv.display())))?;

    let report = Report::new(&file, motion.amplitudes(), &result, timestamp(no_timestamp));
    let body = serde_json::to_string_pretty(&report).expect("report serializes");
    let mut stdout = io::stdout().lock();
    writeln!(stdout, "{body}").expect("stdout is writable");
    Ok(ExitCode::SUCCESS)
}

struct SweepOutcome {
    fraction: f64,
    result: Result<SimResult, SimError>,
}

/// Baseline first, then a +/- pair per level in the given order. A failed
/// row is recorded and the sweep moves on.
fn run_sweep(base: &Scenario, component: &str, levels: &[f64]) -> Vec<SweepOutcome> {
    let mut outcomes = vec![SweepOutcome {
        fraction: 0.0,
        result: run(base),
    }];
    for &level in levels {
        for sign in [1.0, -1.0] {
            let fraction = sign * level;
            let result = perturb(base, component, fraction).and_then(|s| run(&s));
            outcomes.push(SweepOutcome { fraction, result });
        }
    }
    outcomes
}

fn sweep_rows(outcomes: &[SweepOutcome]) -> Vec<SweepRow> {
    outcomes
        .iter()
        .map(|outcome| match &outcome.result {
            Ok(result) => SweepRow {
                fraction: outcome.fraction,
                terminal_error: Some(
                    result
                        .native_terminal_error
                        .unwrap_or(result.terminal_error_pos),
                ),
                error: None,
                solver_stats: Some(result.stats),
            },
            Err(error) => SweepRow {
                fraction: outcome.fraction,
                terminal_error: None,
                error: Some(error.to_string()),
                solver_stats: None,
            },
        })
        .collect()
}

pub fn cmd_sweep(
    config: &Path,
    component: &str,
    levels: &[f64],
    rel_tol: Option<f64>,
    opts: &OutputOptions,
) -> Result<ExitCode, CliError> {
    let mut file = ScenarioFile::load(config).map_err(CliError::Config)?;
    apply_rel_tol(&mut file, rel_tol)?;
    if file.perturbation.is_some() {
        return Err(CliError::Config(
            "sweep needs a scenario without a fixed `perturbation`; levels come from the command line"
                .into(),
        ));
    }
    let base = file.to_scenario();
    let names = base.component_names();
    if !names.contains(&component) {
        return Err(CliError::Config(format!(
            "unknown component `{component}`; expected one of {names:?}"
        )));
    }
    for level in levels {
        if !level.is_finite() || *level <= 0.0 {
            return Err(CliError::Config(
                "flag --levels entries must be positive finite fractions".into(),
            ));
        }
    }

    let outcomes = run_sweep(&base, component, levels);
    let report = SweepReport {
        generated_at: timestamp(opts.no_timestamp),
        scenario: file,
        component: component.to_string(),
        components: names,
        rows: sweep_rows(&outcomes),
    };
    let document = if opts.json {
        let body = serde_json::to_string_pretty(&report).expect("sweep report serializes");
        format!("{body}\n")
    } else {
        report.render_text()
    };
    emit(&document, opts.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn scenario_report(scenario: &Scenario) -> Result<(Report, SimResult), CliError> {
    let file = ScenarioFile::from_scenario(scenario);
    let bc = scenario.chained_boundary()?;
    let motion = plan(&bc, scenario.period)?;
    let result = run(scenario)?;
    let report = Report::new(&file, motion.amplitudes(), &result, None);
    Ok((report, result))
}

fn terminal_or_fail(outcome: &SweepOutcome) -> Result<[f64; 3], String> {
    match &outcome.result {
        Ok(result) => Ok(result
            .native_terminal_error
            .unwrap_or(result.terminal_error_pos)),
        Err(error) => Err(format!("run failed: {error}")),
    }
}

pub fn cmd_reproduce(rel_tol: Option<f64>, opts: &OutputOptions) -> Result<ExitCode, CliError> {
    let prepare = |mut scenario: Scenario| -> Result<Scenario, CliError> {
        if let Some(rel) = rel_tol {
            if !rel.is_finite() || rel <= 0.0 {
                return Err(CliError::Config(
                    "flag --rel-tol must be positive and finite".into(),
                ));
            }
            scenario.solver.rel_tol = rel;
        }
        Ok(scenario)
    };

    let (chained_report, chained_result) = scenario_report(&prepare(chained_transfer())?)?;
    let (manipulator_report, manipulator_result) =
        scenario_report(&prepare(manipulator_transfer())?)?;

    let sweep_base = prepare(manipulator_angled_transfer())?;
    let outcomes = run_sweep(&sweep_base, "theta", &SWEEP_FRACTIONS);
    let sweep_report = SweepReport {
        generated_at: None,
        scenario: ScenarioFile::from_scenario(&sweep_base),
        component: "theta".to_string(),
        components: sweep_base.component_names(),
        rows: sweep_rows(&outcomes),
    };

    let mut checks = Vec::new();

    let pos = max_abs(&chained_result.terminal_error_pos);
    let vel = max_abs(&chained_result.terminal_error_vel);
    checks.push(Check {
        name: "chained transfer terminal error",
        pass: pos <= CHAINED_TERMINAL_TOL && vel <= CHAINED_TERMINAL_TOL,
        detail: format!(
            "max |pos| {pos:.3e}, max |vel| {vel:.3e}, bound {CHAINED_TERMINAL_TOL:.0e}"
        ),
    });

    let chi = max_abs(&manipulator_result.native_terminal_error.expect("native run"));
    checks.push(Check {
        name: "manipulator transfer terminal error",
        pass: chi <= MANIPULATOR_TERMINAL_TOL,
        detail: format!("max |chi| {chi:.3e}, bound {MANIPULATOR_TERMINAL_TOL:.0e}"),
    });

    match terminal_or_fail(&outcomes[0]) {
        Ok(baseline) => {
            let worst = max_abs(&baseline);
            checks.push(Check {
                name: "sweep baseline terminal error",
                pass: worst <= SWEEP_BASELINE_TOL,
                detail: format!("max |chi| {worst:.3e}, bound {SWEEP_BASELINE_TOL:.0e}"),
            });
        }
        Err(detail) => checks.push(Check {
            name: "sweep baseline terminal error",
            pass: false,
            detail,
        }),
    }

    let mut ratio_lo = f64::INFINITY;
    let mut ratio_hi = f64::NEG_INFINITY;
    let mut x_ok = true;
    let mut ordering_ok = true;
    let mut row_failure = None;
    for (outcome, (fraction, reference)) in outcomes.iter().skip(1).zip(SWEEP_REFERENCE.iter().skip(1))
    {
        assert_eq!(outcome.fraction, *fraction);
        match terminal_or_fail(outcome) {
            Ok(chi_err) => {
                let ratio = chi_err[0] / reference[0];
                ratio_lo = ratio_lo.min(ratio);
                ratio_hi = ratio_hi.max(ratio);
                x_ok &= (1.0 / SWEEP_X_FACTOR..=SWEEP_X_FACTOR).contains(&ratio);
                ordering_ok &= chi_err[2].abs() < chi_err[0].abs();
            }
            Err(detail) => row_failure = Some(detail),
        }
    }
    checks.push(Check {
        name: "sweep x-errors track the recorded rows",
        pass: x_ok && row_failure.is_none(),
        detail: row_failure.clone().unwrap_or_else(|| {
            format!(
                "x-error ratios in [{ratio_lo:.2}, {ratio_hi:.2}], allowed [{:.2}, {SWEEP_X_FACTOR}]",
                1.0 / SWEEP_X_FACTOR
            )
        }),
    });
    checks.push(Check {
        name: "theta error stays below x error",
        pass: ordering_ok && row_failure.is_none(),
        detail: row_failure
            .clone()
            .unwrap_or_else(|| format!("|theta| < |x| on all perturbed rows: {ordering_ok}")),
    });

    let attenuation = outcomes
        .iter()
        .find(|o| o.fraction == 0.10)
        .and_then(|o| o.result.as_ref().ok())
        .map(|result| {
            let error_at = |t: f64| {
                result
                    .samples
                    .iter()
                    .find(|s| s.t == t)
                    .map(|s| (s.reference.xi2 - s.state.xi2).abs())
                    .expect("window boundaries are sampled")
            };
            (error_at(sweep_base.period), error_at(5.0 * sweep_base.period))
        });
    match attenuation {
        Some((early, late)) => checks.push(Check {
            name: "xi2 tracking error attenuates",
            pass: late < early,
            detail: format!("|e| {early:.3e} at T -> {late:.3e} at 5T"),
        }),
        None => checks.push(Check {
            name: "xi2 tracking error attenuates",
            pass: false,
            detail: "the +10% row did not complete".into(),
        }),
    }

    let pass = checks.iter().all(|c| c.pass);
    let report = ReproduceReport {
        generated_at: timestamp(opts.no_timestamp),
        rel_tol: rel_tol.unwrap_or(chained_transfer().solver.rel_tol),
        chained: chained_report,
        manipulator: manipulator_report,
        sweep: sweep_report,
        checks,
        pass,
    };
    let document = if opts.json {
        let body = serde_json::to_string_pretty(&report).expect("report serializes");
        format!("{body}\n")
    } else {
        report.render_text()
    };
    emit(&document, opts.out.as_deref())?;
    Ok(ExitCode::from(if pass { 0 } else { 1 }))
}
