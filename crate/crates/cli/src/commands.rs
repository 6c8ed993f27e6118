//! The subcommands. Each writes one report and returns the exit status.

use std::collections::BTreeSet;

use rvdecay_core::classifier::{classify_with, positive_form, RateDescriptor};
use rvdecay_core::harness::{
    corpus, empirical_g_ratio, empirical_rate_curve, empirical_xy_ratio, run_entry, CurveError,
    EntryReport, Functional, RateCurve, RunOptions,
};
use rvdecay_core::integrator::{Termination, Verdict};
use rvdecay_core::rvkit::{
    estimate_index_at_infinity, estimate_index_at_zero, IndexEstimate, IndexVerdict, RvError,
};
use rvdecay_core::{
    integrate, FlowMap, FunctionSpec, ProblemSpec, Regime, RegimeReport, Trajectory,
};
use serde::Serialize;

use crate::config::{Experiment, Format};
use crate::report::{
    cell, emit, key_value_csv, num, termination, to_csv, to_json, ClassifyView, IndexView, Num,
};
use crate::{CliError, Exit};

fn regime_exit(r: &RegimeReport) -> Exit {
    match r.regime {
        Regime::Preserved | Regime::Critical | Regime::Dominated => Exit::Success,
        Regime::Rejected(_) => Exit::OutOfScope,
        Regime::Inconclusive(_) => Exit::Inconclusive,
    }
}

fn write(exp: &Experiment, bytes: Vec<u8>) -> Result<(), CliError> {
    emit(&bytes, exp.config.output.path.as_deref())
}

fn run_integration(exp: &Experiment) -> Result<Trajectory, CliError> {
    integrate(&exp.problem, &exp.controls).map_err(|e| CliError::Config(e.to_string()))
}

fn flow_map(exp: &Experiment, f: FunctionSpec, beta: Option<f64>) -> FlowMap {
    FlowMap::new(f)
        .with_tolerance(exp.config.tolerances.quadrature)
        .with_beta_hint(beta)
}

/// `f` of the positive form; `F` is applied to `|x|`.
fn positive_f(problem: &ProblemSpec) -> FunctionSpec {
    if problem.xi > 0.0 {
        problem.f.clone()
    } else {
        problem.f.odd_reflection()
    }
}

pub fn classify(exp: &Experiment) -> Result<Exit, CliError> {
    let report = classify_with(&exp.problem, &exp.settings);
    let view = ClassifyView::from(&report);
    let bytes = match exp.format(Format::Json) {
        Format::Json => to_json(&view)?,
        Format::Csv => key_value_csv(&view)?,
    };
    write(exp, bytes)?;
    if let Some(reason) = report.regime.reason() {
        eprintln!("{}: {}", report.regime.tag(), reason);
    }
    Ok(regime_exit(&report))
}

#[derive(Debug, Serialize)]
#[allow(non_snake_case)]
struct Diagnostics {
    F_of_x: Option<Num>,
    f_of_x: Option<Num>,
    g_of_t: Option<Num>,
}

#[derive(Debug, Serialize)]
struct SimRow {
    t: Num,
    x: Num,
    #[serde(flatten)]
    diagnostics: Option<Diagnostics>,
}

#[derive(Debug, Serialize)]
struct SimView {
    equation: &'static str,
    termination: String,
    verdict: Option<String>,
    steps_accepted: Option<u64>,
    steps_rejected: Option<u64>,
    warnings: Vec<String>,
    rows: Vec<SimRow>,
}

pub fn simulate(exp: &Experiment, unperturbed: bool, diagnostics: bool) -> Result<Exit, CliError> {
    let problem = &exp.problem;
    if !unperturbed {
        if let Err(reason) = positive_form(problem) {
            eprintln!(
                "rejected: {}; use --unperturbed to integrate y' = -f(y) without g",
                reason
            );
            return Ok(Exit::OutOfScope);
        }
    }
    let fm = flow_map(exp, positive_f(problem), problem.beta_hint);
    let sign = problem.xi.signum();

    let mut warnings = Vec::new();
    let (points, mut view, exit) = if unperturbed {
        let mut pts = Vec::new();
        let mut exit = Exit::Success;
        let mut end = "horizon".to_string();
        for t in exp.controls.checkpoint_times() {
            match fm.unperturbed_solution(problem.xi.abs(), t) {
                Ok(y) => pts.push((t, sign * y)),
                Err(e) => {
                    end = format!("flow map failed at t = {:?}: {}", t, e);
                    exit = Exit::Inconclusive;
                    break;
                }
            }
        }
        let view = SimView {
            equation: "y' = -f(y)",
            termination: end,
            verdict: None,
            steps_accepted: None,
            steps_rejected: None,
            warnings: Vec::new(),
            rows: Vec::new(),
        };
        (pts, view, exit)
    } else {
        let traj = run_integration(exp)?;
        warnings.extend(traj.warnings.iter().cloned());
        let exit = match traj.termination {
            Termination::Horizon | Termination::Overflow { .. } => Exit::Success,
            Termination::StepBudget | Termination::Domain { .. } => Exit::Inconclusive,
        };
        let view = SimView {
            equation: "x' = -f(x) + g(t)",
            termination: termination(&traj.termination),
            verdict: Some(traj.verdict.to_string()),
            steps_accepted: Some(traj.stats.accepted),
            steps_rejected: Some(traj.stats.rejected),
            warnings: Vec::new(),
            rows: Vec::new(),
        };
        (traj.points, view, exit)
    };

    let diag = |t: f64, x: f64| Diagnostics {
        F_of_x: fm.compute_F(x.abs()).ok().map(num),
        f_of_x: problem.f.eval(x).ok().map(num),
        g_of_t: if unperturbed {
            None
        } else {
            problem.g.eval(t).ok().map(num)
        },
    };
    let bytes = match exp.format(Format::Csv) {
        Format::Csv => {
            let opt = |v: Option<Num>| match v {
                Some(Num::Finite(v)) => cell(v),
                Some(Num::Special(s)) => s.to_string(),
                None => String::new(),
            };
            let rows: Vec<Vec<String>> = points
                .iter()
                .map(|&(t, x)| {
                    let mut r = vec![cell(t), cell(x)];
                    if diagnostics {
                        let d = diag(t, x);
                        r.extend([opt(d.F_of_x), opt(d.f_of_x), opt(d.g_of_t)]);
                    }
                    r
                })
                .collect();
            let header: &[&str] = if diagnostics {
                &["t", "x", "F_of_x", "f_of_x", "g_of_t"]
            } else {
                &["t", "x"]
            };
            to_csv(header, &rows)?
        }
        Format::Json => {
            view.rows = points
                .iter()
                .map(|&(t, x)| SimRow {
                    t: num(t),
                    x: num(x),
                    diagnostics: diagnostics.then(|| diag(t, x)),
                })
                .collect();
            view.warnings = warnings.clone();
            to_json(&view)?
        }
    };
    write(exp, bytes)?;
    for w in &warnings {
        eprintln!("warning: {}", w);
    }
    if exit != Exit::Success {
        eprintln!("integration stopped early: {}", view.termination);
    }
    Ok(exit)
}

#[derive(Debug, Serialize)]
struct TableRow {
    functional: &'static str,
    theory: Option<Num>,
    empirical: Option<Num>,
    uncertainty: Option<Num>,
    tolerance: Option<Num>,
    status: &'static str,
    note: String,
}

#[derive(Debug, Serialize)]
struct TrajectorySummary {
    termination: String,
    verdict: String,
    steps_accepted: u64,
    final_t: Num,
    final_x: Num,
}

#[derive(Debug, Serialize)]
struct VerifyView {
    classification: ClassifyView,
    trajectory: Option<TrajectorySummary>,
    table: Vec<TableRow>,
    passed: bool,
}

/// Expected limit of each functional and its relative tolerance; `None`
/// means the curve is reported without an assertion.
fn expectations(r: &RegimeReport) -> [(Functional, Option<(f64, f64)>); 3] {
    use Functional::*;
    match r.regime {
        Regime::Preserved => [
            (FOverT, Some((1.0, 0.01))),
            (FOverG, None),
            (XOverFinv, r.x_over_y_limit.map(|v| (v, 0.02))),
        ],
        Regime::Critical => [
            (FOverT, r.lambda_star.map(|v| (v, 0.02))),
            (FOverG, None),
            (XOverFinv, r.x_over_y_limit.map(|v| (v, 0.02))),
        ],
        Regime::Dominated => [
            (FOverT, None),
            (
                FOverG,
                (r.predicted_rate == Some(RateDescriptor::FOverGToOne)).then_some((1.0, 0.02)),
            ),
            (XOverFinv, None),
        ],
        _ => [(FOverT, None), (FOverG, None), (XOverFinv, None)],
    }
}

fn table_row(
    functional: Functional,
    expected: Option<(f64, f64)>,
    curve: Result<RateCurve, CurveError>,
) -> TableRow {
    let mut row = TableRow {
        functional: functional.as_str(),
        theory: expected.map(|e| num(e.0)),
        empirical: None,
        uncertainty: None,
        tolerance: expected.map(|e| num(e.1)),
        status: if expected.is_some() { "fail" } else { "info" },
        note: String::new(),
    };
    match curve {
        Ok(c) => {
            row.empirical = Some(num(c.limit));
            row.uncertainty = Some(num(c.uncertainty));
            let (t, v) = c.last();
            row.note = format!("last point {:?} at t = {:?}", v, t);
            if let Some(w) = c.warnings.first() {
                row.note = format!("{}; {}", row.note, w);
            }
            if let Some((value, rel)) = expected {
                if c.limit_matches(value, rel * value.abs()) {
                    row.status = "pass";
                }
            }
        }
        Err(e) => row.note = e.to_string(),
    }
    row
}

pub fn verify(exp: &Experiment) -> Result<Exit, CliError> {
    let report = classify_with(&exp.problem, &exp.settings);
    let mut view = VerifyView {
        classification: ClassifyView::from(&report),
        trajectory: None,
        table: Vec::new(),
        passed: false,
    };
    let mut exit = regime_exit(&report);
    if exit != Exit::OutOfScope {
        let traj = run_integration(exp)?;
        let (t_end, x_end) = traj.last();
        view.trajectory = Some(TrajectorySummary {
            termination: termination(&traj.termination),
            verdict: traj.verdict.to_string(),
            steps_accepted: traj.stats.accepted,
            final_t: num(t_end),
            final_x: num(x_end),
        });
        let (positive, _) = positive_form(&exp.problem).map_err(CliError::Config)?;
        let fm = flow_map(exp, positive.f, report.beta);
        for (functional, expected) in expectations(&report) {
            let curve = match functional {
                Functional::FOverT => empirical_rate_curve(&traj, &fm),
                Functional::FOverG => empirical_g_ratio(&traj, &exp.problem.f, &exp.problem.g),
                Functional::XOverFinv => empirical_xy_ratio(&traj, &fm),
            };
            view.table.push(table_row(functional, expected, curve));
        }
        if report.is_definite() {
            let ok = traj.verdict == Verdict::ConvergesToZero;
            view.table.push(TableRow {
                functional: "x(t) -> 0",
                theory: None,
                empirical: None,
                uncertainty: None,
                tolerance: None,
                status: if ok { "pass" } else { "fail" },
                note: format!("trajectory verdict {}", traj.verdict),
            });
        }
        view.passed = report.is_definite() && view.table.iter().all(|r| r.status != "fail");
        if exit == Exit::Success && !view.passed {
            exit = Exit::Inconclusive;
        }
    }

    let bytes = match exp.format(Format::Json) {
        Format::Json => to_json(&view)?,
        Format::Csv => {
            let opt = |v: &Option<Num>| match v {
                Some(Num::Finite(v)) => cell(*v),
                Some(Num::Special(s)) => s.to_string(),
                None => String::new(),
            };
            let rows: Vec<Vec<String>> = view
                .table
                .iter()
                .map(|r| {
                    vec![
                        r.functional.to_string(),
                        opt(&r.theory),
                        opt(&r.empirical),
                        opt(&r.uncertainty),
                        opt(&r.tolerance),
                        r.status.to_string(),
                        r.note.clone(),
                    ]
                })
                .collect();
            to_csv(
                &[
                    "functional",
                    "theory",
                    "empirical",
                    "uncertainty",
                    "tolerance",
                    "status",
                    "note",
                ],
                &rows,
            )?
        }
    };
    write(exp, bytes)?;
    eprintln!("regime: {}", report.regime);
    for r in &view.table {
        eprintln!("{} {}: {}", r.status.to_uppercase(), r.functional, r.note);
    }
    Ok(exit)
}

#[derive(Debug, Serialize)]
struct AssertionView {
    label: String,
    passed: bool,
    detail: String,
}

#[derive(Debug, Serialize)]
struct EntryView {
    name: &'static str,
    passed: bool,
    regime: Option<&'static str>,
    assertions: Vec<AssertionView>,
}

#[derive(Debug, Serialize)]
struct CorpusView {
    entries: Vec<EntryView>,
    passed: bool,
}

pub struct CorpusSelection {
    pub names: Vec<String>,
    pub all: bool,
}

/// Runs the selected entries on separate threads; the report is sorted by
/// name.
pub fn corpus_run(
    sel: &CorpusSelection,
    opts: RunOptions,
    format: Format,
    output: Option<&std::path::Path>,
) -> Result<Exit, CliError> {
    let entries = corpus();
    let available = || {
        entries
            .iter()
            .map(|e| e.name)
            .collect::<Vec<_>>()
            .join(", ")
    };
    if !sel.all && sel.names.is_empty() {
        return Err(CliError::Usage(format!(
            "select entries with --entry NAME or --all; available: {}",
            available()
        )));
    }
    let wanted: BTreeSet<&str> = sel.names.iter().map(String::as_str).collect();
    if let Some(bad) = wanted
        .iter()
        .find(|n| !entries.iter().any(|e| e.name == **n))
    {
        return Err(CliError::Usage(format!(
            "no corpus entry named {:?}; available: {}",
            bad,
            available()
        )));
    }
    let chosen: Vec<_> = entries
        .iter()
        .filter(|e| sel.all || wanted.contains(e.name))
        .collect();
    let mut reports: Vec<EntryReport> = std::thread::scope(|s| {
        let handles: Vec<_> = chosen
            .iter()
            .map(|e| s.spawn(move || run_entry(e, &opts)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("corpus worker panicked"))
            .collect()
    });
    reports.sort_by(|a, b| a.name.cmp(b.name));

    let view = CorpusView {
        passed: reports.iter().all(EntryReport::passed),
        entries: reports
            .iter()
            .map(|r| EntryView {
                name: r.name,
                passed: r.passed(),
                regime: r.report.as_ref().map(|x| x.regime.tag()),
                assertions: r
                    .assertions
                    .iter()
                    .map(|a| AssertionView {
                        label: a.label.clone(),
                        passed: a.passed,
                        detail: a.detail.clone(),
                    })
                    .collect(),
            })
            .collect(),
    };
    let bytes = match format {
        Format::Json => to_json(&view)?,
        Format::Csv => {
            let rows: Vec<Vec<String>> = view
                .entries
                .iter()
                .flat_map(|e| {
                    e.assertions.iter().map(move |a| {
                        vec![
                            e.name.to_string(),
                            a.label.clone(),
                            if a.passed { "pass" } else { "fail" }.to_string(),
                            a.detail.clone(),
                        ]
                    })
                })
                .collect();
            to_csv(&["entry", "check", "status", "detail"], &rows)?
        }
    };
    emit(&bytes, output)?;
    for e in &reports {
        for a in e.assertions.iter().filter(|a| !a.passed) {
            eprintln!("{}: {}", e.name, a);
        }
    }
    Ok(if view.passed {
        Exit::Success
    } else {
        Exit::Inconclusive
    })
}

#[derive(Debug, Serialize)]
struct IndexResult {
    estimate: Option<IndexView>,
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct IndicesView {
    f_at_zero: IndexResult,
    g_at_infinity: IndexResult,
}

fn index_result(r: &Result<IndexEstimate, RvError>) -> IndexResult {
    match r {
        Ok(e) => IndexResult {
            estimate: Some(IndexView::from(e)),
            error: None,
        },
        Err(e) => IndexResult {
            estimate: None,
            error: Some(e.to_string()),
        },
    }
}

pub fn indices(exp: &Experiment) -> Result<Exit, CliError> {
    let problem = positive_form(&exp.problem)
        .map(|p| p.0)
        .unwrap_or_else(|_| exp.problem.clone());
    let f = estimate_index_at_zero(&positive_f(&exp.problem), &exp.settings.zero_grid);
    let g = estimate_index_at_infinity(&problem.g, &exp.settings.infinity_grid);
    let view = IndicesView {
        f_at_zero: index_result(&f),
        g_at_infinity: index_result(&g),
    };
    let bytes = match exp.format(Format::Json) {
        Format::Json => to_json(&view)?,
        Format::Csv => key_value_csv(&view)?,
    };
    write(exp, bytes)?;
    let definite = |r: &Result<IndexEstimate, RvError>| matches!(r, Ok(e) if e.verdict != IndexVerdict::Inconclusive);
    Ok(if definite(&f) && definite(&g) {
        Exit::Success
    } else {
        Exit::Inconclusive
    })
}
