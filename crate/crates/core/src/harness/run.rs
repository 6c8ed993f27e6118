use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use super::corpus::{corpus, Check, CorpusEntry, Expect, Mode};
use super::{empirical_g_ratio, empirical_rate_curve, empirical_xy_ratio, Functional, RateCurve};
use crate::classifier::{self, LimitVerdict, RegimeReport};
use crate::exprdsl::FunctionSpec;
use crate::flowmap::FlowMap;
use crate::grid::GeometricGrid;
use crate::integrator::{self, Controls, ProblemSpec, Trajectory};

/// Overrides applied to every entry of a run.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunOptions {
    pub max_steps: Option<u64>,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
}

impl RunOptions {
    pub fn controls(&self, horizon: f64) -> Controls {
        let mut c = Controls::default().with_horizon(horizon);
        if let Some(n) = self.max_steps {
            c.max_steps = n;
        }
        if let Some(r) = self.rtol {
            c.rtol = r;
        }
        if let Some(a) = self.atol {
            c.atol = a;
        }
        c
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Assertion {
    pub label: String,
    pub detail: String,
    pub passed: bool,
}

impl fmt::Display for Assertion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{} {}: {}", mark, self.label, self.detail)
    }
}

#[derive(Clone, Debug)]
pub struct EntryReport {
    pub name: &'static str,
    pub report: Option<RegimeReport>,
    pub trajectory: Option<Trajectory>,
    pub assertions: Vec<Assertion>,
}

impl EntryReport {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }
}

#[derive(Clone, Debug)]
pub struct CorpusReport {
    pub entries: Vec<EntryReport>,
}

impl CorpusReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(EntryReport::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = (&'static str, &Assertion)> {
        self.entries.iter().flat_map(|e| {
            e.assertions
                .iter()
                .filter(|a| !a.passed)
                .map(move |a| (e.name, a))
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnknownEntry(pub String);

impl fmt::Display for UnknownEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "no corpus entry named {:?}", self.0)
    }
}

impl core::error::Error for UnknownEntry {}

struct Ctx<'a> {
    entry: &'a CorpusEntry,
    controls: Controls,
    fm: FlowMap,
    traj: Option<Result<Trajectory, String>>,
    report: Option<RegimeReport>,
    curves: [Option<Result<RateCurve, String>>; 3],
}

fn slot(functional: Functional) -> usize {
    match functional {
        Functional::FOverT => 0,
        Functional::FOverG => 1,
        Functional::XOverFinv => 2,
    }
}

impl<'a> Ctx<'a> {
    fn new(entry: &'a CorpusEntry, opts: &RunOptions) -> Self {
        let p = &entry.problem;
        Ctx {
            entry,
            controls: opts.controls(entry.horizon),
            fm: FlowMap::new(p.f.clone()).with_beta_hint(p.beta_hint),
            traj: None,
            report: None,
            curves: [None, None, None],
        }
    }

    fn problem(&self) -> &ProblemSpec {
        &self.entry.problem
    }

    fn trajectory(&mut self) -> Result<&Trajectory, String> {
        if self.entry.mode == Mode::ClosedFormOnly {
            return Err("entry is closed-form only".to_string());
        }
        if self.traj.is_none() {
            let r =
                integrator::integrate(self.problem(), &self.controls).map_err(|e| e.to_string());
            self.traj = Some(r);
        }
        self.traj.as_ref().unwrap().as_ref().map_err(Clone::clone)
    }

    fn report(&mut self) -> &RegimeReport {
        if self.report.is_none() {
            self.report = Some(classifier::classify(self.problem()));
        }
        self.report.as_ref().unwrap()
    }

    fn curve(&mut self, functional: Functional) -> Result<&RateCurve, String> {
        let k = slot(functional);
        if self.curves[k].is_none() {
            let built = match self.trajectory() {
                Err(e) => Err(e),
                Ok(tr) => {
                    let tr = tr.clone();
                    let p = self.problem();
                    match functional {
                        Functional::FOverT => empirical_rate_curve(&tr, &self.fm),
                        Functional::FOverG => empirical_g_ratio(&tr, &p.f, &p.g),
                        Functional::XOverFinv => empirical_xy_ratio(&tr, &self.fm),
                    }
                    .map_err(|e| e.to_string())
                }
            };
            self.curves[k] = Some(built);
        }
        self.curves[k]
            .as_ref()
            .unwrap()
            .as_ref()
            .map_err(Clone::clone)
    }

    fn solution(&self) -> Result<&FunctionSpec, String> {
        self.entry
            .solution
            .as_ref()
            .ok_or_else(|| "entry has no closed form".to_string())
    }

    /// `F(x(t))/t` from the entry's formula when it has one.
    fn closed_form_rate(&self, t: f64) -> Result<f64, String> {
        match &self.entry.rate {
            Some(r) => r.eval(t).map(|v| v / t).map_err(|e| e.to_string()),
            None => self.closed_form(Functional::FOverT, t),
        }
    }

    /// Functional evaluated on the closed-form solution.
    fn closed_form(&self, functional: Functional, t: f64) -> Result<f64, String> {
        let x = self.solution()?.eval(t).map_err(|e| e.to_string())?;
        let p = self.problem();
        match functional {
            Functional::FOverT => self
                .fm
                .compute_F(libm::fabs(x))
                .map(|v| v / t)
                .map_err(|e| e.to_string()),
            Functional::FOverG => {
                let fx = p.f.eval(x).map_err(|e| e.to_string())?;
                let gt = p.g.eval(t).map_err(|e| e.to_string())?;
                Ok(fx / gt)
            }
            Functional::XOverFinv => self
                .fm
                .invert_F(t)
                .map(|y| libm::fabs(x) / y)
                .map_err(|e| e.to_string()),
        }
    }
}

fn rel(measured: f64, expected: f64) -> f64 {
    if expected == 0.0 {
        libm::fabs(measured)
    } else {
        libm::fabs(measured - expected) / libm::fabs(expected)
    }
}

fn label(check: &Check) -> String {
    match check {
        Check::Residual { up_to, .. } => format!("closed-form residual on [1e-2, {:e}]", up_to),
        Check::Regime(tag) => format!("regime is {}", tag),
        Check::Reason(r) => format!("reason starts with {:?}", r),
        Check::Limit { .. } => "estimated L".to_string(),
        Check::LambdaStar { .. } => "Lambda*".to_string(),
        Check::XOverYPrediction { .. } => "predicted lim x/F^-1(t)".to_string(),
        Check::PredictedRate(_) => "predicted rate".to_string(),
        Check::Verdict(v) => format!("trajectory verdict {}", v),
        Check::Trajectory { up_to, .. } => {
            format!("trajectory vs closed form up to t = {:e}", up_to)
        }
        Check::Flat { functional, .. } => format!("{} constant at every checkpoint", functional),
        Check::At {
            functional,
            t,
            expected,
            ..
        } => match expected {
            Expect::Value(_) => format!("{} at t = {:e}", functional, t),
            Expect::ClosedForm => format!("{} at t = {:e} vs closed form", functional, t),
        },
        Check::CurveLimit { functional, .. } => format!("extrapolated limit of {}", functional),
        Check::Exceeds { functional, t, .. } => format!("{} at t = {:e} diverges", functional, t),
        Check::RateFormula { t, .. } => format!("F(x(t)) formula vs flow map at t = {:e}", t),
        Check::ClosedFormRate { t, .. } => format!("closed-form F(x)/t at t = {:e}", t),
        Check::ClosedFormRateExceeds { t, .. } => {
            format!("closed-form F(x)/t at t = {:e} diverges", t)
        }
        Check::ClosedFormDefect { t, .. } => format!("closed-form defect of F(x)/t at t = {:e}", t),
        Check::ClosedFormApproach { functional, .. } => {
            format!("closed-form {} trend", functional)
        }
        Check::AnalyticLambda { .. } => {
            "analytic limit of F(x)/t (rapid branch, not desk-reachable)".to_string()
        }
    }
}

fn tolerance(measured: f64, expected: f64, tol: f64) -> (String, bool) {
    (
        format!(
            "measured {:.12e}, expected {:.12e}, tolerance {:e}",
            measured, expected, tol
        ),
        measured.is_finite() && libm::fabs(measured - expected) <= tol,
    )
}

fn evaluate(ctx: &mut Ctx<'_>, check: &Check) -> (String, bool) {
    let horizon = ctx.entry.horizon;
    let outcome: Result<(String, bool), String> = (|| match check {
        Check::Residual { up_to, tol } => {
            let grid = GeometricGrid::new(1e-2, *up_to, 4)
                .points()
                .map_err(|e| e.to_string())?;
            let r = integrator::residual_check(ctx.solution()?, ctx.problem(), &grid)
                .map_err(|e| e.to_string())?;
            Ok((
                format!("max relative residual {:.3e}, tolerance {:e}", r, tol),
                r <= *tol,
            ))
        }
        Check::Regime(tag) => {
            let r = ctx.report();
            let got = r.regime.tag();
            let why = r
                .regime
                .reason()
                .map(|s| format!(" ({})", s))
                .unwrap_or_default();
            Ok((format!("got {}{}", got, why), got == *tag))
        }
        Check::Reason(prefix) => {
            let r = ctx.report().regime.reason().unwrap_or("").to_string();
            Ok((format!("got {:?}", r), r.starts_with(prefix)))
        }
        Check::Limit { expected, rel_tol } => {
            let l = ctx.report().limit.clone().ok_or("no limit estimate")?;
            match (l.verdict, *expected == 0.0) {
                (LimitVerdict::Zero, true) => Ok(("L = 0".to_string(), true)),
                (LimitVerdict::Finite(v), false) => {
                    let e = rel(v, *expected);
                    Ok((
                        format!(
                            "L = {:.12e} ± {:.2e}, relative error {:.2e}, tolerance {:e}",
                            v, l.uncertainty, e, rel_tol
                        ),
                        e <= *rel_tol,
                    ))
                }
                (v, _) => Ok((format!("L verdict {}, expected {}", v, expected), false)),
            }
        }
        Check::LambdaStar { expected, tol } => {
            let v = ctx.report().lambda_star.ok_or("no Lambda*")?;
            Ok(tolerance(v, *expected, *tol))
        }
        Check::XOverYPrediction { expected, tol } => {
            let v = ctx.report().x_over_y_limit.ok_or("no x/F^-1 prediction")?;
            Ok(tolerance(v, *expected, *tol))
        }
        Check::PredictedRate(d) => {
            let got = ctx.report().predicted_rate;
            Ok((
                format!("got {}", got.map(|g| g.as_str()).unwrap_or("none")),
                got == Some(*d),
            ))
        }
        Check::Verdict(v) => {
            let tr = ctx.trajectory()?;
            Ok((
                format!(
                    "got {} ({:?}, {} steps)",
                    tr.verdict, tr.termination, tr.stats.accepted
                ),
                tr.verdict == *v,
            ))
        }
        Check::Trajectory { up_to, rel_tol } => {
            let sol = ctx.solution()?.clone();
            let tr = ctx.trajectory()?;
            let reached = tr.last().0;
            let mut worst: f64 = 0.0;
            let mut at = 0.0;
            for &(t, x) in tr.points.iter().filter(|(t, _)| *t <= *up_to) {
                let xc = sol.eval(t).map_err(|e| e.to_string())?;
                let e = rel(x, xc);
                if !(e <= worst) {
                    worst = e;
                    at = t;
                }
            }
            let complete = reached >= *up_to * (1.0 - 1e-12);
            Ok((
                format!(
                    "max relative error {:.3e} at t = {:.3e}, tolerance {:e}, reached t = {:.3e}",
                    worst, at, rel_tol, reached
                ),
                complete && worst <= *rel_tol,
            ))
        }
        Check::Flat {
            functional,
            value,
            tol,
        } => {
            let c = ctx.curve(*functional)?;
            let worst = c
                .points
                .iter()
                .map(|p| libm::fabs(p.1 - value))
                .fold(0.0, f64::max);
            let end = c.last().0;
            Ok((
                format!(
                    "max deviation {:.3e} from {} over {} points up to t = {:.3e}, tolerance {:e}",
                    worst,
                    value,
                    c.points.len(),
                    end,
                    tol
                ),
                end >= horizon * (1.0 - 1e-12) && worst <= *tol,
            ))
        }
        Check::At {
            functional,
            t,
            expected,
            rel_tol,
        } => {
            let exp = match expected {
                Expect::Value(v) => *v,
                Expect::ClosedForm => ctx.closed_form(*functional, *t)?,
            };
            let c = ctx.curve(*functional)?;
            let v = c
                .at(*t)
                .ok_or_else(|| format!("no checkpoint at t = {:e}", t))?;
            let e = rel(v, exp);
            Ok((
                format!(
                    "measured {:.12e}, expected {:.12e}, relative error {:.2e}, tolerance {:e}",
                    v, exp, e, rel_tol
                ),
                e <= *rel_tol,
            ))
        }
        Check::CurveLimit {
            functional,
            expected,
            tol,
        } => {
            let c = ctx.curve(*functional)?;
            Ok((
                format!(
                    "limit {:.9} ± {:.2e}, expected {} within {:e} + uncertainty",
                    c.limit, c.uncertainty, expected, tol
                ),
                c.limit_matches(*expected, *tol),
            ))
        }
        Check::Exceeds {
            functional,
            t,
            beyond,
        } => {
            let c = ctx.curve(*functional)?;
            let v = c
                .at(*t)
                .ok_or_else(|| format!("no checkpoint at t = {:e}", t))?;
            Ok((
                format!("measured {:.6e}, threshold {:e}", v, beyond),
                v > *beyond,
            ))
        }
        Check::RateFormula { t, rel_tol } => {
            let formula = ctx.closed_form_rate(*t)?;
            let flow = ctx.closed_form(Functional::FOverT, *t)?;
            let e = rel(flow, formula);
            Ok((
                format!(
                    "flow map {:.12e}, formula {:.12e}, relative error {:.2e}, tolerance {:e}",
                    flow, formula, e, rel_tol
                ),
                e <= *rel_tol,
            ))
        }
        Check::ClosedFormRate {
            t,
            expected,
            rel_tol,
        } => {
            let v = ctx.closed_form_rate(*t)?;
            let e = rel(v, *expected);
            Ok((
                format!(
                    "value {:.9}, expected {}, relative error {:.3e}, tolerance {:e}",
                    v, expected, e, rel_tol
                ),
                e <= *rel_tol,
            ))
        }
        Check::ClosedFormRateExceeds { t, beyond } => {
            let v = ctx.closed_form_rate(*t)?;
            Ok((
                format!("value {:.6e}, threshold {:e}", v, beyond),
                v > *beyond,
            ))
        }
        Check::ClosedFormDefect { t, c, p, tol } => {
            let v = ctx.closed_form_rate(*t)?;
            let ratio = (1.0 - v) / (c * libm::pow(*t, -p));
            Ok((
                format!(
                    "F(x)/t = {:.9}, defect ratio {:.6}, tolerance {:e}",
                    v, ratio, tol
                ),
                libm::fabs(ratio - 1.0) <= *tol,
            ))
        }
        Check::ClosedFormApproach {
            functional,
            times,
            target,
        } => {
            let mut vals = Vec::with_capacity(times.len());
            for &t in times {
                vals.push(ctx.closed_form(*functional, t)?);
            }
            let ok = vals.windows(2).all(|w| {
                if target.is_infinite() {
                    w[1] > w[0]
                } else {
                    libm::fabs(w[1] - target) < libm::fabs(w[0] - target)
                }
            });
            Ok((format!("values {:.6?} toward {}", vals, target), ok))
        }
        Check::AnalyticLambda { l, expected } => {
            let v = classifier::lambda_star(*l, f64::INFINITY, true).map_err(|e| e.to_string())?;
            Ok(tolerance(v, *expected, 1e-12))
        }
    })();
    outcome.unwrap_or_else(|e| (format!("not evaluated: {}", e), false))
}

/// Runs every check of one entry.
pub fn run_entry(entry: &CorpusEntry, opts: &RunOptions) -> EntryReport {
    let mut ctx = Ctx::new(entry, opts);
    let assertions = entry
        .checks
        .iter()
        .map(|c| {
            let (detail, passed) = evaluate(&mut ctx, c);
            Assertion {
                label: label(c),
                detail,
                passed,
            }
        })
        .collect();
    EntryReport {
        name: entry.name,
        report: ctx.report,
        trajectory: ctx.traj.and_then(Result::ok),
        assertions,
    }
}

/// Runs the named entries, or all of them; the report is sorted by name.
pub fn run_corpus(
    selection: Option<&[&str]>,
    opts: &RunOptions,
) -> Result<CorpusReport, UnknownEntry> {
    let all = corpus();
    if let Some(names) = selection {
        if let Some(bad) = names.iter().find(|n| !all.iter().any(|e| e.name == **n)) {
            return Err(UnknownEntry(bad.to_string()));
        }
    }
    let mut entries: Vec<EntryReport> = all
        .iter()
        .filter(|e| selection.is_none_or(|names| names.contains(&e.name)))
        .map(|e| run_entry(e, opts))
        .collect();
    entries.sort_by(|a, b| a.name.cmp(b.name));
    Ok(CorpusReport { entries })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub l: f64,
    pub predicted: f64,
    pub measured: Result<f64, String>,
}

impl SweepPoint {
    pub fn relative_error(&self) -> Option<f64> {
        self.measured.as_ref().ok().map(|m| rel(*m, self.predicted))
    }
}

/// Extrapolated `F(x(t))/t` against `Λ*(L)` for `x' = -x² + L(1+t)^-2`, `x(0) = 1`.
pub fn lambda_sweep(ls: &[f64], horizon: f64, opts: &RunOptions) -> Vec<SweepPoint> {
    let f = FunctionSpec::state("x^2").expect("literal parses");
    let fm = FlowMap::new(f.clone()).with_beta_hint(Some(2.0));
    ls.iter()
        .map(|&l| {
            let predicted = classifier::lambda_star(l, 2.0, false).unwrap_or(f64::NAN);
            let measured = (|| {
                let g =
                    FunctionSpec::time(&format!("{:?}*(1+t)^-2", l)).map_err(|e| e.to_string())?;
                let p = ProblemSpec::new(f.clone(), g, 1.0).with_beta(2.0);
                let tr = integrator::integrate(&p, &opts.controls(horizon))
                    .map_err(|e| e.to_string())?;
                let c = empirical_rate_curve(&tr, &fm).map_err(|e| e.to_string())?;
                Ok(c.limit)
            })();
            SweepPoint {
                l,
                predicted,
                measured,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_entries_are_rejected() {
        assert_eq!(
            run_corpus(Some(&["nope"]), &RunOptions::default()).err(),
            Some(UnknownEntry("nope".to_string()))
        );
    }

    #[test]
    fn corpus_names_are_unique() {
        let c = corpus();
        for (i, a) in c.iter().enumerate() {
            assert!(c[i + 1..].iter().all(|b| b.name != a.name));
        }
    }

    #[test]
    fn closed_forms_start_at_xi() {
        for e in corpus() {
            let x0 = e.solution.as_ref().unwrap().eval(0.0).unwrap();
            assert!(
                rel(x0, e.problem.xi) < 1e-15,
                "{}: {} vs {}",
                e.name,
                x0,
                e.problem.xi
            );
        }
    }

    #[test]
    fn closed_forms_satisfy_the_equation() {
        for e in corpus() {
            let r = run_entry(
                &CorpusEntry {
                    checks: e
                        .checks
                        .iter()
                        .filter(|c| matches!(c, Check::Residual { .. }))
                        .cloned()
                        .collect(),
                    ..e.clone()
                },
                &RunOptions::default(),
            );
            assert!(r.passed(), "{}: {:?}", e.name, r.assertions);
        }
    }

    #[test]
    fn lgt0_entry_passes() {
        let r = run_corpus(Some(&["Lgt0"]), &RunOptions::default()).unwrap();
        for a in &r.entries[0].assertions {
            assert!(a.passed, "{}", a);
        }
    }

    #[test]
    fn sweep_tracks_lambda_star() {
        let pts = lambda_sweep(&[0.1, 1.0, 10.0], 1e5, &RunOptions::default());
        for p in pts {
            assert!(p.relative_error().unwrap() < 2e-2, "{:?}", p);
        }
    }
}
