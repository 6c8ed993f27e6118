//! Regime classification.
//!
//! `L = lim g(t)/f(F⁻¹(t))` decides the regime:
//!
//! | `L`      | regime    | prediction                                |
//! |----------|-----------|-------------------------------------------|
//! | 0        | Preserved | `F(x(t))/t → 1`                           |
//! | finite   | Critical  | `F(x(t))/t → Λ*`                          |
//! | ∞        | Dominated | `F(x(t))/t → 0`, and `f(x(t))/g(t) → 1`    |
//!
//! where `Λ*` solves `(1-Λ)Λ^(-β/(β-1)) = L`, or `Λ* = 1/(1+L)` when `f` is
//! rapidly varying at zero.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::accel;
use crate::exprdsl::FunctionSpec;
use crate::flowmap::{FlowError, FlowMap};
use crate::grid::GeometricGrid;
use crate::integrator::ProblemSpec;
use crate::quad::{self, QuadSettings};
use crate::rvkit::{self, IndexEstimate, IndexVerdict};

pub const REJECT_SIGN: &str = "g must be positive (or fully reflectable)";
pub const REJECT_SCOPE: &str = "outside theorem scope, β > 1 required";

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LimitVerdict {
    Zero,
    Finite(f64),
    Infinite,
    /// Neither monotone past a threshold nor settled.
    Inconclusive,
}

impl fmt::Display for LimitVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LimitVerdict::Zero => f.write_str("zero"),
            LimitVerdict::Finite(_) => f.write_str("finite"),
            LimitVerdict::Infinite => f.write_str("infinite"),
            LimitVerdict::Inconclusive => f.write_str("inconclusive"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LimitEstimate {
    pub verdict: LimitVerdict,
    /// `(t_k, g(t_k)/f(F⁻¹(t_k)))`.
    pub ratios: Vec<(f64, f64)>,
    pub uncertainty: f64,
}

impl LimitEstimate {
    pub fn value(&self) -> Option<f64> {
        match self.verdict {
            LimitVerdict::Finite(v) => Some(v),
            _ => None,
        }
    }
}

/// Ratio grid `t_k = t0·2^k` up to the first point at or past `t_end`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LimitGrid {
    pub t0: f64,
    pub t_end: f64,
    pub cap: f64,
    pub floor: f64,
}

impl Default for LimitGrid {
    fn default() -> Self {
        LimitGrid {
            t0: 10.0,
            t_end: 1e8,
            cap: 1e6,
            floor: 1e-6,
        }
    }
}

impl LimitGrid {
    pub fn times(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut t = self.t0;
        loop {
            out.push(t);
            if t >= self.t_end {
                return out;
            }
            t *= 2.0;
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LimitError {
    InvalidGrid,
    NonPositiveG { at: f64, value: f64 },
    Flow { at: f64, source: FlowError },
}

impl fmt::Display for LimitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LimitError::InvalidGrid => f.write_str("ratio grid needs 0 < t0 < t_end"),
            LimitError::NonPositiveG { at, value } => {
                write!(f, "{}: g({:?}) = {:?}", REJECT_SIGN, at, value)
            }
            LimitError::Flow { at, source } => write!(f, "f∘F⁻¹ at t = {:?}: {}", at, source),
        }
    }
}

impl core::error::Error for LimitError {}

/// Tail slope of `log(ratio)` against `log t` beyond which the ratio is
/// treated as a power of `t` running to zero or infinity.
pub const POWER_SLOPE: f64 = 0.05;

/// Estimates `L` from ratios on a doubling grid.
#[allow(non_snake_case)]
pub fn estimate_L(
    g: &FunctionSpec,
    fm: &FlowMap,
    grid: &LimitGrid,
) -> Result<LimitEstimate, LimitError> {
    if !(grid.t0 > 0.0 && grid.t_end > grid.t0) {
        return Err(LimitError::InvalidGrid);
    }
    let mut ratios = Vec::new();
    for t in grid.times() {
        let gt = g.eval(t).map_err(|e| LimitError::Flow {
            at: t,
            source: FlowError::Eval(e),
        })?;
        if gt == 0.0 && !ratios.is_empty() {
            // Underflow of a positive g: the ratio has reached zero.
            ratios.push((t, 0.0));
            break;
        }
        if !(gt > 0.0) {
            return Err(LimitError::NonPositiveG { at: t, value: gt });
        }
        let scale = fm
            .f_of_finv(t)
            .map_err(|source| LimitError::Flow { at: t, source })?;
        ratios.push((t, gt / scale));
    }
    let r: Vec<f64> = ratios.iter().map(|p| p.1).collect();
    let n = r.len();
    let last = r[n - 1];
    let tail = &r[n.saturating_sub(4)..];
    let increasing = tail.windows(2).all(|w| w[1] > w[0]);
    let decreasing = tail.windows(2).all(|w| w[1] < w[0]);
    let uncertainty = if n >= 2 {
        libm::fabs(last - r[n - 2])
    } else {
        f64::INFINITY
    };
    // Log-log slopes over the last three doublings.
    let slopes: Vec<f64> = ratios[n.saturating_sub(4)..]
        .windows(2)
        .map(|w| libm::log(w[1].1 / w[0].1) / libm::log(w[1].0 / w[0].0))
        .collect();
    let settled = |sign: f64| slopes.len() == 3 && slopes.iter().all(|s| sign * s > POWER_SLOPE);
    let verdict = if increasing && (last > grid.cap || settled(1.0)) {
        LimitVerdict::Infinite
    } else if decreasing && (last < grid.floor || settled(-1.0)) {
        LimitVerdict::Zero
    } else {
        let value = accel::tail_limit(&r).unwrap_or(last);
        if value > 0.0 && value.is_finite() && uncertainty < value {
            LimitVerdict::Finite(value)
        } else {
            LimitVerdict::Inconclusive
        }
    };
    Ok(LimitEstimate {
        verdict,
        ratios,
        uncertainty,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LambdaError {
    /// `L ≤ 0`: the regime is Preserved, there is nothing to solve.
    NonPositiveL,
    /// `β ≤ 1` without rapid variation.
    BetaOutOfScope,
}

impl fmt::Display for LambdaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LambdaError::NonPositiveL => f.write_str("Λ* needs L > 0"),
            LambdaError::BetaOutOfScope => f.write_str("Λ* needs β > 1"),
        }
    }
}

impl core::error::Error for LambdaError {}

/// `h(Λ) = (1-Λ)Λ^(-β/(β-1))`, strictly decreasing from `+∞` to `h(1) = 0`.
pub fn lambda_defect(lambda: f64, beta: f64) -> f64 {
    (1.0 - lambda) * libm::pow(lambda, -beta / (beta - 1.0))
}

/// The `Λ ∈ (0, 1)` with `h(Λ) = L`; `1/(1+L)` in the rapid branch.
pub fn lambda_star(l: f64, beta: f64, rapid: bool) -> Result<f64, LambdaError> {
    if !(l > 0.0) {
        return Err(LambdaError::NonPositiveL);
    }
    if rapid {
        return Ok(1.0 / (1.0 + l));
    }
    if !(beta > 1.0) {
        return Err(LambdaError::BetaOutOfScope);
    }
    if l == f64::INFINITY {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    loop {
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            break;
        }
        if lambda_defect(mid, beta) > l {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Pick whichever end of the final bracket is closer.
    let (dl, dh) = (
        libm::fabs(lambda_defect(lo, beta) - l),
        libm::fabs(lambda_defect(hi, beta) - l),
    );
    Ok(if lo > 0.0 && dl < dh { lo } else { hi })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Integrability {
    Yes,
    No,
    Unknown,
}

impl fmt::Display for Integrability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Integrability::Yes => "yes",
            Integrability::No => "no",
            Integrability::Unknown => "unknown",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GIntegrability {
    pub verdict: Integrability,
    /// `∫_0^T g` plus a geometric tail estimate when the verdict is yes.
    pub estimate: f64,
    /// Integral over `[0, 1]` then over each octave `[2^(k-1), 2^k]`.
    pub increments: Vec<f64>,
}

/// Decides `g ∈ L¹(0, ∞)` from octave increments of `∫_0^T g`.
pub fn integrable_g(g: &FunctionSpec, horizon: f64) -> GIntegrability {
    let unknown = |increments| GIntegrability {
        verdict: Integrability::Unknown,
        estimate: f64::NAN,
        increments,
    };
    if !(horizon > 1.0 && horizon.is_finite()) {
        return unknown(Vec::new());
    }
    let settings = QuadSettings {
        rel_tol: 1e-12,
        abs_tol: 0.0,
        max_intervals: 400,
    };
    let mut increments = Vec::new();
    let (mut a, mut b) = (0.0, 1.0);
    loop {
        let piece = quad::integrate(
            |t| match g.eval(t) {
                Ok(v) if v > 0.0 => Ok(v),
                _ => Err(()),
            },
            a,
            b,
            &settings,
        );
        match piece {
            Ok(e) => increments.push(e.value),
            Err(_) => return unknown(increments),
        }
        if b >= horizon {
            break;
        }
        a = b;
        b *= 2.0;
    }
    let partial: f64 = increments.iter().sum();
    let n = increments.len();
    let tail = &increments[n.saturating_sub(3)..];
    let last = increments[n - 1];
    if tail.len() == 3 && tail.windows(2).all(|w| w[1] < w[0]) && last < 1e-4 * partial {
        let q = last / tail[1];
        let rest = if q < 1.0 { last * q / (1.0 - q) } else { 0.0 };
        GIntegrability {
            verdict: Integrability::Yes,
            estimate: partial + rest,
            increments,
        }
    } else if tail.len() == 3 && tail.windows(2).all(|w| w[1] >= w[0]) {
        GIntegrability {
            verdict: Integrability::No,
            estimate: partial,
            increments,
        }
    } else {
        GIntegrability {
            verdict: Integrability::Unknown,
            estimate: partial,
            increments,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ReflectError {
    /// `ξ > 0`: nothing to reflect.
    AlreadyPositive,
    /// `g` takes both signs, vanishes, or is undefined somewhere sampled.
    MixedSigns { at: f64 },
}

impl fmt::Display for ReflectError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReflectError::AlreadyPositive => f.write_str("reflection needs ξ < 0"),
            ReflectError::MixedSigns { at } => {
                write!(f, "{} (g is not negative at t = {:?})", REJECT_SIGN, at)
            }
        }
    }
}

impl core::error::Error for ReflectError {}

/// Times at which the sign of `g` is sampled.
pub fn sign_sample_times() -> Vec<f64> {
    let mut ts = alloc::vec![0.0];
    ts.extend(
        GeometricGrid::new(1e-2, 1e8, 4)
            .points()
            .expect("valid grid"),
    );
    ts
}

/// Every sample has sign `s`, except exact zeros after the first sample
/// (underflow of a decaying g). Errors carry the first offending time.
fn sampled_sign(g: &FunctionSpec, s: f64) -> Result<(), f64> {
    for (k, t) in sign_sample_times().into_iter().enumerate() {
        match g.eval(t) {
            Ok(v) if v * s > 0.0 => {}
            Ok(v) if v == 0.0 && k > 0 => {}
            _ => return Err(t),
        }
    }
    Ok(())
}

/// `(f₋, g₋, ξ₋) = (-f(-x), -g, -ξ)`.
pub fn reflect_problem(problem: &ProblemSpec) -> Result<ProblemSpec, ReflectError> {
    if !(problem.xi < 0.0) {
        return Err(ReflectError::AlreadyPositive);
    }
    sampled_sign(&problem.g, -1.0).map_err(|at| ReflectError::MixedSigns { at })?;
    Ok(ProblemSpec {
        f: problem.f.odd_reflection(),
        g: problem.g.negated(),
        xi: -problem.xi,
        ..problem.clone()
    })
}

/// The problem with positive `ξ` and `g`, reflecting when `ξ < 0`; the flag
/// records whether it was reflected. Errors carry the rejection reason.
pub fn positive_form(problem: &ProblemSpec) -> Result<(ProblemSpec, bool), String> {
    if problem.xi > 0.0 {
        sampled_sign(&problem.g, 1.0)
            .map_err(|at| format!("{} (fails at t = {:?})", REJECT_SIGN, at))?;
        Ok((problem.clone(), false))
    } else {
        reflect_problem(problem)
            .map(|p| (p, true))
            .map_err(|e| e.to_string())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Regime {
    Preserved,
    Critical,
    Dominated,
    Rejected(String),
    Inconclusive(String),
}

impl Regime {
    pub fn tag(&self) -> &'static str {
        match self {
            Regime::Preserved => "Preserved",
            Regime::Critical => "Critical",
            Regime::Dominated => "Dominated",
            Regime::Rejected(_) => "Rejected",
            Regime::Inconclusive(_) => "Inconclusive",
        }
    }

    pub fn reason(&self) -> Option<&str> {
        match self {
            Regime::Rejected(r) | Regime::Inconclusive(r) => Some(r),
            _ => None,
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.reason() {
            Some(r) => write!(f, "{}({})", self.tag(), r),
            None => f.write_str(self.tag()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RateDescriptor {
    /// `F(x(t))/t → 1`.
    FOverTToOne,
    /// `F(x(t))/t → Λ*`.
    FOverTToLambda,
    /// `f(x(t))/g(t) → 1` and `F(x(t))/t → 0`.
    FOverGToOne,
    /// `F(x(t))/t → 0` only; the exact-rate hypothesis is unverified.
    FOverTToZero,
}

impl RateDescriptor {
    pub fn as_str(self) -> &'static str {
        match self {
            RateDescriptor::FOverTToOne => "F(x(t))/t -> 1",
            RateDescriptor::FOverTToLambda => "F(x(t))/t -> lambda_star",
            RateDescriptor::FOverGToOne => "f(x(t))/g(t) -> 1, F(x(t))/t -> 0",
            RateDescriptor::FOverTToZero => "F(x(t))/t -> 0",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BetaSource {
    Hint,
    Estimated,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnvelopeStatus {
    /// `f` sampled increasing on `(0, 1e-2]`; not a proof.
    SampledMonotone,
    NotMonotone,
    /// Taken on trust via the problem flag.
    Assumed,
}

impl EnvelopeStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            EnvelopeStatus::SampledMonotone => "sampled-monotone",
            EnvelopeStatus::NotMonotone => "not-monotone",
            EnvelopeStatus::Assumed => "assumed",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegimeReport {
    pub regime: Regime,
    /// Index of `f` at zero actually used.
    pub beta: Option<f64>,
    pub beta_source: Option<BetaSource>,
    /// Estimate of the index at zero, computed even when a hint is given.
    pub beta_estimate: Option<IndexEstimate>,
    pub rapid: bool,
    /// `θ` with `g ∈ RV_∞(-θ)`; `+∞` for rapid decay.
    pub theta: Option<f64>,
    pub g_index: Option<IndexEstimate>,
    pub limit: Option<LimitEstimate>,
    pub lambda_star: Option<f64>,
    pub predicted_rate: Option<RateDescriptor>,
    /// Predicted `lim x(t)/F⁻¹(t)`.
    pub x_over_y_limit: Option<f64>,
    /// Predicted index of `x` at infinity in the Preserved and Critical
    /// regimes (`-1/(β-1)`).
    pub solution_index: Option<f64>,
    pub g_integrable: Option<GIntegrability>,
    pub envelope: Option<EnvelopeStatus>,
    /// The problem was classified through its sign reflection.
    pub reflected: bool,
    pub warnings: Vec<String>,
    pub notes: Vec<String>,
}

impl RegimeReport {
    fn rejected(reason: impl Into<String>) -> Self {
        RegimeReport {
            regime: Regime::Rejected(reason.into()),
            beta: None,
            beta_source: None,
            beta_estimate: None,
            rapid: false,
            theta: None,
            g_index: None,
            limit: None,
            lambda_star: None,
            predicted_rate: None,
            x_over_y_limit: None,
            solution_index: None,
            g_integrable: None,
            envelope: None,
            reflected: false,
            warnings: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn is_definite(&self) -> bool {
        matches!(
            self.regime,
            Regime::Preserved | Regime::Critical | Regime::Dominated
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassifySettings {
    pub limit: LimitGrid,
    pub zero_grid: GeometricGrid,
    pub infinity_grid: GeometricGrid,
    /// Horizon for the integrability test of `g`.
    pub integrability_horizon: f64,
    pub quad_tolerance: f64,
}

impl Default for ClassifySettings {
    fn default() -> Self {
        ClassifySettings {
            limit: LimitGrid::default(),
            zero_grid: GeometricGrid::ZERO_SIDE,
            infinity_grid: GeometricGrid::INFINITY_SIDE,
            integrability_horizon: 1e8,
            quad_tolerance: 1e-10,
        }
    }
}

pub fn classify(problem: &ProblemSpec) -> RegimeReport {
    classify_with(problem, &ClassifySettings::default())
}

pub fn classify_with(problem: &ProblemSpec, settings: &ClassifySettings) -> RegimeReport {
    if let Err(e) = problem.validate() {
        return RegimeReport::rejected(e.to_string());
    }
    let (problem, reflected) = match positive_form(problem) {
        Ok(p) => p,
        Err(reason) => return RegimeReport::rejected(reason),
    };
    let mut report = analyse(&problem, settings);
    report.reflected = reflected;
    if reflected {
        report
            .notes
            .push("classified through the reflection x -> -x".to_string());
    }
    report
}

fn positive_below(f: &FunctionSpec, upper: f64) -> Result<(), String> {
    let mut pts = GeometricGrid::new(upper, 1e-8, 8)
        .points()
        .unwrap_or_default();
    pts.extend([1e-12, 1e-50, 1e-100]);
    let (kept, _) = rvkit::sample_positive(&pts, |x| f.eval(x)).map_err(|e| e.to_string())?;
    if kept.len() < 3 {
        return Err("f must be positive on (0, ξ]".to_string());
    }
    Ok(())
}

fn envelope(f: &FunctionSpec) -> EnvelopeStatus {
    let pts = GeometricGrid::new(1e-2, 1e-8, 8)
        .points()
        .unwrap_or_default();
    let vals: Vec<f64> = pts.iter().map(|x| f.eval(*x).unwrap_or(f64::NAN)).collect();
    if vals.windows(2).all(|w| w[1] <= w[0]) {
        EnvelopeStatus::SampledMonotone
    } else {
        EnvelopeStatus::NotMonotone
    }
}

fn analyse(problem: &ProblemSpec, settings: &ClassifySettings) -> RegimeReport {
    let f = &problem.f;
    let g = &problem.g;
    if let Err(reason) = positive_below(f, problem.xi) {
        return RegimeReport::rejected(reason);
    }
    let mut report = RegimeReport::rejected("");

    // Index of f at zero.
    let estimate = match rvkit::estimate_index_at_zero(f, &settings.zero_grid) {
        Ok(e) => e,
        Err(e) => return RegimeReport::rejected(e.to_string()),
    };
    let rapid = estimate.verdict == IndexVerdict::RapidUp;
    report.rapid = rapid;
    let beta = match (problem.beta_hint, estimate.verdict) {
        (Some(b), verdict) => {
            if rapid {
                report
                    .warnings
                    .push(format!("β hint {} ignored: f is rapidly varying at 0", b));
            } else if let IndexVerdict::Regular(e) = verdict {
                if libm::fabs(e - b) > 0.05 * libm::fabs(b) {
                    report.warnings.push(format!(
                        "β hint {} differs from the estimate {:.6} by more than 5%",
                        b, e
                    ));
                }
            }
            report.beta_source = Some(BetaSource::Hint);
            Some(b)
        }
        (None, IndexVerdict::Regular(e)) => {
            report.beta_source = Some(BetaSource::Estimated);
            Some(e)
        }
        (None, IndexVerdict::RapidUp) => None,
        (None, _) => {
            report.regime = Regime::Inconclusive("index of f at 0 is inconclusive".into());
            report.beta_estimate = Some(estimate);
            return report;
        }
    };
    let in_scope = rapid
        || match (problem.beta_hint, beta) {
            (Some(b), _) => b > 1.0,
            (None, Some(b)) => b - 1.0 > libm::fmax(estimate.uncertainty, 0.05),
            _ => false,
        };
    report.beta = if rapid { Some(f64::INFINITY) } else { beta };
    report.beta_estimate = Some(estimate);
    if !in_scope {
        report.regime = Regime::Rejected(REJECT_SCOPE.into());
        return report;
    }
    report.envelope = Some(if problem.flags.monotone_envelope_assumed {
        EnvelopeStatus::Assumed
    } else {
        envelope(f)
    });

    // Index of g at infinity.
    let g_index = rvkit::estimate_index_at_infinity(g, &settings.infinity_grid).ok();
    report.theta = problem.theta_hint.or_else(|| {
        g_index.as_ref().and_then(|e| match e.verdict {
            IndexVerdict::Regular(i) => Some(-i),
            IndexVerdict::RapidDown => Some(f64::INFINITY),
            _ => None,
        })
    });
    report.g_index = g_index;

    let fm = FlowMap::new(f.clone())
        .with_tolerance(settings.quad_tolerance)
        .with_beta_hint(if rapid { None } else { beta });
    let limit = match estimate_L(g, &fm, &settings.limit) {
        Ok(l) => l,
        Err(LimitError::Flow {
            source: e @ FlowError::NoBlowUp { .. },
            ..
        }) => {
            report.regime = Regime::Rejected(e.to_string());
            return report;
        }
        Err(LimitError::NonPositiveG { at, value }) => {
            report.regime = Regime::Rejected(format!("{}: g({:?}) = {:?}", REJECT_SIGN, at, value));
            return report;
        }
        Err(e) => {
            report.regime = Regime::Inconclusive(e.to_string());
            return report;
        }
    };
    let b = beta.unwrap_or(f64::INFINITY);
    match limit.verdict {
        LimitVerdict::Zero => {
            report.regime = Regime::Preserved;
            report.lambda_star = Some(1.0);
            report.predicted_rate = Some(RateDescriptor::FOverTToOne);
            report.x_over_y_limit = Some(1.0);
        }
        LimitVerdict::Finite(l) => match lambda_star(l, b, rapid) {
            Ok(ls) => {
                report.regime = Regime::Critical;
                report.lambda_star = Some(ls);
                report.predicted_rate = Some(RateDescriptor::FOverTToLambda);
                report.x_over_y_limit = Some(if rapid {
                    1.0
                } else {
                    libm::pow(ls, -1.0 / (b - 1.0))
                });
            }
            Err(e) => report.regime = Regime::Inconclusive(e.to_string()),
        },
        LimitVerdict::Infinite => {
            report.regime = Regime::Dominated;
            let theta_positive = report.theta.is_some_and(|t| t > 0.0);
            let exact = !rapid && (theta_positive || problem.flags.g_asymptotically_decreasing);
            report.predicted_rate = Some(if exact {
                RateDescriptor::FOverGToOne
            } else {
                RateDescriptor::FOverTToZero
            });
        }
        LimitVerdict::Inconclusive => {
            report.regime = Regime::Inconclusive("g/(f∘F⁻¹) has no settled limit".into());
        }
    }
    report.limit = Some(limit);
    if matches!(report.regime, Regime::Preserved | Regime::Critical) {
        if rapid {
            report.solution_index = Some(0.0);
        } else {
            report.solution_index = Some(-1.0 / (b - 1.0));
            report.notes.push(format!(
                "solution index {} = -1/(β-1), since x(t)/F⁻¹(t) tends to a constant",
                -1.0 / (b - 1.0)
            ));
        }
    }
    report.g_integrable = Some(integrable_g(g, settings.integrability_horizon));
    report
}
