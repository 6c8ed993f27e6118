//! Empirical rate curves and the built-in corpus of closed-form examples.

mod corpus;
mod run;

pub use corpus::{corpus, Check, CorpusEntry, Expect, Mode};
pub use run::{
    lambda_sweep, run_corpus, run_entry, Assertion, CorpusReport, EntryReport, RunOptions,
    SweepPoint, UnknownEntry,
};

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::accel;
use crate::exprdsl::FunctionSpec;
use crate::flowmap::FlowMap;
use crate::integrator::{Trajectory, Verdict};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Functional {
    /// `F(x(t))/t`
    FOverT,
    /// `f(x(t))/g(t)`
    FOverG,
    /// `x(t)/F⁻¹(t)`
    XOverFinv,
}

impl Functional {
    pub fn as_str(self) -> &'static str {
        match self {
            Functional::FOverT => "F(x)/t",
            Functional::FOverG => "f(x)/g",
            Functional::XOverFinv => "x/F^-1(t)",
        }
    }
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CurveError {
    /// The trajectory left every bounded set.
    Escaped,
    /// Fewer than three usable checkpoints.
    TooShort(usize),
}

impl fmt::Display for CurveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CurveError::Escaped => f.write_str("trajectory escapes; no rate curve"),
            CurveError::TooShort(n) => write!(f, "only {} usable checkpoints", n),
        }
    }
}

impl core::error::Error for CurveError {}

/// A functional of the solution sampled at the checkpoints, with an
/// extrapolated limit.
#[derive(Clone, Debug, PartialEq)]
pub struct RateCurve {
    pub functional: Functional,
    pub points: Vec<(f64, f64)>,
    pub limit: f64,
    /// Spread of the three points the limit is extrapolated from.
    pub uncertainty: f64,
    pub warnings: Vec<String>,
}

impl RateCurve {
    fn build(
        functional: Functional,
        points: Vec<(f64, f64)>,
        warnings: Vec<String>,
    ) -> Result<Self, CurveError> {
        if points.len() < 3 {
            return Err(CurveError::TooShort(points.len()));
        }
        let (limit, uncertainty) = extrapolate(&points);
        Ok(RateCurve {
            functional,
            points,
            limit,
            uncertainty,
            warnings,
        })
    }

    pub fn at(&self, t: f64) -> Option<f64> {
        self.points
            .iter()
            .find(|(s, _)| libm::fabs(s - t) <= 1e-12 * libm::fmax(t, 1.0))
            .map(|p| p.1)
    }

    pub fn last(&self) -> (f64, f64) {
        self.points[self.points.len() - 1]
    }

    /// Whether `value` lies within `limit ± (uncertainty + tol)`.
    pub fn limit_matches(&self, value: f64, tol: f64) -> bool {
        libm::fabs(self.limit - value) <= self.uncertainty + tol
    }
}

fn nearest(points: &[(f64, f64)], t: f64) -> usize {
    let lt = libm::log(t);
    let mut best = 0;
    for (i, p) in points.iter().enumerate() {
        if libm::fabs(libm::log(p.0) - lt) < libm::fabs(libm::log(points[best].0) - lt) {
            best = i;
        }
    }
    best
}

/// Aitken over the values nearest `T/4`, `T/2`, `T`, clamped to the hull
/// of those three widened by their spread.
fn extrapolate(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len();
    let t_end = points[n - 1].0;
    let mut idx = [
        nearest(points, 0.25 * t_end),
        nearest(points, 0.5 * t_end),
        n - 1,
    ];
    if idx[0] == idx[1] || idx[1] == idx[2] {
        idx = [n - 3, n - 2, n - 1];
    }
    let s = idx.map(|i| points[i].1);
    let lo = s.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = hi - lo;
    let raw = accel::aitken(s[0], s[1], s[2]).unwrap_or(s[2]);
    (raw.clamp(lo - spread, hi + spread), spread)
}

fn usable(traj: &Trajectory) -> Result<impl Iterator<Item = (f64, f64)> + '_, CurveError> {
    if traj.verdict == Verdict::Escapes {
        return Err(CurveError::Escaped);
    }
    Ok(traj.points.iter().copied().filter(|(t, _)| *t > 0.0))
}

/// `F(x(t))/t` at every checkpoint. Points where `F` cannot be evaluated end
/// the curve with a warning.
pub fn empirical_rate_curve(traj: &Trajectory, fm: &FlowMap) -> Result<RateCurve, CurveError> {
    let mut pts = Vec::new();
    let mut warnings = Vec::new();
    for (t, x) in usable(traj)? {
        match fm.compute_F(libm::fabs(x)) {
            Ok(v) => pts.push((t, v / t)),
            Err(e) => {
                warnings.push(format!("curve truncated at t = {:?}: {}", t, e));
                break;
            }
        }
    }
    RateCurve::build(Functional::FOverT, pts, warnings)
}

/// `f(x(t))/g(t)` at every checkpoint.
pub fn empirical_g_ratio(
    traj: &Trajectory,
    f: &FunctionSpec,
    g: &FunctionSpec,
) -> Result<RateCurve, CurveError> {
    let mut pts = Vec::new();
    let mut warnings = Vec::new();
    for (t, x) in usable(traj)? {
        match (f.eval(x), g.eval(t)) {
            (Ok(fx), Ok(gt)) if gt != 0.0 => pts.push((t, fx / gt)),
            (Ok(_), Ok(_)) => {
                warnings.push(format!("g vanishes at t = {:?}", t));
                break;
            }
            (Err(e), _) | (_, Err(e)) => {
                warnings.push(format!("curve truncated at t = {:?}: {}", t, e));
                break;
            }
        }
    }
    RateCurve::build(Functional::FOverG, pts, warnings)
}

/// `|x(t)|/F⁻¹(t)` at every checkpoint.
pub fn empirical_xy_ratio(traj: &Trajectory, fm: &FlowMap) -> Result<RateCurve, CurveError> {
    let mut pts = Vec::new();
    let mut warnings = Vec::new();
    for (t, x) in usable(traj)? {
        match fm.invert_F(t) {
            Ok(y) => pts.push((t, libm::fabs(x) / y)),
            Err(e) => {
                warnings.push(format!("curve truncated at t = {:?}: {}", t, e));
                break;
            }
        }
    }
    RateCurve::build(Functional::XOverFinv, pts, warnings)
}
