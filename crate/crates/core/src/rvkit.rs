//! Regular-variation indices from log-log slopes.
//!
//! The index of `h` at a point of accumulation (zero or infinity) is read
//! off as the slope of `log h` against `log x`. Slopes are fitted by least
//! squares one decade at a time and the last three decade slopes are
//! Aitken-extrapolated, which removes most of the bias from slowly varying
//! factors such as `log(1/x)`.

use alloc::vec::Vec;
use core::fmt;

use crate::accel;
use crate::exprdsl::{DomainViolation, FunctionSpec};
use crate::flowmap::{FlowError, FlowMap};
use crate::grid::{GeometricGrid, GridError};

/// Local slopes beyond this magnitude, still growing, mean rapid variation.
pub const RAPID_CUTOFF: f64 = 50.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum IndexVerdict {
    Regular(f64),
    /// Rapidly varying with index `+∞`.
    RapidUp,
    /// Rapidly varying with index `-∞`.
    RapidDown,
    Inconclusive,
}

impl IndexVerdict {
    pub fn is_rapid(self) -> bool {
        matches!(self, IndexVerdict::RapidUp | IndexVerdict::RapidDown)
    }
}

impl fmt::Display for IndexVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexVerdict::Regular(i) => write!(f, "regular({})", i),
            IndexVerdict::RapidUp => f.write_str("rapid(+inf)"),
            IndexVerdict::RapidDown => f.write_str("rapid(-inf)"),
            IndexVerdict::Inconclusive => f.write_str("inconclusive"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndexEstimate {
    /// `±∞` for a rapid verdict.
    pub index: f64,
    pub uncertainty: f64,
    /// Points actually used (after underflow truncation).
    pub grid: Vec<f64>,
    pub verdict: IndexVerdict,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RvError {
    Grid(GridError),
    WrongDirection,
    TooFewPoints(usize),
    NonPositive { at: f64, value: f64 },
    Eval(DomainViolation),
    InvalidArgument(&'static str),
}

impl fmt::Display for RvError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RvError::Grid(e) => e.fmt(f),
            RvError::WrongDirection => f.write_str("grid must run toward the limit point"),
            RvError::TooFewPoints(n) => write!(f, "need at least 6 grid points, got {}", n),
            RvError::NonPositive { at, value } => {
                write!(
                    f,
                    "function must be positive on the grid: h({:?}) = {:?}",
                    at, value
                )
            }
            RvError::Eval(e) => e.fmt(f),
            RvError::InvalidArgument(what) => f.write_str(what),
        }
    }
}

impl core::error::Error for RvError {}

impl From<GridError> for RvError {
    fn from(e: GridError) -> Self {
        RvError::Grid(e)
    }
}

impl From<DomainViolation> for RvError {
    fn from(e: DomainViolation) -> Self {
        RvError::Eval(e)
    }
}

/// Samples `h` on `points`, dropping an underflowed tail.
///
/// A zero is accepted as underflow (and ends the sample) only when the
/// three preceding values decrease strictly and the last one is below
/// `1e-150`; any other non-positive value is an error.
pub fn sample_positive(
    points: &[f64],
    mut h: impl FnMut(f64) -> Result<f64, DomainViolation>,
) -> Result<(Vec<f64>, Vec<f64>), RvError> {
    let mut xs = Vec::with_capacity(points.len());
    let mut vs: Vec<f64> = Vec::with_capacity(points.len());
    for &p in points {
        let v = h(p)?;
        if v > 0.0 {
            xs.push(p);
            vs.push(v);
            continue;
        }
        let n = vs.len();
        let underflow = v == 0.0
            && n >= 3
            && vs[n - 3] > vs[n - 2]
            && vs[n - 2] > vs[n - 1]
            && vs[n - 1] < 1e-150;
        if underflow {
            break;
        }
        return Err(RvError::NonPositive { at: p, value: v });
    }
    Ok((xs, vs))
}

fn ols_slope(lx: &[f64], ly: &[f64]) -> f64 {
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in lx.iter().zip(ly) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    sxy / sxx
}

/// Index estimate from positive samples `(xs, vs)` along a geometric grid.
pub fn index_from_samples(xs: &[f64], vs: &[f64], points_per_decade: u32) -> IndexEstimate {
    let lx: Vec<f64> = xs.iter().map(|x| libm::log(*x)).collect();
    let ly: Vec<f64> = vs.iter().map(|v| libm::log(*v)).collect();
    let grid = xs.to_vec();
    let n = lx.len();

    // Rapid variation: local slopes keep growing past the cutoff.
    let local: Vec<f64> = (1..n)
        .map(|i| (ly[i] - ly[i - 1]) / (lx[i] - lx[i - 1]))
        .collect();
    if local.len() >= 3 {
        let tail = &local[local.len() - 3..];
        let last = tail[2];
        let same_sign = tail.iter().all(|s| s.signum() == last.signum());
        let growing = tail.windows(2).all(|w| libm::fabs(w[1]) > libm::fabs(w[0]));
        if same_sign && growing && libm::fabs(last) > RAPID_CUTOFF {
            let up = last > 0.0;
            return IndexEstimate {
                index: if up { f64::INFINITY } else { f64::NEG_INFINITY },
                uncertainty: 0.0,
                grid,
                verdict: if up {
                    IndexVerdict::RapidUp
                } else {
                    IndexVerdict::RapidDown
                },
            };
        }
    }

    if n < 2 {
        return IndexEstimate {
            index: f64::NAN,
            uncertainty: f64::INFINITY,
            grid,
            verdict: IndexVerdict::Inconclusive,
        };
    }
    let step = points_per_decade.max(2) as usize;
    let mut slopes = Vec::new();
    let mut start = 0;
    while start + 1 < n {
        let end = (start + step).min(n - 1);
        if end - start + 1 >= 3 || slopes.is_empty() {
            slopes.push(ols_slope(&lx[start..=end], &ly[start..=end]));
        }
        start = end;
    }
    let last = *slopes.last().unwrap_or(&f64::NAN);
    let index = accel::tail_limit(&slopes).unwrap_or(last);
    let uncertainty = libm::fabs(index - last);
    let conclusive =
        index.is_finite() && n >= 6 && uncertainty <= 0.1 * libm::fmax(libm::fabs(index), 1.0);
    IndexEstimate {
        index,
        uncertainty,
        grid,
        verdict: if conclusive {
            IndexVerdict::Regular(index)
        } else {
            IndexVerdict::Inconclusive
        },
    }
}

fn estimate(
    h: &FunctionSpec,
    grid: &GeometricGrid,
    toward_zero: bool,
) -> Result<IndexEstimate, RvError> {
    if (grid.end < grid.start) != toward_zero {
        return Err(RvError::WrongDirection);
    }
    let points = grid.points()?;
    if points.len() < 6 {
        return Err(RvError::TooFewPoints(points.len()));
    }
    let (xs, vs) = sample_positive(&points, |p| h.eval(p))?;
    Ok(index_from_samples(&xs, &vs, grid.points_per_decade))
}

/// Index of `f ∈ RV₀(β)` on a decreasing grid in `(0, 1)`.
pub fn estimate_index_at_zero(
    f: &FunctionSpec,
    grid: &GeometricGrid,
) -> Result<IndexEstimate, RvError> {
    if grid.start >= 1.0 {
        return Err(RvError::InvalidArgument(
            "zero-side grid must lie in (0, 1)",
        ));
    }
    estimate(f, grid, true)
}

/// Index of `h ∈ RV_∞(α)` on an increasing grid.
pub fn estimate_index_at_infinity(
    h: &FunctionSpec,
    grid: &GeometricGrid,
) -> Result<IndexEstimate, RvError> {
    estimate(h, grid, false)
}

/// `F(x)·(β-1)·f(x)/x - 1`, which tends to zero for `f ∈ RV₀(β)`.
pub fn karamata_residual(fm: &FlowMap, beta: f64, x: f64) -> Result<f64, FlowError> {
    if !(beta > 1.0) {
        return Err(FlowError::InvalidArgument("Karamata residual needs β > 1"));
    }
    let big_f = fm.compute_F(x)?;
    let fx = fm.f().eval(x)?;
    Ok(big_f * (beta - 1.0) * fx / x - 1.0)
}

/// `h(λt)/h(t)` at each grid point.
pub fn scaling_ratio_curve(
    h: &FunctionSpec,
    lambda: f64,
    points: &[f64],
) -> Result<Vec<f64>, RvError> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(RvError::InvalidArgument("λ must be positive"));
    }
    points
        .iter()
        .map(|&t| {
            let base = positive(h, t)?;
            if lambda == 1.0 {
                return Ok(1.0);
            }
            Ok(positive(h, lambda * t)? / base)
        })
        .collect()
}

/// `h(t - c)/h(t)` at each grid point.
pub fn shift_ratio_curve(h: &FunctionSpec, c: f64, points: &[f64]) -> Result<Vec<f64>, RvError> {
    points
        .iter()
        .map(|&t| Ok(positive(h, t - c)? / positive(h, t)?))
        .collect()
}

fn positive(h: &FunctionSpec, t: f64) -> Result<f64, RvError> {
    let v = h.eval(t)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(RvError::NonPositive { at: t, value: v })
    }
}
