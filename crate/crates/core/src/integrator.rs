//! Long-horizon integration of `x' = -f(x) + g(t)`.
//!
//! Dormand-Prince 5(4) with the standard PI-free step controller and the
//! fourth-order continuous extension, sampled onto a geometric checkpoint
//! grid.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::exprdsl::{numeric_derivative, DomainKind, DomainViolation, FunctionSpec, Role};
use crate::grid::decade_point;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Flags {
    /// `g` is asymptotic to a decreasing function (not checkable from samples).
    pub g_asymptotically_decreasing: bool,
    /// Accept the monotone-envelope hypothesis on `f` without sampling it.
    pub monotone_envelope_assumed: bool,
}

/// The initial value problem `x' = -f(x) + g(t)`, `x(0) = xi`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec {
    pub f: FunctionSpec,
    pub g: FunctionSpec,
    pub xi: f64,
    pub beta_hint: Option<f64>,
    pub theta_hint: Option<f64>,
    pub flags: Flags,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProblemError {
    WrongRole(&'static str),
    BadInitialValue(f64),
    /// `f(0)` evaluates to something other than zero.
    NonZeroAtOrigin(f64),
    /// `f` is undefined at zero and does not vanish next to it.
    NotVanishingNearOrigin {
        at: f64,
        value: Option<f64>,
    },
    InvalidControl(&'static str),
}

impl fmt::Display for ProblemError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemError::WrongRole(which) => write!(f, "{} has the wrong free variable", which),
            ProblemError::BadInitialValue(v) => {
                write!(f, "xi must be finite and non-zero, got {:?}", v)
            }
            ProblemError::NonZeroAtOrigin(v) => write!(f, "f(0) must be 0, got {:?}", v),
            ProblemError::NotVanishingNearOrigin { at, value } => match value {
                Some(v) => write!(f, "f(0) must be 0, but f({:e}) = {:?}", at, v),
                None => write!(f, "f(0) must be 0, but f is undefined near {:e}", at),
            },
            ProblemError::InvalidControl(what) => f.write_str(what),
        }
    }
}

impl core::error::Error for ProblemError {}

impl ProblemSpec {
    pub fn new(f: FunctionSpec, g: FunctionSpec, xi: f64) -> Self {
        ProblemSpec {
            f,
            g,
            xi,
            beta_hint: None,
            theta_hint: None,
            flags: Flags::default(),
        }
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta_hint = Some(beta);
        self
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta_hint = Some(theta);
        self
    }

    pub fn with_flags(mut self, flags: Flags) -> Self {
        self.flags = flags;
        self
    }

    /// Checks roles, `xi` and `f(0) = 0`. When `f(0)` itself is undefined
    /// (e.g. `exp(-1/|x|)`), `f(±1e-100)` and `f(±1e-200)` must be tiny
    /// wherever defined, and defined on the side of `xi`.
    pub fn validate(&self) -> Result<(), ProblemError> {
        if self.f.role() != Role::State {
            return Err(ProblemError::WrongRole("f"));
        }
        if self.g.role() != Role::Time {
            return Err(ProblemError::WrongRole("g"));
        }
        if !(self.xi.is_finite() && self.xi != 0.0) {
            return Err(ProblemError::BadInitialValue(self.xi));
        }
        match self.f.eval(0.0) {
            Ok(0.0) => Ok(()),
            Ok(v) => Err(ProblemError::NonZeroAtOrigin(v)),
            Err(_) => {
                for at in [1e-100, -1e-100, 1e-200, -1e-200] {
                    match self.f.eval(at) {
                        Ok(v) if libm::fabs(v) <= 1e-50 => {}
                        Ok(v) => {
                            return Err(ProblemError::NotVanishingNearOrigin { at, value: Some(v) })
                        }
                        // Only the side the solution lives on has to exist.
                        Err(_) if at * self.xi < 0.0 => {}
                        Err(_) => {
                            return Err(ProblemError::NotVanishingNearOrigin { at, value: None })
                        }
                    }
                }
                Ok(())
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Controls {
    pub horizon: f64,
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: u64,
    pub checkpoints_per_decade: u32,
    /// First positive checkpoint.
    pub first_checkpoint: f64,
    /// Smallest step, relative to `max(t, 1)`, before the positivity guard
    /// gives up and clamps.
    pub min_step: f64,
    /// Value `|x|` is clamped to when the guard gives up.
    pub floor: f64,
    pub positivity_guard: bool,
}

impl Default for Controls {
    fn default() -> Self {
        Controls {
            horizon: 1e6,
            rtol: 1e-9,
            atol: 1e-20,
            max_steps: 50_000_000,
            checkpoints_per_decade: 32,
            first_checkpoint: 1e-2,
            min_step: 1e-14,
            floor: f64::MIN_POSITIVE,
            positivity_guard: true,
        }
    }
}

impl Controls {
    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn validate(&self) -> Result<(), ProblemError> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.horizon) {
            return Err(ProblemError::InvalidControl("horizon must be positive"));
        }
        if !positive(self.rtol) || !positive(self.atol) {
            return Err(ProblemError::InvalidControl("tolerances must be positive"));
        }
        if self.checkpoints_per_decade == 0 || !positive(self.first_checkpoint) {
            return Err(ProblemError::InvalidControl(
                "checkpoint grid must be non-empty",
            ));
        }
        if !positive(self.min_step) || !positive(self.floor) {
            return Err(ProblemError::InvalidControl("step floor must be positive"));
        }
        Ok(())
    }

    /// `0`, then `10^(j/n)` from the first checkpoint up to the horizon,
    /// then the horizon itself.
    pub fn checkpoint_times(&self) -> Vec<f64> {
        let n = self.checkpoints_per_decade;
        let mut out = alloc::vec![0.0];
        let mut j = libm::ceil(libm::log10(self.first_checkpoint) * n as f64) as i32;
        loop {
            let t = decade_point(j, n);
            if t >= self.horizon * (1.0 - 1e-12) {
                break;
            }
            if t > 0.0 && t >= self.first_checkpoint * (1.0 - 1e-12) {
                out.push(t);
            }
            j += 1;
        }
        out.push(self.horizon);
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    ConvergesToZero,
    Escapes,
    Undetermined,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::ConvergesToZero => "ConvergesToZero",
            Verdict::Escapes => "Escapes",
            Verdict::Undetermined => "Undetermined",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: u64,
    pub rejected: u64,
    /// Rejections caused by the positivity guard alone.
    pub sign_rejections: u64,
    pub clamps: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Termination {
    Horizon,
    StepBudget,
    /// `f` or `g` overflowed at this time.
    Overflow {
        t: f64,
    },
    /// The right-hand side left its domain and no smaller step helped.
    Domain {
        t: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    /// `(t, x)` at the checkpoints reached, starting with `(0, xi)`.
    pub points: Vec<(f64, f64)>,
    pub stats: StepStats,
    pub verdict: Verdict,
    pub termination: Termination,
    pub controls: Controls,
    pub xi: f64,
    pub warnings: Vec<String>,
}

impl Trajectory {
    pub fn last(&self) -> (f64, f64) {
        *self
            .points
            .last()
            .expect("trajectory always has its initial point")
    }

    /// `x` at the checkpoint closest to `t` (exact match expected).
    pub fn at(&self, t: f64) -> Option<f64> {
        self.points
            .iter()
            .find(|(s, _)| libm::fabs(s - t) <= 1e-12 * libm::fmax(t, 1.0))
            .map(|p| p.1)
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Debug)]
enum RhsError {
    Overflow,
    Domain,
}

struct Rhs<'a> {
    f: &'a FunctionSpec,
    g: &'a FunctionSpec,
}

impl Rhs<'_> {
    fn eval(&self, t: f64, x: f64) -> Result<f64, RhsError> {
        let classify = |e: DomainViolation| {
            if e.is_overflow() || e.kind == DomainKind::NonFiniteInput {
                RhsError::Overflow
            } else {
                RhsError::Domain
            }
        };
        let v = -self.f.eval(x).map_err(classify)? + self.g.eval(t).map_err(classify)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(RhsError::Overflow)
        }
    }
}

/// One Dormand-Prince step: new value, error estimate, continuous extension.
struct Step {
    x1: f64,
    err: f64,
    k7: f64,
    dense: [f64; 5],
}

fn dp_step(rhs: &Rhs, t: f64, x: f64, k1: f64, h: f64) -> Result<Step, RhsError> {
    let k2 = rhs.eval(t + C2 * h, x + h * A21 * k1)?;
    let k3 = rhs.eval(t + C3 * h, x + h * (A31 * k1 + A32 * k2))?;
    let k4 = rhs.eval(t + C4 * h, x + h * (A41 * k1 + A42 * k2 + A43 * k3))?;
    let k5 = rhs.eval(
        t + C5 * h,
        x + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4),
    )?;
    let k6 = rhs.eval(
        t + h,
        x + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5),
    )?;
    let x1 = x + h * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6);
    if !x1.is_finite() {
        return Err(RhsError::Overflow);
    }
    let k7 = rhs.eval(t + h, x1)?;
    let err = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
    let diff = x1 - x;
    let bspl = h * k1 - diff;
    let dense = [
        x,
        diff,
        bspl,
        diff - h * k7 - bspl,
        h * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7),
    ];
    Ok(Step { x1, err, k7, dense })
}

fn interpolate(d: &[f64; 5], theta: f64) -> f64 {
    let s = 1.0 - theta;
    d[0] + theta * (d[1] + s * (d[2] + theta * (d[3] + s * d[4])))
}

/// Integrates `problem` to `controls.horizon`.
pub fn integrate(problem: &ProblemSpec, controls: &Controls) -> Result<Trajectory, ProblemError> {
    problem.validate()?;
    controls.validate()?;
    let rhs = Rhs {
        f: &problem.f,
        g: &problem.g,
    };
    let sign = if problem.xi > 0.0 { 1.0 } else { -1.0 };
    let times = controls.checkpoint_times();
    let mut traj = Trajectory {
        points: alloc::vec![(0.0, problem.xi)],
        stats: StepStats::default(),
        verdict: Verdict::Undetermined,
        termination: Termination::Horizon,
        controls: *controls,
        xi: problem.xi,
        warnings: Vec::new(),
    };
    let mut next = 1;
    let (mut t, mut x) = (0.0, problem.xi);
    let mut k1 = match rhs.eval(t, x) {
        Ok(v) => v,
        Err(_) => {
            traj.termination = Termination::Overflow { t };
            traj.verdict = Verdict::Escapes;
            return Ok(traj);
        }
    };
    let scale0 = controls.atol + controls.rtol * libm::fabs(x);
    let mut h = if k1 == 0.0 {
        1e-3
    } else {
        libm::fmin(
            1e-3,
            0.01 * libm::pow(scale0, 0.2) * libm::fabs(x) / libm::fabs(k1),
        )
    };
    h = libm::fmax(h, 1e-10).min(controls.horizon);
    let mut last_rejected = false;
    while t < controls.horizon {
        if traj.stats.accepted + traj.stats.rejected >= controls.max_steps {
            traj.termination = Termination::StepBudget;
            traj.warnings.push(alloc::format!(
                "step budget of {} exhausted at t = {:?}",
                controls.max_steps,
                t
            ));
            break;
        }
        if t + h > controls.horizon || controls.horizon - (t + h) < 1e-12 * controls.horizon {
            h = controls.horizon - t;
        }
        let h_floor = controls.min_step * libm::fmax(t, 1.0);
        let step = match dp_step(&rhs, t, x, k1, h) {
            Ok(s) => s,
            Err(RhsError::Overflow) if h <= h_floor => {
                traj.termination = Termination::Overflow { t: t + h };
                break;
            }
            Err(RhsError::Domain) if h <= h_floor => {
                traj.termination = Termination::Domain { t };
                traj.warnings.push(alloc::format!(
                    "right-hand side undefined near t = {:?}, x = {:?}",
                    t,
                    x
                ));
                break;
            }
            Err(_) => {
                traj.stats.rejected += 1;
                h *= 0.5;
                last_rejected = true;
                continue;
            }
        };
        let tol = controls.atol + controls.rtol * libm::fmax(libm::fabs(x), libm::fabs(step.x1));
        let err = libm::fabs(step.err) / tol;
        if !(err <= 1.0) {
            traj.stats.rejected += 1;
            let factor = if err.is_finite() {
                libm::fmax(0.2, 0.9 * libm::pow(err, -0.2))
            } else {
                0.2
            };
            h *= factor;
            last_rejected = true;
            continue;
        }
        let mut x1 = step.x1;
        let mut k7 = step.k7;
        let mut dense = step.dense;
        if controls.positivity_guard && sign * x1 <= 0.0 {
            if h > h_floor {
                traj.stats.rejected += 1;
                traj.stats.sign_rejections += 1;
                h *= 0.5;
                last_rejected = true;
                continue;
            }
            x1 = sign * controls.floor;
            traj.stats.clamps += 1;
            if traj.stats.clamps == 1 {
                traj.warnings.push(alloc::format!(
                    "x clamped to the evaluation floor at t = {:?}",
                    t + h
                ));
            }
            k7 = match rhs.eval(t + h, x1) {
                Ok(v) => v,
                Err(_) => {
                    traj.termination = Termination::Overflow { t: t + h };
                    break;
                }
            };
            // Linear continuation over the clamped step.
            dense = [x, x1 - x, 0.0, 0.0, 0.0];
        }
        let t1 = if h == controls.horizon - t {
            controls.horizon
        } else {
            t + h
        };
        while next < times.len() && times[next] <= t1 {
            let theta = (times[next] - t) / h;
            let v = if times[next] == t1 {
                x1
            } else {
                interpolate(&dense, theta)
            };
            traj.points.push((times[next], v));
            next += 1;
        }
        traj.stats.accepted += 1;
        t = t1;
        x = x1;
        k1 = k7;
        let mut factor = libm::fmin(10.0, libm::fmax(0.2, 0.9 * libm::pow(err.max(1e-30), -0.2)));
        if last_rejected {
            factor = libm::fmin(factor, 1.0);
        }
        last_rejected = false;
        h *= factor;
    }
    traj.verdict = detect_limit(&traj);
    Ok(traj)
}

/// Classifies the tail of a trajectory.
///
/// Converges to zero when the last decade of checkpoints decreases and
/// `|x| < 1e-4·|ξ|`; escapes on overflow, or when the last decade increases
/// and `|x| > 1e4·max(|ξ|, 1)`.
pub fn detect_limit(traj: &Trajectory) -> Verdict {
    if matches!(traj.termination, Termination::Overflow { .. }) {
        return Verdict::Escapes;
    }
    let (t_end, x_end) = traj.last();
    let tail: Vec<f64> = traj
        .points
        .iter()
        .filter(|(t, _)| *t > 0.0 && *t >= 0.1 * t_end)
        .map(|(_, x)| libm::fabs(*x))
        .collect();
    if tail.len() < 2 {
        return Verdict::Undetermined;
    }
    let decreasing = tail.windows(2).all(|w| w[1] <= w[0]) && tail[tail.len() - 1] < tail[0];
    let increasing = tail.windows(2).all(|w| w[1] >= w[0]) && tail[tail.len() - 1] > tail[0];
    let x_end = libm::fabs(x_end);
    let xi = libm::fabs(traj.xi);
    if decreasing && x_end < 1e-4 * xi {
        Verdict::ConvergesToZero
    } else if increasing && x_end > 1e4 * libm::fmax(xi, 1.0) {
        Verdict::Escapes
    } else {
        Verdict::Undetermined
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResidualError {
    pub at: f64,
    pub source: DomainViolation,
}

impl fmt::Display for ResidualError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "residual check failed at t = {:?}: {}",
            self.at, self.source
        )
    }
}

impl core::error::Error for ResidualError {}

/// Relative step used for the central differences in [`residual_check`].
pub const RESIDUAL_STEP: f64 = 1e-5;

/// `max |x'(t) + f(x(t)) - g(t)| / (|f(x(t))| + |g(t)|)` over `grid`, with
/// `x'` by central differences.
pub fn residual_check(
    solution: &FunctionSpec,
    problem: &ProblemSpec,
    grid: &[f64],
) -> Result<f64, ResidualError> {
    let mut worst: f64 = 0.0;
    for &t in grid {
        let wrap = |source| ResidualError { at: t, source };
        let x = solution.eval(t).map_err(wrap)?;
        let dx = numeric_derivative(solution.ast(), t, RESIDUAL_STEP).map_err(wrap)?;
        let fx = problem.f.eval(x).map_err(wrap)?;
        let gt = problem.g.eval(t).map_err(wrap)?;
        let den = libm::fabs(fx) + libm::fabs(gt);
        let r = libm::fabs(dx + fx - gt);
        let rel = if den > 0.0 { r / den } else { r };
        worst = libm::fmax(worst, rel);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flowmap::FlowMap;

    fn problem(f: &str, g: &str, xi: f64) -> ProblemSpec {
        ProblemSpec::new(
            FunctionSpec::state(f).unwrap(),
            FunctionSpec::time(g).unwrap(),
            xi,
        )
    }

    #[test]
    fn validation() {
        assert!(problem("x^2", "0", 1.0).validate().is_ok());
        assert!(problem("sgn(x)*exp(-1/abs(x))", "0", 1.0)
            .validate()
            .is_ok());
        assert!(problem("x/log(1/x)", "0", 0.5).validate().is_ok());
        assert_eq!(
            problem("x + 1", "0", 1.0).validate(),
            Err(ProblemError::NonZeroAtOrigin(1.0))
        );
        assert!(matches!(
            problem("1/x", "0", 1.0).validate(),
            Err(ProblemError::NotVanishingNearOrigin { .. })
        ));
        assert_eq!(
            problem("x", "0", 0.0).validate(),
            Err(ProblemError::BadInitialValue(0.0))
        );
    }

    #[test]
    fn checkpoint_grid() {
        let c = Controls::default();
        let ts = c.checkpoint_times();
        assert_eq!(ts[0], 0.0);
        assert_eq!(ts[1], 1e-2);
        assert_eq!(*ts.last().unwrap(), 1e6);
        assert_eq!(ts.len(), 2 + 8 * 32);
        assert!(ts.windows(2).all(|w| w[0] < w[1]));
        assert!(ts.contains(&1e4));
        let odd = c.with_horizon(3e5).checkpoint_times();
        assert_eq!(*odd.last().unwrap(), 3e5);
    }

    #[test]
    fn dense_output_is_fourth_order() {
        // x' = -x from x = 1; one coarse step compared at interior points.
        let p = problem("x", "0", 1.0);
        let rhs = Rhs { f: &p.f, g: &p.g };
        let mid_error = |h: f64| {
            let s = dp_step(&rhs, 0.0, 1.0, -1.0, h).unwrap();
            assert_eq!(interpolate(&s.dense, 1.0), s.x1);
            libm::fabs(interpolate(&s.dense, 0.5) - libm::exp(-0.5 * h))
        };
        // Local error O(h^5): halving h divides it by about 32.
        let ratio = mid_error(0.1) / mid_error(0.05);
        assert!((25.0..40.0).contains(&ratio), "{}", ratio);
        assert!(mid_error(0.1) < 1e-8);
    }

    #[test]
    fn unperturbed_matches_flow() {
        let p = problem("x^2", "0", 1.0);
        let traj = integrate(&p, &Controls::default()).unwrap();
        let fm = FlowMap::new(p.f.clone());
        for &(t, x) in &traj.points {
            let y = fm.unperturbed_solution(1.0, t).unwrap();
            assert!((x - y).abs() <= 1e-8 * y, "t = {} x = {} y = {}", t, x, y);
        }
        assert_eq!(traj.verdict, Verdict::ConvergesToZero);
        assert_eq!(traj.stats.clamps, 0);
    }

    #[test]
    fn lgt0_closed_form() {
        let p = problem("x^2", "2*(2+t)^-2", 1.0);
        let traj = integrate(&p, &Controls::default()).unwrap();
        for &(t, x) in &traj.points {
            let exact = 2.0 / (2.0 + t);
            assert!((x - exact).abs() <= 1e-6 * exact, "t = {}", t);
        }
    }

    #[test]
    fn step_budget_is_reported() {
        let p = problem("x^2", "0", 1.0);
        let c = Controls {
            max_steps: 50,
            ..Controls::default()
        };
        let traj = integrate(&p, &c).unwrap();
        assert_eq!(traj.termination, Termination::StepBudget);
        assert_eq!(traj.verdict, Verdict::Undetermined);
        assert!(traj.last().0 < 1e6);
    }

    #[test]
    fn overflow_means_escape() {
        // x' = x² blows up at t = 1.
        let p = problem("-signed_pow(2)", "0", 1.0);
        let traj = integrate(&p, &Controls::default().with_horizon(10.0)).unwrap();
        assert_eq!(traj.verdict, Verdict::Escapes);
        match traj.termination {
            Termination::Overflow { t } => assert!((t - 1.0).abs() < 1e-3, "{}", t),
            ref other => panic!("{:?}", other),
        }
    }

    #[test]
    fn residuals() {
        let p = problem("x^2", "2*(2+t)^-2", 1.0);
        let grid = crate::grid::GeometricGrid::new(1e-2, 1e6, 4)
            .points()
            .unwrap();
        let good = FunctionSpec::time("2*(2+t)^-1").unwrap();
        assert!(residual_check(&good, &p, &grid).unwrap() <= 1e-6);
        let bad = FunctionSpec::time("(1+t)^-1").unwrap();
        assert!(residual_check(&bad, &p, &grid).unwrap() > 0.1);
        let undefined = FunctionSpec::time("log(t - 5)").unwrap();
        let err = residual_check(&undefined, &p, &grid).unwrap_err();
        assert!(err.at <= 5.0);
    }
}
