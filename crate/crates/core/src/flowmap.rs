//! `F(x) = ∫_x^1 du/f(u)`, its inverse and the unperturbed flow.
//!
//! `F` is accumulated panel by panel over the dyadic nodes `2^-k`
//! (and `2^k` above one), so every panel spans a factor of two in `u`
//! however small `x` gets. Node values are cached and reused as brackets
//! by [`FlowMap::invert_F`].
//!
//! The cache sits behind a `RefCell`: a `FlowMap` is `Send` but not
//! `Sync`. Give each worker thread its own map (cloning is cheap).

use alloc::vec::Vec;
use core::cell::RefCell;
use core::fmt;

use crate::exprdsl::{DomainViolation, FunctionSpec};
use crate::quad::{self, QuadError, QuadSettings};

/// Bracket expansion gives up below this `x`.
pub const X_FLOOR: f64 = 1e-300;

#[derive(Clone, Debug, PartialEq)]
pub enum FlowError {
    /// `f` was zero or negative inside the integration range.
    NonPositive {
        at: f64,
        value: f64,
    },
    /// `1/f` left the floating-point range.
    Overflow {
        at: f64,
    },
    Eval(DomainViolation),
    /// Quadrature tolerance not reached; best estimate attached.
    Quadrature {
        x: f64,
        estimate: f64,
        error: f64,
    },
    /// `F` stays below `t` down to [`X_FLOOR`].
    NoBlowUp {
        t: f64,
    },
    /// `t` is below every value `F` takes for representable `x > 1`.
    BelowRange {
        t: f64,
    },
    InvalidArgument(&'static str),
}

impl fmt::Display for FlowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlowError::NonPositive { at, value } => {
                write!(f, "f must be positive on (0, 1]: f({:?}) = {:?}", at, value)
            }
            FlowError::Overflow { at } => write!(f, "1/f overflows at {:?}", at),
            FlowError::Eval(e) => write!(f, "evaluating f: {}", e),
            FlowError::Quadrature { x, estimate, error } => write!(
                f,
                "F({:?}) did not reach tolerance (best estimate {:?} ± {:?})",
                x, estimate, error
            ),
            FlowError::NoBlowUp { t } => write!(
                f,
                "F does not blow up: F(x) < {:?} for every x down to {:e}",
                t, X_FLOOR
            ),
            FlowError::BelowRange { t } => write!(f, "no x > 1 has F(x) = {:?}", t),
            FlowError::InvalidArgument(what) => f.write_str(what),
        }
    }
}

impl core::error::Error for FlowError {}

impl From<DomainViolation> for FlowError {
    fn from(e: DomainViolation) -> Self {
        FlowError::Eval(e)
    }
}

#[derive(Clone, Debug)]
struct Cache {
    /// `below[k] = F(2^-k)`.
    below: Vec<f64>,
    /// `above[k] = F(2^k)`.
    above: Vec<f64>,
    /// Range of arguments `F` has been evaluated at.
    x_min: f64,
    x_max: f64,
}

#[derive(Clone, Debug)]
pub struct FlowMap {
    f: FunctionSpec,
    settings: QuadSettings,
    beta_hint: Option<f64>,
    cache: RefCell<Cache>,
}

fn pow2(k: i32) -> f64 {
    libm::scalbn(1.0, k)
}

impl FlowMap {
    pub fn new(f: FunctionSpec) -> Self {
        FlowMap {
            f,
            settings: QuadSettings::default(),
            beta_hint: None,
            cache: RefCell::new(Cache {
                below: alloc::vec![0.0],
                above: alloc::vec![0.0],
                x_min: 1.0,
                x_max: 1.0,
            }),
        }
    }

    /// Relative quadrature tolerance (default `1e-10`).
    pub fn with_tolerance(mut self, rel_tol: f64) -> Self {
        self.settings.rel_tol = rel_tol;
        self
    }

    /// Index of `f` at zero; seeds the inversion with the Karamata guess.
    pub fn with_beta_hint(mut self, beta: Option<f64>) -> Self {
        self.beta_hint = beta.filter(|b| *b > 1.0 && b.is_finite());
        self
    }

    pub fn f(&self) -> &FunctionSpec {
        &self.f
    }

    pub fn tolerance(&self) -> f64 {
        self.settings.rel_tol
    }

    fn reciprocal(&self, u: f64) -> Result<f64, FlowError> {
        let v = self.f.eval(u)?;
        if v <= 0.0 {
            return Err(FlowError::NonPositive { at: u, value: v });
        }
        let r = 1.0 / v;
        if r.is_finite() {
            Ok(r)
        } else {
            Err(FlowError::Overflow { at: u })
        }
    }

    /// `∫_a^b du/f(u)`.
    fn integral(&self, a: f64, b: f64) -> Result<f64, FlowError> {
        quad::integrate(|u| self.reciprocal(u), a, b, &self.settings)
            .map(|e| e.value)
            .map_err(|e| match e {
                QuadError::Integrand { source, .. } => source,
                QuadError::NotConverged(est) => FlowError::Quadrature {
                    x: a,
                    estimate: est.value,
                    error: est.error,
                },
            })
    }

    /// `F(2^-k)`, extending the cache as needed.
    fn node_below(&self, k: usize) -> Result<f64, FlowError> {
        let mut cache = self.cache.borrow_mut();
        while cache.below.len() <= k {
            let i = cache.below.len() as i32;
            let panel = self.integral(pow2(-i), pow2(-(i - 1)))?;
            let next = cache.below[i as usize - 1] + panel;
            cache.below.push(next);
        }
        Ok(cache.below[k])
    }

    /// `F(2^k)`.
    fn node_above(&self, k: usize) -> Result<f64, FlowError> {
        let mut cache = self.cache.borrow_mut();
        while cache.above.len() <= k {
            let i = cache.above.len() as i32;
            let panel = self.integral(pow2(i - 1), pow2(i))?;
            let next = cache.above[i as usize - 1] - panel;
            cache.above.push(next);
        }
        Ok(cache.above[k])
    }

    /// Smallest `j ≥ 0` with `2^-(j+1) < x ≤ 2^-j`, for `0 < x ≤ 1`.
    fn octave_below(x: f64) -> usize {
        let mut j = libm::floor(-libm::log2(x)).max(0.0) as i32;
        while j > 0 && pow2(-j) < x {
            j -= 1;
        }
        while pow2(-(j + 1)) >= x {
            j += 1;
        }
        j as usize
    }

    /// Largest `j ≥ 0` with `2^j ≤ x < 2^(j+1)`, for `x ≥ 1`.
    fn octave_above(x: f64) -> usize {
        let mut j = libm::floor(libm::log2(x)).max(0.0) as i32;
        while j > 0 && pow2(j) > x {
            j -= 1;
        }
        while pow2(j + 1) <= x {
            j += 1;
        }
        j as usize
    }

    /// `F(x) = ∫_x^1 du/f(u)`; negative for `x > 1` and exactly 0 at 1.
    #[allow(non_snake_case)]
    pub fn compute_F(&self, x: f64) -> Result<f64, FlowError> {
        if !(x > 0.0 && x.is_finite()) {
            return Err(FlowError::InvalidArgument(
                "F needs a positive finite argument",
            ));
        }
        if x == 1.0 {
            return Ok(0.0);
        }
        let v = if x < 1.0 {
            let j = Self::octave_below(x);
            let node = pow2(-(j as i32));
            self.node_below(j)? + self.integral(x, node)?
        } else {
            let j = Self::octave_above(x);
            let node = pow2(j as i32);
            self.node_above(j)? - self.integral(node, x)?
        };
        let mut c = self.cache.borrow_mut();
        c.x_min = libm::fmin(c.x_min, x);
        c.x_max = libm::fmax(c.x_max, x);
        Ok(v)
    }

    /// The `x` with `F(x) = t`. `t ≥ 0` gives `x ∈ (0, 1]`; negative `t`
    /// is inverted on the `x > 1` side when `F` reaches that low.
    #[allow(non_snake_case)]
    pub fn invert_F(&self, t: f64) -> Result<f64, FlowError> {
        if !t.is_finite() {
            return Err(FlowError::InvalidArgument("F⁻¹ needs a finite argument"));
        }
        if t == 0.0 {
            return Ok(1.0);
        }
        let (lo, hi) = if t > 0.0 {
            self.bracket_below(t)?
        } else {
            self.bracket_above(t)?
        };
        self.solve(t, lo, hi)
    }

    /// `(lo, hi)` with `F(lo) > t ≥ F(hi)`, both dyadic.
    fn bracket_below(&self, t: f64) -> Result<(f64, f64), FlowError> {
        let mut k = 0usize;
        loop {
            let x = pow2(-(k as i32 + 1));
            if x < X_FLOOR {
                return Err(FlowError::NoBlowUp { t });
            }
            match self.node_below(k + 1) {
                Ok(v) if v <= t => k += 1,
                // A failing panel this deep means 1/f is beyond any t.
                Ok(_) | Err(FlowError::Overflow { .. }) => return Ok((x, 2.0 * x)),
                Err(FlowError::NonPositive { value: 0.0, .. }) => return Ok((x, 2.0 * x)),
                Err(e) => return Err(e),
            }
        }
    }

    fn bracket_above(&self, t: f64) -> Result<(f64, f64), FlowError> {
        for k in 1..1020usize {
            match self.node_above(k) {
                Ok(v) if v <= t => {
                    let x = pow2(k as i32);
                    return Ok((0.5 * x, x));
                }
                Ok(_) => {}
                Err(FlowError::Eval(e)) if e.is_overflow() => break,
                Err(e) => return Err(e),
            }
        }
        Err(FlowError::BelowRange { t })
    }

    /// Safeguarded Newton on `F(x) - t` inside `[lo, hi]`.
    fn solve(&self, t: f64, mut lo: f64, mut hi: f64) -> Result<f64, FlowError> {
        let guess = self
            .beta_hint
            .filter(|_| t > 0.0)
            .map(|b| libm::pow((b - 1.0) * t, -1.0 / (b - 1.0)));
        let mut x = match guess {
            Some(g) if g > lo && g < hi => g,
            _ => libm::sqrt(lo) * libm::sqrt(hi),
        };
        let scale = libm::fmax(libm::fabs(t), 1.0);
        for _ in 0..200 {
            let r = match self.compute_F(x) {
                Ok(v) => v - t,
                Err(FlowError::Overflow { .. }) => f64::INFINITY,
                Err(FlowError::NonPositive { value: 0.0, .. }) => f64::INFINITY,
                Err(e) => return Err(e),
            };
            if libm::fabs(r) <= 1e-14 * scale {
                return Ok(x);
            }
            if r > 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            if hi - lo <= 1e-15 * hi {
                return Ok(x);
            }
            let newton = if r.is_finite() {
                self.f.eval(x).map(|fx| x + r * fx).unwrap_or(f64::NAN)
            } else {
                f64::NAN
            };
            x = if newton > lo && newton < hi {
                newton
            } else if hi / lo > 4.0 {
                libm::sqrt(lo) * libm::sqrt(hi)
            } else {
                0.5 * (lo + hi)
            };
        }
        Ok(x)
    }

    /// `f(F⁻¹(t))`.
    pub fn f_of_finv(&self, t: f64) -> Result<f64, FlowError> {
        let x = self.invert_F(t)?;
        Ok(self.f.eval(x)?)
    }

    /// `y(t) = F⁻¹(t + F(ζ))`, the solution of `y' = -f(y)`, `y(0) = ζ`.
    pub fn unperturbed_solution(&self, zeta: f64, t: f64) -> Result<f64, FlowError> {
        if !(zeta > 0.0 && zeta.is_finite()) {
            return Err(FlowError::InvalidArgument("ζ must be positive"));
        }
        if !(t >= 0.0) {
            return Err(FlowError::InvalidArgument("t must be non-negative"));
        }
        if t == 0.0 {
            return Ok(zeta);
        }
        self.invert_F(t + self.compute_F(zeta)?)
    }

    /// `(x_min, x_max)` covered by cached nodes and evaluated arguments.
    pub fn validity_range(&self) -> (f64, f64) {
        let c = self.cache.borrow();
        (
            libm::fmin(c.x_min, pow2(-(c.below.len() as i32 - 1))),
            libm::fmax(c.x_max, pow2(c.above.len() as i32 - 1)),
        )
    }

    /// Cached `(x, F(x))` pairs in increasing `x`.
    pub fn cached_pairs(&self) -> Vec<(f64, f64)> {
        let c = self.cache.borrow();
        let mut out: Vec<(f64, f64)> = c
            .below
            .iter()
            .enumerate()
            .rev()
            .map(|(k, v)| (pow2(-(k as i32)), *v))
            .collect();
        out.extend(
            c.above
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, v)| (pow2(k as i32), *v)),
        );
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(src: &str) -> FlowMap {
        FlowMap::new(FunctionSpec::state(src).unwrap())
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        libm::fabs(a - b) <= tol
    }

    #[test]
    fn compute_f_closed_forms() {
        let m = map("x^2");
        assert!(close(m.compute_F(0.5).unwrap(), 1.0, 1e-10));
        assert_eq!(m.compute_F(1.0).unwrap(), 0.0);
        assert!(close(m.compute_F(2.0).unwrap(), -0.5, 1e-10));
        assert!(close(m.compute_F(1e-6).unwrap(), 1e6 - 1.0, 1e-4));
        let e = map("x/log(1/x)");
        let x = libm::exp(-1.0);
        assert!(close(e.compute_F(x).unwrap(), 0.5, 1e-9));
    }

    #[test]
    fn invert_f_closed_forms() {
        let m = map("x^2");
        assert!(close(m.invert_F(1.0).unwrap(), 0.5, 1e-9));
        assert_eq!(m.invert_F(0.0).unwrap(), 1.0);
        assert!(close(m.invert_F(1e8).unwrap(), 1.0 / (1.0 + 1e8), 1e-17));
        assert!(close(m.invert_F(-0.5).unwrap(), 2.0, 1e-9));
        assert!(matches!(
            m.invert_F(-2.0),
            Err(FlowError::BelowRange { .. })
        ));
        let hinted = map("x^2").with_beta_hint(Some(2.0));
        assert!(close(
            hinted.invert_F(1e8).unwrap(),
            1.0 / (1.0 + 1e8),
            1e-17
        ));
    }

    #[test]
    fn invert_f_rapid() {
        // mpmath: F(x) = ∫_x^1 e^{1/u} du solved for F = 1e6
        let m = map("sgn(x)*exp(-1/abs(x))");
        let x = m.invert_F(1e6).unwrap();
        assert!(close(x, 0.050_870_773_865_0, 1e-9), "{}", x);
    }

    #[test]
    fn invert_f_deep_below_sqrt_min() {
        // F = log(1/x)^2/2, so F⁻¹(t) = exp(-sqrt(2t)) ≈ 6e-195 at 1e5.
        let m = map("x/log(1/x)");
        let x = m.invert_F(1e5).unwrap();
        let exact = libm::exp(-libm::sqrt(2e5));
        assert!(libm::fabs(x / exact - 1.0) < 1e-8, "{} vs {}", x, exact);
    }

    #[test]
    fn bounded_f_is_reported() {
        let m = map("sqrt(x)");
        assert!(matches!(m.invert_F(3.0), Err(FlowError::NoBlowUp { .. })));
        assert!(close(m.invert_F(1.0).unwrap(), 0.25, 1e-9));
    }

    #[test]
    fn non_positive_f_is_reported() {
        let m = map("x - 0.25");
        assert!(matches!(
            m.compute_F(0.1),
            Err(FlowError::NonPositive { .. })
        ));
        assert!(m.compute_F(0.0).is_err());
    }

    #[test]
    fn f_of_finv_and_flow() {
        let m = map("x^2");
        assert!(close(m.f_of_finv(0.0).unwrap(), 1.0, 0.0));
        assert!(close(m.f_of_finv(9.0).unwrap(), 0.01, 1e-9));
        assert!(close(m.f_of_finv(99.0).unwrap(), 1e-4, 1e-11));
        assert!(close(m.unperturbed_solution(1.0, 1.0).unwrap(), 0.5, 1e-12));
        assert!(close(m.unperturbed_solution(2.0, 0.5).unwrap(), 1.0, 1e-12));
        assert!(close(
            m.unperturbed_solution(2.0, 0.25).unwrap(),
            4.0 / 3.0,
            1e-9
        ));
        assert_eq!(m.unperturbed_solution(0.3, 0.0).unwrap(), 0.3);
    }

    #[test]
    fn cache_is_sorted_and_reproducible() {
        let m = map("x^3");
        m.compute_F(1e-3).unwrap();
        m.compute_F(5.0).unwrap();
        let pairs = m.cached_pairs();
        assert!(pairs.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 > w[1].1));
        let (lo, hi) = m.validity_range();
        assert!(lo <= 1e-3 && hi >= 5.0);
        let fresh = QuadSettings {
            rel_tol: 1e-12,
            max_intervals: 2000,
            ..QuadSettings::default()
        };
        for (x, v) in pairs {
            let direct = quad::integrate(|u| m.reciprocal(u), x, 1.0, &fresh)
                .unwrap()
                .value;
            assert!(
                close(v, direct, 10.0 * 1e-10 * libm::fabs(direct)),
                "{} {} {}",
                x,
                v,
                direct
            );
        }
    }
}
