//! Geometric sample grids.

use alloc::vec::Vec;
use core::fmt;

/// `points_per_decade` points per factor of ten between `start` and `end`
/// (either direction), both endpoints included.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeometricGrid {
    pub start: f64,
    pub end: f64,
    pub points_per_decade: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridError(pub &'static str);

impl fmt::Display for GridError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid grid: {}", self.0)
    }
}

impl core::error::Error for GridError {}

impl GeometricGrid {
    pub const fn new(start: f64, end: f64, points_per_decade: u32) -> Self {
        GeometricGrid {
            start,
            end,
            points_per_decade,
        }
    }

    /// 10^-2 down to 10^-8, eight points per decade.
    pub const ZERO_SIDE: GeometricGrid = GeometricGrid::new(1e-2, 1e-8, 8);
    /// 10^2 up to 10^8, eight points per decade.
    pub const INFINITY_SIDE: GeometricGrid = GeometricGrid::new(1e2, 1e8, 8);

    pub fn decades(&self) -> f64 {
        libm::fabs(libm::log10(self.end / self.start))
    }

    pub fn points(&self) -> Result<Vec<f64>, GridError> {
        if !(self.start > 0.0 && self.end > 0.0 && self.start.is_finite() && self.end.is_finite()) {
            return Err(GridError("endpoints must be positive and finite"));
        }
        if self.start == self.end {
            return Err(GridError("endpoints coincide"));
        }
        if self.points_per_decade == 0 {
            return Err(GridError("points per decade must be positive"));
        }
        let n = libm::round(self.decades() * self.points_per_decade as f64) as usize;
        let n = n.max(1);
        let ls = libm::log10(self.start);
        let le = libm::log10(self.end);
        let mut pts: Vec<f64> = (0..=n)
            .map(|i| libm::pow(10.0, ls + (le - ls) * i as f64 / n as f64))
            .collect();
        pts[0] = self.start;
        pts[n] = self.end;
        Ok(pts)
    }
}

/// `10^(j/per_decade)` with exact powers of ten on decade boundaries.
pub fn decade_point(j: i32, per_decade: u32) -> f64 {
    let p = per_decade as i32;
    if j % p == 0 {
        exact_power_of_ten(j / p)
    } else {
        libm::pow(10.0, j as f64 / per_decade as f64)
    }
}

fn exact_power_of_ten(k: i32) -> f64 {
    if (0..=22).contains(&k) {
        let mut v = 1.0;
        for _ in 0..k {
            v *= 10.0;
        }
        v
    } else if (-22..0).contains(&k) {
        let mut v = 1.0;
        for _ in 0..-k {
            v *= 10.0;
        }
        1.0 / v
    } else {
        libm::pow(10.0, k as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grids() {
        let z = GeometricGrid::ZERO_SIDE.points().unwrap();
        assert_eq!(z.len(), 49);
        assert_eq!(z[0], 1e-2);
        assert_eq!(*z.last().unwrap(), 1e-8);
        assert!(z.windows(2).all(|w| w[1] < w[0]));
        let i = GeometricGrid::INFINITY_SIDE.points().unwrap();
        assert!(i.windows(2).all(|w| w[1] > w[0]));
        assert!((i[8] - 1e3).abs() < 1e-9);
    }

    #[test]
    fn bad_grids() {
        assert!(GeometricGrid::new(0.0, 1.0, 8).points().is_err());
        assert!(GeometricGrid::new(1.0, 1.0, 8).points().is_err());
        assert!(GeometricGrid::new(1.0, 10.0, 0).points().is_err());
    }

    #[test]
    fn decade_points_are_exact() {
        assert_eq!(decade_point(6 * 32, 32), 1e6);
        assert_eq!(decade_point(-2 * 32, 32), 1e-2);
        assert_eq!(decade_point(0, 32), 1.0);
    }
}
