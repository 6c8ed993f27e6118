//! Convergence-rate classification for the scalar perturbed equation
//!
//! ```text
//! x'(t) = -f(x(t)) + g(t),   x(0) = xi
//! ```
//!
//! where `f` is a mean-reverting nonlinearity that is regularly (or rapidly)
//! varying at zero and `g` is a positive fading perturbation.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only computation:
//!
//! * [`exprdsl`] parses and evaluates the small formula language used for
//!   `f(x)` and `g(t)`.
//! * [`rvkit`] estimates regular-variation indices and detects rapid
//!   variation.
//! * [`flowmap`] computes `F(x) = ∫_x^1 du/f(u)`, its inverse and the
//!   unperturbed solution.
//! * [`classifier`] estimates `L = lim g/(f∘F⁻¹)`, solves for `Λ*` and
//!   reports the regime.
//! * [`integrator`] integrates the equation to long horizons with an
//!   embedded 5(4) Runge-Kutta pair.
//! * [`harness`] turns trajectories into rate curves and runs the built-in
//!   corpus of closed-form examples.
//!
//! IO, configuration files and the command line live in the `rvdecay` crate.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod accel;
pub mod classifier;
pub mod exprdsl;
pub mod flowmap;
pub mod grid;
pub mod harness;
pub mod integrator;
pub mod quad;
pub mod rvkit;

pub use classifier::{classify, LimitEstimate, LimitVerdict, Regime, RegimeReport};
pub use exprdsl::{ExprAst, FunctionSpec};
pub use flowmap::FlowMap;
pub use integrator::{integrate, ProblemSpec, Trajectory};
