use alloc::vec;
use alloc::vec::Vec;

use super::Functional;
use crate::classifier::RateDescriptor;
use crate::exprdsl::FunctionSpec;
use crate::integrator::{self, Flags, ProblemSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Integrate to the horizon and compare with the closed form.
    Full,
    /// Only the closed form is examined; nothing is integrated.
    ClosedFormOnly,
}

/// Reference value for a sampled functional.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Expect {
    Value(f64),
    /// The same functional evaluated on the closed-form solution.
    ClosedForm,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Check {
    /// Closed form satisfies the equation on `[1e-2, up_to]`.
    Residual {
        up_to: f64,
        tol: f64,
    },
    /// Regime tag reported by the classifier.
    Regime(&'static str),
    /// Rejection reason starts with this text.
    Reason(&'static str),
    /// Estimated `L`, relative tolerance.
    Limit {
        expected: f64,
        rel_tol: f64,
    },
    LambdaStar {
        expected: f64,
        tol: f64,
    },
    XOverYPrediction {
        expected: f64,
        tol: f64,
    },
    PredictedRate(RateDescriptor),
    Verdict(integrator::Verdict),
    /// Relative agreement with the closed form at every checkpoint up to `up_to`.
    Trajectory {
        up_to: f64,
        rel_tol: f64,
    },
    /// Every sampled point within `tol` of `value`.
    Flat {
        functional: Functional,
        value: f64,
        tol: f64,
    },
    /// Sampled point at `t` within relative `rel_tol`.
    At {
        functional: Functional,
        t: f64,
        expected: Expect,
        rel_tol: f64,
    },
    /// Extrapolated limit within `tol` plus the curve's own uncertainty.
    CurveLimit {
        functional: Functional,
        expected: f64,
        tol: f64,
    },
    /// Sampled point at `t` exceeds `beyond`.
    Exceeds {
        functional: Functional,
        t: f64,
        beyond: f64,
    },
    /// Flow map on the closed form agrees with the entry's `F(x(t))` formula.
    RateFormula {
        t: f64,
        rel_tol: f64,
    },
    /// Closed-form `F(x(t))/t` at `t` within relative `rel_tol`.
    ClosedFormRate {
        t: f64,
        expected: f64,
        rel_tol: f64,
    },
    /// Closed-form `F(x(t))/t` exceeds `beyond`.
    ClosedFormRateExceeds {
        t: f64,
        beyond: f64,
    },
    /// `(1 - F(x(t))/t) / (c·t^-p)` within `tol` of one.
    ClosedFormDefect {
        t: f64,
        c: f64,
        p: f64,
        tol: f64,
    },
    /// Closed-form functional moves strictly toward `target` along `times`.
    ClosedFormApproach {
        functional: Functional,
        times: Vec<f64>,
        target: f64,
    },
    /// Limit of the rapid branch, which no finite horizon reaches.
    AnalyticLambda {
        l: f64,
        expected: f64,
    },
}

#[derive(Clone, Debug)]
pub struct CorpusEntry {
    pub name: &'static str,
    pub problem: ProblemSpec,
    pub solution: Option<FunctionSpec>,
    /// `F(x(t))` in closed form, for times where `x(t)` underflows.
    pub rate: Option<FunctionSpec>,
    pub mode: Mode,
    pub horizon: f64,
    pub checks: Vec<Check>,
    pub note: &'static str,
}

fn spec(f: &str, g: &str, xi: f64) -> ProblemSpec {
    ProblemSpec::new(
        FunctionSpec::state(f).expect("corpus f parses"),
        FunctionSpec::time(g).expect("corpus g parses"),
        xi,
    )
}

fn sol(src: &str) -> Option<FunctionSpec> {
    Some(FunctionSpec::time(src).expect("corpus solution parses"))
}

fn frapid_g() -> &'static str {
    "3/((3*e + t + 3)*log(e + t + 3)^2) \
     - 1/((3*e + t + 3)*log((e + (t + 3)/3)*log(e + t + 3)^2)^2) \
     - 2/((e + t + 3)*log(e + t + 3)*log((e + (t + 3)/3)*log(e + t + 3)^2)^2)"
}

const FRAPID_X: &str = "1/log((e + (t + 3)/3)*log(e + t + 3)^2)";

const BETA1_G: &str = "exp(-sqrt(2)*(1+t)^0.5 + (1+t)^(1/3))*(1+t)^(-2/3)\
                       *(5*sqrt(2)/6 - (1+t)^(-1/6)/3)/(sqrt(2) - (1+t)^(-1/6))";

const ITERLOG_G: &str = "1/loglog(t + e^e) - 0.5*loglog(t + e^e)^-1.5/((t + e^e)*log(t + e^e))";

/// The built-in examples, each with its closed-form solution.
pub fn corpus() -> Vec<CorpusEntry> {
    use Check::*;
    use Functional::*;
    let frapid_x = sol(FRAPID_X).unwrap();
    let frapid_xi = frapid_x.eval(0.0).expect("closed form defined at 0");
    vec![
        CorpusEntry {
            name: "gneg",
            problem: spec("x^2", "-(1+t)^-3*(2 - (1+t)^-1)", 1.0)
                .with_beta(2.0)
                .with_theta(3.0),
            solution: sol("(1+t)^-2"),
            rate: None,
            mode: Mode::ClosedFormOnly,
            horizon: 1e6,
            checks: vec![
                Residual {
                    up_to: 1e6,
                    tol: 1e-6,
                },
                Regime("Rejected"),
                Reason(crate::classifier::REJECT_SIGN),
                ClosedFormRateExceeds {
                    t: 1e6,
                    beyond: 1e5,
                },
                ClosedFormApproach {
                    functional: FOverT,
                    times: vec![1e2, 1e4, 1e6],
                    target: f64::INFINITY,
                },
            ],
            note: "negative perturbation; decay is slower than any multiple of F⁻¹",
        },
        CorpusEntry {
            name: "g0",
            problem: spec("x^2", "(1+t)^-2*((1+t)^-1 + t)^-2", 1.0).with_beta(2.0),
            solution: sol("((1+t)^-1 + t)^-1"),
            rate: None,
            mode: Mode::Full,
            horizon: 1e6,
            checks: vec![
                Residual {
                    up_to: 1e6,
                    tol: 1e-6,
                },
                Regime("Preserved"),
                Limit {
                    expected: 0.0,
                    rel_tol: 0.0,
                },
                LambdaStar {
                    expected: 1.0,
                    tol: 0.0,
                },
                Trajectory {
                    up_to: 1e6,
                    rel_tol: 1e-6,
                },
                At {
                    functional: FOverT,
                    t: 1e6,
                    expected: Expect::Value(1.0),
                    rel_tol: 1e-4,
                },
                At {
                    functional: FOverT,
                    t: 1e6,
                    expected: Expect::ClosedForm,
                    rel_tol: 1e-6,
                },
                CurveLimit {
                    functional: FOverT,
                    expected: 1.0,
                    tol: 1e-2,
                },
                CurveLimit {
                    functional: XOverFinv,
                    expected: 1.0,
                    tol: 1e-3,
                },
                Exceeds {
                    functional: FOverG,
                    t: 1e6,
                    beyond: 1e11,
                },
            ],
            note: "g is negligible; f(x)/g grows like t^2",
        },
        CorpusEntry {
            name: "Lgt0",
            problem: spec("x^2", "2*(2+t)^-2", 1.0)
                .with_beta(2.0)
                .with_theta(2.0),
            solution: sol("2/(2+t)"),
            rate: None,
            mode: Mode::Full,
            horizon: 1e6,
            checks: vec![
                Residual {
                    up_to: 1e6,
                    tol: 1e-6,
                },
                Regime("Critical"),
                Limit {
                    expected: 2.0,
                    rel_tol: 1e-2,
                },
                LambdaStar {
                    expected: 0.5,
                    tol: 1e-6,
                },
                XOverYPrediction {
                    expected: 2.0,
                    tol: 1e-6,
                },
                PredictedRate(RateDescriptor::FOverTToLambda),
                Trajectory {
                    up_to: 1e6,
                    rel_tol: 1e-6,
                },
                Flat {
                    functional: FOverT,
                    value: 0.5,
                    tol: 1e-6,
                },
                CurveLimit {
                    functional: XOverFinv,
                    expected: 2.0,
                    tol: 1e-3,
                },
            ],
            note: "F(x(t))/t is exactly 1/2 for every t > 0",
        },
        CorpusEntry {
            name: "Lgt0_reflected",
            problem: spec("signed_pow(2)", "-2*(2+t)^-2", -1.0)
                .with_beta(2.0)
                .with_theta(2.0),
            solution: sol("-2/(2+t)"),
            rate: None,
            mode: Mode::Full,
            horizon: 1e6,
            checks: vec![
                Residual {
                    up_to: 1e6,
                    tol: 1e-6,
                },
                Regime("Critical"),
                LambdaStar {
                    expected: 0.5,
                    tol: 1e-6,
                },
                Trajectory {
                    up_to: 1e6,
                    rel_tol: 1e-6,
                },
                Flat {
                    functional: FOverT,
                    value: 0.5,
                    tol: 1e-6,
                },
            ],
            note: "mirror image of Lgt0 under x -> -x",
        },
        CorpusEntry {
            name: "Lgt0frapid",
            problem: spec("sgn(x)*exp(-1/abs(x))", frapid_g(), frapid_xi),
            solution: Some(frapid_x),
            rate: None,
            mode: Mode::Full,
            horizon: 1e6,
            checks: vec![
                Residual {
                    up_to: 1e6,
                    tol: 1e-6,
                },
                Regime("Critical"),
                Trajectory {
                    up_to: 1e6,
                    rel_tol: 1e-5,
                },
                At {
                    functional: FOverT,
                    t: 1e6,
                    expected: Expect::ClosedForm,
                    rel_tol: 2e-2,
                },
                ClosedFormApproach {
                    functional: XOverFinv,
                    times: vec![1e2, 1e3, 1e4, 1e5, 1e6],
                    target: 1.0,
                },
                AnalyticLambda {
                    l: 2.0,
                    expected: 1.0 / 3.0,
                },
            ],
            note: "rapidly varying f; the limit 1/3 of F(x(t))/t is approached only \
                   logarithmically and is not desk-reachable",
        },
        CorpusEntry {
            name: "Linfty",
            problem: spec("x^2", "(1+t)^-1*(1 - 0.5*(1+t)^-0.5)", 1.0)
                .with_beta(2.0)
                .with_theta(1.0),
            solution: sol("(1+t)^-0.5"),
            rate: None,
            mode: Mode::Full,
            horizon: 1e9,
            checks: vec![
                Residual {
                    up_to: 1e9,
                    tol: 1e-6,
                },
                Regime("Dominated"),
                PredictedRate(RateDescriptor::FOverGToOne),
                Verdict(integrator::Verdict::ConvergesToZero),
                Trajectory {
                    up_to: 1e9,
                    rel_tol: 1e-6,
                },
                At {
                    functional: FOverG,
                    t: 1e4,
                    expected: Expect::Value(1.005_024_873_128_265_7),
                    rel_tol: 1e-3,
                },
                At {
                    functional: FOverG,
                    t: 1e4,
                    expected: Expect::ClosedForm,
                    rel_tol: 1e-4,
                },
                CurveLimit {
                    functional: FOverG,
                    expected: 1.0,
                    tol: 1e-2,
                },
            ],
            note: "g dominates; f(x(t))/g(t) -> 1",
        },
        CorpusEntry {
            name: "iterlog",
            problem: spec("x^2", ITERLOG_G, 1.0)
                .with_beta(2.0)
                .with_flags(Flags {
                    g_asymptotically_decreasing: true,
                    monotone_envelope_assumed: false,
                }),
            solution: sol("loglog(t + e^e)^-0.5"),
            rate: None,
            mode: Mode::Full,
            horizon: 1e6,
            checks: vec![
                Residual {
                    up_to: 1e6,
                    tol: 1e-6,
                },
                Regime("Dominated"),
                PredictedRate(RateDescriptor::FOverGToOne),
                Trajectory {
                    up_to: 1e6,
                    rel_tol: 1e-6,
                },
                At {
                    functional: FOverG,
                    t: 1e6,
                    expected: Expect::Value(1.0),
                    rel_tol: 2e-2,
                },
            ],
            note: "slowly varying g; exact rate needs g asymptotically decreasing",
        },
        CorpusEntry {
            name: "beta1",
            problem: spec("x/log(1/x)", BETA1_G, libm::exp(1.0 - libm::sqrt(2.0))),
            solution: sol("exp(-sqrt(2)*(1+t)^0.5 + (1+t)^(1/3))"),
            rate: sol("0.5*(sqrt(2)*(1+t)^0.5 - (1+t)^(1/3))^2"),
            mode: Mode::ClosedFormOnly,
            horizon: 1e8,
            checks: vec![
                Residual {
                    up_to: 1e4,
                    tol: 1e-5,
                },
                Regime("Rejected"),
                Reason(crate::classifier::REJECT_SCOPE),
                RateFormula {
                    t: 1e4,
                    rel_tol: 1e-8,
                },
                ClosedFormRate {
                    t: 1e8,
                    expected: 1.0,
                    rel_tol: 0.15,
                },
                ClosedFormDefect {
                    t: 1e8,
                    c: libm::sqrt(2.0),
                    p: 1.0 / 6.0,
                    tol: 5e-2,
                },
            ],
            note: "index one at zero; F(x(t))/t -> 1 with a t^(-1/6) defect",
        },
        CorpusEntry {
            name: "escape",
            problem: spec(
                "signed_pow(2)*exp(-x)",
                "0.5*(1+t)^-0.5 + (1+t)*exp(-(1+t)^0.5)",
                1.0,
            )
            .with_beta(2.0)
            .with_theta(0.5),
            solution: sol("(1+t)^0.5"),
            rate: None,
            mode: Mode::Full,
            horizon: 1e9,
            checks: vec![
                Residual {
                    up_to: 1e4,
                    tol: 1e-6,
                },
                Verdict(integrator::Verdict::Escapes),
                Trajectory {
                    up_to: 1e4,
                    rel_tol: 1e-5,
                },
            ],
            note: "f vanishes at infinity, so a positive g can push x away from zero",
        },
    ]
}
