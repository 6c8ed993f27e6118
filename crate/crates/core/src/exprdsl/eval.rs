use alloc::string::{String, ToString};
use core::fmt;

use super::{ExprAst, Func, Node};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DomainKind {
    LogOfNonPositive,
    DivisionByZero,
    ZeroToNegativePower,
    NegativeBaseFractionalPower,
    SqrtOfNegative,
    /// The result left the finite range of `f64`.
    Overflow,
    NonFiniteInput,
}

impl DomainKind {
    fn describe(self) -> &'static str {
        match self {
            DomainKind::LogOfNonPositive => "log of a non-positive argument",
            DomainKind::DivisionByZero => "division by zero",
            DomainKind::ZeroToNegativePower => "zero raised to a negative power",
            DomainKind::NegativeBaseFractionalPower => "negative base with a fractional exponent",
            DomainKind::SqrtOfNegative => "square root of a negative argument",
            DomainKind::Overflow => "overflow",
            DomainKind::NonFiniteInput => "non-finite input",
        }
    }
}

/// Evaluation left the domain of a real operation.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainViolation {
    pub kind: DomainKind,
    /// Canonical text of the failing sub-expression.
    pub node: String,
    /// Value of the free variable.
    pub input: f64,
}

impl DomainViolation {
    pub fn is_overflow(&self) -> bool {
        self.kind == DomainKind::Overflow
    }
}

impl fmt::Display for DomainViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} in `{}` at {:?}",
            self.kind.describe(),
            self.node,
            self.input
        )
    }
}

impl core::error::Error for DomainViolation {}

/// A finite value or the reason there is none.
pub type EvalResult = Result<f64, DomainViolation>;

pub(super) fn eval(node: &Node, v: f64) -> EvalResult {
    if !v.is_finite() {
        return Err(violation(DomainKind::NonFiniteInput, node, v));
    }
    walk(node, v)
}

fn violation(kind: DomainKind, node: &Node, input: f64) -> DomainViolation {
    DomainViolation {
        kind,
        node: node.to_string(),
        input,
    }
}

fn finite(r: f64, node: &Node, v: f64) -> EvalResult {
    if r.is_finite() {
        Ok(r)
    } else {
        Err(violation(DomainKind::Overflow, node, v))
    }
}

fn walk(node: &Node, v: f64) -> EvalResult {
    let fail = |kind| Err(violation(kind, node, v));
    match node {
        Node::Const(c) => Ok(*c),
        Node::Var(_) => Ok(v),
        Node::Neg(a) => Ok(-walk(a, v)?),
        Node::Add(a, b) => finite(walk(a, v)? + walk(b, v)?, node, v),
        Node::Sub(a, b) => finite(walk(a, v)? - walk(b, v)?, node, v),
        Node::Mul(a, b) => finite(walk(a, v)? * walk(b, v)?, node, v),
        Node::Div(a, b) => {
            let num = walk(a, v)?;
            let den = walk(b, v)?;
            if den == 0.0 {
                return fail(DomainKind::DivisionByZero);
            }
            finite(num / den, node, v)
        }
        Node::Pow(a, b) => {
            let base = walk(a, v)?;
            let exponent = walk(b, v)?;
            power(base, exponent).map_or_else(fail, |r| finite(r, node, v))
        }
        Node::Call(func, a) => {
            let u = walk(a, v)?;
            match func {
                Func::Exp => finite(libm::exp(u), node, v),
                Func::Log if u <= 0.0 => fail(DomainKind::LogOfNonPositive),
                Func::Log => Ok(libm::log(u)),
                Func::Sqrt if u < 0.0 => fail(DomainKind::SqrtOfNegative),
                Func::Sqrt => Ok(libm::sqrt(u)),
                Func::Abs => Ok(libm::fabs(u)),
                Func::Sgn => Ok(sgn(u)),
            }
        }
        Node::SignedPow(a, p) => {
            let u = walk(a, v)?;
            if u == 0.0 {
                return if *p < 0.0 {
                    fail(DomainKind::ZeroToNegativePower)
                } else {
                    Ok(0.0)
                };
            }
            finite(sgn(u) * libm::pow(libm::fabs(u), *p), node, v)
        }
        Node::IterLog(a, depth) => {
            let mut u = walk(a, v)?;
            for _ in 0..*depth {
                if u <= 0.0 {
                    return fail(DomainKind::LogOfNonPositive);
                }
                u = libm::log(u);
            }
            Ok(u)
        }
    }
}

fn sgn(u: f64) -> f64 {
    if u > 0.0 {
        1.0
    } else if u < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn power(base: f64, exponent: f64) -> Result<f64, DomainKind> {
    if base == 0.0 && exponent < 0.0 {
        return Err(DomainKind::ZeroToNegativePower);
    }
    if base < 0.0 && libm::trunc(exponent) != exponent {
        return Err(DomainKind::NegativeBaseFractionalPower);
    }
    Ok(libm::pow(base, exponent))
}

/// Central-difference derivative with step `scale·max(|value|, 1)`.
pub fn numeric_derivative(ast: &ExprAst, value: f64, scale: f64) -> EvalResult {
    let h = scale * libm::fmax(libm::fabs(value), 1.0);
    // Use the step actually representable around `value`.
    let hi = value + h;
    let lo = value - h;
    let up = ast.eval(hi)?;
    let down = ast.eval(lo)?;
    finite((up - down) / (hi - lo), ast.root(), value)
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    #[test]
    fn arithmetic() {
        assert_eq!(parse("x^2").unwrap().eval(0.5).unwrap(), 0.25);
        assert_eq!(
            parse("exp(-1/x)").unwrap().eval(1.0).unwrap(),
            0.36787944117144233
        );
        let ee = libm::exp(core::f64::consts::E);
        assert_eq!(parse("loglog(t)").unwrap().eval(ee).unwrap(), 1.0);
    }

    #[test]
    fn domain_violations_are_reported() {
        let cases = [
            ("log(x)", 0.0, DomainKind::LogOfNonPositive),
            ("log(x)", -1.0, DomainKind::LogOfNonPositive),
            ("1/x", 0.0, DomainKind::DivisionByZero),
            ("x^-1", 0.0, DomainKind::ZeroToNegativePower),
            ("x^0.5", -2.0, DomainKind::NegativeBaseFractionalPower),
            ("sqrt(x)", -1.0, DomainKind::SqrtOfNegative),
            ("exp(x)", 1000.0, DomainKind::Overflow),
            ("x*x", 1e200, DomainKind::Overflow),
            ("loglog(x)", 0.5, DomainKind::LogOfNonPositive),
            ("signed_pow(-1)", 0.0, DomainKind::ZeroToNegativePower),
        ];
        for (src, v, kind) in cases {
            let err = parse(src).unwrap().eval(v).unwrap_err();
            assert_eq!(err.kind, kind, "{} at {}", src, v);
        }
        let err = parse("1 + log(x)").unwrap().eval(-1.0).unwrap_err();
        assert_eq!(err.node, "log(x)");
        assert_eq!(err.input, -1.0);
        assert!(parse("x").unwrap().eval(f64::NAN).is_err());
    }

    #[test]
    fn edge_values() {
        assert_eq!(parse("signed_pow(2)").unwrap().eval(0.0).unwrap(), 0.0);
        assert_eq!(parse("sgn(x)").unwrap().eval(0.0).unwrap(), 0.0);
        assert_eq!(parse("x^0").unwrap().eval(0.0).unwrap(), 1.0);
        assert_eq!(parse("x^3").unwrap().eval(-2.0).unwrap(), -8.0);
        // underflow is a legitimate tiny value, not a violation
        assert_eq!(parse("exp(-1/x)").unwrap().eval(1e-4).unwrap(), 0.0);
    }

    #[test]
    fn derivatives() {
        let d = |src: &str, v: f64| numeric_derivative(&parse(src).unwrap(), v, 1e-5).unwrap();
        assert!((d("t^2", 3.0) - 6.0).abs() <= 1e-6);
        assert!((d("x", 0.1) - 1.0).abs() <= 1e-9);
        assert!((d("exp(t)", 0.0) - 1.0).abs() <= 1e-6);
        assert!(numeric_derivative(&parse("log(x)").unwrap(), 0.0, 1e-5).is_err());
    }
}
