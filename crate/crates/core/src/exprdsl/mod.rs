//! A small expression language for `f(x)` and `g(t)`.
//!
//! Grammar (lowest to highest precedence):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?          // right-associative
//! primary := number | 'e' | 'x' | 't' | call | '(' expr ')'
//! call    := name '(' expr (',' expr)* ')'
//! ```
//!
//! Functions: `exp`, `log` (natural), `sqrt`, `abs`, `sgn`,
//! `signed_pow(u, b)` = sgn(u)·|u|^b, `loglog(u)` = log(log(u)) and
//! `iterlog(u, k)` = k-fold log. `signed_pow(b)` is shorthand for
//! `signed_pow(x, b)`. The exponent of `signed_pow` and the depth of
//! `iterlog` must be constant expressions.
//!
//! Literals are decimal or scientific (`2`, `0.5`, `1e-3`); `e` is Euler's
//! number. An expression mentions at most one variable symbol.

mod eval;
mod parse;

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use core::fmt;

pub use eval::{numeric_derivative, DomainKind, DomainViolation, EvalResult};
pub use parse::{parse, ParseError};

/// The free variable of an expression.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Symbol {
    /// State variable, used by `f`.
    X,
    /// Time, used by `g` and by closed-form solutions.
    T,
}

impl Symbol {
    pub fn as_str(self) -> &'static str {
        match self {
            Symbol::X => "x",
            Symbol::T => "t",
        }
    }
}

/// Elementary one-argument functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
    Abs,
    Sgn,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Sgn => "sgn",
        }
    }
}

/// Expression tree node.
///
/// Constants are finite and non-negative; a negative literal is a `Neg`
/// node over a positive constant. [`ExprAst::new`] enforces this.
#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Const(f64),
    Var(Symbol),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
    /// `sgn(u)·|u|^exponent`
    SignedPow(Box<Node>, f64),
    /// `log` applied `depth` times.
    IterLog(Box<Node>, u32),
}

impl Node {
    pub fn constant(c: f64) -> Node {
        if c.is_sign_negative() && c != 0.0 {
            Node::Neg(Box::new(Node::Const(-c)))
        } else {
            Node::Const(c)
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(self) -> Node {
        match self {
            Node::Neg(inner) => *inner,
            other => Node::Neg(Box::new(other)),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Node::Add(..) | Node::Sub(..) => 1,
            Node::Mul(..) | Node::Div(..) => 2,
            Node::Neg(..) => 3,
            Node::Pow(..) => 4,
            _ => 5,
        }
    }

    /// First variable symbol found in the tree, if any.
    pub fn symbol(&self) -> Option<Symbol> {
        let mut found = None;
        self.visit(&mut |n| {
            if let Node::Var(s) = n {
                if found.is_none() {
                    found = Some(*s);
                }
            }
        });
        found
    }

    fn visit(&self, f: &mut impl FnMut(&Node)) {
        f(self);
        match self {
            Node::Const(_) | Node::Var(_) => {}
            Node::Neg(a) | Node::Call(_, a) | Node::SignedPow(a, _) | Node::IterLog(a, _) => {
                a.visit(f)
            }
            Node::Add(a, b)
            | Node::Sub(a, b)
            | Node::Mul(a, b)
            | Node::Div(a, b)
            | Node::Pow(a, b) => {
                a.visit(f);
                b.visit(f);
            }
        }
    }

    /// Returns the expression `self(-v)`, pushing the sign outward through
    /// odd and even primitives where the structure allows it.
    pub fn with_negated_argument(&self) -> Node {
        use Node::*;
        match self {
            Const(c) => Const(*c),
            Var(s) => Neg(Box::new(Var(*s))),
            Neg(a) => a.with_negated_argument().neg(),
            Add(a, b) => Add(
                Box::new(a.with_negated_argument()),
                Box::new(b.with_negated_argument()),
            ),
            Sub(a, b) => Sub(
                Box::new(a.with_negated_argument()),
                Box::new(b.with_negated_argument()),
            ),
            Mul(a, b) | Div(a, b) => {
                let (ra, rb) = (a.with_negated_argument(), b.with_negated_argument());
                let make = if matches!(self, Mul(..)) { Mul } else { Div };
                match (parity(a, &ra), parity(b, &rb)) {
                    (Some(pa), Some(pb)) if pa == pb => self.clone(),
                    (Some(_), Some(_)) => self.clone().neg(),
                    _ => odd_product(ra, rb, make),
                }
            }
            Pow(a, b) => {
                let base = a.with_negated_argument();
                let exponent = b.with_negated_argument();
                match (base, &exponent) {
                    (Neg(inner), Const(c)) if is_integer(*c) => {
                        let p = Pow(inner, Box::new(exponent.clone()));
                        if is_integer(c / 2.0) {
                            p
                        } else {
                            p.neg()
                        }
                    }
                    (base, _) => Pow(Box::new(base), Box::new(exponent)),
                }
            }
            Call(func, a) => {
                let arg = a.with_negated_argument();
                match (func, arg) {
                    (Func::Abs, Neg(inner)) => Call(Func::Abs, inner),
                    (Func::Sgn, Neg(inner)) => Call(Func::Sgn, inner).neg(),
                    (func, arg) => Call(*func, Box::new(arg)),
                }
            }
            SignedPow(a, p) => match a.with_negated_argument() {
                Neg(inner) => SignedPow(inner, *p).neg(),
                arg => SignedPow(Box::new(arg), *p),
            },
            IterLog(a, k) => IterLog(Box::new(a.with_negated_argument()), *k),
        }
    }
}

fn is_integer(c: f64) -> bool {
    libm::trunc(c) == c
}

/// `Some(false)` if `reflected` is `node`, `Some(true)` if it is `-node`.
fn parity(node: &Node, reflected: &Node) -> Option<bool> {
    if node == reflected {
        return Some(false);
    }
    match (node, reflected) {
        (_, Node::Neg(r)) if **r == *node => Some(true),
        (Node::Neg(n), _) if **n == *reflected => Some(true),
        _ => None,
    }
}

fn odd_product(a: Node, b: Node, make: fn(Box<Node>, Box<Node>) -> Node) -> Node {
    match (a, b) {
        (Node::Neg(a), Node::Neg(b)) => make(a, b),
        (Node::Neg(a), b) => make(a, Box::new(b)).neg(),
        (a, Node::Neg(b)) => make(Box::new(a), b).neg(),
        (a, b) => make(Box::new(a), Box::new(b)),
    }
}

impl fmt::Display for Node {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn child(out: &mut fmt::Formatter<'_>, n: &Node, min: u8) -> fmt::Result {
            if n.precedence() < min {
                write!(out, "({})", n)
            } else {
                write!(out, "{}", n)
            }
        }
        match self {
            Node::Const(c) => write_number(out, *c),
            Node::Var(s) => out.write_str(s.as_str()),
            Node::Neg(a) => {
                out.write_str("-")?;
                child(out, a, 3)
            }
            Node::Add(a, b) | Node::Sub(a, b) => {
                child(out, a, 1)?;
                out.write_str(if matches!(self, Node::Add(..)) {
                    " + "
                } else {
                    " - "
                })?;
                child(out, b, 2)
            }
            Node::Mul(a, b) | Node::Div(a, b) => {
                child(out, a, 2)?;
                out.write_str(if matches!(self, Node::Mul(..)) {
                    "*"
                } else {
                    "/"
                })?;
                child(out, b, 3)
            }
            Node::Pow(a, b) => {
                child(out, a, 5)?;
                out.write_str("^")?;
                child(out, b, 3)
            }
            Node::Call(func, a) => write!(out, "{}({})", func.name(), a),
            Node::SignedPow(a, p) => {
                write!(out, "signed_pow({}, ", a)?;
                write_number(out, *p)?;
                out.write_str(")")
            }
            Node::IterLog(a, 2) => write!(out, "loglog({})", a),
            Node::IterLog(a, k) => write!(out, "iterlog({}, {})", a, k),
        }
    }
}

fn write_number(out: &mut fmt::Formatter<'_>, v: f64) -> fmt::Result {
    let m = libm::fabs(v);
    if m == 0.0 || (1e-4..1e16).contains(&m) {
        write!(out, "{}", v)
    } else {
        write!(out, "{:e}", v)
    }
}

/// A parsed, validated expression.
#[derive(Clone, Debug, PartialEq)]
pub struct ExprAst {
    root: Node,
}

/// Structural problems with a hand-built tree.
#[derive(Clone, Debug, PartialEq)]
pub enum AstError {
    NonFiniteConstant(f64),
    NegativeConstant(f64),
    MixedVariables,
    ZeroLogDepth,
}

impl fmt::Display for AstError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AstError::NonFiniteConstant(c) => write!(f, "constant {} is not finite", c),
            AstError::NegativeConstant(c) => {
                write!(f, "constant {} is negative; use a negation node", c)
            }
            AstError::MixedVariables => f.write_str("expression mixes variables x and t"),
            AstError::ZeroLogDepth => f.write_str("iterated log depth must be at least 1"),
        }
    }
}

impl core::error::Error for AstError {}

impl ExprAst {
    pub fn new(root: Node) -> Result<Self, AstError> {
        let mut err = None;
        let mut symbol = None;
        root.visit(&mut |n| {
            if err.is_some() {
                return;
            }
            match n {
                Node::Const(c) if !c.is_finite() => err = Some(AstError::NonFiniteConstant(*c)),
                Node::Const(c) if c.is_sign_negative() => {
                    err = Some(AstError::NegativeConstant(*c))
                }
                Node::SignedPow(_, p) if !p.is_finite() => {
                    err = Some(AstError::NonFiniteConstant(*p))
                }
                Node::IterLog(_, 0) => err = Some(AstError::ZeroLogDepth),
                Node::Var(s) => match symbol {
                    None => symbol = Some(*s),
                    Some(prev) if prev != *s => err = Some(AstError::MixedVariables),
                    _ => {}
                },
                _ => {}
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(ExprAst { root }),
        }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn into_root(self) -> Node {
        self.root
    }

    /// The variable the expression depends on, or `None` for a constant.
    pub fn symbol(&self) -> Option<Symbol> {
        self.root.symbol()
    }

    pub fn eval(&self, value: f64) -> EvalResult {
        eval::eval(&self.root, value)
    }
}

impl fmt::Display for ExprAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

impl core::str::FromStr for ExprAst {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

/// Which slot of the problem a function fills.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    /// `f(x)`, the restoring force.
    State,
    /// `g(t)`, the perturbation, or a closed-form solution `x(t)`.
    Time,
}

impl Role {
    pub fn symbol(self) -> Symbol {
        match self {
            Role::State => Symbol::X,
            Role::Time => Symbol::T,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SpecError {
    Parse(ParseError),
    WrongVariable { expected: Symbol, found: Symbol },
}

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpecError::Parse(e) => e.fmt(f),
            SpecError::WrongVariable { expected, found } => write!(
                f,
                "expression uses variable '{}' but '{}' is expected here",
                found.as_str(),
                expected.as_str()
            ),
        }
    }
}

impl core::error::Error for SpecError {}

impl From<ParseError> for SpecError {
    fn from(e: ParseError) -> Self {
        SpecError::Parse(e)
    }
}

/// An expression bound to a role (`f` of `x`, or a function of `t`).
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionSpec {
    ast: ExprAst,
    role: Role,
}

impl FunctionSpec {
    pub fn new(ast: ExprAst, role: Role) -> Result<Self, SpecError> {
        match ast.symbol() {
            Some(found) if found != role.symbol() => Err(SpecError::WrongVariable {
                expected: role.symbol(),
                found,
            }),
            _ => Ok(FunctionSpec { ast, role }),
        }
    }

    /// Parses a function of `x`.
    pub fn state(src: &str) -> Result<Self, SpecError> {
        Self::new(parse(src)?, Role::State)
    }

    /// Parses a function of `t`.
    pub fn time(src: &str) -> Result<Self, SpecError> {
        Self::new(parse(src)?, Role::Time)
    }

    pub fn ast(&self) -> &ExprAst {
        &self.ast
    }

    pub fn role(&self) -> Role {
        self.role
    }

    #[inline]
    pub fn eval(&self, value: f64) -> EvalResult {
        self.ast.eval(value)
    }

    pub fn derivative(&self, value: f64, scale: f64) -> EvalResult {
        numeric_derivative(&self.ast, value, scale)
    }

    /// Canonical source text.
    pub fn source(&self) -> String {
        self.ast.to_string()
    }

    /// `c · self`, folded when `c` is 1.
    pub fn scaled(&self, c: f64) -> FunctionSpec {
        let root = if c == 1.0 {
            self.ast.root.clone()
        } else {
            let prod = Node::Mul(
                Box::new(Node::Const(c.abs())),
                Box::new(self.ast.root.clone()),
            );
            if c < 0.0 {
                prod.neg()
            } else {
                prod
            }
        };
        FunctionSpec {
            ast: ExprAst { root },
            role: self.role,
        }
    }

    /// `-self`.
    pub fn negated(&self) -> FunctionSpec {
        FunctionSpec {
            ast: ExprAst {
                root: self.ast.root.clone().neg(),
            },
            role: self.role,
        }
    }

    /// `-self(-v)`: the odd reflection used to flip the sign of a problem.
    pub fn odd_reflection(&self) -> FunctionSpec {
        FunctionSpec {
            ast: ExprAst {
                root: self.ast.root.with_negated_argument().neg(),
            },
            role: self.role,
        }
    }
}

impl fmt::Display for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.ast.fmt(f)
    }
}
