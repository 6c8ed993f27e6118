use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use super::{eval, ExprAst, Func, Node, Symbol};

/// Parse failure with the byte offset where it was detected.
#[derive(Clone, Debug, PartialEq)]
pub struct ParseError {
    pub offset: usize,
    pub expected: Vec<&'static str>,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at byte {}: {}", self.offset, self.message)?;
        if !self.expected.is_empty() {
            f.write_str(" (expected ")?;
            for (i, e) in self.expected.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                f.write_str(e)?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl core::error::Error for ParseError {}

#[derive(Clone, Debug, PartialEq)]
enum Tok<'a> {
    Num(f64),
    Ident(&'a str),
    Op(u8),
    Comma,
    LParen,
    RParen,
    End,
}

impl Tok<'_> {
    fn describe(&self) -> String {
        use alloc::format;
        match self {
            Tok::Num(v) => format!("number {:?}", v),
            Tok::Ident(s) => format!("identifier '{}'", s),
            Tok::Op(c) => format!("'{}'", *c as char),
            Tok::Comma => "','".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::End => "end of input".into(),
        }
    }
}

const OPERAND: &[&str] = &["number", "variable", "function", "'('", "'-'"];

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    tok: Tok<'a>,
    tok_start: usize,
    symbol: Option<Symbol>,
}

/// Parses an expression.
pub fn parse(text: &str) -> Result<ExprAst, ParseError> {
    let mut p = Parser {
        src: text,
        pos: 0,
        tok: Tok::End,
        tok_start: 0,
        symbol: None,
    };
    p.advance()?;
    if p.tok == Tok::End {
        return Err(p.error("empty expression", OPERAND));
    }
    let root = p.expr()?;
    if p.tok != Tok::End {
        let msg = match p.tok {
            Tok::RParen => "unbalanced ')'".into(),
            ref t => alloc::format!("unexpected {}", t.describe()),
        };
        return Err(p.error_msg(msg, &["operator", "end of input"]));
    }
    Ok(ExprAst { root })
}

impl<'a> Parser<'a> {
    fn error(&self, msg: &str, expected: &[&'static str]) -> ParseError {
        self.error_msg(msg.into(), expected)
    }

    fn error_msg(&self, message: String, expected: &[&'static str]) -> ParseError {
        ParseError {
            offset: self.tok_start,
            expected: expected.to_vec(),
            message,
        }
    }

    fn advance(&mut self) -> Result<(), ParseError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        self.tok_start = self.pos;
        let Some(&c) = bytes.get(self.pos) else {
            self.tok = Tok::End;
            return Ok(());
        };
        self.tok = match c {
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                self.pos += 1;
                Tok::Op(c)
            }
            b'(' => {
                self.pos += 1;
                Tok::LParen
            }
            b')' => {
                self.pos += 1;
                Tok::RParen
            }
            b',' => {
                self.pos += 1;
                Tok::Comma
            }
            b'0'..=b'9' | b'.' => self.number()?,
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < bytes.len()
                    && (bytes[self.pos].is_ascii_alphanumeric() || bytes[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                Tok::Ident(&self.src[start..self.pos])
            }
            _ => {
                let ch = self.src[self.pos..].chars().next().unwrap_or('?');
                return Err(
                    self.error_msg(alloc::format!("unexpected character '{}'", ch), OPERAND)
                );
            }
        };
        Ok(())
    }

    fn number(&mut self) -> Result<Tok<'a>, ParseError> {
        let bytes = self.src.as_bytes();
        let start = self.pos;
        let digits = |p: &mut usize| {
            let s = *p;
            while *p < bytes.len() && bytes[*p].is_ascii_digit() {
                *p += 1;
            }
            *p - s
        };
        let mut n = digits(&mut self.pos);
        if self.pos < bytes.len() && bytes[self.pos] == b'.' {
            self.pos += 1;
            n += digits(&mut self.pos);
        }
        if n == 0 {
            return Err(self.error("malformed number", &["digit"]));
        }
        if self.pos < bytes.len() && (bytes[self.pos] == b'e' || bytes[self.pos] == b'E') {
            let mut q = self.pos + 1;
            if q < bytes.len() && (bytes[q] == b'+' || bytes[q] == b'-') {
                q += 1;
            }
            if q < bytes.len() && bytes[q].is_ascii_digit() {
                self.pos = q;
                digits(&mut self.pos);
            }
        }
        let text = &self.src[start..self.pos];
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Tok::Num(v)),
            _ => Err(self.error_msg(
                alloc::format!("literal '{}' is not a finite number", text),
                &["finite number"],
            )),
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.tok {
                Tok::Op(b'+') => {
                    self.advance()?;
                    lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Op(b'-') => {
                    self.advance()?;
                    lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.tok {
                Tok::Op(b'*') => {
                    self.advance()?;
                    lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Tok::Op(b'/') => {
                    self.advance()?;
                    lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if self.tok == Tok::Op(b'-') {
            self.advance()?;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.primary()?;
        if self.tok == Tok::Op(b'^') {
            self.advance()?;
            let exponent = self.unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn expect(&mut self, tok: Tok<'static>, what: &'static str) -> Result<(), ParseError> {
        if self.tok == tok {
            self.advance()
        } else if self.tok == Tok::End && tok == Tok::RParen {
            Err(self.error("unbalanced '('", &[what]))
        } else {
            Err(self.error_msg(
                alloc::format!("unexpected {}", self.tok.describe()),
                &[what],
            ))
        }
    }

    fn variable(&mut self, s: Symbol, at: usize) -> Result<Node, ParseError> {
        match self.symbol {
            Some(prev) if prev != s => Err(ParseError {
                offset: at,
                expected: alloc::vec![prev.as_str()],
                message: alloc::format!(
                    "expression mixes variables '{}' and '{}'",
                    prev.as_str(),
                    s.as_str()
                ),
            }),
            _ => {
                self.symbol = Some(s);
                Ok(Node::Var(s))
            }
        }
    }

    fn primary(&mut self) -> Result<Node, ParseError> {
        match self.tok.clone() {
            Tok::Num(v) => {
                self.advance()?;
                Ok(Node::Const(v))
            }
            Tok::LParen => {
                self.advance()?;
                let inner = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                let at = self.tok_start;
                self.advance()?;
                match name {
                    "x" => self.variable(Symbol::X, at),
                    "t" => self.variable(Symbol::T, at),
                    "e" => Ok(Node::Const(core::f64::consts::E)),
                    _ => self.call(name, at),
                }
            }
            Tok::End => Err(self.error("unexpected end of input", OPERAND)),
            Tok::RParen => Err(self.error("unbalanced ')'", OPERAND)),
            other => {
                Err(self.error_msg(alloc::format!("unexpected {}", other.describe()), OPERAND))
            }
        }
    }

    fn call(&mut self, name: &'a str, at: usize) -> Result<Node, ParseError> {
        let func = match name {
            "exp" => Some(Func::Exp),
            "log" | "ln" => Some(Func::Log),
            "sqrt" => Some(Func::Sqrt),
            "abs" => Some(Func::Abs),
            "sgn" | "sign" => Some(Func::Sgn),
            "signed_pow" | "loglog" | "iterlog" => None,
            _ => {
                return Err(ParseError {
                    offset: at,
                    expected: alloc::vec![
                        "x",
                        "t",
                        "e",
                        "exp",
                        "log",
                        "sqrt",
                        "abs",
                        "sgn",
                        "signed_pow",
                        "loglog",
                        "iterlog"
                    ],
                    message: alloc::format!("unknown identifier '{}'", name),
                })
            }
        };
        self.expect(Tok::LParen, "'('")?;
        let mut args = alloc::vec![self.expr()?];
        while self.tok == Tok::Comma {
            self.advance()?;
            args.push(self.expr()?);
        }
        let close = self.tok_start;
        self.expect(Tok::RParen, "')'")?;
        let arity_error = |want: &str| ParseError {
            offset: at,
            expected: Vec::new(),
            message: alloc::format!("{} takes {}", name, want),
        };
        if let Some(func) = func {
            if args.len() != 1 {
                return Err(arity_error("one argument"));
            }
            return Ok(Node::Call(func, Box::new(args.pop().unwrap())));
        }
        match name {
            "loglog" => {
                if args.len() != 1 {
                    return Err(arity_error("one argument"));
                }
                Ok(Node::IterLog(Box::new(args.pop().unwrap()), 2))
            }
            "iterlog" => {
                if args.len() != 2 {
                    return Err(arity_error("two arguments (expression, depth)"));
                }
                let depth = self.constant(&args[1], close)?;
                if depth < 1.0 || libm::trunc(depth) != depth || depth > 8.0 {
                    return Err(ParseError {
                        offset: close,
                        expected: alloc::vec!["integer depth in 1..=8"],
                        message: alloc::format!("invalid iterlog depth {}", depth),
                    });
                }
                let arg = args.swap_remove(0);
                Ok(Node::IterLog(Box::new(arg), depth as u32))
            }
            _ => {
                let (arg, exponent) = match args.len() {
                    1 => (self.variable(Symbol::X, at)?, &args[0]),
                    2 => (args[0].clone(), &args[1]),
                    _ => return Err(arity_error("one or two arguments")),
                };
                let exponent = self.constant(exponent, close)?;
                Ok(Node::SignedPow(Box::new(arg), exponent))
            }
        }
    }

    /// Folds a variable-free argument to its value.
    fn constant(&self, node: &Node, at: usize) -> Result<f64, ParseError> {
        if node.symbol().is_some() {
            return Err(ParseError {
                offset: at,
                expected: alloc::vec!["constant expression"],
                message: "parameter must not depend on the variable".into(),
            });
        }
        eval::eval(node, 0.0).map_err(|e| ParseError {
            offset: at,
            expected: alloc::vec!["constant expression"],
            message: alloc::format!("{}", e),
        })
    }
}
