//! Closed-form expression language for metric components, defining functions,
//! conformal factors and variation tensors.
//!
//! Grammar (lowest to highest precedence): `+ -` (left), `* /` (left),
//! unary `-`, `^` (right, integer exponent), atoms: numbers, coordinates,
//! `f(expr)` for `f ∈ {exp, log, sqrt, sin, cos, tanh}`, parentheses.

use std::fmt;

use thiserror::Error;

use crate::jets::{Jet, JetError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
    Tanh,
}

impl Func {
    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tanh" => Func::Tanh,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tanh => "tanh",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }

    fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            BinOp::Add => a + b,
            BinOp::Sub => a - b,
            BinOp::Mul => a * b,
            BinOp::Div => a / b,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i64),
    Call(Func, Box<Expr>),
}

/// AST node with the byte span it was parsed from (ignored by equality).
#[derive(Debug, Clone)]
pub struct Expr {
    pub node: Node,
    pub span: (usize, usize),
}

impl PartialEq for Expr {
    fn eq(&self, other: &Expr) -> bool {
        match (&self.node, &other.node) {
            (Node::Num(a), Node::Num(b)) => a == b,
            (Node::Var(a), Node::Var(b)) => a == b,
            (Node::Neg(a), Node::Neg(b)) => a == b,
            (Node::Bin(o1, a1, b1), Node::Bin(o2, a2, b2)) => o1 == o2 && a1 == a2 && b1 == b2,
            (Node::Pow(a, n), Node::Pow(b, m)) => n == m && a == b,
            (Node::Call(f, a), Node::Call(g, b)) => f == g && a == b,
            _ => false,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("empty expression")]
    Empty,
    #[error("unexpected character {ch:?} at byte {offset}")]
    Lexical { offset: usize, ch: char },
    #[error("malformed number at byte {offset}")]
    BadNumber { offset: usize },
    #[error("unbalanced parentheses at byte {offset}")]
    Unbalanced { offset: usize },
    #[error("unknown identifier {name:?} at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("coordinate {name:?} at byte {offset} exceeds dimension {dim}")]
    CoordinateOutOfRange { offset: usize, name: String, dim: usize },
    #[error("exponent at byte {offset} must be an integer literal")]
    NonIntegerExponent { offset: usize },
    #[error("unexpected {found} at byte {offset}")]
    Unexpected { offset: usize, found: String },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Empty => 0,
            ParseError::Lexical { offset, .. }
            | ParseError::BadNumber { offset }
            | ParseError::Unbalanced { offset }
            | ParseError::UnknownIdentifier { offset, .. }
            | ParseError::CoordinateOutOfRange { offset, .. }
            | ParseError::NonIntegerExponent { offset }
            | ParseError::Unexpected { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("cannot evaluate `{node}` (byte {offset}): {source}")]
pub struct EvalError {
    pub node: String,
    pub offset: usize,
    pub source: JetError,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

fn lex(src: &str) -> Result<Vec<(Tok, usize, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let save = i;
                i += 1;
                if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
                    i += 1;
                }
                if i < bytes.len() && bytes[i].is_ascii_digit() {
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                } else {
                    i = save;
                }
            }
            let text = &src[start..i];
            let v: f64 = text.parse().map_err(|_| ParseError::BadNumber { offset: start })?;
            out.push((Tok::Num(v), start, i));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start, i));
        } else if "+-*/^".contains(c) {
            out.push((Tok::Op(c), i, i + 1));
            i += 1;
        } else if c == '(' {
            out.push((Tok::LParen, i, i + 1));
            i += 1;
        } else if c == ')' {
            out.push((Tok::RParen, i, i + 1));
            i += 1;
        } else {
            let ch = src[i..].chars().next().unwrap_or('?');
            return Err(ParseError::Lexical { offset: i, ch });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
    names: &'a [String],
    end: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.1).unwrap_or(self.end)
    }

    fn prev_end(&self) -> usize {
        if self.pos == 0 {
            0
        } else {
            self.toks[self.pos - 1].2
        }
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.product()?;
        while let Some(Tok::Op(c @ ('+' | '-'))) = self.peek() {
            let op = if *c == '+' { BinOp::Add } else { BinOp::Sub };
            self.pos += 1;
            let rhs = self.product()?;
            lhs = fold_bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Op(c @ ('*' | '/'))) = self.peek() {
            let op = if *c == '*' { BinOp::Mul } else { BinOp::Div };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = fold_bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if let Some(Tok::Op('-')) = self.peek() {
            let start = self.offset();
            self.pos += 1;
            let inner = self.unary()?;
            let span = (start, inner.span.1);
            return Ok(match inner.node {
                Node::Num(v) => Expr { node: Node::Num(-v), span },
                _ => Expr { node: Node::Neg(Box::new(inner)), span },
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.pos += 1;
            let exp_at = self.offset();
            let exponent = self.unary_exponent()?;
            let n = match exponent.node {
                Node::Num(v) if v.fract() == 0.0 && v.abs() < 1e9 => v as i64,
                _ => return Err(ParseError::NonIntegerExponent { offset: exp_at }),
            };
            let span = (base.span.0, exponent.span.1);
            return Ok(match base.node {
                Node::Num(v) => Expr { node: Node::Num(v.powi(n as i32)), span },
                _ => Expr { node: Node::Pow(Box::new(base), n), span },
            });
        }
        Ok(base)
    }

    /// Exponent operand: allows a leading minus and nests to the right.
    fn unary_exponent(&mut self) -> Result<Expr, ParseError> {
        if let Some(Tok::Op('-')) = self.peek() {
            let start = self.offset();
            self.pos += 1;
            let inner = self.unary_exponent()?;
            let span = (start, inner.span.1);
            return Ok(match inner.node {
                Node::Num(v) => Expr { node: Node::Num(-v), span },
                _ => Expr { node: Node::Neg(Box::new(inner)), span },
            });
        }
        self.power()
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let offset = self.offset();
        let tok = match self.toks.get(self.pos) {
            Some(t) => t.clone(),
            None => return Err(ParseError::Unexpected { offset, found: "end of input".into() }),
        };
        self.pos += 1;
        match tok.0 {
            Tok::Num(v) => Ok(Expr { node: Node::Num(v), span: (tok.1, tok.2) }),
            Tok::LParen => {
                let inner = self.sum()?;
                match self.peek() {
                    Some(Tok::RParen) => {
                        self.pos += 1;
                        Ok(Expr { node: inner.node, span: (tok.1, self.prev_end()) })
                    }
                    _ => Err(ParseError::Unbalanced { offset: tok.1 }),
                }
            }
            Tok::Ident(name) => {
                if let Some(f) = Func::from_name(&name) {
                    match self.peek() {
                        Some(Tok::LParen) => {
                            let open = self.offset();
                            self.pos += 1;
                            let arg = self.sum()?;
                            match self.peek() {
                                Some(Tok::RParen) => self.pos += 1,
                                _ => return Err(ParseError::Unbalanced { offset: open }),
                            }
                            return Ok(Expr { node: Node::Call(f, Box::new(arg)), span: (tok.1, self.prev_end()) });
                        }
                        _ => {
                            return Err(ParseError::Unexpected { offset: self.offset(), found: "missing '(' after function".into() })
                        }
                    }
                }
                self.coordinate(&name, tok.1, tok.2)
            }
            Tok::RParen => Err(ParseError::Unbalanced { offset: tok.1 }),
            Tok::Op(c) => Err(ParseError::Unexpected { offset: tok.1, found: format!("operator '{c}'") }),
        }
    }

    fn coordinate(&self, name: &str, start: usize, end: usize) -> Result<Expr, ParseError> {
        if let Some(i) = self.names.iter().position(|n| n == name) {
            return Ok(Expr { node: Node::Var(i), span: (start, end) });
        }
        if let Some(rest) = name.strip_prefix('x') {
            if let Ok(k) = rest.parse::<usize>() {
                if k >= 1 && k <= self.names.len() {
                    return Ok(Expr { node: Node::Var(k - 1), span: (start, end) });
                }
                return Err(ParseError::CoordinateOutOfRange { offset: start, name: name.to_string(), dim: self.names.len() });
            }
        }
        Err(ParseError::UnknownIdentifier { offset: start, name: name.to_string() })
    }
}

fn fold_bin(op: BinOp, a: Expr, b: Expr) -> Expr {
    let span = (a.span.0, b.span.1);
    match (&a.node, &b.node) {
        (Node::Num(x), Node::Num(y)) => Expr { node: Node::Num(op.apply(*x, *y)), span },
        _ => Expr { node: Node::Bin(op, Box::new(a), Box::new(b)), span },
    }
}

/// Default coordinate names `x1..xd`.
pub fn default_names(dim: usize) -> Vec<String> {
    (1..=dim).map(|i| format!("x{i}")).collect()
}

/// A parsed expression in `dim` coordinates.
#[derive(Debug, Clone)]
pub struct Expression {
    root: Expr,
    dim: usize,
    source: String,
}

impl PartialEq for Expression {
    fn eq(&self, other: &Expression) -> bool {
        self.dim == other.dim && self.root == other.root
    }
}

impl Expression {
    /// Parse with coordinates `x1..x{dim}`.
    pub fn parse(src: &str, dim: usize) -> Result<Expression, ParseError> {
        Self::parse_with_names(src, &default_names(dim))
    }

    /// Parse with custom coordinate names; `x1..xd` stay valid aliases.
    pub fn parse_with_names(src: &str, names: &[String]) -> Result<Expression, ParseError> {
        let toks = lex(src)?;
        if toks.is_empty() {
            return Err(ParseError::Empty);
        }
        let mut p = Parser { toks, pos: 0, names, end: src.len() };
        let root = p.sum()?;
        if p.pos < p.toks.len() {
            let (tok, off, _) = &p.toks[p.pos];
            return Err(match tok {
                Tok::RParen => ParseError::Unbalanced { offset: *off },
                t => ParseError::Unexpected { offset: *off, found: format!("{t:?}") },
            });
        }
        Ok(Expression { root, dim: names.len(), source: src.to_string() })
    }

    pub fn from_expr(root: Expr, dim: usize) -> Expression {
        let source = root.to_string();
        Expression { root, dim, source }
    }

    pub fn constant(c: f64, dim: usize) -> Expression {
        Expression::from_expr(Expr::num(c), dim)
    }

    pub fn root(&self) -> &Expr {
        &self.root
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Taylor expansion about `p` to order `order`.
    pub fn eval_jet(&self, p: &[f64], order: usize) -> Result<Jet, EvalError> {
        assert_eq!(p.len(), self.dim, "point dimension");
        self.root.jet(p, order)
    }

    /// Plain recursive numeric evaluation.
    pub fn eval(&self, x: &[f64]) -> Result<f64, EvalError> {
        self.root.value(x)
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.root)
    }
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr { node: Node::Num(v), span: (0, 0) }
    }

    pub fn var(i: usize) -> Expr {
        Expr { node: Node::Var(i), span: (0, 0) }
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr { node: Node::Bin(op, Box::new(a), Box::new(b)), span: (0, 0) }
    }

    pub fn powi(self, n: i64) -> Expr {
        Expr { node: Node::Pow(Box::new(self), n), span: (0, 0) }
    }

    pub fn call(f: Func, a: Expr) -> Expr {
        Expr { node: Node::Call(f, Box::new(a)), span: (0, 0) }
    }

    fn fail(&self, source: JetError) -> EvalError {
        EvalError { node: self.to_string(), offset: self.span.0, source }
    }

    fn jet(&self, p: &[f64], order: usize) -> Result<Jet, EvalError> {
        let d = p.len();
        Ok(match &self.node {
            Node::Num(v) => Jet::constant(d, order, *v),
            Node::Var(i) => Jet::variable(d, order, *i, p[*i]),
            Node::Neg(a) => -a.jet(p, order)?,
            Node::Bin(op, a, b) => {
                let (x, y) = (a.jet(p, order)?, b.jet(p, order)?);
                match op {
                    BinOp::Add => &x + &y,
                    BinOp::Sub => &x - &y,
                    BinOp::Mul => &x * &y,
                    BinOp::Div => x.div(&y).map_err(|e| self.fail(e))?,
                }
            }
            Node::Pow(a, n) => a.jet(p, order)?.powi(*n).map_err(|e| self.fail(e))?,
            Node::Call(f, a) => {
                let x = a.jet(p, order)?;
                match f {
                    Func::Exp => x.exp(),
                    Func::Log => x.ln().map_err(|e| self.fail(e))?,
                    Func::Sqrt => x.sqrt().map_err(|e| self.fail(e))?,
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Tanh => x.tanh(),
                }
            }
        })
    }

    fn value(&self, x: &[f64]) -> Result<f64, EvalError> {
        let singular = |function, value| self.fail(JetError::Singular { function, value });
        Ok(match &self.node {
            Node::Num(v) => *v,
            Node::Var(i) => x[*i],
            Node::Neg(a) => -a.value(x)?,
            Node::Bin(op, a, b) => {
                let (u, v) = (a.value(x)?, b.value(x)?);
                if *op == BinOp::Div && v.abs() < crate::jets::SINGULAR_EPS {
                    return Err(singular("reciprocal", v));
                }
                op.apply(u, v)
            }
            Node::Pow(a, n) => {
                let u = a.value(x)?;
                if *n < 0 && u.abs() < crate::jets::SINGULAR_EPS {
                    return Err(singular("reciprocal", u));
                }
                u.powi(*n as i32)
            }
            Node::Call(f, a) => {
                let u = a.value(x)?;
                match f {
                    Func::Exp => u.exp(),
                    Func::Log if u < crate::jets::SINGULAR_EPS => return Err(singular("log", u)),
                    Func::Log => u.ln(),
                    Func::Sqrt if u < crate::jets::SINGULAR_EPS => return Err(singular("sqrt", u)),
                    Func::Sqrt => u.sqrt(),
                    Func::Sin => u.sin(),
                    Func::Cos => u.cos(),
                    Func::Tanh => u.tanh(),
                }
            }
        })
    }
}

fn fmt_num(v: f64) -> String {
    let s = format!("{v:?}");
    if v < 0.0 {
        format!("({s})")
    } else {
        s
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.node {
            Node::Num(v) => write!(f, "{}", fmt_num(*v)),
            Node::Var(i) => write!(f, "x{}", i + 1),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Node::Pow(a, n) => {
                match &a.node {
                    Node::Pow(..) => write!(f, "({a})")?,
                    Node::Num(v) if v.is_sign_negative() => write!(f, "({a})")?,
                    _ => write!(f, "{a}")?,
                }
                if *n < 0 {
                    write!(f, "^({n})")
                } else {
                    write!(f, "^{n}")
                }
            }
            Node::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::bin(BinOp::Add, self, rhs)
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::bin(BinOp::Sub, self, rhs)
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::bin(BinOp::Mul, self, rhs)
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::bin(BinOp::Div, self, rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Expression {
        Expression::parse(s, 4).unwrap()
    }

    #[test]
    fn division_over_product() {
        let e = p("1/(x4*x4)");
        match &e.root().node {
            Node::Bin(BinOp::Div, a, b) => {
                assert!(matches!(a.node, Node::Num(v) if v == 1.0));
                assert!(matches!(b.node, Node::Bin(BinOp::Mul, _, _)));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn literal_power_folds() {
        let e = p("sin(x1)+2^3");
        match &e.root().node {
            Node::Bin(BinOp::Add, a, b) => {
                assert!(matches!(a.node, Node::Call(Func::Sin, _)));
                assert!(matches!(b.node, Node::Num(v) if v == 8.0));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn out_of_range_coordinate() {
        let err = Expression::parse("x7", 4).unwrap_err();
        assert!(matches!(err, ParseError::CoordinateOutOfRange { offset: 0, .. }));
    }

    #[test]
    fn error_offsets() {
        assert_eq!(Expression::parse("1 + (x1", 4).unwrap_err(), ParseError::Unbalanced { offset: 4 });
        assert!(matches!(Expression::parse("x1 $ 2", 4).unwrap_err(), ParseError::Lexical { offset: 3, .. }));
        assert!(matches!(Expression::parse("foo(x1)", 4).unwrap_err(), ParseError::UnknownIdentifier { offset: 0, .. }));
        assert!(matches!(Expression::parse("x1^x2", 4).unwrap_err(), ParseError::NonIntegerExponent { offset: 3 }));
        assert!(matches!(Expression::parse("x1^0.5", 4).unwrap_err(), ParseError::NonIntegerExponent { .. }));
        assert_eq!(Expression::parse("  ", 4).unwrap_err(), ParseError::Empty);
    }

    #[test]
    fn precedence() {
        let e = p("-x1^2");
        assert_eq!(e.eval(&[3.0, 0.0, 0.0, 0.0]).unwrap(), -9.0);
        let e = p("2^3^2");
        assert_eq!(e.eval(&[0.0; 4]).unwrap(), 512.0);
        let e = p("8/4/2 - 1 - 1");
        assert_eq!(e.eval(&[0.0; 4]).unwrap(), -1.0);
        let e = p("x1^-2");
        assert_eq!(e.eval(&[2.0, 0.0, 0.0, 0.0]).unwrap(), 0.25);
    }

    #[test]
    fn binomial_expansion() {
        let e = Expression::parse("(x1+x2)^2", 2).unwrap();
        let j = e.eval_jet(&[0.0, 0.0], 2).unwrap();
        assert_eq!(j.coefficient(&[2, 0]).unwrap(), 1.0);
        assert_eq!(j.coefficient(&[1, 1]).unwrap(), 2.0);
        assert_eq!(j.coefficient(&[0, 2]).unwrap(), 1.0);
    }

    #[test]
    fn inverse_square() {
        let e = p("1/(x4^2)");
        let j = e.eval_jet(&[0.0, 0.0, 0.0, 2.0], 1).unwrap();
        assert!((j.value() - 0.25).abs() < 1e-15);
        assert!((j.coefficient(&[0, 0, 0, 1]).unwrap() + 0.25).abs() < 1e-15);
    }

    #[test]
    fn domain_violation_names_node() {
        let e = p("1 + log(x1 - 1)");
        let err = e.eval_jet(&[0.5, 0.0, 0.0, 0.0], 2).unwrap_err();
        assert!(err.node.starts_with("log("), "{}", err.node);
        assert_eq!(err.offset, 4);
    }

    #[test]
    fn custom_names() {
        let names: Vec<String> = ["r", "theta"].iter().map(|s| s.to_string()).collect();
        let e = Expression::parse_with_names("r^2*sin(theta)", &names).unwrap();
        assert!((e.eval(&[2.0, 0.5]).unwrap() - 4.0 * 0.5f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn roundtrip() {
        for s in ["1/(x4*x4)", "-x1^2 + exp(-x2)*3.5e-3", "tanh(x1 - -x2)/(1+x3^-3)", "(-2)*x1"] {
            let a = p(s);
            let b = p(&a.to_string());
            assert_eq!(a, b, "{s} -> {}", a);
        }
    }
}
