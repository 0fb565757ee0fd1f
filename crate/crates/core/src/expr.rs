//! Small arithmetic expression language for analytic fields in `(t, x, y, z)`.
//!
//! Supports `+ - * / ^`, unary minus, parentheses, the functions
//! `sin cos tan exp ln sqrt tanh` and the constants `pi` and `e`. Derivatives
//! are taken symbolically so that manufactured sources and test-pair
//! derivatives carry no finite-difference error.

use std::fmt;
use std::sync::Arc;

use crate::{Error, Result, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    T,
    X,
    Y,
    Z,
}

impl Var {
    /// Spatial coordinate `k` (0, 1, 2).
    pub fn space(k: usize) -> Var {
        match k {
            0 => Var::X,
            1 => Var::Y,
            _ => Var::Z,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Var::T => "t",
            Var::X => "x",
            Var::Y => "y",
            Var::Z => "z",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Tanh,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "tanh" => Func::Tanh,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Tanh => "tanh",
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Tan => v.tan(),
            Func::Exp => v.exp(),
            Func::Ln => v.ln(),
            Func::Sqrt => v.sqrt(),
            Func::Tanh => v.tanh(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(f64),
    Var(Var),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Pow(Expr, Expr),
    Neg(Expr),
    Call(Func, Expr),
}

/// Immutable, cheaply clonable expression tree.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr(Arc<Node>);

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let tokens = tokenize(src)?;
        let mut p = Parser { tokens, pos: 0, len: src.len() };
        let e = p.expr()?;
        if let Some(tok) = p.tokens.get(p.pos) {
            return Err(Error::Expression { column: tok.col, message: format!("unexpected {:?}", tok.kind) });
        }
        Ok(e)
    }

    pub fn constant(v: f64) -> Expr {
        Expr(Arc::new(Node::Const(v)))
    }

    pub fn var(v: Var) -> Expr {
        Expr(Arc::new(Node::Var(v)))
    }

    pub fn call(f: Func, arg: Expr) -> Expr {
        if let Some(c) = arg.as_const() {
            return Expr::constant(f.apply(c));
        }
        Expr(Arc::new(Node::Call(f, arg)))
    }

    pub fn as_const(&self) -> Option<f64> {
        match *self.0 {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn eval(&self, t: f64, x: &Vec3) -> f64 {
        match &*self.0 {
            Node::Const(c) => *c,
            Node::Var(v) => match v {
                Var::T => t,
                Var::X => x[0],
                Var::Y => x[1],
                Var::Z => x[2],
            },
            Node::Add(a, b) => a.eval(t, x) + b.eval(t, x),
            Node::Sub(a, b) => a.eval(t, x) - b.eval(t, x),
            Node::Mul(a, b) => a.eval(t, x) * b.eval(t, x),
            Node::Div(a, b) => a.eval(t, x) / b.eval(t, x),
            Node::Pow(a, b) => {
                let base = a.eval(t, x);
                match b.as_const() {
                    Some(n) if n.fract() == 0.0 && n.abs() <= 64.0 => base.powi(n as i32),
                    _ => base.powf(b.eval(t, x)),
                }
            }
            Node::Neg(a) => -a.eval(t, x),
            Node::Call(f, a) => f.apply(a.eval(t, x)),
        }
    }

    /// Evaluate a function of time only.
    pub fn eval_t(&self, t: f64) -> f64 {
        self.eval(t, &Vec3::zeros())
    }

    pub fn depends_on(&self, var: Var) -> bool {
        match &*self.0 {
            Node::Const(_) => false,
            Node::Var(v) => *v == var,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
                a.depends_on(var) || b.depends_on(var)
            }
            Node::Neg(a) | Node::Call(_, a) => a.depends_on(var),
        }
    }

    /// Symbolic partial derivative.
    pub fn diff(&self, var: Var) -> Expr {
        if !self.depends_on(var) {
            return Expr::constant(0.0);
        }
        match &*self.0 {
            Node::Const(_) => Expr::constant(0.0),
            Node::Var(v) => Expr::constant(if *v == var { 1.0 } else { 0.0 }),
            Node::Add(a, b) => a.diff(var) + b.diff(var),
            Node::Sub(a, b) => a.diff(var) - b.diff(var),
            Node::Mul(a, b) => a.diff(var) * b.clone() + a.clone() * b.diff(var),
            Node::Div(a, b) => (a.diff(var) * b.clone() - a.clone() * b.diff(var)) / b.clone().powc(2.0),
            Node::Pow(a, b) => {
                if let Some(n) = b.as_const() {
                    Expr::constant(n) * a.clone().powc(n - 1.0) * a.diff(var)
                } else {
                    // d(a^b) = a^b (b' ln a + b a'/a)
                    self.clone()
                        * (b.diff(var) * Expr::call(Func::Ln, a.clone()) + b.clone() * a.diff(var) / a.clone())
                }
            }
            Node::Neg(a) => -a.diff(var),
            Node::Call(f, a) => {
                let inner = a.diff(var);
                let outer = match f {
                    Func::Sin => Expr::call(Func::Cos, a.clone()),
                    Func::Cos => -Expr::call(Func::Sin, a.clone()),
                    Func::Tan => Expr::constant(1.0) + Expr::call(Func::Tan, a.clone()).powc(2.0),
                    Func::Exp => self.clone(),
                    Func::Ln => Expr::constant(1.0) / a.clone(),
                    Func::Sqrt => Expr::constant(0.5) / self.clone(),
                    Func::Tanh => Expr::constant(1.0) - self.clone().powc(2.0),
                };
                outer * inner
            }
        }
    }

    pub fn powc(self, n: f64) -> Expr {
        if n == 0.0 {
            return Expr::constant(1.0);
        }
        if n == 1.0 {
            return self;
        }
        self.pow(Expr::constant(n))
    }

    pub fn pow(self, e: Expr) -> Expr {
        match (self.as_const(), e.as_const()) {
            (Some(a), Some(b)) => Expr::constant(a.powf(b)),
            (_, Some(1.0)) => self,
            (_, Some(0.0)) => Expr::constant(1.0),
            _ => Expr(Arc::new(Node::Pow(self, e))),
        }
    }

    /// Spatial gradient as component expressions `[d/dx, d/dy, d/dz][..dim]`.
    pub fn gradient(&self, dim: usize) -> Vec<Expr> {
        (0..dim).map(|k| self.diff(Var::space(k))).collect()
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) => Expr::constant(a + b),
            (Some(0.0), _) => rhs,
            (_, Some(0.0)) => self,
            _ => Expr(Arc::new(Node::Add(self, rhs))),
        }
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) => Expr::constant(a - b),
            (Some(0.0), _) => -rhs,
            (_, Some(0.0)) => self,
            _ => Expr(Arc::new(Node::Sub(self, rhs))),
        }
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) => Expr::constant(a * b),
            (Some(a), _) | (_, Some(a)) if a == 0.0 => Expr::constant(0.0),
            (Some(1.0), _) => rhs,
            (_, Some(1.0)) => self,
            _ => Expr(Arc::new(Node::Mul(self, rhs))),
        }
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) => Expr::constant(a / b),
            (Some(0.0), _) => Expr::constant(0.0),
            (_, Some(1.0)) => self,
            _ => Expr(Arc::new(Node::Div(self, rhs))),
        }
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        match &*self.0 {
            Node::Const(c) => Expr::constant(-c),
            Node::Neg(a) => a.clone(),
            _ => Expr(Arc::new(Node::Neg(self))),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.0 {
            Node::Const(c) => {
                if *c < 0.0 {
                    write!(f, "({c:?})")
                } else {
                    write!(f, "{c:?}")
                }
            }
            Node::Var(v) => f.write_str(v.name()),
            Node::Add(a, b) => write!(f, "({a} + {b})"),
            Node::Sub(a, b) => write!(f, "({a} - {b})"),
            Node::Mul(a, b) => write!(f, "({a} * {b})"),
            Node::Div(a, b) => write!(f, "({a} / {b})"),
            Node::Pow(a, b) => write!(f, "({a} ^ {b})"),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

/// Scalar field with its time derivative and spatial gradient prepared once.
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub value: Expr,
    pub dt: Expr,
    pub grad: Vec<Expr>,
}

impl ScalarField {
    pub fn new(value: Expr, dim: usize) -> Self {
        let dt = value.diff(Var::T);
        let grad = value.gradient(dim);
        Self { value, dt, grad }
    }

    pub fn parse(src: &str, dim: usize) -> Result<Self> {
        Ok(Self::new(Expr::parse(src)?, dim))
    }

    pub fn eval(&self, t: f64, x: &Vec3) -> f64 {
        self.value.eval(t, x)
    }

    pub fn eval_dt(&self, t: f64, x: &Vec3) -> f64 {
        self.dt.eval(t, x)
    }

    pub fn eval_grad(&self, t: f64, x: &Vec3) -> Vec3 {
        let mut g = Vec3::zeros();
        for (k, e) in self.grad.iter().enumerate() {
            g[k] = e.eval(t, x);
        }
        g
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokKind {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokKind,
    col: usize,
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // exponent only when followed by a digit, so `2e` stays `2 e`
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = text
                .parse::<f64>()
                .map_err(|_| Error::Expression { column: col, message: format!("bad number {text:?}") })?;
            out.push(Token { kind: TokKind::Num(v), col });
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token { kind: TokKind::Ident(chars[start..i].iter().collect()), col });
        } else if "+-*/^".contains(c) {
            out.push(Token { kind: TokKind::Op(c), col });
            i += 1;
        } else if c == '(' {
            out.push(Token { kind: TokKind::LParen, col });
            i += 1;
        } else if c == ')' {
            out.push(Token { kind: TokKind::RParen, col });
            i += 1;
        } else {
            return Err(Error::Expression { column: col, message: format!("unexpected character {c:?}") });
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&TokKind> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn col(&self) -> usize {
        self.tokens.get(self.pos).map(|t| t.col).unwrap_or(self.len + 1)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Expression { column: self.col(), message: message.into() })
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(TokKind::Op(op @ ('+' | '-'))) = self.peek() {
            let op = *op;
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' { lhs + rhs } else { lhs - rhs };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(TokKind::Op(op @ ('*' | '/'))) = self.peek() {
            let op = *op;
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' { lhs * rhs } else { lhs / rhs };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(TokKind::Op('-')) => {
                self.pos += 1;
                Ok(-self.unary()?)
            }
            Some(TokKind::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if let Some(TokKind::Op('^')) = self.peek() {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(base.pow(exp));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let Some(kind) = self.peek().cloned() else {
            return self.err("unexpected end of expression");
        };
        self.pos += 1;
        match kind {
            TokKind::Num(v) => Ok(Expr::constant(v)),
            TokKind::LParen => {
                let e = self.expr()?;
                match self.peek() {
                    Some(TokKind::RParen) => {
                        self.pos += 1;
                        Ok(e)
                    }
                    _ => self.err("expected ')'"),
                }
            }
            TokKind::Ident(name) => {
                if let Some(f) = Func::from_name(&name) {
                    if self.peek() != Some(&TokKind::LParen) {
                        return self.err(format!("expected '(' after {name}"));
                    }
                    self.pos += 1;
                    let arg = self.expr()?;
                    if self.peek() != Some(&TokKind::RParen) {
                        return self.err("expected ')'");
                    }
                    self.pos += 1;
                    return Ok(Expr::call(f, arg));
                }
                match name.as_str() {
                    "t" => Ok(Expr::var(Var::T)),
                    "x" => Ok(Expr::var(Var::X)),
                    "y" => Ok(Expr::var(Var::Y)),
                    "z" => Ok(Expr::var(Var::Z)),
                    "pi" => Ok(Expr::constant(std::f64::consts::PI)),
                    "e" => Ok(Expr::constant(std::f64::consts::E)),
                    _ => {
                        self.pos -= 1;
                        self.err(format!("unknown identifier {name:?}"))
                    }
                }
            }
            other => {
                self.pos -= 1;
                self.err(format!("unexpected {other:?}"))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn at(x: f64, y: f64) -> Vec3 {
        Vec3::new(x, y, 0.0)
    }

    #[test]
    fn parses_and_evaluates() {
        let e = Expr::parse("2 + 3*x^2 - -y/4").unwrap();
        assert_relative_eq!(e.eval(0.0, &at(2.0, 8.0)), 16.0);
        let e = Expr::parse("-x^2").unwrap();
        assert_eq!(e.eval(0.0, &at(3.0, 0.0)), -9.0);
        let e = Expr::parse("2^3^2").unwrap();
        assert_eq!(e.eval_t(0.0), 512.0);
        let e = Expr::parse("1.5e-1 * 2 * e").unwrap();
        assert_relative_eq!(e.eval_t(0.0), 0.3 * std::f64::consts::E);
        let e = Expr::parse("sin(pi*x)*exp(-t) + ln(e)").unwrap();
        assert_relative_eq!(e.eval(1.0, &at(0.5, 0.0)), (-1.0f64).exp() + 1.0);
    }

    #[test]
    fn reports_error_column() {
        match Expr::parse("1 + foo(x)") {
            Err(Error::Expression { column, .. }) => assert_eq!(column, 5),
            other => panic!("{other:?}"),
        }
        assert!(Expr::parse("(1 + x").is_err());
        assert!(Expr::parse("1 +").is_err());
        assert!(Expr::parse("x $ 2").is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let srcs = [
            "2 + sin(x - t)",
            "cos(x - t) * sin(pi*x/(1 + 0.1*t))",
            "(2 + sin(x))^1.4",
            "x^y",
            "sqrt(1 + x^2) / exp(t*y)",
            "tanh(x*y) + tan(0.3*x) + ln(2 + x)",
        ];
        let p = at(0.37, 1.21);
        let t = 0.43;
        for src in srcs {
            let e = Expr::parse(src).unwrap();
            for var in [Var::T, Var::X, Var::Y] {
                let h = 1e-5;
                let shift = |d: f64| match var {
                    Var::T => (t + d, p),
                    Var::X => (t, p + Vec3::new(d, 0.0, 0.0)),
                    _ => (t, p + Vec3::new(0.0, d, 0.0)),
                };
                let (tp, xp) = shift(h);
                let (tm, xm) = shift(-h);
                let fd = (e.eval(tp, &xp) - e.eval(tm, &xm)) / (2.0 * h);
                let exact = e.diff(var).eval(t, &p);
                assert!((fd - exact).abs() < 1e-7 * (1.0 + exact.abs()), "{src} d/{var:?}: {fd} vs {exact}");
            }
        }
    }

    #[test]
    fn constant_folding() {
        let e = Expr::parse("3*x + 2").unwrap();
        assert_eq!(e.diff(Var::X).as_const(), Some(3.0));
        assert_eq!(e.diff(Var::T).as_const(), Some(0.0));
        assert!(!e.depends_on(Var::Y));
    }

    #[test]
    fn display_round_trips() {
        let e = Expr::parse("-(x - 2)^2 / (1 + t) + cos(-3*y)").unwrap();
        let again = Expr::parse(&e.to_string()).unwrap();
        let p = at(0.7, -0.2);
        assert_relative_eq!(e.eval(0.3, &p), again.eval(0.3, &p), max_relative = 1e-15);
    }
}
