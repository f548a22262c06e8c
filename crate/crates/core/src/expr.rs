//! A small expression language for penalties and extensions.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?
//! atom    := number | 'y' | 'a' | 'b' | 'q' | '(' expr ')'
//!          | 'exp' '(' expr ')' | 'max' '(' expr ',' expr ')' | 'min' '(' expr ',' expr ')'
//!          | 'ind' '(' expr cmp expr ')' | 'W' '(' expr ')'
//! cmp     := '<' | '<=' | '>' | '>='
//! ```
//!
//! `W` is the scale function `W^(q)` of the model. Expressions are evaluated
//! together with their first and second left derivatives in `y`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::generator::{CustomExtension, Penalty};
use crate::scale::ScaleFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Cmp {
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Y,
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Exp(Box<Node>),
    Max(Box<Node>, Box<Node>),
    Min(Box<Node>, Box<Node>),
    Ind(Box<Node>, Cmp, Box<Node>),
    W(Box<Node>),
}

/// Value with first and second derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub d: f64,
    pub dd: f64,
}

impl Jet {
    fn constant(v: f64) -> Self {
        Jet { v, d: 0.0, dd: 0.0 }
    }

    /// `g ∘ self` given `g, g', g''` at `self.v`.
    fn chain(self, g: f64, g1: f64, g2: f64) -> Self {
        Jet {
            v: g,
            d: g1 * self.d,
            dd: g2 * self.d * self.d + g1 * self.dd,
        }
    }
}

/// Values `a`, `b`, `q` bound to the symbols of the same name.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bindings {
    pub a: f64,
    pub b: f64,
    pub q: f64,
}

#[derive(Clone)]
pub struct Expr {
    source: String,
    root: Node,
    scale: Option<Arc<ScaleFunction>>,
}

impl std::fmt::Debug for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Expr").field("source", &self.source).finish()
    }
}

impl Expr {
    /// Parses `source`, substituting the bound symbols. `scale` must be given
    /// when the expression refers to `W`.
    pub fn parse(source: &str, bindings: Bindings, scale: Option<Arc<ScaleFunction>>) -> Result<Self> {
        let tokens = lex(source)?;
        let mut p = Parser {
            tokens,
            pos: 0,
            bindings,
            uses_w: false,
        };
        let root = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(parse_error(source, format!("unexpected {:?}", p.tokens[p.pos])));
        }
        if p.uses_w && scale.is_none() {
            return Err(parse_error(source, "W(...) needs a model and q"));
        }
        Ok(Expr {
            source: source.to_string(),
            root,
            scale,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn jet(&self, y: f64) -> Jet {
        self.eval(&self.root, y)
    }

    pub fn value(&self, y: f64) -> f64 {
        self.jet(y).v
    }

    /// Points in `[lo, hi]` where a `max`, `min`, `ind` or `W` argument
    /// changes sign, located on a grid of `n` cells and refined by bisection.
    pub fn kinks(&self, lo: f64, hi: f64, n: usize) -> Vec<f64> {
        let mut switches = Vec::new();
        collect_switches(&self.root, &mut switches);
        let mut out: Vec<f64> = Vec::new();
        for (u, w) in switches {
            let g = |y: f64| self.eval(u, y).v - w.map_or(0.0, |w| self.eval(w, y).v);
            let h = (hi - lo) / n as f64;
            let mut prev = g(lo);
            for i in 1..=n {
                let t = lo + i as f64 * h;
                let cur = g(t);
                if prev == 0.0 && i > 1 {
                    out.push(t - h);
                } else if prev * cur < 0.0 {
                    let (mut l, mut r) = (t - h, t);
                    for _ in 0..100 {
                        let m = 0.5 * (l + r);
                        if g(m) * g(l) <= 0.0 {
                            r = m;
                        } else {
                            l = m;
                        }
                    }
                    out.push(0.5 * (l + r));
                }
                prev = cur;
            }
        }
        out.sort_by(f64::total_cmp);
        out.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * (1.0 + y.abs()));
        out
    }

    fn eval(&self, n: &Node, y: f64) -> Jet {
        match n {
            Node::Num(c) => Jet::constant(*c),
            Node::Y => Jet { v: y, d: 1.0, dd: 0.0 },
            Node::Neg(u) => {
                let u = self.eval(u, y);
                Jet {
                    v: -u.v,
                    d: -u.d,
                    dd: -u.dd,
                }
            }
            Node::Add(u, w) => {
                let (u, w) = (self.eval(u, y), self.eval(w, y));
                Jet {
                    v: u.v + w.v,
                    d: u.d + w.d,
                    dd: u.dd + w.dd,
                }
            }
            Node::Sub(u, w) => {
                let (u, w) = (self.eval(u, y), self.eval(w, y));
                Jet {
                    v: u.v - w.v,
                    d: u.d - w.d,
                    dd: u.dd - w.dd,
                }
            }
            Node::Mul(u, w) => {
                let (u, w) = (self.eval(u, y), self.eval(w, y));
                Jet {
                    v: u.v * w.v,
                    d: u.d * w.v + u.v * w.d,
                    dd: u.dd * w.v + 2.0 * u.d * w.d + u.v * w.dd,
                }
            }
            Node::Div(u, w) => {
                let (u, w) = (self.eval(u, y), self.eval(w, y));
                let r = u.v / w.v;
                let d = (u.d - r * w.d) / w.v;
                Jet {
                    v: r,
                    d,
                    dd: (u.dd - 2.0 * d * w.d - r * w.dd) / w.v,
                }
            }
            Node::Pow(u, w) => {
                let (u, w) = (self.eval(u, y), self.eval(w, y));
                if w.d == 0.0 && w.dd == 0.0 {
                    let k = w.v;
                    let g1 = if k == 0.0 { 0.0 } else { k * u.v.powf(k - 1.0) };
                    let g2 = if k == 0.0 || k == 1.0 { 0.0 } else { k * (k - 1.0) * u.v.powf(k - 2.0) };
                    u.chain(u.v.powf(k), g1, g2)
                } else {
                    // u^w = exp(w ln u)
                    let ln = u.chain(u.v.ln(), 1.0 / u.v, -1.0 / (u.v * u.v));
                    let e = Jet {
                        v: w.v * ln.v,
                        d: w.d * ln.v + w.v * ln.d,
                        dd: w.dd * ln.v + 2.0 * w.d * ln.d + w.v * ln.dd,
                    };
                    let ev = e.v.exp();
                    e.chain(ev, ev, ev)
                }
            }
            Node::Exp(u) => {
                let u = self.eval(u, y);
                let e = u.v.exp();
                u.chain(e, e, e)
            }
            Node::Max(u, w) => {
                let (u, w) = (self.eval(u, y), self.eval(w, y));
                // at a tie the left derivative of max is the smaller slope
                if u.v > w.v || (u.v == w.v && u.d <= w.d) {
                    u
                } else {
                    w
                }
            }
            Node::Min(u, w) => {
                let (u, w) = (self.eval(u, y), self.eval(w, y));
                if u.v < w.v || (u.v == w.v && u.d >= w.d) {
                    u
                } else {
                    w
                }
            }
            Node::Ind(u, c, w) => {
                let (u, w) = (self.eval(u, y).v, self.eval(w, y).v);
                let t = match c {
                    Cmp::Lt => u < w,
                    Cmp::Le => u <= w,
                    Cmp::Gt => u > w,
                    Cmp::Ge => u >= w,
                };
                Jet::constant(if t { 1.0 } else { 0.0 })
            }
            Node::W(u) => {
                let u = self.eval(u, y);
                let sf = self.scale.as_ref().expect("checked at parse time");
                u.chain(sf.w(u.v), sf.w_prime(u.v), sf.w_second(u.v))
            }
        }
    }

    /// The expression as a penalty, with its left derivative and kinks located
    /// on `[lo, hi]`.
    pub fn to_penalty(&self, lo: f64, hi: f64) -> Penalty {
        let e1 = self.clone();
        let e2 = self.clone();
        Penalty::new(self.source.clone(), move |y| e1.value(y))
            .with_derivative(move |y| e2.jet(y).d)
            .with_kinks(self.kinks(lo, hi, 4096))
            .with_noise(self.noise())
    }

    /// Relative noise of values, nonzero when `W` is computed by inversion.
    pub fn noise(&self) -> f64 {
        match &self.scale {
            Some(sf) if self.source.contains('W') => sf.value_noise(),
            _ => 0.0,
        }
    }

    /// The expression as a custom extension on `(a, b]`.
    pub fn to_extension(&self, a: f64, b: f64) -> CustomExtension {
        let (e0, e1, e2) = (self.clone(), self.clone(), self.clone());
        CustomExtension {
            f: Arc::new(move |y| e0.value(y)),
            d1: Some(Arc::new(move |y| e1.jet(y).d)),
            d2: Some(Arc::new(move |y| e2.jet(y).dd)),
            kinks: self.kinks(a, b, 4096).into_iter().filter(|&k| k > a && k < b).collect(),
        }
    }
}

/// Pairs `(u, w)` whose difference `u - w` (or `u` alone) switches a branch.
fn collect_switches<'n>(n: &'n Node, out: &mut Vec<(&'n Node, Option<&'n Node>)>) {
    match n {
        Node::Num(_) | Node::Y => {}
        Node::Neg(u) | Node::Exp(u) => collect_switches(u, out),
        Node::W(u) => {
            out.push((u, None));
            collect_switches(u, out);
        }
        Node::Add(u, w) | Node::Sub(u, w) | Node::Mul(u, w) | Node::Div(u, w) | Node::Pow(u, w) => {
            collect_switches(u, out);
            collect_switches(w, out);
        }
        Node::Max(u, w) | Node::Min(u, w) | Node::Ind(u, _, w) => {
            out.push((u, Some(w)));
            collect_switches(u, out);
            collect_switches(w, out);
        }
    }
}

fn parse_error(source: &str, msg: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name: "expression".into(),
        reason: format!("{:?}: {}", source, msg.into()),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    Cmp(Cmp),
    LParen,
    RParen,
    Comma,
}

fn lex(s: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = s.chars().collect();
    let mut i = 0;
    let mut out = Vec::new();
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
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
            let v: f64 = text.parse().map_err(|_| parse_error(s, format!("bad number {text:?}")))?;
            out.push(Tok::Num(v));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else {
            let next = chars.get(i + 1).copied();
            let tok = match (c, next) {
                ('<', Some('=')) => {
                    i += 1;
                    Tok::Cmp(Cmp::Le)
                }
                ('>', Some('=')) => {
                    i += 1;
                    Tok::Cmp(Cmp::Ge)
                }
                ('<', _) => Tok::Cmp(Cmp::Lt),
                ('>', _) => Tok::Cmp(Cmp::Gt),
                ('+' | '-' | '*' | '/' | '^', _) => Tok::Op(c),
                ('(', _) => Tok::LParen,
                (')', _) => Tok::RParen,
                (',', _) => Tok::Comma,
                _ => return Err(parse_error(s, format!("unexpected character {c:?}"))),
            };
            out.push(tok);
            i += 1;
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Tok>,
    pos: usize,
    bindings: Bindings,
    uses_w: bool,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn fail(&self, msg: impl Into<String>) -> Error {
        Error::InvalidParameter {
            name: "expression".into(),
            reason: format!("at token {}: {}", self.pos, msg.into()),
        }
    }

    fn expect(&mut self, t: Tok) -> Result<()> {
        match self.next() {
            Some(ref got) if *got == t => Ok(()),
            got => Err(self.fail(format!("expected {t:?}, found {got:?}"))),
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        while let Some(Tok::Op(c @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if c == '+' {
                Node::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Node::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Op(c @ ('*' | '/'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if c == '*' {
                Node::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Node::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        if let Some(Tok::Op('-')) = self.peek() {
            self.pos += 1;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn call_args(&mut self, n: usize) -> Result<Vec<Node>> {
        self.expect(Tok::LParen)?;
        let mut args = vec![self.expr()?];
        while args.len() < n {
            self.expect(Tok::Comma)?;
            args.push(self.expr()?);
        }
        self.expect(Tok::RParen)?;
        Ok(args)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.next() {
            Some(Tok::Num(v)) => Ok(Node::Num(v)),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => match name.as_str() {
                "y" => Ok(Node::Y),
                "a" => Ok(Node::Num(self.bindings.a)),
                "b" => Ok(Node::Num(self.bindings.b)),
                "q" => Ok(Node::Num(self.bindings.q)),
                "exp" => {
                    let mut v = self.call_args(1)?;
                    Ok(Node::Exp(Box::new(v.remove(0))))
                }
                "W" => {
                    self.uses_w = true;
                    let mut v = self.call_args(1)?;
                    Ok(Node::W(Box::new(v.remove(0))))
                }
                "max" | "min" => {
                    let mut v = self.call_args(2)?;
                    let (u, w) = (Box::new(v.remove(0)), Box::new(v.remove(0)));
                    Ok(if name == "max" { Node::Max(u, w) } else { Node::Min(u, w) })
                }
                "ind" => {
                    self.expect(Tok::LParen)?;
                    let u = self.expr()?;
                    let c = match self.next() {
                        Some(Tok::Cmp(c)) => c,
                        got => return Err(self.fail(format!("ind needs a comparison, found {got:?}"))),
                    };
                    let w = self.expr()?;
                    self.expect(Tok::RParen)?;
                    Ok(Node::Ind(Box::new(u), c, Box::new(w)))
                }
                other => Err(self.fail(format!("unknown symbol {other:?}"))),
            },
            got => Err(self.fail(format!("unexpected {got:?}"))),
        }
    }
}
