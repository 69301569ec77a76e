//! Expression trees with a cached canonical rational-function form.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Arc, OnceLock};

use num_traits::{One, Signed, Zero};

use super::poly::{Func, Monomial, Poly, Symbol, Var};
use super::ratfn::RatFn;
use super::EvalError;
use crate::scalar::{rational_to_f64, Rational, Scalar};

#[derive(Clone, Debug)]
pub enum Node {
    Const(Rational),
    Coord(Symbol),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Quotient(Expr, Expr),
    Pow(Expr, i32),
    Call(Func, Expr),
}

#[derive(Debug)]
struct Inner {
    node: OnceLock<Node>,
    canon: OnceLock<RatFn>,
}

/// Symbolic scalar function of chart coordinates.
///
/// An `Expr` is either a tree built by the parser or a canonical rational
/// function produced by arithmetic; each view is derived from the other on
/// demand. Equality compares canonical forms.
#[derive(Clone)]
pub struct Expr(Arc<Inner>);

impl Expr {
    pub fn from_node(node: Node) -> Expr {
        let inner = Inner { node: OnceLock::new(), canon: OnceLock::new() };
        let _ = inner.node.set(node);
        Expr(Arc::new(inner))
    }

    pub fn from_ratfn(r: RatFn) -> Expr {
        let inner = Inner { node: OnceLock::new(), canon: OnceLock::new() };
        let _ = inner.canon.set(r);
        Expr(Arc::new(inner))
    }

    pub fn constant(c: Rational) -> Expr {
        Expr::from_ratfn(RatFn::constant(c))
    }

    pub fn int(v: i64) -> Expr {
        Expr::constant(crate::scalar::int(v))
    }

    pub fn frac(p: i64, q: i64) -> Expr {
        Expr::constant(crate::scalar::frac(p, q))
    }

    pub fn coord(index: u32, name: &str) -> Expr {
        Expr::from_ratfn(RatFn::coord(index, name))
    }

    pub fn call(func: Func, arg: &Expr) -> Expr {
        Expr::from_ratfn(RatFn::apply(func, arg.canonical()))
    }

    pub fn sqrt(&self) -> Expr {
        Expr::call(Func::Sqrt, self)
    }

    /// Canonical rational-function form (atoms for transcendental calls).
    pub fn canonical(&self) -> &RatFn {
        self.0.canon.get_or_init(|| {
            let node = self.0.node.get().expect("expression has a tree or a canonical form");
            canonical_of(node)
        })
    }

    pub fn node(&self) -> &Node {
        self.0.node.get_or_init(|| {
            let canon = self.0.canon.get().expect("expression has a tree or a canonical form");
            node_of(canon)
        })
    }

    /// Tree rebuilt from the canonical form.
    pub fn simplify(&self) -> Expr {
        Expr::from_ratfn(self.canonical().clone())
    }

    pub fn is_zero_canonical(&self) -> bool {
        self.canonical().is_zero()
    }

    pub fn constant_value(&self) -> Option<Rational> {
        self.canonical().constant_value()
    }

    pub fn is_rational(&self) -> bool {
        !self.canonical().has_atoms()
    }

    pub fn diff(&self, index: u32) -> Expr {
        Expr::from_ratfn(self.canonical().derivative(index))
    }

    pub fn pow(&self, e: i32) -> Expr {
        Expr::from_ratfn(self.canonical().pow(e))
    }

    pub fn recip(&self) -> Expr {
        Expr::from_ratfn(self.canonical().recip())
    }

    pub fn scale(&self, c: &Rational) -> Expr {
        Expr::from_ratfn(self.canonical().scale(c))
    }

    /// Size of the canonical form in terms.
    pub fn size(&self) -> usize {
        self.canonical().size()
    }

    /// Floating-point value by recursive evaluation of the tree.
    pub fn eval(&self, point: &[f64]) -> Result<f64, EvalError> {
        let v = match self.0.node.get() {
            Some(node) => eval_node(node, point)?,
            None => self.canonical().eval_f64(point)?,
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }

    /// Evaluates at an exact rational point, returning a double.
    pub fn eval_rational(&self, point: &[Rational]) -> Result<f64, EvalError> {
        let p: Vec<f64> = point.iter().map(|q| rational_to_f64(q).unwrap_or(f64::NAN)).collect();
        self.eval(&p)
    }

    /// Exact value at a rational point; fails when transcendental atoms remain.
    pub fn eval_exact(&self, point: &[Rational]) -> Result<Rational, EvalError> {
        self.canonical().eval_exact(point)
    }

    pub fn envelope(&self, point: &[f64]) -> f64 {
        self.canonical().envelope(point)
    }
}

fn canonical_of(node: &Node) -> RatFn {
    match node {
        Node::Const(c) => RatFn::constant(c.clone()),
        Node::Coord(s) => RatFn::coord(s.index, &s.name),
        Node::Sum(terms) => terms.iter().fold(RatFn::zero(), |acc, t| acc.add(t.canonical())),
        Node::Product(fs) => fs.iter().fold(RatFn::one(), |acc, t| acc.mul(t.canonical())),
        Node::Quotient(a, b) => a.canonical().div(b.canonical()),
        Node::Pow(b, e) => b.canonical().pow(*e),
        Node::Call(f, a) => RatFn::apply(*f, a.canonical()),
    }
}

fn eval_node(node: &Node, point: &[f64]) -> Result<f64, EvalError> {
    Ok(match node {
        Node::Const(c) => rational_to_f64(c).ok_or(EvalError::NonFinite)?,
        Node::Coord(s) => *point.get(s.index as usize).ok_or(EvalError::Dimension)?,
        Node::Sum(ts) => {
            let mut acc = 0.0;
            for t in ts {
                acc += t.eval(point)?;
            }
            acc
        }
        Node::Product(fs) => {
            let mut acc = 1.0;
            for t in fs {
                acc *= t.eval(point)?;
            }
            acc
        }
        Node::Quotient(a, b) => {
            let d = b.eval(point)?;
            if d == 0.0 {
                return Err(EvalError::DivisionByZero);
            }
            a.eval(point)? / d
        }
        Node::Pow(b, e) => {
            let v = b.eval(point)?;
            if v == 0.0 && *e < 0 {
                return Err(EvalError::DivisionByZero);
            }
            v.powi(*e)
        }
        Node::Call(f, a) => {
            let u = a.eval(point)?;
            match f {
                Func::Log if u <= 0.0 => return Err(EvalError::Domain(format!("log of non-positive value {u}"))),
                Func::Sqrt if u < 0.0 => return Err(EvalError::Domain(format!("sqrt of negative value {u}"))),
                _ => f.apply_f64(u),
            }
        }
    })
}

fn node_of(r: &RatFn) -> Node {
    if r.is_polynomial() {
        poly_node(r.num())
    } else {
        Node::Quotient(Expr::from_node(poly_node(r.num())), Expr::from_node(poly_node(r.den())))
    }
}

fn poly_node(p: &Poly) -> Node {
    if let Some(c) = p.constant_value() {
        return Node::Const(c);
    }
    // Highest terms first reads more naturally.
    let mut terms: Vec<Expr> = p.terms().rev().map(|(m, c)| Expr::from_node(term_node(m, c))).collect();
    if terms.len() == 1 {
        terms.pop().map(|e| e.node().clone()).expect("one term")
    } else {
        Node::Sum(terms)
    }
}

fn term_node(m: &Monomial, c: &Rational) -> Node {
    if m.is_one() {
        return Node::Const(c.clone());
    }
    let mut factors = Vec::new();
    if !c.is_one() {
        factors.push(Expr::from_node(Node::Const(c.clone())));
    }
    for (v, e) in &m.0 {
        let base = match v {
            Var::Coord(s) => Node::Coord(s.clone()),
            Var::Atom(a) => Node::Call(a.func, Expr::from_ratfn(a.arg.clone())),
        };
        let f = if *e == 1 { base } else { Node::Pow(Expr::from_node(base), *e as i32) };
        factors.push(Expr::from_node(f));
    }
    if factors.len() == 1 {
        factors.pop().map(|e| e.node().clone()).expect("one factor")
    } else {
        Node::Product(factors)
    }
}

// Printing. The output always parses back to an equal expression under the
// grammar, where unary minus binds tighter than `^`.

fn is_integer(c: &Rational) -> bool {
    c.is_integer()
}

fn leading_negative(e: &Expr) -> bool {
    match e.node() {
        Node::Const(c) => c.is_negative(),
        Node::Product(fs) => fs.first().is_some_and(|f| matches!(f.node(), Node::Const(c) if c.is_negative())),
        _ => false,
    }
}

fn write_const(f: &mut fmt::Formatter<'_>, c: &Rational) -> fmt::Result {
    if is_integer(c) {
        write!(f, "{}", c.numer())
    } else {
        write!(f, "{}/{}", c.numer(), c.denom())
    }
}

fn write_product(f: &mut fmt::Formatter<'_>, fs: &[Expr], negate_first: bool) -> fmt::Result {
    let mut first = true;
    let mut skip_sep = false;
    for (i, e) in fs.iter().enumerate() {
        if i == 0 && negate_first {
            if let Node::Const(c) = e.node() {
                let c = -c;
                if c.is_one() && fs.len() > 1 {
                    skip_sep = true;
                    continue;
                }
                write_const(f, &c)?;
                first = false;
                continue;
            }
        }
        if !first && !skip_sep {
            write!(f, "*")?;
        }
        skip_sep = false;
        match e.node() {
            Node::Const(c) if first && i == 0 => write_const(f, c)?,
            Node::Const(c) if is_integer(c) && !c.is_negative() => write_const(f, c)?,
            Node::Sum(_) | Node::Quotient(..) | Node::Const(_) | Node::Product(_) => write!(f, "({e})")?,
            _ => write!(f, "{e}")?,
        }
        first = false;
    }
    Ok(())
}

fn write_negated(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    match e.node() {
        Node::Const(c) => write_const(f, &-c),
        Node::Product(fs) => write_product(f, fs, true),
        _ => unreachable!("only called on leading-negative terms"),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Const(c) => write_const(f, c),
            Node::Coord(s) => write!(f, "{}", s.name),
            Node::Sum(ts) => {
                if ts.is_empty() {
                    return write!(f, "0");
                }
                for (i, t) in ts.iter().enumerate() {
                    let nested = matches!(t.node(), Node::Sum(_));
                    if i == 0 {
                        if nested {
                            write!(f, "({t})")?;
                        } else {
                            write!(f, "{t}")?;
                        }
                    } else if leading_negative(t) {
                        write!(f, " - ")?;
                        write_negated(f, t)?;
                    } else if nested {
                        write!(f, " + ({t})")?;
                    } else {
                        write!(f, " + {t}")?;
                    }
                }
                Ok(())
            }
            Node::Product(fs) => {
                if fs.is_empty() {
                    return write!(f, "1");
                }
                write_product(f, fs, false)
            }
            Node::Quotient(a, b) => {
                match a.node() {
                    Node::Sum(_) => write!(f, "({a})")?,
                    _ => write!(f, "{a}")?,
                }
                write!(f, "/")?;
                match b.node() {
                    Node::Coord(_) | Node::Call(..) | Node::Pow(..) => write!(f, "{b}"),
                    Node::Const(c) if is_integer(c) && !c.is_negative() => write!(f, "{b}"),
                    _ => write!(f, "({b})"),
                }
            }
            Node::Pow(b, e) => {
                match b.node() {
                    Node::Coord(_) | Node::Call(..) => write!(f, "{b}")?,
                    Node::Const(c) if is_integer(c) && !c.is_negative() => write!(f, "{b}")?,
                    _ => write!(f, "({b})")?,
                }
                write!(f, "^{e}")
            }
            Node::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.canonical() == other.canonical()
    }
}

impl Zero for Expr {
    fn zero() -> Self {
        Expr::from_ratfn(RatFn::zero())
    }
    fn is_zero(&self) -> bool {
        self.is_zero_canonical()
    }
}

impl One for Expr {
    fn one() -> Self {
        Expr::from_ratfn(RatFn::one())
    }
}

impl Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        &self + &rhs
    }
}
impl Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        &self - &rhs
    }
}
impl Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        &self * &rhs
    }
}
impl Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        &self / &rhs
    }
}
impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}

impl Add for &Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        Expr::from_ratfn(self.canonical().add(rhs.canonical()))
    }
}
impl Sub for &Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        Expr::from_ratfn(self.canonical().sub(rhs.canonical()))
    }
}
impl Mul for &Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        Expr::from_ratfn(self.canonical().mul(rhs.canonical()))
    }
}
impl Div for &Expr {
    type Output = Expr;
    fn div(self, rhs: &Expr) -> Expr {
        Expr::from_ratfn(self.canonical().div(rhs.canonical()))
    }
}
impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::from_ratfn(self.canonical().neg())
    }
}

impl Scalar for Expr {
    fn is_negligible(&self) -> bool {
        self.is_zero_canonical()
    }

    fn pivot_weight(&self) -> f64 {
        // Prefer constants, then small rational expressions; atoms last since
        // their canonical nonzero-ness is not a proof of nonvanishing.
        let c = self.canonical();
        let mut w = -(c.size() as f64);
        if c.constant_value().is_some() {
            w += 1e6;
        }
        if c.has_atoms() {
            w -= 1e6;
        }
        w
    }

    fn from_rational(q: &Rational) -> Self {
        Expr::constant(q.clone())
    }

    fn to_f64(&self) -> Option<f64> {
        self.constant_value().and_then(|c| rational_to_f64(&c))
    }
}
