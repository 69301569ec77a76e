//! Canonical rational functions over coordinates and transcendental atoms.

use std::fmt;
use std::sync::Arc;

use num_traits::{One, Zero};

use super::poly::{gcd, Atom, Func, Monomial, Poly, Symbol, Var};
use super::EvalError;
use crate::scalar::{int, rational_sqrt, rational_to_f64, Rational};

/// Quotient of polynomials with the gcd removed and a monic denominator.
/// Zero is represented as `0/1`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct RatFn {
    num: Poly,
    den: Poly,
}

impl RatFn {
    pub fn zero() -> Self {
        RatFn { num: Poly::zero(), den: Poly::one() }
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        RatFn { num: Poly::constant(c), den: Poly::one() }
    }

    pub fn coord(index: u32, name: &str) -> Self {
        Self::from_poly(Poly::var(Var::Coord(Symbol { index, name: name.into() })))
    }

    pub fn from_poly(p: Poly) -> Self {
        Self::new(p, Poly::one())
    }

    /// Builds the canonical form of `num / den`.
    pub fn new(num: Poly, den: Poly) -> Self {
        assert!(!den.is_zero(), "rational function with zero denominator");
        if num.is_zero() {
            return Self::zero();
        }
        let (num, den) = reduce_sqrt(num, den);
        let g = gcd(&num, &den);
        let (num, den) = if g.is_one() {
            (num, den)
        } else {
            (num.div_exact(&g).expect("gcd divides"), den.div_exact(&g).expect("gcd divides"))
        };
        let lc = den.leading_coeff();
        if lc.is_one() {
            RatFn { num, den }
        } else {
            let s = lc.recip();
            RatFn { num: num.scale(&s), den: den.scale(&s) }
        }
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    pub fn constant_value(&self) -> Option<Rational> {
        if self.den.is_one() {
            self.num.constant_value()
        } else {
            None
        }
    }

    pub fn has_atoms(&self) -> bool {
        self.num.has_atoms() || self.den.has_atoms()
    }

    pub fn size(&self) -> usize {
        self.num.num_terms() + self.den.num_terms()
    }

    pub fn add(&self, other: &RatFn) -> RatFn {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        if self.den == other.den {
            return RatFn::new(self.num.add(&other.num), self.den.clone());
        }
        if self.den.is_one() {
            return RatFn::new(self.num.mul(&other.den).add(&other.num), other.den.clone());
        }
        if other.den.is_one() {
            return RatFn::new(other.num.mul(&self.den).add(&self.num), self.den.clone());
        }
        let g = gcd(&self.den, &other.den);
        let a = self.den.div_exact(&g).expect("gcd divides");
        let b = other.den.div_exact(&g).expect("gcd divides");
        RatFn::new(self.num.mul(&b).add(&other.num.mul(&a)), self.den.mul(&b))
    }

    pub fn neg(&self) -> RatFn {
        RatFn { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn sub(&self, other: &RatFn) -> RatFn {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Rational) -> RatFn {
        if c.is_zero() {
            return RatFn::zero();
        }
        RatFn { num: self.num.scale(c), den: self.den.clone() }
    }

    pub fn mul(&self, other: &RatFn) -> RatFn {
        if self.is_zero() || other.is_zero() {
            return RatFn::zero();
        }
        if let Some(c) = self.constant_value() {
            return other.scale(&c);
        }
        if let Some(c) = other.constant_value() {
            return self.scale(&c);
        }
        let g1 = gcd(&self.num, &other.den);
        let g2 = gcd(&other.num, &self.den);
        let n1 = self.num.div_exact(&g1).expect("gcd divides");
        let d2 = other.den.div_exact(&g1).expect("gcd divides");
        let n2 = other.num.div_exact(&g2).expect("gcd divides");
        let d1 = self.den.div_exact(&g2).expect("gcd divides");
        let num = n1.mul(&n2);
        let den = d1.mul(&d2);
        if num.has_atoms() || den.has_atoms() {
            RatFn::new(num, den)
        } else {
            let lc = den.leading_coeff();
            let s = lc.recip();
            RatFn { num: num.scale(&s), den: den.scale(&s) }
        }
    }

    pub fn recip(&self) -> RatFn {
        assert!(!self.is_zero(), "reciprocal of zero");
        RatFn::new(self.den.clone(), self.num.clone())
    }

    pub fn div(&self, other: &RatFn) -> RatFn {
        self.mul(&other.recip())
    }

    pub fn pow(&self, e: i32) -> RatFn {
        if e == 0 {
            return RatFn::one();
        }
        let base = if e < 0 { self.recip() } else { self.clone() };
        let k = e.unsigned_abs();
        RatFn { num: base.num.pow(k), den: base.den.pow(k) }.renormalized()
    }

    fn renormalized(self) -> RatFn {
        if self.has_atoms() {
            RatFn::new(self.num, self.den)
        } else {
            self
        }
    }

    /// `func(self)` with the elementary evaluations that stay rational applied.
    pub fn apply(func: Func, arg: &RatFn) -> RatFn {
        if let Some(c) = arg.constant_value() {
            match func {
                Func::Sin | Func::Atan if c.is_zero() => return RatFn::zero(),
                Func::Cos | Func::Exp if c.is_zero() => return RatFn::one(),
                Func::Log if c.is_one() => return RatFn::zero(),
                Func::Sqrt => {
                    if let Some(r) = rational_sqrt(&c) {
                        return RatFn::constant(r);
                    }
                }
                _ => {}
            }
        }
        let atom = Var::Atom(Arc::new(Atom { func, arg: arg.clone() }));
        RatFn::from_poly(Poly::var(atom))
    }

    /// Partial derivative with respect to the coordinate with the given index.
    pub fn derivative(&self, index: u32) -> RatFn {
        let dn = poly_derivative(&self.num, index);
        if self.den.is_one() {
            return dn;
        }
        let dd = poly_derivative(&self.den, index);
        let n = RatFn::from_poly(self.num.clone());
        let d = RatFn::from_poly(self.den.clone());
        // (n' d - n d') / d^2
        let top = dn.mul(&d).sub(&n.mul(&dd));
        top.div(&RatFn::from_poly(self.den.mul(&self.den)))
    }

    pub fn eval_f64(&self, point: &[f64]) -> Result<f64, EvalError> {
        let n = eval_poly_f64(&self.num, point)?;
        if self.den.is_one() {
            return finite(n);
        }
        let d = eval_poly_f64(&self.den, point)?;
        if d == 0.0 {
            return Err(EvalError::DivisionByZero);
        }
        finite(n / d)
    }

    pub fn eval_exact(&self, point: &[Rational]) -> Result<Rational, EvalError> {
        let n = eval_poly_exact(&self.num, point)?;
        let d = eval_poly_exact(&self.den, point)?;
        if d.is_zero() {
            return Err(EvalError::DivisionByZero);
        }
        Ok(n / d)
    }

    /// Magnitude scale of the expression at a point: sum of absolute term
    /// values of the numerator over the absolute denominator.
    pub fn envelope(&self, point: &[f64]) -> f64 {
        let value = |v: &Var| eval_var_f64(v, point).unwrap_or(0.0);
        let n = self.num.abs_envelope(&value);
        let d = eval_poly_f64(&self.den, point).unwrap_or(1.0).abs();
        if d > 0.0 {
            n / d
        } else {
            n
        }
    }
}

fn finite(v: f64) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::NonFinite)
    }
}

fn eval_var_f64(v: &Var, point: &[f64]) -> Result<f64, EvalError> {
    match v {
        Var::Coord(s) => point.get(s.index as usize).copied().ok_or(EvalError::Dimension),
        Var::Atom(a) => {
            let u = a.arg.eval_f64(point)?;
            match a.func {
                Func::Log if u <= 0.0 => return Err(EvalError::Domain(format!("log of non-positive value {u}"))),
                Func::Sqrt if u < 0.0 => return Err(EvalError::Domain(format!("sqrt of negative value {u}"))),
                _ => {}
            }
            finite(a.func.apply_f64(u))
        }
    }
}

fn eval_poly_f64(p: &Poly, point: &[f64]) -> Result<f64, EvalError> {
    p.eval_with(|v| eval_var_f64(v, point), 0.0, |c| rational_to_f64(c).unwrap_or(f64::NAN))
}

fn eval_poly_exact(p: &Poly, point: &[Rational]) -> Result<Rational, EvalError> {
    p.eval_with(
        |v| match v {
            Var::Coord(s) => point.get(s.index as usize).cloned().ok_or(EvalError::Dimension),
            Var::Atom(_) => Err(EvalError::NotRational),
        },
        Rational::zero(),
        |c| c.clone(),
    )
}

/// Derivative of `f(u)` with respect to `u`, as a rational function of atoms.
fn func_derivative(func: Func, u: &RatFn) -> RatFn {
    match func {
        Func::Sin => RatFn::apply(Func::Cos, u),
        Func::Cos => RatFn::apply(Func::Sin, u).neg(),
        Func::Exp => RatFn::apply(Func::Exp, u),
        Func::Log => u.recip(),
        Func::Atan => RatFn::one().add(&u.mul(u)).recip(),
        Func::Sqrt => RatFn::apply(Func::Sqrt, u).scale(&int(2)).recip(),
    }
}

/// Chain-rule derivative of a polynomial in coordinates and atoms.
fn poly_derivative(p: &Poly, index: u32) -> RatFn {
    let mut out = RatFn::zero();
    for v in p.vars() {
        let inner = match &v {
            Var::Coord(s) if s.index == index => RatFn::one(),
            Var::Coord(_) => continue,
            Var::Atom(a) => {
                let du = a.arg.derivative(index);
                if du.is_zero() {
                    continue;
                }
                func_derivative(a.func, &a.arg).mul(&du)
            }
        };
        let partial = p.partial(&v);
        out = out.add(&RatFn::from_poly(partial).mul(&inner));
    }
    out
}

/// Rewrites `sqrt(u)^k` as `u^(k/2) sqrt(u)^(k mod 2)` and moves square roots
/// out of the denominator.
fn reduce_sqrt(num: Poly, den: Poly) -> (Poly, Poly) {
    let sqrt_atoms = |p: &Poly| -> Vec<Arc<Atom>> {
        p.vars()
            .into_iter()
            .filter_map(|v| match v {
                Var::Atom(a) if a.func == Func::Sqrt => Some(a),
                _ => None,
            })
            .collect()
    };
    let num_atoms = sqrt_atoms(&num);
    let den_atoms = sqrt_atoms(&den);
    if num_atoms.is_empty() && den_atoms.is_empty() {
        return (num, den);
    }
    let mut num = RatFn { num, den: Poly::one() };
    let mut den = RatFn { num: den, den: Poly::one() };
    // Rationalize the denominator one root at a time.
    for a in &den_atoms {
        let v = Var::Atom(a.clone());
        if den.num.contains_var(&v) {
            let root = Poly::var(v);
            num = RatFn { num: num.num.mul(&root), den: num.den };
            den = RatFn { num: den.num.mul(&root), den: den.den };
        }
    }
    let mut changed = true;
    while changed {
        changed = false;
        for side in [&mut num, &mut den] {
            if let Some(reduced) = lower_sqrt_powers(&side.num) {
                *side = RatFn { num: reduced.num, den: side.den.mul(&reduced.den) };
                changed = true;
            }
        }
    }
    // num = a/b, den = c/d  ->  (a d) / (b c)
    let n = num.num.mul(&den.den);
    let d = num.den.mul(&den.num);
    if d.is_zero() {
        // The root cancelled against itself; keep the unreduced form.
        return (n, Poly::one());
    }
    (n, d)
}

/// Replaces even powers of square-root atoms by their argument.
/// Returns `None` when nothing changes.
fn lower_sqrt_powers(p: &Poly) -> Option<RatFn> {
    let needs =
        p.terms().any(|(m, _)| m.0.iter().any(|(v, e)| *e >= 2 && matches!(v, Var::Atom(a) if a.func == Func::Sqrt)));
    if !needs {
        return None;
    }
    let mut num = Poly::zero();
    let mut den = Poly::one();
    let mut acc: Vec<RatFn> = Vec::new();
    for (m, c) in p.terms() {
        let mut keep = Vec::new();
        let mut factor = RatFn::constant(c.clone());
        for (v, e) in &m.0 {
            match v {
                Var::Atom(a) if a.func == Func::Sqrt && *e >= 2 => {
                    factor = factor.mul(&a.arg.pow((*e / 2) as i32));
                    if e % 2 == 1 {
                        keep.push((v.clone(), 1));
                    }
                }
                _ => keep.push((v.clone(), *e)),
            }
        }
        let rest = Poly::term(Monomial(keep), Rational::one());
        acc.push(RatFn { num: factor.num.mul(&rest), den: factor.den });
    }
    for t in acc {
        // Sum over a common denominator without canonicalizing (no gcd yet).
        num = num.mul(&t.den).add(&t.num.mul(&den));
        den = den.mul(&t.den);
    }
    Some(RatFn { num, den })
}

impl fmt::Display for RatFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", super::Expr::from_ratfn(self.clone()))
    }
}
