//! Sparse multivariate polynomials with rational coefficients.
//!
//! Variables are chart coordinates or opaque transcendental atoms. Monomials
//! are ordered graded-lexicographically; the leading term of a polynomial is
//! its largest monomial.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::ratfn::RatFn;
use crate::scalar::Rational;

/// Elementary functions admitted by the expression grammar.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Atan,
    Sqrt,
}

impl Func {
    pub const ALL: [Func; 6] = [Func::Sin, Func::Cos, Func::Exp, Func::Log, Func::Atan, Func::Sqrt];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Atan => "atan",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn apply_f64(self, x: f64) -> f64 {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Exp => x.exp(),
            Func::Log => x.ln(),
            Func::Atan => x.atan(),
            Func::Sqrt => x.sqrt(),
        }
    }
}

/// A chart coordinate. Identity and order are by index; the name is for printing.
#[derive(Clone, Debug)]
pub struct Symbol {
    pub index: u32,
    pub name: Arc<str>,
}

impl PartialEq for Symbol {
    fn eq(&self, other: &Self) -> bool {
        self.index == other.index
    }
}
impl Eq for Symbol {}
impl PartialOrd for Symbol {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Symbol {
    fn cmp(&self, other: &Self) -> Ordering {
        self.index.cmp(&other.index)
    }
}

/// Transcendental function applied to a canonical argument.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Atom {
    pub func: Func,
    pub arg: RatFn,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Var {
    Coord(Symbol),
    Atom(Arc<Atom>),
}

impl Var {
    pub fn is_atom(&self) -> bool {
        matches!(self, Var::Atom(_))
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::Coord(s) => write!(f, "{}", s.name),
            Var::Atom(a) => write!(f, "{}({})", a.func.name(), a.arg),
        }
    }
}

/// Power product of variables, kept sorted by variable with positive exponents.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Monomial(pub Vec<(Var, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(v: Var, e: u32) -> Self {
        if e == 0 {
            Monomial::one()
        } else {
            Monomial(vec![(v, e)])
        }
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn exponent(&self, v: &Var) -> u32 {
        self.0.iter().find(|(w, _)| w == v).map_or(0, |(_, e)| *e)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                Ordering::Less => {
                    out.push(self.0[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(other.0[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((self.0[i].0.clone(), self.0[i].1 + other.0[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }

    /// `self / other` when `other` divides `self`.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut out = Vec::with_capacity(self.0.len());
        let mut j = 0;
        for (v, e) in &self.0 {
            let oe = if j < other.0.len() && &other.0[j].0 == v {
                j += 1;
                other.0[j - 1].1
            } else {
                0
            };
            match e.cmp(&oe) {
                Ordering::Less => return None,
                Ordering::Equal => {}
                Ordering::Greater => out.push((v.clone(), e - oe)),
            }
        }
        if j < other.0.len() {
            return None;
        }
        Some(Monomial(out))
    }

    /// Componentwise minimum of exponents.
    pub fn gcd(&self, other: &Monomial) -> Monomial {
        Monomial(
            self.0
                .iter()
                .filter_map(|(v, e)| {
                    let oe = other.exponent(v);
                    (oe > 0).then(|| (v.clone(), (*e).min(oe)))
                })
                .collect(),
        )
    }

    pub fn without(&self, v: &Var) -> Monomial {
        Monomial(self.0.iter().filter(|(w, _)| w != v).cloned().collect())
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Monomial {
    /// Graded lexicographic: total degree first, then the exponent of the
    /// smallest variable where the two differ (larger exponent is larger).
    fn cmp(&self, other: &Self) -> Ordering {
        match self.degree().cmp(&other.degree()) {
            Ordering::Equal => {}
            ord => return ord,
        }
        let (mut i, mut j) = (0, 0);
        loop {
            match (self.0.get(i), other.0.get(j)) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some((va, ea)), Some((vb, eb))) => match va.cmp(vb) {
                    Ordering::Less => return Ordering::Greater,
                    Ordering::Greater => return Ordering::Less,
                    Ordering::Equal => match ea.cmp(eb) {
                        Ordering::Equal => {
                            i += 1;
                            j += 1;
                        }
                        ord => return ord,
                    },
                },
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Poly {
    terms: BTreeMap<Monomial, Rational>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly { terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Monomial::one(), c);
        }
        Poly { terms }
    }

    pub fn var(v: Var) -> Self {
        Self::term(Monomial::var(v, 1), Rational::one())
    }

    pub fn term(m: Monomial, c: Rational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Poly { terms }
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty() || (self.terms.len() == 1 && self.terms.contains_key(&Monomial::one()))
    }

    pub fn constant_value(&self) -> Option<Rational> {
        if self.terms.is_empty() {
            Some(Rational::zero())
        } else if self.is_constant() {
            self.terms.values().next().cloned()
        } else {
            None
        }
    }

    pub fn is_one(&self) -> bool {
        self.constant_value().is_some_and(|c| c.is_one())
    }

    pub fn is_monomial(&self) -> bool {
        self.terms.len() == 1
    }

    pub fn leading(&self) -> Option<(&Monomial, &Rational)> {
        self.terms.iter().next_back()
    }

    pub fn leading_coeff(&self) -> Rational {
        self.leading().map_or_else(Rational::zero, |(_, c)| c.clone())
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        for m in self.terms.keys() {
            for (v, _) in &m.0 {
                out.insert(v.clone());
            }
        }
        out
    }

    pub fn has_atoms(&self) -> bool {
        self.terms.keys().any(|m| m.0.iter().any(|(v, _)| v.is_atom()))
    }

    pub fn contains_var(&self, v: &Var) -> bool {
        self.terms.keys().any(|m| m.exponent(v) > 0)
    }

    fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let v = e.get() + c;
                if v.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = v;
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let (big, small) = if self.terms.len() >= other.terms.len() { (self, other) } else { (other, self) };
        let mut out = big.clone();
        for (m, c) in &small.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c);
        }
        out
    }

    pub fn scale(&self, s: &Rational) -> Poly {
        if s.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), c * s)).collect() }
    }

    pub fn mul_term(&self, m: &Monomial, c: &Rational) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(k, v)| (k.mul(m), v * c)).collect() }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        if let Some(c) = self.constant_value() {
            return other.scale(&c);
        }
        if let Some(c) = other.constant_value() {
            return self.scale(&c);
        }
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut result = Poly::one();
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    /// Divides by the leading coefficient.
    pub fn monic(&self) -> Poly {
        match self.leading() {
            None => Poly::zero(),
            Some((_, c)) if c.is_one() => self.clone(),
            Some((_, c)) => self.scale(&c.recip()),
        }
    }

    /// Exact quotient `self / d`, or `None` when `d` does not divide `self`.
    pub fn div_exact(&self, d: &Poly) -> Option<Poly> {
        assert!(!d.is_zero(), "division by zero polynomial");
        if let Some(c) = d.constant_value() {
            return Some(self.scale(&c.recip()));
        }
        let (dm, dc) = d.leading().map(|(m, c)| (m.clone(), c.clone()))?;
        let mut q = Poly::zero();
        let mut r = self.clone();
        while let Some((rm, rc)) = r.leading().map(|(m, c)| (m.clone(), c.clone())) {
            let tm = rm.div(&dm)?;
            let tc = rc / &dc;
            r = r.sub(&d.mul_term(&tm, &tc));
            q.add_term(tm, tc);
        }
        Some(q)
    }

    pub fn degree_in(&self, v: &Var) -> u32 {
        self.terms.keys().map(|m| m.exponent(v)).max().unwrap_or(0)
    }

    /// Coefficients as polynomials in the remaining variables, keyed by the exponent of `v`.
    pub fn coeffs_in(&self, v: &Var) -> BTreeMap<u32, Poly> {
        let mut out: BTreeMap<u32, Poly> = BTreeMap::new();
        for (m, c) in &self.terms {
            let e = m.exponent(v);
            out.entry(e).or_default().add_term(m.without(v), c.clone());
        }
        out
    }

    fn lc_in(&self, v: &Var) -> Poly {
        let d = self.degree_in(v);
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            if m.exponent(v) == d {
                out.add_term(m.without(v), c.clone());
            }
        }
        out
    }

    fn monomial_content(&self) -> Monomial {
        let mut it = self.terms.keys();
        let Some(first) = it.next() else { return Monomial::one() };
        it.fold(first.clone(), |acc, m| acc.gcd(m))
    }

    /// Content with respect to `v`: the gcd of the coefficients in `v`.
    fn content_in(&self, v: &Var) -> Poly {
        let coeffs = self.coeffs_in(v);
        let mut g = Poly::zero();
        for c in coeffs.values() {
            if c.is_constant() {
                return Poly::one();
            }
        }
        let mut by_size: Vec<&Poly> = coeffs.values().collect();
        by_size.sort_by_key(|c| c.num_terms());
        for c in by_size {
            g = gcd(&g, c);
            if g.is_one() {
                break;
            }
        }
        g
    }

    /// Sparse pseudo-remainder of `self` by `d` as polynomials in `v`.
    fn pseudo_rem(&self, d: &Poly, v: &Var) -> Poly {
        let dd = d.degree_in(v);
        let lcd = d.lc_in(v);
        let mut r = self.clone();
        loop {
            if r.is_zero() {
                return r;
            }
            let dr = r.degree_in(v);
            if dr < dd {
                return r;
            }
            let lcr = r.lc_in(v);
            let shift = Poly::term(Monomial::var(v.clone(), dr - dd), Rational::one());
            r = lcd.mul(&r).sub(&lcr.mul(&shift).mul(d));
        }
    }

    /// Partial derivative with respect to a variable treated as independent.
    pub fn partial(&self, v: &Var) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let e = m.exponent(v);
            if e == 0 {
                continue;
            }
            let rest = Monomial(
                m.0.iter()
                    .filter_map(
                        |(w, k)| {
                            if w == v {
                                (k > &1).then(|| (w.clone(), k - 1))
                            } else {
                                Some((w.clone(), *k))
                            }
                        },
                    )
                    .collect(),
            );
            out.add_term(rest, c * Rational::from_integer(e.into()));
        }
        out
    }

    /// Evaluates with a caller-supplied variable assignment.
    pub fn eval_with<T, E>(
        &self,
        mut value: impl FnMut(&Var) -> Result<T, E>,
        zero: T,
        from_q: impl Fn(&Rational) -> T,
    ) -> Result<T, E>
    where
        T: Clone + std::ops::Add<Output = T> + std::ops::Mul<Output = T>,
    {
        let mut cache: Vec<(Var, T)> = Vec::new();
        let mut acc = zero;
        for (m, c) in &self.terms {
            let mut t = from_q(c);
            for (v, e) in &m.0 {
                let x = match cache.iter().find(|(w, _)| w == v) {
                    Some((_, x)) => x.clone(),
                    None => {
                        let x = value(v)?;
                        cache.push((v.clone(), x.clone()));
                        x
                    }
                };
                for _ in 0..*e {
                    t = t * x.clone();
                }
            }
            acc = acc + t;
        }
        Ok(acc)
    }

    /// Exact square root when `self` is the square of a polynomial.
    pub fn sqrt_exact(&self) -> Option<Poly> {
        if self.is_zero() {
            return Some(Poly::zero());
        }
        let (lm, lc) = self.leading()?;
        let root_c = crate::scalar::rational_sqrt(lc)?;
        if lm.0.iter().any(|(_, e)| e % 2 == 1) {
            return None;
        }
        let root_m = Monomial(lm.0.iter().map(|(v, e)| (v.clone(), e / 2)).collect());
        let two_lead_c = &root_c * Rational::from_integer(2.into());
        let mut root = Poly::term(root_m.clone(), root_c);
        let bound = self.num_terms() * self.num_terms() + 4;
        for _ in 0..bound {
            let r = self.sub(&root.mul(&root));
            let Some((rm, rc)) = r.leading() else { return Some(root) };
            let tm = rm.div(&root_m)?;
            if tm >= root_m {
                return None;
            }
            let tc = rc / &two_lead_c;
            root = root.add(&Poly::term(tm, tc));
        }
        None
    }

    /// Sum of absolute coefficient times |monomial| at the given absolute variable values.
    pub fn abs_envelope(&self, value: &impl Fn(&Var) -> f64) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                let mut t = crate::scalar::rational_to_f64(&c.abs()).unwrap_or(f64::INFINITY);
                for (v, e) in &m.0 {
                    t *= value(v).abs().powi(*e as i32);
                }
                t
            })
            .sum()
    }
}

/// Monic greatest common divisor over Q.
pub fn gcd(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return b.monic();
    }
    if b.is_zero() {
        return a.monic();
    }
    if a.is_constant() || b.is_constant() {
        return Poly::one();
    }
    if a == b {
        return a.monic();
    }
    if a.is_monomial() || b.is_monomial() {
        let m = a.monomial_content().gcd(&b.monomial_content());
        return Poly::term(m, Rational::one());
    }
    // Divisibility shortcuts are cheap and common in practice.
    if a.num_terms() <= b.num_terms() {
        if b.div_exact(a).is_some() {
            return a.monic();
        }
    } else if a.div_exact(b).is_some() {
        return b.monic();
    }
    // Factor out common monomials first.
    let ma = a.monomial_content();
    let mb = b.monomial_content();
    let mg = ma.gcd(&mb);
    let a = if ma.is_one() { a.clone() } else { a.div_exact(&Poly::term(ma, Rational::one())).unwrap() };
    let b = if mb.is_one() { b.clone() } else { b.div_exact(&Poly::term(mb, Rational::one())).unwrap() };
    let core = if provably_coprime(&a, &b) {
        Poly::one()
    } else {
        heuristic_gcd(&a, &b).unwrap_or_else(|| gcd_recursive(&a, &b))
    };
    core.mul(&Poly::term(mg, Rational::one())).monic()
}

/// Scales to integer coefficients with content 1 and a positive leading coefficient.
fn primitive_integer(p: &Poly) -> Poly {
    let mut den = BigInt::one();
    for (_, c) in p.terms() {
        den = den.lcm(c.denom());
    }
    let mut num = BigInt::zero();
    for (_, c) in p.terms() {
        num = num.gcd(&(c.numer() * (&den / c.denom())));
    }
    let mut s = Rational::new(den, num);
    if p.leading_coeff().is_negative() {
        s = -s;
    }
    p.scale(&s)
}

fn integer_content(p: &Poly) -> BigInt {
    p.terms().fold(BigInt::zero(), |acc, (_, c)| acc.gcd(c.numer()))
}

fn max_norm(p: &Poly) -> BigInt {
    p.terms().map(|(_, c)| c.numer().abs()).max().unwrap_or_default()
}

fn eval_at(p: &Poly, v: &Var, xi: &BigInt) -> Poly {
    let mut out = Poly::zero();
    for (m, c) in p.terms() {
        let e = m.exponent(v);
        out.add_term(m.without(v), c * Rational::from_integer(num_traits::pow(xi.clone(), e as usize)));
    }
    out
}

/// Rebuilds a polynomial in `v` from its value at `v = xi` using symmetric base-`xi` digits.
fn interpolate(mut h: Poly, v: &Var, xi: &BigInt) -> Poly {
    let half = xi / 2;
    let mut out = Poly::zero();
    let mut e = 0u32;
    while !h.is_zero() {
        let mut digit = Poly::zero();
        for (m, c) in h.terms() {
            let mut r = c.numer().mod_floor(xi);
            if r > half {
                r -= xi;
            }
            digit.add_term(m.clone(), Rational::from_integer(r));
        }
        h = h.sub(&digit).scale(&Rational::from_integer(xi.clone()).recip());
        for (m, c) in digit.terms() {
            out.add_term(m.mul(&Monomial::var(v.clone(), e)), c.clone());
        }
        e += 1;
    }
    out
}

/// Integer gcd of primitive integer polynomials by evaluation at large integers.
fn heuristic_gcd_integer(a: &Poly, b: &Poly, depth: usize) -> Option<Poly> {
    if let (Some(x), Some(y)) = (a.constant_value(), b.constant_value()) {
        return Some(Poly::constant(Rational::from_integer(x.numer().gcd(y.numer()))));
    }
    if depth > 12 {
        return None;
    }
    let v = a.vars().union(&b.vars()).max().cloned()?;
    let bound = max_norm(a).min(max_norm(b));
    let mut xi = bound * 2 + 29;
    for _ in 0..6 {
        let (ea, eb) = (eval_at(a, &v, &xi), eval_at(b, &v, &xi));
        if !ea.is_zero() && !eb.is_zero() {
            if let Some(h) = heuristic_gcd_integer(&ea, &eb, depth + 1) {
                let g = interpolate(h, &v, &xi);
                if !g.is_zero() {
                    let g = primitive_integer(&g);
                    if a.div_exact(&g).is_some() && b.div_exact(&g).is_some() {
                        let content = integer_content(a).gcd(&integer_content(b));
                        return Some(g.scale(&Rational::from_integer(content)));
                    }
                }
            }
        }
        xi = xi * 73794 / 27011;
    }
    None
}

/// Heuristic gcd; any returned divisor is verified by exact division.
fn heuristic_gcd(a: &Poly, b: &Poly) -> Option<Poly> {
    let g = heuristic_gcd_integer(&primitive_integer(a), &primitive_integer(b), 0)?;
    Some(g.monic())
}

const PRIME: u64 = (1 << 61) - 1;

fn mul_mod(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % PRIME as u128) as u64
}

fn pow_mod(mut a: u64, mut e: u64) -> u64 {
    let mut r = 1;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, a);
        }
        a = mul_mod(a, a);
        e >>= 1;
    }
    r
}

fn inv_mod(a: u64) -> u64 {
    pow_mod(a, PRIME - 2)
}

/// Image of a rational modulo `PRIME`, or `None` when the denominator vanishes there.
fn rational_mod(c: &Rational) -> Option<u64> {
    let p = num_bigint::BigInt::from(PRIME);
    let reduce = |n: &num_bigint::BigInt| {
        let r = ((n % &p) + &p) % &p;
        num_traits::ToPrimitive::to_u64(&r).expect("reduced below the modulus")
    };
    let d = reduce(c.denom());
    (d != 0).then(|| mul_mod(reduce(c.numer()), inv_mod(d)))
}

/// Dense univariate image in `v` modulo `PRIME`, other variables replaced by `point`.
fn specialize_mod(p: &Poly, v: &Var, point: &impl Fn(&Var) -> u64) -> Option<Vec<u64>> {
    let mut out = vec![0u64; p.degree_in(v) as usize + 1];
    for (m, c) in p.terms() {
        let mut t = rational_mod(c)?;
        let mut e = 0;
        for (w, k) in &m.0 {
            if w == v {
                e = *k as usize;
            } else {
                t = mul_mod(t, pow_mod(point(w), *k as u64));
            }
        }
        out[e] = (out[e] + t) % PRIME;
    }
    Some(out)
}

fn gcd_degree_mod(mut f: Vec<u64>, mut g: Vec<u64>) -> usize {
    let trim = |p: &mut Vec<u64>| {
        while p.last() == Some(&0) {
            p.pop();
        }
    };
    trim(&mut f);
    trim(&mut g);
    if f.len() < g.len() {
        std::mem::swap(&mut f, &mut g);
    }
    while !g.is_empty() {
        let inv = inv_mod(*g.last().unwrap());
        while f.len() >= g.len() {
            let q = mul_mod(*f.last().unwrap(), inv);
            let shift = f.len() - g.len();
            for (i, c) in g.iter().enumerate() {
                f[i + shift] = (f[i + shift] + PRIME - mul_mod(q, *c)) % PRIME;
            }
            f.pop();
            trim(&mut f);
        }
        std::mem::swap(&mut f, &mut g);
    }
    f.len().saturating_sub(1)
}

/// Certifies `gcd(a, b) = 1`. For each shared variable `v`, the other variables are
/// specialized and coefficients reduced modulo a prime; when both leading coefficients
/// in `v` survive, the degree of the image gcd bounds the degree in `v` of the true gcd.
fn provably_coprime(a: &Poly, b: &Poly) -> bool {
    let shared: Vec<Var> = a.vars().intersection(&b.vars()).cloned().collect();
    'vars: for v in &shared {
        for attempt in 0..3u64 {
            let point = |w: &Var| {
                let mut h: u64 = 1469598103934665603 ^ attempt;
                for byte in format!("{w:?}").bytes() {
                    h = (h ^ byte as u64).wrapping_mul(1099511628211);
                }
                h % PRIME
            };
            let (Some(fa), Some(fb)) = (specialize_mod(a, v, &point), specialize_mod(b, v, &point)) else {
                return false;
            };
            if fa.last() == Some(&0) || fb.last() == Some(&0) {
                continue;
            }
            if gcd_degree_mod(fa, fb) == 0 {
                continue 'vars;
            }
            return false;
        }
        return false;
    }
    true
}

fn gcd_recursive(a: &Poly, b: &Poly) -> Poly {
    if a.is_constant() || b.is_constant() {
        return Poly::one();
    }
    let vars_a = a.vars();
    let vars_b = b.vars();
    let v = vars_a.iter().chain(vars_b.iter()).max().cloned().expect("non-constant");
    let in_a = vars_a.contains(&v);
    let in_b = vars_b.contains(&v);
    if !in_a {
        return gcd(a, &b.content_in(&v));
    }
    if !in_b {
        return gcd(&a.content_in(&v), b);
    }
    let ca = a.content_in(&v);
    let cb = b.content_in(&v);
    let pa = a.div_exact(&ca).expect("content divides");
    let pb = b.div_exact(&cb).expect("content divides");
    let c = gcd(&ca, &cb);
    let (mut f, mut g) = if pa.degree_in(&v) >= pb.degree_in(&v) { (pa, pb) } else { (pb, pa) };
    loop {
        let r = f.pseudo_rem(&g, &v);
        if r.is_zero() {
            break;
        }
        if r.degree_in(&v) == 0 {
            g = Poly::one();
            break;
        }
        let cr = r.content_in(&v);
        f = g;
        g = r.div_exact(&cr).expect("content divides");
    }
    let cg = g.content_in(&v);
    let g = g.div_exact(&cg).expect("content divides");
    c.mul(&g).monic()
}
