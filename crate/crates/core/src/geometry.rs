//! Vector fields, one-forms, frames and metrics over a chart.
//!
//! A [`Space`] is either a coordinate chart (fields act by derivations) or a
//! constant-structure frame on a Lie group (fields are constant combinations
//! of an abstract left-invariant frame with rational structure constants).
//! Both modes share one bracket formula:
//! `[v, w]_k = sum_i (v_i D_i w_k - w_i D_i v_k) + sum_ij v_i w_j c_ij^k`
//! where `D_i` is `d/dx_i` in coordinate mode and zero otherwise, and `c` is
//! zero in coordinate mode.

use std::fmt;
use std::sync::Arc;

use num_traits::Zero;
use thiserror::Error;

use crate::linalg::Matrix;
use crate::scalar::Rational;
use crate::symexpr::{Chart, Expr, ExprError, Point, SampleConfig, Sampler};

/// Singular-value threshold for pointwise independence checks.
pub const INDEPENDENCE_TOL: f64 = 1e-8;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("fields belong to different spaces or modes")]
    ModeMismatch,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("constant-structure data must be rational constants: {0}")]
    NotConstant(String),
    #[error("structure constants violate {0}")]
    InvalidStructure(String),
    #[error("frame is singular")]
    Singular,
    #[error("fields are not pointwise independent{0}")]
    RankDeficient(String),
    #[error("metric is not positive definite at {0}")]
    NotPositiveDefinite(String),
    #[error("metric is not symmetric")]
    NotSymmetric,
    #[error("operation requires coordinate mode")]
    NeedsCoordinates,
    #[error(transparent)]
    Expr(#[from] ExprError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Coordinates,
    ConstantStructure,
}

/// Ambient manifold: a chart, or an abstract frame with constant brackets.
#[derive(Debug)]
pub struct Space {
    chart: Chart,
    mode: Mode,
    basis: Vec<String>,
    /// `structure[(i * n + j) * n + k] = c_ij^k`, constant mode only.
    structure: Vec<Rational>,
}

impl Space {
    pub fn coordinates(chart: Chart) -> Arc<Space> {
        let basis = chart.names().iter().map(|n| format!("d{n}")).collect();
        Arc::new(Space { chart, mode: Mode::Coordinates, basis, structure: Vec::new() })
    }

    /// Lie-group frame with brackets `[e_i, e_j] = sum_k c_ij^k e_k`, given as
    /// triples for `i < j` (the opposite order is filled in by antisymmetry).
    pub fn constant_structure(
        basis: &[&str],
        brackets: &[(usize, usize, usize, Rational)],
    ) -> Result<Arc<Space>, GeometryError> {
        let n = basis.len();
        let mut c = vec![Rational::zero(); n * n * n];
        for (i, j, k, v) in brackets {
            if *i >= n || *j >= n || *k >= n {
                return Err(GeometryError::InvalidStructure(format!("index out of range in ({i}, {j}, {k})")));
            }
            if i == j {
                return Err(GeometryError::InvalidStructure(format!("antisymmetry at ({i}, {i})")));
            }
            c[(i * n + j) * n + k] += v;
            c[(j * n + i) * n + k] -= v;
        }
        let space = Space {
            chart: Chart::empty(),
            mode: Mode::ConstantStructure,
            basis: basis.iter().map(|s| s.to_string()).collect(),
            structure: c,
        };
        if let Some((i, j, k)) = space.jacobi_violation() {
            return Err(GeometryError::InvalidStructure(format!(
                "the Jacobi identity on ({}, {}, {})",
                basis[i], basis[j], basis[k]
            )));
        }
        Ok(Arc::new(space))
    }

    fn jacobi_violation(&self) -> Option<(usize, usize, usize)> {
        let n = self.dim();
        let c = |i: usize, j: usize, k: usize| &self.structure[(i * n + j) * n + k];
        for a in 0..n {
            for b in a + 1..n {
                for d in b + 1..n {
                    for l in 0..n {
                        let mut s = Rational::zero();
                        for m in 0..n {
                            s += c(a, b, m) * c(m, d, l) + c(b, d, m) * c(m, a, l) + c(d, a, m) * c(m, b, l);
                        }
                        if !s.is_zero() {
                            return Some((a, b, d));
                        }
                    }
                }
            }
        }
        None
    }

    pub fn dim(&self) -> usize {
        match self.mode {
            Mode::Coordinates => self.chart.dim(),
            Mode::ConstantStructure => self.basis.len(),
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn basis_names(&self) -> &[String] {
        &self.basis
    }

    pub fn structure_constant(&self, i: usize, j: usize, k: usize) -> &Rational {
        let n = self.dim();
        &self.structure[(i * n + j) * n + k]
    }

    /// Derivative of a function along the `i`-th basis direction.
    pub fn derive(&self, f: &Expr, i: usize) -> Expr {
        match self.mode {
            Mode::Coordinates => f.diff(i as u32),
            Mode::ConstantStructure => Expr::zero(),
        }
    }

    /// Basis field `d/dx_i` or `e_i`.
    pub fn basis_field(self: &Arc<Self>, i: usize) -> VectorField {
        let comps = (0..self.dim()).map(|k| if k == i { Expr::int(1) } else { Expr::zero() }).collect();
        VectorField { space: self.clone(), comps }
    }

    /// Parses component strings into a field.
    pub fn field(self: &Arc<Self>, comps: &[&str]) -> Result<VectorField, GeometryError> {
        let comps = comps.iter().map(|s| self.chart.parse(s)).collect::<Result<Vec<_>, _>>()?;
        VectorField::new(self, comps)
    }

    /// Sample points for numeric decisions. Constant-structure spaces have a
    /// single, coordinate-free point.
    pub fn sample_points(&self, config: &SampleConfig, exprs: &[&Expr]) -> Result<Vec<Point>, GeometryError> {
        if self.mode == Mode::ConstantStructure {
            return Ok(vec![Point::new(Vec::new())]);
        }
        Ok(Sampler::new(&self.chart, config.seed).points(config.samples, exprs)?)
    }
}

/// Vector field as components against the space's basis.
#[derive(Clone)]
pub struct VectorField {
    space: Arc<Space>,
    comps: Vec<Expr>,
}

impl VectorField {
    pub fn new(space: &Arc<Space>, comps: Vec<Expr>) -> Result<VectorField, GeometryError> {
        if comps.len() != space.dim() {
            return Err(GeometryError::Dimension { expected: space.dim(), got: comps.len() });
        }
        if space.mode == Mode::ConstantStructure {
            if let Some(bad) = comps.iter().find(|c| c.constant_value().is_none()) {
                return Err(GeometryError::NotConstant(bad.to_string()));
            }
        }
        Ok(VectorField { space: space.clone(), comps })
    }

    pub fn zero(space: &Arc<Space>) -> VectorField {
        VectorField { space: space.clone(), comps: vec![Expr::zero(); space.dim()] }
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    pub fn comps(&self) -> &[Expr] {
        &self.comps
    }

    pub fn comp(&self, i: usize) -> &Expr {
        &self.comps[i]
    }

    fn same_space(&self, other: &VectorField) -> Result<(), GeometryError> {
        if Arc::ptr_eq(&self.space, &other.space) {
            Ok(())
        } else {
            Err(GeometryError::ModeMismatch)
        }
    }

    /// Directional derivative `X(f)`.
    pub fn apply(&self, f: &Expr) -> Expr {
        if self.space.mode == Mode::ConstantStructure || f.constant_value().is_some() {
            return Expr::zero();
        }
        let mut acc = Expr::zero();
        for (i, c) in self.comps.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let d = f.diff(i as u32);
            if !d.is_zero() {
                acc = &acc + &(c * &d);
            }
        }
        acc
    }

    pub fn bracket(&self, other: &VectorField) -> Result<VectorField, GeometryError> {
        self.same_space(other)?;
        let n = self.space.dim();
        let comps = match self.space.mode {
            Mode::Coordinates => (0..n).map(|k| &self.apply(&other.comps[k]) - &other.apply(&self.comps[k])).collect(),
            Mode::ConstantStructure => {
                let v: Vec<Rational> = self.comps.iter().map(|c| c.constant_value().expect("constant")).collect();
                let w: Vec<Rational> = other.comps.iter().map(|c| c.constant_value().expect("constant")).collect();
                let mut out = vec![Rational::zero(); n];
                for i in 0..n {
                    if v[i].is_zero() {
                        continue;
                    }
                    for j in 0..n {
                        if w[j].is_zero() {
                            continue;
                        }
                        let s = &v[i] * &w[j];
                        for (k, o) in out.iter_mut().enumerate() {
                            let c = self.space.structure_constant(i, j, k);
                            if !c.is_zero() {
                                *o += &s * c;
                            }
                        }
                    }
                }
                out.into_iter().map(Expr::constant).collect()
            }
        };
        Ok(VectorField { space: self.space.clone(), comps })
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        assert!(Arc::ptr_eq(&self.space, &other.space), "fields from different spaces");
        VectorField {
            space: self.space.clone(),
            comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        assert!(Arc::ptr_eq(&self.space, &other.space), "fields from different spaces");
        VectorField {
            space: self.space.clone(),
            comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn neg(&self) -> VectorField {
        VectorField { space: self.space.clone(), comps: self.comps.iter().map(|a| -a).collect() }
    }

    /// `f * self`. In constant-structure mode `f` must be constant.
    pub fn scale(&self, f: &Expr) -> VectorField {
        VectorField { space: self.space.clone(), comps: self.comps.iter().map(|a| a * f).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(Zero::is_zero)
    }

    /// Linear combination `sum_i coeffs[i] * fields[i]`.
    pub fn combine(space: &Arc<Space>, coeffs: &[Expr], fields: &[VectorField]) -> VectorField {
        let mut acc = VectorField::zero(space);
        for (c, f) in coeffs.iter().zip(fields) {
            if !c.is_zero() {
                acc = acc.add(&f.scale(c));
            }
        }
        acc
    }

    pub fn eval(&self, p: &Point) -> Result<Vec<f64>, ExprError> {
        Ok(self.comps.iter().map(|c| c.eval(&p.float)).collect::<Result<Vec<_>, _>>()?)
    }

    /// Exact components at a point, when all are rational functions.
    pub fn eval_exact(&self, p: &Point) -> Option<Vec<Rational>> {
        self.comps.iter().map(|c| c.eval_exact(&p.exact).ok()).collect()
    }
}

impl fmt::Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (c, name) in self.comps.iter().zip(&self.space.basis) {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c})*{name}")?;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VectorField({self})")
    }
}

/// One-form as components against the dual basis.
#[derive(Clone)]
pub struct OneForm {
    space: Arc<Space>,
    comps: Vec<Expr>,
}

impl OneForm {
    pub fn new(space: &Arc<Space>, comps: Vec<Expr>) -> Result<OneForm, GeometryError> {
        if comps.len() != space.dim() {
            return Err(GeometryError::Dimension { expected: space.dim(), got: comps.len() });
        }
        Ok(OneForm { space: space.clone(), comps })
    }

    pub fn comps(&self) -> &[Expr] {
        &self.comps
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    pub fn pair(&self, v: &VectorField) -> Expr {
        assert!(Arc::ptr_eq(&self.space, &v.space), "form and field from different spaces");
        self.comps
            .iter()
            .zip(&v.comps)
            .filter(|(a, b)| !a.is_zero() && !b.is_zero())
            .fold(Expr::zero(), |acc, (a, b)| &acc + &(a * b))
    }

    pub fn scale(&self, f: &Expr) -> OneForm {
        OneForm { space: self.space.clone(), comps: self.comps.iter().map(|a| a * f).collect() }
    }

    pub fn neg(&self) -> OneForm {
        OneForm { space: self.space.clone(), comps: self.comps.iter().map(|a| -a).collect() }
    }

    /// `d(alpha)(X, Y) = X(alpha(Y)) - Y(alpha(X)) - alpha([X, Y])`.
    pub fn d(&self, x: &VectorField, y: &VectorField) -> Result<Expr, GeometryError> {
        let br = x.bracket(y)?;
        Ok(&(&x.apply(&self.pair(y)) - &y.apply(&self.pair(x))) - &self.pair(&br))
    }
}

impl fmt::Display for OneForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (c, name) in self.comps.iter().zip(&self.space.basis) {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let dual = match self.space.mode {
                Mode::Coordinates => format!("d{}", name.trim_start_matches('d')),
                Mode::ConstantStructure => format!("{name}*"),
            };
            write!(f, "({c})*{dual}")?;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl fmt::Debug for OneForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OneForm({self})")
    }
}

/// `[X, Y]` as a free function.
pub fn lie_bracket(x: &VectorField, y: &VectorField) -> Result<VectorField, GeometryError> {
    x.bracket(y)
}

/// `d(alpha)(X, Y)`.
pub fn d_oneform(alpha: &OneForm, x: &VectorField, y: &VectorField) -> Result<Expr, GeometryError> {
    alpha.d(x, y)
}

fn component_matrix(fields: &[VectorField]) -> Matrix<Expr> {
    let n = fields[0].space.dim();
    Matrix::from_fn(n, fields.len(), |r, c| fields[c].comps[r].clone())
}

/// Checks that `fields` are independent at every sample point.
pub fn check_independent(fields: &[VectorField], config: &SampleConfig) -> Result<(), GeometryError> {
    let Some(first) = fields.first() else { return Ok(()) };
    let space = first.space.clone();
    if fields.iter().any(|f| !Arc::ptr_eq(&f.space, &space)) {
        return Err(GeometryError::ModeMismatch);
    }
    let k = fields.len();
    if space.mode == Mode::ConstantStructure {
        let m = component_matrix(fields).map(|e| e.constant_value().expect("constant"));
        return if m.rank() == k { Ok(()) } else { Err(GeometryError::RankDeficient(String::new())) };
    }
    let all: Vec<&Expr> = fields.iter().flat_map(|f| f.comps.iter()).collect();
    let points = space.sample_points(config, &all)?;
    for p in &points {
        let cols: Vec<Vec<f64>> = fields.iter().map(|f| f.eval(p)).collect::<Result<_, _>>()?;
        let m = Matrix::from_columns(&cols);
        if m.numeric_rank(INDEPENDENCE_TOL) < k {
            return Err(GeometryError::RankDeficient(format!(" at {p}")));
        }
    }
    Ok(())
}

/// One-forms spanning the annihilator of `fields` (rank `k < n`).
pub fn annihilator(fields: &[VectorField]) -> Result<Vec<OneForm>, GeometryError> {
    let Some(first) = fields.first() else {
        return Err(GeometryError::RankDeficient(": empty field list".into()));
    };
    let space = first.space.clone();
    let rows = component_matrix(fields).transpose();
    let ker = rows.kernel();
    if ker.len() != space.dim() - fields.len() {
        return Err(GeometryError::RankDeficient(String::new()));
    }
    ker.into_iter().map(|v| OneForm::new(&space, v)).collect()
}

/// `(L_Z g)(X, Y) = Z<X,Y> - <[Z,X],Y> - <X,[Z,Y]>`.
pub fn lie_derivative_metric(
    z: &VectorField,
    g: &Metric,
    x: &VectorField,
    y: &VectorField,
) -> Result<Expr, GeometryError> {
    let zx = z.bracket(x)?;
    let zy = z.bracket(y)?;
    Ok(&(&z.apply(&g.inner(x, y)) - &g.inner(&zx, y)) - &g.inner(x, &zy))
}

/// Symmetric positive-definite bilinear form on the tangent space.
#[derive(Clone, Debug)]
pub struct Metric {
    space: Arc<Space>,
    g: Matrix<Expr>,
}

impl Metric {
    /// Builds a metric after checking exact symmetry and positive leading
    /// minors at the sample points.
    pub fn new(space: &Arc<Space>, g: Matrix<Expr>, config: &SampleConfig) -> Result<Metric, GeometryError> {
        let n = space.dim();
        if g.rows() != n || !g.is_square() {
            return Err(GeometryError::Dimension { expected: n, got: g.rows() });
        }
        if !g.is_symmetric() {
            return Err(GeometryError::NotSymmetric);
        }
        let metric = Metric { space: space.clone(), g };
        metric.check_positive(config)?;
        Ok(metric)
    }

    /// Metric in which the given full frame is orthonormal: `G = F^{-T} F^{-1}`.
    pub fn from_orthonormal_frame(frame: &Frame) -> Metric {
        let inv = frame.inverse_matrix();
        Metric { space: frame.space.clone(), g: &inv.transpose() * inv }
    }

    pub fn euclidean(space: &Arc<Space>) -> Metric {
        Metric { space: space.clone(), g: Matrix::identity(space.dim()) }
    }

    pub fn parse(space: &Arc<Space>, entries: &[Vec<&str>], config: &SampleConfig) -> Result<Metric, GeometryError> {
        let rows = entries
            .iter()
            .map(|r| r.iter().map(|s| space.chart.parse(s)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        if rows.iter().any(|r| r.len() != space.dim()) {
            return Err(GeometryError::Dimension { expected: space.dim(), got: rows.len() });
        }
        Metric::new(space, Matrix::from_rows(rows), config)
    }

    fn check_positive(&self, config: &SampleConfig) -> Result<(), GeometryError> {
        let minors = self.g.leading_minors();
        if self.space.mode == Mode::ConstantStructure || minors.iter().all(|m| m.constant_value().is_some()) {
            if let Some(m) = minors.iter().find(|m| m.constant_value().is_none_or(|c| c <= Rational::zero())) {
                return Err(GeometryError::NotPositiveDefinite(format!("minor {m}")));
            }
            return Ok(());
        }
        let refs: Vec<&Expr> = minors.iter().collect();
        for p in self.space.sample_points(config, &refs)? {
            for m in &minors {
                if m.eval(&p.float).map_or(true, |v| v <= 0.0) {
                    return Err(GeometryError::NotPositiveDefinite(p.to_string()));
                }
            }
        }
        Ok(())
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    pub fn matrix(&self) -> &Matrix<Expr> {
        &self.g
    }

    pub fn entry(&self, i: usize, j: usize) -> &Expr {
        &self.g[(i, j)]
    }

    pub fn inner(&self, x: &VectorField, y: &VectorField) -> Expr {
        let n = self.space.dim();
        let mut acc = Expr::zero();
        for i in 0..n {
            if x.comps[i].is_zero() {
                continue;
            }
            for j in 0..n {
                if y.comps[j].is_zero() || self.g[(i, j)].is_zero() {
                    continue;
                }
                acc = &acc + &(&(&x.comps[i] * &self.g[(i, j)]) * &y.comps[j]);
            }
        }
        acc
    }
}

/// Full-rank frame with cached inverse and structure functions
/// `[E_a, E_b] = sum_c b^c_ab E_c`.
#[derive(Clone, Debug)]
pub struct Frame {
    space: Arc<Space>,
    fields: Vec<VectorField>,
    inverse: Matrix<Expr>,
    structure: Vec<Vec<Vec<Expr>>>,
}

impl Frame {
    pub fn new(fields: Vec<VectorField>) -> Result<Frame, GeometryError> {
        let Some(first) = fields.first() else { return Err(GeometryError::Singular) };
        let space = first.space.clone();
        if fields.iter().any(|f| !Arc::ptr_eq(&f.space, &space)) {
            return Err(GeometryError::ModeMismatch);
        }
        let n = space.dim();
        if fields.len() != n {
            return Err(GeometryError::Dimension { expected: n, got: fields.len() });
        }
        let inverse = component_matrix(&fields).inverse().ok_or(GeometryError::Singular)?;
        let mut frame = Frame { space, fields, inverse, structure: Vec::new() };
        let mut structure = vec![vec![Vec::new(); n]; n];
        for a in 0..n {
            structure[a][a] = vec![Expr::zero(); n];
            for b in a + 1..n {
                let br = frame.fields[a].bracket(&frame.fields[b])?;
                let coeffs = frame.expand(&br);
                structure[b][a] = coeffs.iter().map(|c| -c).collect();
                structure[a][b] = coeffs;
            }
        }
        frame.structure = structure;
        Ok(frame)
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    pub fn fields(&self) -> &[VectorField] {
        &self.fields
    }

    pub fn field(&self, i: usize) -> &VectorField {
        &self.fields[i]
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn inverse_matrix(&self) -> &Matrix<Expr> {
        &self.inverse
    }

    /// Coefficients `a` with `v = sum_k a_k E_k`.
    pub fn expand(&self, v: &VectorField) -> Vec<Expr> {
        self.inverse.mul_vec(&v.comps)
    }

    /// Structure function `b^c_ab`.
    pub fn b(&self, a: usize, b: usize, c: usize) -> &Expr {
        &self.structure[a][b][c]
    }

    /// Field from frame coefficients.
    pub fn combine(&self, coeffs: &[Expr]) -> VectorField {
        VectorField::combine(&self.space, coeffs, &self.fields)
    }

    /// `E_a(f)`.
    pub fn apply(&self, a: usize, f: &Expr) -> Expr {
        self.fields[a].apply(f)
    }
}

/// Coefficients of `v` in a full-rank frame.
pub fn frame_expand(v: &VectorField, frame: &Frame) -> Vec<Expr> {
    frame.expand(v)
}
