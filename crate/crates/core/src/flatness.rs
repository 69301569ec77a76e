//! Canonical frames and flatness certificates for three classes of
//! sub-Riemannian structures: Engel (growth (2,3,4)), contact with constant
//! symbol, and growth (2,3,5).
//!
//! Each certifier builds an adapted frame `E_0, …, E_{n-1}` together with a
//! connection given by `Γ^k_ij` in that frame, then zero-tests the components
//! of the curvature and of the torsion minus its model value.

use std::sync::Arc;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::carnot::CarnotError;
use crate::geometry::{annihilator, Frame, GeometryError, Metric, OneForm, Space, VectorField};
use crate::linalg::Matrix;
use crate::report::{FlatnessReport, ResidualCheck, Verdict};
use crate::riemann::{frame_curvature, frame_torsion, FrameConnection, Tensor3};
use crate::scalar::{int, rational_approx, rational_sqrt, rational_to_f64, Rational};
use crate::subriemann::{contact_spectrum, SubRiemannError, SubRiemannian, SPECTRUM_TOL};
use crate::symexpr::{ExprError, Point, SampleConfig};
use crate::{CarnotAlgebra, Expr};

/// Largest denominator tried when reading a spectrum value as a rational.
const SPECTRUM_MAX_DEN: i64 = 1_000_000;

#[derive(Debug, Error)]
pub enum FlatnessError {
    #[error("growth vector {got:?} at {point}, expected {expected:?}")]
    Growth { expected: Vec<usize>, got: Vec<usize>, point: String },
    #[error("expected {expected} horizontal fields in dimension {dim}, got {got}")]
    Shape { expected: String, got: usize, dim: usize },
    #[error("degenerate construction: {0}")]
    Degenerate(String),
    #[error("distribution is not contact at {0}")]
    NotContact(String),
    #[error("contact spectrum is not constant: {here:?} versus {there:?} at {point}")]
    NonConstantSpectrum { here: Vec<f64>, there: Vec<f64>, point: String },
    #[error("sign choices disagree: {0}")]
    SignDisagreement(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    SubRiemann(#[from] SubRiemannError),
    #[error(transparent)]
    Carnot(#[from] CarnotError),
}

/// Full frame split into consecutive layers `V_1, V_2, …`; the extended
/// metric makes the frame orthonormal.
#[derive(Clone, Debug)]
pub struct GradedFrame {
    pub frame: Arc<Frame>,
    pub names: Vec<String>,
    /// Number of frame slots in each layer.
    pub layers: Vec<usize>,
}

impl GradedFrame {
    pub fn new(fields: Vec<VectorField>, names: &[&str], layers: &[usize]) -> Result<GradedFrame, FlatnessError> {
        assert_eq!(names.len(), fields.len(), "one name per field");
        assert_eq!(layers.iter().sum::<usize>(), fields.len(), "layers cover the frame");
        let frame = Arc::new(Frame::new(fields)?);
        Ok(GradedFrame { frame, names: names.iter().map(|s| s.to_string()).collect(), layers: layers.to_vec() })
    }

    pub fn len(&self) -> usize {
        self.frame.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frame.is_empty()
    }

    /// Layer index (0-based) of a frame slot.
    pub fn layer_of(&self, slot: usize) -> usize {
        let mut end = 0;
        for (l, size) in self.layers.iter().enumerate() {
            end += size;
            if slot < end {
                return l;
            }
        }
        panic!("slot {slot} outside the frame")
    }

    pub fn field(&self, slot: usize) -> &VectorField {
        self.frame.field(slot)
    }

    /// Metric in which the frame is orthonormal.
    pub fn metric(&self) -> Metric {
        Metric::from_orthonormal_frame(&self.frame)
    }
}

/// Constant torsion `T(e_i, e_j) = −[e_i, e_j]` of a graded model algebra.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelTorsion {
    /// `t[i][j][k]`.
    pub t: Vec<Vec<Vec<Rational>>>,
}

impl ModelTorsion {
    pub fn from_algebra(alg: &CarnotAlgebra) -> ModelTorsion {
        let n = alg.dim();
        let t = (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| -alg.constant(i, j, k)).collect()).collect()).collect();
        ModelTorsion { t }
    }

    pub fn dim(&self) -> usize {
        self.t.len()
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> &Rational {
        &self.t[i][j][k]
    }

    /// True when `t[i][j]` only has components in the layer of weight
    /// `w_i + w_j`.
    pub fn is_graded(&self, weights: &[usize]) -> bool {
        let n = self.dim();
        (0..n)
            .all(|i| (0..n).all(|j| (0..n).all(|k| self.t[i][j][k].is_zero() || weights[k] == weights[i] + weights[j])))
    }
}

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

/// Engel model in the canonical frame order `(X_0, X_1, X_2, X_3)`:
/// `[X_0, X_1] = X_2`, `[X_1, X_2] = X_3`.
pub fn engel_model() -> CarnotAlgebra {
    CarnotAlgebra::new(
        names(&["X0", "X1", "X2", "X3"]),
        vec![2, 1, 1],
        &[(0, 1, 2, int(1)), (1, 2, 3, int(1))],
        Matrix::identity(2),
    )
    .expect("valid Engel model")
}

/// Free step-3 model on two generators in the frame order
/// `(X_1, X_2, Z, Y_1, Y_2)`: `[X_1, X_2] = Z`, `[X_i, Z] = Y_i`.
pub fn free235_model() -> CarnotAlgebra {
    CarnotAlgebra::new(
        names(&["X1", "X2", "Z", "Y1", "Y2"]),
        vec![2, 1, 2],
        &[(0, 1, 2, int(1)), (0, 2, 3, int(1)), (1, 2, 4, int(1))],
        Matrix::identity(2),
    )
    .expect("valid (2,3,5) model")
}

fn check_growth(sr: &SubRiemannian, expected: &[usize], config: &SampleConfig) -> Result<(), FlatnessError> {
    for p in sr.sample_points(config)? {
        let got = sr.growth_vector(&p)?;
        if got != expected {
            return Err(FlatnessError::Growth { expected: expected.to_vec(), got, point: p.to_string() });
        }
    }
    Ok(())
}

/// `dα(∂_k, x)` for every basis direction `k`.
fn d_row(alpha: &OneForm, x: &VectorField) -> Result<Vec<Expr>, GeometryError> {
    let space = alpha.space();
    (0..space.dim()).map(|k| alpha.d(&space.basis_field(k), x)).collect()
}

/// One-form `−dα(x, ·)`.
fn contract_d(alpha: &OneForm, x: &VectorField) -> Result<OneForm, GeometryError> {
    let space = alpha.space();
    let comps = (0..space.dim()).map(|k| alpha.d(x, &space.basis_field(k)).map(|v| -&v)).collect::<Result<_, _>>()?;
    OneForm::new(space, comps)
}

/// Field solving `rows · v = rhs` pointwise.
fn solve_field(
    space: &Arc<Space>,
    rows: Vec<Vec<Expr>>,
    rhs: &[Expr],
    what: &str,
) -> Result<VectorField, FlatnessError> {
    let m = Matrix::from_rows(rows);
    let v = m.solve(rhs).ok_or_else(|| FlatnessError::Degenerate(format!("{what} system is singular")))?;
    Ok(VectorField::new(space, v)?)
}

/// Some `r` with `r² = p² + q²`, exact when `p/q` is constant and
/// Pythagorean, otherwise through a square-root atom.
fn pair_norm(p: &Expr, q: &Expr) -> Expr {
    if p.is_zero() {
        return q.clone();
    }
    if q.is_zero() {
        return p.clone();
    }
    if let Some(c) = (p / q).constant_value() {
        if let Some(s) = rational_sqrt(&(&c * &c + Rational::one())) {
            return q * &Expr::constant(s);
        }
    }
    (&(p * p) + &(q * q)).sqrt()
}

fn sign_expr(positive: bool) -> Expr {
    Expr::int(if positive { 1 } else { -1 })
}

fn sign_label(positive: bool) -> &'static str {
    if positive {
        "+"
    } else {
        "-"
    }
}

/// Torsion and curvature residuals against `target[i][j][k]` for `i < j`.
fn certify(
    conn: &FrameConnection,
    target: &dyn Fn(usize, usize, usize) -> Expr,
    names: &[String],
    config: &SampleConfig,
    transcript: Vec<(String, String)>,
    warnings: Vec<String>,
) -> Result<FlatnessReport, FlatnessError> {
    let n = conn.dim();
    let chart = conn.frame.space().chart();
    let mut check = ResidualCheck::new(chart, config);
    let t = frame_torsion(conn);
    for i in 0..n {
        for j in i + 1..n {
            for k in 0..n {
                let r = &t[i][j][k] - &target(i, j, k);
                check.check(format!("T({}, {})^{}", names[i], names[j], names[k]), &r)?;
            }
        }
    }
    let r = frame_curvature(conn);
    for i in 0..n {
        for j in i + 1..n {
            for k in 0..n {
                for l in 0..n {
                    check.check(format!("R({}, {}){}^{}", names[i], names[j], names[k], names[l]), &r[i][j][k][l])?;
                }
            }
        }
    }
    Ok(check.finish(transcript, warnings))
}

fn agree(reports: &[(String, FlatnessReport)]) -> Result<(), FlatnessError> {
    let first = reports[0].1.verdict;
    if let Some((label, rep)) = reports.iter().find(|(_, r)| r.verdict != first) {
        return Err(FlatnessError::SignDisagreement(format!(
            "{} gives {first}, {label} gives {}",
            reports[0].0, rep.verdict
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------- Engel

/// Canonical data of an Engel-type structure for one orientation choice.
#[derive(Clone, Debug)]
pub struct EngelData {
    pub x0: VectorField,
    pub x1: VectorField,
    pub psi: OneForm,
    pub theta: OneForm,
    pub z: VectorField,
    pub y: VectorField,
    pub c0: Expr,
    pub c1: Expr,
    /// `[X_1, X_2] = Y + C_0 X_0 + C_1 X_1 + C_2 Z`.
    pub c_upper: [Expr; 3],
    pub x2: VectorField,
    pub x3: VectorField,
    pub graded: GradedFrame,
}

impl EngelData {
    pub fn transcript(&self) -> Vec<(String, String)> {
        vec![
            ("X_0".into(), self.x0.to_string()),
            ("X_1".into(), self.x1.to_string()),
            ("psi".into(), self.psi.to_string()),
            ("theta".into(), self.theta.to_string()),
            ("Z".into(), self.z.to_string()),
            ("Y".into(), self.y.to_string()),
            ("c_0".into(), self.c0.to_string()),
            ("c_1".into(), self.c1.to_string()),
            ("C_0".into(), self.c_upper[0].to_string()),
            ("C_1".into(), self.c_upper[1].to_string()),
            ("C_2".into(), self.c_upper[2].to_string()),
            ("X_2".into(), self.x2.to_string()),
            ("X_3".into(), self.x3.to_string()),
        ]
    }
}

/// Conventions fixed by the Engel construction, reported with every result.
pub const ENGEL_NOTES: [&str; 3] = [
    "Z solves theta(Z) = 1, psi(Z) = 0, dtheta(Z, .)|E = 0; Y solves psi(Y) = 1, theta(Y) = 0, dtheta(Y, .)|E = 0",
    "the second correction term of X_3 multiplies X_1",
    "model convention: [X_0, X_1] = +X_2, [X_1, X_2] = +X_3",
];

/// Canonical Engel frame for the orientation `(±X_0, ±X_1)`.
pub fn engel_canonical_data(sr: &SubRiemannian, signs: (bool, bool)) -> Result<EngelData, FlatnessError> {
    if sr.rank() != 2 || sr.dim() != 4 {
        return Err(FlatnessError::Shape { expected: "2".into(), got: sr.rank(), dim: sr.dim() });
    }
    let space = sr.space().clone();
    let (xa, xb) = (&sr.frame()[0], &sr.frame()[1]);
    let w = xa.bracket(xb)?;
    let psi0 = annihilator(&[xa.clone(), xb.clone(), w.clone()])
        .map_err(|_| FlatnessError::Degenerate("first bracket layer is not of rank 3".into()))?
        .remove(0);
    // Kernel direction of v ↦ [v, W] mod E²: α X_a + β X_b.
    let alpha = psi0.pair(&xb.bracket(&w)?);
    let beta = -&psi0.pair(&xa.bracket(&w)?);
    if alpha.is_zero() && beta.is_zero() {
        return Err(FlatnessError::Degenerate("the bracket map E x E^2/E -> E^3/E^2 vanishes".into()));
    }
    let norm = pair_norm(&alpha, &beta).recip();
    let s0 = &sign_expr(signs.0) * &norm;
    let s1 = &sign_expr(signs.1) * &norm;
    let x0 = VectorField::combine(&space, &[&alpha * &s0, &beta * &s0], &[xa.clone(), xb.clone()]);
    let x1 = VectorField::combine(&space, &[-&(&beta * &s1), &alpha * &s1], &[xa.clone(), xb.clone()]);

    let v01 = x0.bracket(&x1)?;
    let denom = psi0.pair(&x1.bracket(&v01)?);
    if denom.is_zero() {
        return Err(FlatnessError::Degenerate("psi normalization divides by zero".into()));
    }
    let psi = psi0.scale(&denom.recip());
    let theta = contract_d(&psi, &x1)?;

    let n = space.dim();
    let rows = vec![theta.comps().to_vec(), psi.comps().to_vec(), d_row(&theta, &x0)?, d_row(&theta, &x1)?];
    let unit = |k: usize| (0..n).map(|r| if r == k { Expr::int(1) } else { Expr::zero() }).collect::<Vec<_>>();
    let z = solve_field(&space, rows.clone(), &unit(0)[..4], "Z")?;
    let y = solve_field(&space, rows, &unit(1)[..4], "Y")?;

    let basic = Frame::new(vec![x0.clone(), x1.clone(), z.clone(), y.clone()])?;
    let e01 = basic.expand(&v01);
    let (c0, c1) = (e01[0].clone(), e01[1].clone());
    let x2 = VectorField::combine(
        &space,
        &[Expr::int(1), &Expr::frac(2, 5) * &c0, &Expr::frac(1, 2) * &c1],
        &[z.clone(), x0.clone(), x1.clone()],
    );
    let e12 = basic.expand(&x1.bracket(&x2)?);
    let c_upper = [e12[0].clone(), e12[1].clone(), e12[2].clone()];

    let fifth = Expr::frac(1, 5);
    let half = Expr::frac(1, 2);
    let phi = &fifth * &c0;
    let coef0 = &half * &(&(&c_upper[0] - &(&fifth * &x1.apply(&c0))) + &(&Expr::frac(3, 25) * &(&c0 * &c0)));
    let shifted = x2.sub(&x0.scale(&phi));
    let coef1 = &half
        * &(&(&(&c_upper[1] + &(&fifth * &x0.apply(&c0))) + &psi.pair(&shifted.bracket(&y)?))
            + &(&Expr::frac(1, 10) * &(&c1 * &c0)));
    let x3 = VectorField::combine(
        &space,
        &[Expr::int(1), -&phi, coef0, coef1],
        &[y.clone(), z.clone(), x0.clone(), x1.clone()],
    );
    let graded = GradedFrame::new(
        vec![x0.clone(), x1.clone(), x2.clone(), x3.clone()],
        &["X_0", "X_1", "X_2", "X_3"],
        &[2, 1, 1],
    )?;
    Ok(EngelData { x0, x1, psi, theta, z, y, c0, c1, c_upper, x2, x3, graded })
}

/// Certifies an Engel-type structure against the Engel group. The canonical
/// frame is parallel, so curvature vanishes identically and flatness is
/// `[X_i, X_j]` equal to the model brackets.
pub fn engel_flatness(sr: &SubRiemannian, config: &SampleConfig) -> Result<FlatnessReport, FlatnessError> {
    check_growth(sr, &[2, 3, 4], config)?;
    let model = ModelTorsion::from_algebra(&engel_model());
    let mut reports = Vec::new();
    for signs in [(true, true), (true, false), (false, true), (false, false)] {
        let data = engel_canonical_data(sr, signs)?;
        let conn = FrameConnection::zero(data.graded.frame.clone());
        let target = |i: usize, j: usize, k: usize| Expr::constant(model.get(i, j, k).clone());
        let mut transcript =
            vec![("orientation".to_string(), format!("({}X_0, {}X_1)", sign_label(signs.0), sign_label(signs.1)))];
        transcript.extend(data.transcript());
        let warnings = ENGEL_NOTES.iter().map(|s| s.to_string()).collect();
        let rep = certify(&conn, &target, &data.graded.names, config, transcript, warnings)?;
        reports.push((format!("({}, {})", sign_label(signs.0), sign_label(signs.1)), rep));
    }
    agree(&reports)?;
    Ok(reports.swap_remove(0).1)
}

// ---------------------------------------------------------------- contact

/// Normalized contact data for one sign of `θ`.
#[derive(Clone, Debug)]
pub struct ContactData {
    pub theta: OneForm,
    /// `A_ab = dθ(X_a, X_b)` in the orthonormal horizontal frame.
    pub a: Matrix<Expr>,
    /// Normalized spectrum `1 = λ_1 ≤ … ≤ λ_n`.
    pub lambda: Vec<f64>,
    /// Distinct spectrum values used as interpolation nodes.
    pub nodes: Vec<Rational>,
    pub big_lambda: Matrix<Expr>,
    pub j: Matrix<Expr>,
    /// Eigenprojections `pr[j]` on `E`, one per node.
    pub projections: Vec<Matrix<Expr>>,
    pub reeb: VectorField,
    /// Horizontal frame followed by the Reeb field.
    pub frame: Arc<Frame>,
}

impl ContactData {
    pub fn rank(&self) -> usize {
        self.a.rows()
    }

    pub fn transcript(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("theta".to_string(), self.theta.to_string()),
            ("lambda".to_string(), format!("{:?}", self.lambda)),
            ("Z".to_string(), self.reeb.to_string()),
        ];
        let m = self.rank();
        for r in 0..m {
            for c in 0..m {
                if !self.j[(r, c)].is_zero() {
                    out.push((format!("J[{r}][{c}]"), self.j[(r, c)].to_string()));
                }
            }
        }
        out
    }
}

fn pfaffian(m: &Matrix<Expr>) -> Expr {
    let n = m.rows();
    if n == 0 {
        return Expr::int(1);
    }
    let mut acc = Expr::zero();
    for j in 1..n {
        if m[(0, j)].is_zero() {
            continue;
        }
        let keep: Vec<usize> = (1..n).filter(|&c| c != j).collect();
        let minor = Matrix::from_fn(n - 2, n - 2, |r, c| m[(keep[r], keep[c])].clone());
        let term = &m[(0, j)] * &pfaffian(&minor);
        acc = if j % 2 == 1 { &acc + &term } else { &acc - &term };
    }
    acc
}

fn float_matrix(m: &Matrix<Expr>, p: &Point) -> Result<Matrix<f64>, FlatnessError> {
    let mut out = Matrix::zeros(m.rows(), m.cols());
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            out[(r, c)] = m[(r, c)].eval(&p.float).map_err(ExprError::from)?;
        }
    }
    Ok(out)
}

fn spectra_differ(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).any(|(x, y)| (x - y).abs() > SPECTRUM_TOL * x.abs().max(1.0))
}

/// Normalizes the contact form so the largest `μ_j` is 1, builds `Λ`, `J`
/// and the Reeb field. `positive` selects the sign of `θ`.
pub fn contact_normalize(
    sr: &SubRiemannian,
    positive: bool,
    config: &SampleConfig,
) -> Result<ContactData, FlatnessError> {
    let m = sr.rank();
    let dim = sr.dim();
    if m % 2 == 1 || dim != m + 1 {
        return Err(FlatnessError::Shape { expected: format!("{}", dim.saturating_sub(1)), got: m, dim });
    }
    let half_rank = m / 2;
    let space = sr.space().clone();
    let fields = sr.frame();
    let theta0 = annihilator(fields)?.remove(0);
    let omega0 = {
        let mut w = Matrix::zeros(m, m);
        for a in 0..m {
            for b in a + 1..m {
                let v = theta0.d(&fields[a], &fields[b])?;
                w[(b, a)] = -&v;
                w[(a, b)] = v;
            }
        }
        w
    };

    let mut lambda: Option<Vec<f64>> = None;
    for p in sr.sample_points(config)? {
        let num = float_matrix(&omega0, &p)?;
        let spec = contact_spectrum(&num).ok_or_else(|| FlatnessError::NotContact(p.to_string()))?;
        match &lambda {
            None => lambda = Some(spec),
            Some(first) if spectra_differ(first, &spec) => {
                return Err(FlatnessError::NonConstantSpectrum {
                    here: first.clone(),
                    there: spec,
                    point: p.to_string(),
                })
            }
            Some(_) => {}
        }
    }
    let lambda = lambda.ok_or_else(|| FlatnessError::Degenerate("no sample points".into()))?;
    let exact: Vec<Rational> = lambda
        .iter()
        .map(|&l| {
            rational_approx(l, SPECTRUM_MAX_DEN)
                .filter(|q| rational_to_f64(q).is_some_and(|f| (f - l).abs() <= SPECTRUM_TOL * l.max(1.0)))
                .ok_or_else(|| FlatnessError::Degenerate(format!("spectrum value {l} is not rational")))
        })
        .collect::<Result<_, _>>()?;
    let mut nodes: Vec<Rational> = exact.clone();
    nodes.dedup();

    // μ_max from the Pfaffian and the trace, exact when `n` is odd.
    let trace = (&omega0.transpose() * &omega0).trace();
    let inv_sq: Rational = exact.iter().map(|l| (l * l).recip()).fold(Rational::zero(), |a, b| a + b);
    let m2 = &trace * &Expr::constant((inv_sq * int(2)).recip());
    let mu = if half_rank % 2 == 1 {
        let prod: Rational = exact.iter().fold(Rational::one(), |a, b| a * b);
        &(&pfaffian(&omega0) * &Expr::constant(prod)) / &m2.pow(((half_rank - 1) / 2) as i32)
    } else {
        match m2.constant_value().and_then(|c| rational_sqrt(&c)) {
            Some(s) => Expr::constant(s),
            None => m2.sqrt(),
        }
    };
    if mu.is_zero() {
        return Err(FlatnessError::NotContact("every point".into()));
    }
    let scale = &sign_expr(positive) / &mu;
    let theta = theta0.scale(&scale);
    let a = omega0.map(|e| e * &scale);

    // Λ = q(−A²) and pr[j] = ℓ_j(−A²) with Lagrange nodes 1/λ_j².
    let s = (&a * &a).scale(&Expr::int(-1));
    let svals: Vec<Rational> = nodes.iter().map(|l| (l * l).recip()).collect();
    let id = Matrix::<Expr>::identity(m);
    let mut projections = Vec::new();
    let mut big_lambda = Matrix::<Expr>::zeros(m, m);
    for (j, sj) in svals.iter().enumerate() {
        let mut p = id.clone();
        for (l, sl) in svals.iter().enumerate() {
            if l == j {
                continue;
            }
            let factor = s.sub(&id.scale(&Expr::constant(sl.clone()))).scale(&Expr::constant((sj - sl).recip()));
            p = &p * &factor;
        }
        big_lambda = big_lambda.add(&p.scale(&Expr::constant(nodes[j].clone())));
        projections.push(p);
    }
    let j = &big_lambda * &a;
    if !(&j * &j).add(&id).is_zero() {
        let residual = (&j * &j).add(&id);
        let chart = space.chart();
        for e in residual.entries() {
            if !crate::symexpr::is_zero(e, chart, config)?.is_zero() {
                return Err(FlatnessError::Degenerate(format!("J^2 + id = {e} does not vanish")));
            }
        }
    }

    let n = space.dim();
    let mut rows = vec![theta.comps().to_vec()];
    for x in fields {
        rows.push(d_row(&theta, x)?);
    }
    let rhs: Vec<Expr> = (0..n).map(|k| if k == 0 { Expr::int(1) } else { Expr::zero() }).collect();
    let reeb = solve_field(&space, rows, &rhs, "Reeb")?;
    let mut all = fields.to_vec();
    all.push(reeb.clone());
    let frame = Arc::new(Frame::new(all)?);
    Ok(ContactData { theta, a, lambda, nodes, big_lambda, j, projections, reeb, frame })
}

/// Coefficients of `[Σ u_a E_a, Σ v_c E_c]` in the frame.
fn frame_bracket(frame: &Frame, u: &[Expr], v: &[Expr]) -> Vec<Expr> {
    let n = frame.len();
    let mut out = vec![Expr::zero(); n];
    for (a, ua) in u.iter().enumerate() {
        if ua.is_zero() {
            continue;
        }
        for (c, vc) in v.iter().enumerate() {
            let d = frame.apply(a, vc);
            if !d.is_zero() {
                out[c] = &out[c] + &(ua * &d);
            }
            if vc.is_zero() {
                continue;
            }
            let uv = ua * vc;
            for (d, o) in out.iter_mut().enumerate() {
                let b = frame.b(a, c, d);
                if !b.is_zero() {
                    *o = &*o + &(&uv * b);
                }
            }
        }
    }
    for (c, vc) in v.iter().enumerate() {
        if vc.is_zero() {
            continue;
        }
        for (a, ua) in u.iter().enumerate() {
            let d = frame.apply(c, ua);
            if !d.is_zero() {
                out[a] = &out[a] - &(vc * &d);
            }
        }
    }
    out
}

/// `U(f)` for `U = Σ u_a E_a`.
fn frame_apply(frame: &Frame, u: &[Expr], f: &Expr) -> Expr {
    u.iter()
        .enumerate()
        .filter(|(_, ua)| !ua.is_zero())
        .fold(Expr::zero(), |acc, (a, ua)| &acc + &(ua * &frame.apply(a, f)))
}

fn dot(u: &[Expr], v: &[Expr]) -> Expr {
    u.iter().zip(v).filter(|(a, b)| !a.is_zero() && !b.is_zero()).fold(Expr::zero(), |acc, (a, b)| &acc + &(a * b))
}

/// `(L_U g)(V, W)` for the metric making the frame orthonormal.
fn lie_metric(frame: &Frame, u: &[Expr], v: &[Expr], w: &[Expr]) -> Expr {
    let uv = frame_bracket(frame, u, v);
    let uw = frame_bracket(frame, u, w);
    &(&frame_apply(frame, u, &dot(v, w)) - &dot(&uv, w)) - &dot(v, &uw)
}

/// Embeds an `m × m` block acting on `E` into the full frame.
fn extend(block: &Matrix<Expr>, n: usize) -> Matrix<Expr> {
    let m = block.rows();
    Matrix::from_fn(n, n, |r, c| if r < m && c < m { block[(r, c)].clone() } else { Expr::zero() })
}

fn unit(n: usize, i: usize) -> Vec<Expr> {
    (0..n).map(|k| if k == i { Expr::int(1) } else { Expr::zero() }).collect()
}

/// The connections `∇` and `∇′` in the frame `(X_1, …, X_{2n}, Z)`.
#[derive(Clone, Debug)]
pub struct ContactConnection {
    pub nabla: FrameConnection,
    pub nabla_prime: FrameConnection,
}

pub fn contact_connection(data: &ContactData) -> ContactConnection {
    let frame = data.frame.clone();
    let n = frame.len();
    let m = data.rank();
    let lc = FrameConnection::levi_civita_orthonormal(frame.clone());
    let projections: Vec<Matrix<Expr>> = data.projections.iter().map(|p| extend(p, n)).collect();
    let half = Expr::frac(1, 2);

    let mut gamma: Tensor3 = vec![vec![vec![Expr::zero(); n]; n]; n];
    for i in 0..n {
        let ei = unit(n, i);
        for b in 0..m {
            let mut out = vec![Expr::zero(); n];
            let mut tau_terms = Vec::new();
            for p in &projections {
                let u = p.column(i);
                let w = p.column(b);
                let rest: Vec<Expr> = ei.iter().zip(&u).map(|(a, c)| a - c).collect();
                let inner = lc.covariant(&u, &w);
                let br = frame_bracket(&frame, &rest, &w);
                let sum: Vec<Expr> = inner.iter().zip(&br).map(|(a, c)| a + c).collect();
                for (o, v) in out.iter_mut().zip(p.mul_vec(&sum)) {
                    *o = &*o + &v;
                }
                tau_terms.push((rest, w, p));
            }
            for c in 0..m {
                let mut tau = Expr::zero();
                for (rest, w, p) in &tau_terms {
                    tau = &tau + &lie_metric(&frame, rest, w, &p.column(c));
                }
                out[c] = &out[c] + &(&tau * &half);
            }
            gamma[i][b] = out;
        }
    }
    let nabla = FrameConnection { frame: frame.clone(), gamma };

    // ∇′_X Y = ∇_X Y + ½ (∇_X J) J Y, with (∇_X J) V = ∇_X (J V) − J ∇_X V.
    let j = extend(&data.j, n);
    let mut prime = nabla.gamma.clone();
    for i in 0..n {
        let ei = unit(n, i);
        for b in 0..m {
            let jy = j.column(b);
            let jjy = j.mul_vec(&jy);
            let d1 = nabla.covariant(&ei, &jjy);
            let d2 = j.mul_vec(&nabla.covariant(&ei, &jy));
            for k in 0..n {
                let corr = &(&d1[k] - &d2[k]) * &half;
                if !corr.is_zero() {
                    prime[i][b][k] = &prime[i][b][k] + &corr;
                }
            }
        }
    }
    ContactConnection { nabla, nabla_prime: FrameConnection { frame, gamma: prime } }
}

/// Certifies a contact structure with constant symbol against the Heisenberg
/// model: `R′ = 0` and `T′ = dθ ⊗ Z`. A spectrum that varies across samples
/// gives an undecided report.
pub fn contact_flatness(sr: &SubRiemannian, config: &SampleConfig) -> Result<FlatnessReport, FlatnessError> {
    let mut reports = Vec::new();
    for positive in [true, false] {
        let data = match contact_normalize(sr, positive, config) {
            Ok(d) => d,
            Err(e @ FlatnessError::NonConstantSpectrum { .. }) => {
                return Ok(FlatnessReport::undecided(format!("no constant symbol: {e}")))
            }
            Err(e) => return Err(e),
        };
        let conn = contact_connection(&data);
        let m = data.rank();
        let target =
            |i: usize, j: usize, k: usize| if i < m && j < m && k == m { data.a[(i, j)].clone() } else { Expr::zero() };
        let mut names: Vec<String> = sr.names().to_vec();
        names.push("Z".into());
        let mut transcript = vec![("orientation".to_string(), format!("{}theta", sign_label(positive)))];
        transcript.extend(data.transcript());
        let rep = certify(&conn.nabla_prime, &target, &names, config, transcript, Vec::new())?;
        reports.push((format!("{}theta", sign_label(positive)), rep));
    }
    agree(&reports)?;
    Ok(reports.swap_remove(0).1)
}

// ---------------------------------------------------------------- (2,3,5)

/// Reading of the `X_i`-derivative terms in `Y_2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Y2Reading {
    /// Differentiates `c_25^4 + c_25^5`.
    Verbatim,
    /// Differentiates `c_24^4 + c_25^5`, mirroring `Y_1`.
    Symmetric,
}

/// Canonical data for growth (2,3,5).
#[derive(Clone, Debug)]
pub struct G235Data {
    /// `(X_1, …, X_5)` with `X_3 = [X_1, X_2]`, `X_4 = [X_1, X_3]`, `X_5 = [X_2, X_3]`.
    pub bracket_frame: Arc<Frame>,
    pub z: VectorField,
    pub y1: VectorField,
    pub y2: VectorField,
    /// `(X_1, X_2 | Z | Y_1, Y_2)`, orthonormal for the extended metric.
    pub graded: GradedFrame,
    pub warnings: Vec<String>,
}

impl G235Data {
    /// `c_ij^k` with 1-based indices.
    pub fn c(&self, i: usize, j: usize, k: usize) -> &Expr {
        self.bracket_frame.b(i - 1, j - 1, k - 1)
    }

    pub fn transcript(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for i in 1..=5 {
            for j in i + 1..=5 {
                for k in 1..=5 {
                    let v = self.c(i, j, k);
                    if !v.is_zero() {
                        out.push((format!("c_{i}{j}^{k}"), v.to_string()));
                    }
                }
            }
        }
        out.push(("Z".into(), self.z.to_string()));
        out.push(("Y_1".into(), self.y1.to_string()));
        out.push(("Y_2".into(), self.y2.to_string()));
        out
    }
}

pub fn g235_canonical_data(sr: &SubRiemannian, reading: Y2Reading) -> Result<G235Data, FlatnessError> {
    if sr.rank() != 2 || sr.dim() != 5 {
        return Err(FlatnessError::Shape { expected: "2".into(), got: sr.rank(), dim: sr.dim() });
    }
    let space = sr.space().clone();
    let x1 = sr.frame()[0].clone();
    let x2 = sr.frame()[1].clone();
    let x3 = x1.bracket(&x2)?;
    let x4 = x1.bracket(&x3)?;
    let x5 = x2.bracket(&x3)?;
    let frame = Arc::new(
        Frame::new(vec![x1.clone(), x2.clone(), x3.clone(), x4.clone(), x5.clone()])
            .map_err(|_| FlatnessError::Degenerate("X_1, ..., X_5 do not form a frame".into()))?,
    );
    let c = |i: usize, j: usize, k: usize| frame.b(i - 1, j - 1, k - 1).clone();
    let s1 = &c(1, 4, 4) + &c(1, 5, 5);
    let s2 = &c(2, 4, 4) + &c(2, 5, 5);
    let basis = [x1.clone(), x2.clone(), x3.clone(), x4, x5];

    let z = VectorField::combine(
        &space,
        &[Expr::int(1), &c(2, 3, 3) + &s2, -&(&c(1, 3, 3) + &s1)],
        &[basis[2].clone(), x1.clone(), x2.clone()],
    );
    let y_field = |lead: usize, s_lead: &Expr, row1: usize, row2: usize, diff: &Expr| {
        let a = &(&(&c(row1, lead, 3) - &x2.apply(diff)) + &(&c(row1, lead, 4) * &s1)) + &(&c(row1, lead, 5) * &s2);
        let b = &(&(&c(row2, lead, 3) - &x1.apply(diff)) + &(&c(row2, lead, 4) * &s1)) + &(&c(row2, lead, 5) * &s2);
        VectorField::combine(
            &space,
            &[Expr::int(1), -s_lead, a, -&b],
            &[basis[lead - 1].clone(), basis[2].clone(), x1.clone(), x2.clone()],
        )
    };
    // Y_1 = X_4 − s_1 X_3 + (c_24^3 − X_2 s_1 + c_24^4 s_1 + c_24^5 s_2) X_1 − (c_14^3 − X_1 s_1 + …) X_2.
    let y1 = y_field(4, &s1, 2, 1, &s1);
    let verbatim_diff = &c(2, 5, 4) + &c(2, 5, 5);
    let y2_verbatim = y_field(5, &s2, 2, 1, &verbatim_diff);
    let y2_symmetric = y_field(5, &s2, 2, 1, &s2);
    let mut warnings = Vec::new();
    let differ = y2_verbatim.sub(&y2_symmetric);
    if !differ.is_zero() {
        warnings.push(format!(
            "the two readings of Y_2 differ by {differ}; using the {} reading",
            match reading {
                Y2Reading::Verbatim => "verbatim",
                Y2Reading::Symmetric => "symmetric",
            }
        ));
    }
    let y2 = match reading {
        Y2Reading::Verbatim => y2_verbatim,
        Y2Reading::Symmetric => y2_symmetric,
    };
    let graded = GradedFrame::new(
        vec![x1, x2, z.clone(), y1.clone(), y2.clone()],
        &["X_1", "X_2", "Z", "Y_1", "Y_2"],
        &[2, 1, 2],
    )
    .map_err(|_| FlatnessError::Degenerate("X_1, X_2, Z, Y_1, Y_2 do not form a frame".into()))?;
    Ok(G235Data { bracket_frame: frame, z, y1, y2, graded, warnings })
}

/// Connection preserving `E ⊕ V_2 ⊕ V_3`, with `∇Z = 0`, Levi-Civita along
/// `E` and Lie-derivative rules along `Z`, `Y_1`, `Y_2`. The `Y`-layer uses the
/// same coefficients as the `X`-layer.
pub fn g235_connection(data: &G235Data) -> FrameConnection {
    let frame = data.graded.frame.clone();
    let lc = FrameConnection::levi_civita_orthonormal(frame.clone());
    let half = Expr::frac(1, 2);
    let mut gamma: Tensor3 = vec![vec![vec![Expr::zero(); 5]; 5]; 5];
    for i in 0..5 {
        for j in 0..2 {
            for k in 0..2 {
                let v = if i < 2 {
                    lc.gamma[i][j][k].clone()
                } else {
                    // ⟨[E_i, X_j], X_k⟩ + ½ (L_{E_i} ḡ)(X_j, X_k) on an orthonormal frame.
                    &(frame.b(i, j, k) - frame.b(i, k, j)) * &half
                };
                gamma[i][3 + j][3 + k] = v.clone();
                gamma[i][j][k] = v;
            }
        }
    }
    FrameConnection { frame, gamma }
}

/// Certifies growth (2,3,5): zero curvature and torsion whose only
/// components are `T(X_2, X_1) = Z`, `T(Z, X_1) = Y_1`, `T(Z, X_2) = Y_2`.
pub fn g235_flatness(sr: &SubRiemannian, config: &SampleConfig) -> Result<FlatnessReport, FlatnessError> {
    g235_flatness_with(sr, Y2Reading::Verbatim, config)
}

pub fn g235_flatness_with(
    sr: &SubRiemannian,
    reading: Y2Reading,
    config: &SampleConfig,
) -> Result<FlatnessReport, FlatnessError> {
    check_growth(sr, &[2, 3, 5], config)?;
    let data = g235_canonical_data(sr, reading)?;
    let conn = g235_connection(&data);
    let model = ModelTorsion::from_algebra(&free235_model());
    let target = |i: usize, j: usize, k: usize| Expr::constant(model.get(i, j, k).clone());
    certify(&conn, &target, &data.graded.names, config, data.transcript(), data.warnings.clone())
}

/// Largest difference between the orthogonal projectors onto the spans of
/// two field families at a point (0 when the spans agree).
pub fn span_distance(a: &[VectorField], b: &[VectorField], p: &Point) -> Result<f64, FlatnessError> {
    let proj = |fields: &[VectorField]| -> Result<Matrix<f64>, FlatnessError> {
        let cols = fields.iter().map(|f| f.eval(p)).collect::<Result<Vec<_>, _>>()?;
        let m = Matrix::from_columns(&cols);
        let gram = &m.transpose() * &m;
        let inv = gram.inverse().ok_or_else(|| FlatnessError::Degenerate("dependent fields".into()))?;
        Ok(&(&m * &inv) * &m.transpose())
    };
    Ok(proj(a)?.sub(&proj(b)?).max_abs())
}

/// Verdict of a report, for tests comparing runs.
pub fn verdict_of(r: &Result<FlatnessReport, FlatnessError>) -> Option<Verdict> {
    r.as_ref().ok().map(|rep| rep.verdict)
}

/// Rotates a horizontal pair by the rotation with cosine `c` and sine `s`.
pub fn rotate_pair(x1: &VectorField, x2: &VectorField, c: &Rational, s: &Rational) -> (VectorField, VectorField) {
    let space = x1.space().clone();
    let (ce, se) = (Expr::constant(c.clone()), Expr::constant(s.clone()));
    let r1 = VectorField::combine(&space, &[ce.clone(), se.clone()], &[x1.clone(), x2.clone()]);
    let r2 = VectorField::combine(&space, &[-&se, ce], &[x1.clone(), x2.clone()]);
    (r1, r2)
}
