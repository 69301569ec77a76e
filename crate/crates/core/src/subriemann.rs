//! Bracket flags, growth vectors, equiregularity and symbols of
//! sub-Riemannian structures given by an orthonormal horizontal frame.
//!
//! Bracket words are right-nested: `[i, j, k]` is `[X_i, [X_j, X_k]]`. Words
//! are enumerated by length and then lexicographically; when choosing an
//! adapted basis at a point the first independent word wins.

use std::fmt;
use std::sync::{Arc, Mutex};

use num_traits::Zero;
use thiserror::Error;

use crate::carnot::CarnotError;
use crate::geometry::{GeometryError, Mode, Space, VectorField, INDEPENDENCE_TOL};
use crate::linalg::Matrix;
use crate::scalar::Rational;
use crate::symexpr::{ExprError, Point, SampleConfig};
use crate::{CarnotAlgebra, FloatCarnotAlgebra};

/// Offset of the local cloud used to check equiregularity near a point.
pub const CLOUD_OFFSET: (i64, i64) = (1, 100);

/// Relative tolerance when comparing contact spectra between points.
pub const SPECTRUM_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum SubRiemannError {
    #[error("a horizontal frame needs at least one field")]
    EmptyFrame,
    #[error("horizontal frame has {rank} fields in dimension {dim}")]
    TooManyFields { rank: usize, dim: usize },
    #[error("horizontal frame is not independent at {0}")]
    FrameRank(String),
    #[error("not bracket-generating at {point}: flag ranks {ranks:?}")]
    NotBracketGenerating { point: String, ranks: Vec<usize> },
    #[error("growth vector changes near {point}: {here:?} versus {nearby:?} at {other}")]
    NotEquiregular { point: String, here: Vec<usize>, other: String, nearby: Vec<usize> },
    #[error("symbol is not a valid stratified algebra: {0}")]
    InvalidSymbol(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Carnot(#[from] CarnotError),
}

/// Right-nested bracket word over the frame indices.
pub type Word = Vec<usize>;

/// Renders a word with the given generator names.
pub fn word_name(word: &[usize], names: &[String]) -> String {
    match word {
        [] => String::new(),
        [i] => names[*i].clone(),
        [i, rest @ ..] => format!("[{},{}]", names[*i], word_name(rest, names)),
    }
}

/// Distribution spanned by an orthonormal frame.
pub struct SubRiemannian {
    space: Arc<Space>,
    frame: Vec<VectorField>,
    names: Vec<String>,
    max_step: usize,
    /// `levels[k]` holds the nonzero words of length `k + 1`.
    levels: Mutex<Vec<Vec<(Word, VectorField)>>>,
}

impl fmt::Debug for SubRiemannian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SubRiemannian").field("frame", &self.frame).field("max_step", &self.max_step).finish()
    }
}

impl SubRiemannian {
    pub fn new(frame: Vec<VectorField>) -> Result<Self, SubRiemannError> {
        let Some(first) = frame.first() else { return Err(SubRiemannError::EmptyFrame) };
        let space = first.space().clone();
        if frame.iter().any(|f| !Arc::ptr_eq(f.space(), &space)) {
            return Err(GeometryError::ModeMismatch.into());
        }
        let dim = space.dim();
        if frame.len() > dim {
            return Err(SubRiemannError::TooManyFields { rank: frame.len(), dim });
        }
        let names = (1..=frame.len()).map(|i| format!("X{i}")).collect();
        let level1 = frame.iter().enumerate().map(|(i, f)| (vec![i], f.clone())).collect();
        Ok(SubRiemannian { space, frame, names, max_step: dim + 2, levels: Mutex::new(vec![level1]) })
    }

    /// Renames the frame fields used in word names.
    pub fn with_names(mut self, names: &[&str]) -> Self {
        assert_eq!(names.len(), self.frame.len(), "one name per frame field");
        self.names = names.iter().map(|s| s.to_string()).collect();
        self
    }

    /// Longest bracket word considered before declaring the flag stalled.
    pub fn with_max_step(mut self, max_step: usize) -> Self {
        self.max_step = max_step.max(1);
        self
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    pub fn frame(&self) -> &[VectorField] {
        &self.frame
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn rank(&self) -> usize {
        self.frame.len()
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    /// Nonzero words of length `k` with their fields.
    pub fn level(&self, k: usize) -> Result<Vec<(Word, VectorField)>, SubRiemannError> {
        let mut levels = self.levels.lock().expect("level cache poisoned");
        while levels.len() < k {
            let prev = levels.last().expect("level one is always present");
            let mut next = Vec::new();
            for (i, x) in self.frame.iter().enumerate() {
                for (w, f) in prev {
                    if w.len() == 1 && w[0] == i {
                        continue;
                    }
                    let b = x.bracket(f)?;
                    if !b.is_zero() {
                        let mut word = vec![i];
                        word.extend(w);
                        next.push((word, b));
                    }
                }
            }
            levels.push(next);
        }
        Ok(levels[k - 1].clone())
    }

    /// Seeded sample points in the chart domain where the frame is defined.
    pub fn sample_points(&self, config: &SampleConfig) -> Result<Vec<Point>, SubRiemannError> {
        let exprs: Vec<_> = self.frame.iter().flat_map(|f| f.comps().iter()).collect();
        Ok(self.space.sample_points(config, &exprs)?)
    }

    /// Flag `E ⊆ E^2 ⊆ …` at a point, by exact elimination when every
    /// bracket evaluates to rationals and by singular values otherwise.
    pub fn flag_at_point(&self, p: &Point) -> Result<FlagAtPoint, SubRiemannError> {
        match self.flag_impl(p, true)? {
            Some(flag) => Ok(flag),
            None => Ok(self.flag_impl(p, false)?.expect("float evaluation always succeeds")),
        }
    }

    fn flag_impl(&self, p: &Point, exact: bool) -> Result<Option<FlagAtPoint>, SubRiemannError> {
        let n = self.dim();
        let mut words: Vec<Vec<Word>> = Vec::new();
        let mut fields = Vec::new();
        let mut exact_vecs: Vec<Vec<Rational>> = Vec::new();
        let mut float_vecs: Vec<Vec<f64>> = Vec::new();
        let mut ranks = Vec::new();
        for k in 1..=self.max_step {
            let level = self.level(k)?;
            if level.is_empty() {
                break;
            }
            let mut layer = Vec::new();
            for (w, f) in level {
                if exact_vecs.len() == n || float_vecs.len() == n {
                    break;
                }
                let fv = f.eval(p)?;
                let independent = if exact {
                    let Some(ev) = f.eval_exact(p) else { return Ok(None) };
                    let mut cols = exact_vecs.clone();
                    cols.push(ev.clone());
                    let ok = Matrix::from_columns(&cols).rank() == cols.len();
                    if ok {
                        exact_vecs.push(ev);
                    }
                    ok
                } else {
                    let mut cols = float_vecs.clone();
                    cols.push(fv.clone());
                    Matrix::from_columns(&cols).numeric_rank(INDEPENDENCE_TOL) == cols.len()
                };
                if independent {
                    float_vecs.push(fv);
                    fields.push(f);
                    layer.push(w);
                }
            }
            if k == 1 && layer.len() < self.rank() {
                return Err(SubRiemannError::FrameRank(p.to_string()));
            }
            words.push(layer);
            ranks.push(float_vecs.len());
            if float_vecs.len() == n {
                return Ok(Some(FlagAtPoint {
                    point: p.clone(),
                    ranks,
                    words,
                    fields,
                    exact: exact.then_some(exact_vecs),
                    float: float_vecs,
                }));
            }
        }
        Err(SubRiemannError::NotBracketGenerating { point: p.to_string(), ranks })
    }

    pub fn growth_vector(&self, p: &Point) -> Result<Vec<usize>, SubRiemannError> {
        Ok(self.flag_at_point(p)?.ranks)
    }

    /// Groups points by growth vector.
    pub fn equiregular_check(&self, points: &[Point]) -> Result<EquiregularReport, SubRiemannError> {
        let mut classes: Vec<(Vec<usize>, Vec<Point>)> = Vec::new();
        for p in points {
            let g = self.growth_vector(p)?;
            match classes.iter_mut().find(|(c, _)| *c == g) {
                Some((_, pts)) => pts.push(p.clone()),
                None => classes.push((g, vec![p.clone()])),
            }
        }
        Ok(EquiregularReport { classes })
    }

    /// Points at `x ± 1/100` along each coordinate that lie in the domain.
    fn cloud(&self, p: &Point) -> Vec<Point> {
        if self.space.mode() == Mode::ConstantStructure {
            return Vec::new();
        }
        let h = Rational::new(CLOUD_OFFSET.0.into(), CLOUD_OFFSET.1.into());
        let mut out = Vec::new();
        for i in 0..p.dim() {
            for sign in [1, -1] {
                let mut q = p.exact.clone();
                q[i] += if sign > 0 { h.clone() } else { -h.clone() };
                let q = Point::new(q);
                if self.space.chart().contains(&q) {
                    out.push(q);
                }
            }
        }
        out
    }

    /// Nilpotentization at `p`: the graded algebra of flag quotients with the
    /// bracket induced by brackets of adapted words modulo lower layers.
    pub fn symbol_at_point(&self, p: &Point) -> Result<SymbolAlgebra, SubRiemannError> {
        let flag = self.flag_at_point(p)?;
        for q in self.cloud(p) {
            let g = match self.growth_vector(&q) {
                Ok(g) => g,
                Err(SubRiemannError::Expr(_)) => continue,
                Err(e) => return Err(e),
            };
            if g != flag.ranks {
                return Err(SubRiemannError::NotEquiregular {
                    point: p.to_string(),
                    here: flag.ranks.clone(),
                    other: q.to_string(),
                    nearby: g,
                });
            }
        }
        let words: Vec<Word> = flag.words.iter().flatten().cloned().collect();
        let weights: Vec<usize> =
            flag.words.iter().enumerate().flat_map(|(k, l)| std::iter::repeat_n(k + 1, l.len())).collect();
        let strata: Vec<usize> = flag.words.iter().map(Vec::len).collect();
        let names: Vec<String> = words.iter().map(|w| word_name(w, &self.names)).collect();
        let n = words.len();
        let step = strata.len();
        let float_basis = Matrix::from_columns(&flag.float);
        let exact_basis = flag.exact.as_ref().map(|v| Matrix::from_columns(v));
        let mut exact_brackets = Vec::new();
        let mut float_brackets = Vec::new();
        let mut exact_ok = exact_basis.is_some();
        for a in 0..n {
            for b in a + 1..n {
                let w = weights[a] + weights[b];
                if w > step {
                    continue;
                }
                let field = flag.fields[a].bracket(&flag.fields[b])?;
                let target = (0..n).filter(|&k| weights[k] == w);
                if exact_ok {
                    match (field.eval_exact(p), &exact_basis) {
                        (Some(v), Some(m)) => {
                            let c = m.solve(&v).expect("adapted basis is invertible");
                            for k in target.clone() {
                                if !c[k].is_zero() {
                                    exact_brackets.push((a, b, k, c[k].clone()));
                                }
                            }
                        }
                        _ => exact_ok = false,
                    }
                }
                let v = field.eval(p)?;
                let c = float_basis.solve(&v).expect("adapted basis is invertible");
                for k in target {
                    if c[k].abs() > INDEPENDENCE_TOL {
                        float_brackets.push((a, b, k, c[k]));
                    }
                }
            }
        }
        let m = strata[0];
        let numeric = FloatCarnotAlgebra::new(names.clone(), strata.clone(), &float_brackets, Matrix::identity(m))?;
        let exact = if exact_ok {
            Some(CarnotAlgebra::new(names, strata, &exact_brackets, Matrix::identity(m))?)
        } else {
            None
        };
        Ok(SymbolAlgebra { point: p.clone(), words, exact, numeric })
    }

    /// Decides constant symbol for the supported growth classes.
    pub fn constant_symbol_check(&self, points: &[Point]) -> Result<ConstantSymbolReport, SubRiemannError> {
        let eq = self.equiregular_check(points)?;
        if !eq.is_equiregular() {
            let (first, rest) = (&eq.classes[0], &eq.classes[1]);
            return Err(SubRiemannError::NotEquiregular {
                point: first.1[0].to_string(),
                here: first.0.clone(),
                other: rest.1[0].to_string(),
                nearby: rest.0.clone(),
            });
        }
        let growth = eq.classes.first().map(|c| c.0.clone()).unwrap_or_default();
        let n = self.dim();
        let k = self.rank();
        let class = if growth == [2, 3, 4] {
            SymbolClass::Engel
        } else if growth == [2, 3, 5] {
            SymbolClass::Cartan
        } else if k.is_multiple_of(2) && n == k + 1 && growth == [k, n] {
            SymbolClass::Contact { half_rank: k / 2 }
        } else {
            SymbolClass::Other
        };
        let mut details = Vec::new();
        let constant = match class {
            SymbolClass::Engel | SymbolClass::Cartan => Some(true),
            SymbolClass::Contact { .. } => {
                let mut spectra = Vec::new();
                for p in points {
                    let sym = self.symbol_at_point(p)?;
                    match contact_spectrum(&sym.contact_form()) {
                        Some(s) => {
                            details.push(format!("lambda at {p}: {s:?}"));
                            spectra.push(s);
                        }
                        None => {
                            details.push(format!("degenerate bracket form at {p}"));
                            spectra.clear();
                            break;
                        }
                    }
                }
                if spectra.is_empty() {
                    None
                } else {
                    let first = &spectra[0];
                    Some(spectra.iter().all(|s| {
                        s.iter().zip(first).all(|(a, b)| (a - b).abs() <= SPECTRUM_TOL * a.abs().max(b.abs()).max(1.0))
                    }))
                }
            }
            SymbolClass::Other => {
                for p in points {
                    let sym = self.symbol_at_point(p)?;
                    details.push(format!("structure at {p}: {:?}", sym.numeric.nonzero_brackets()));
                }
                None
            }
        };
        Ok(ConstantSymbolReport { growth, class, constant, details })
    }
}

/// Flag at a point together with the adapted basis that realizes it.
#[derive(Clone, Debug)]
pub struct FlagAtPoint {
    pub point: Point,
    /// Growth vector `(rank E^1, rank E^2, …)`.
    pub ranks: Vec<usize>,
    /// Adapted words introduced at each layer.
    pub words: Vec<Vec<Word>>,
    /// Fields of the adapted words, in order.
    pub fields: Vec<VectorField>,
    /// Exact values of the adapted basis when every bracket was rational.
    pub exact: Option<Vec<Vec<Rational>>>,
    pub float: Vec<Vec<f64>>,
}

impl FlagAtPoint {
    pub fn step(&self) -> usize {
        self.ranks.len()
    }
}

/// Sample points grouped by growth vector.
#[derive(Clone, Debug)]
pub struct EquiregularReport {
    pub classes: Vec<(Vec<usize>, Vec<Point>)>,
}

impl EquiregularReport {
    pub fn is_equiregular(&self) -> bool {
        self.classes.len() <= 1
    }
}

/// Symbol at a point and the adapted basis realizing it.
#[derive(Clone, Debug)]
pub struct SymbolAlgebra {
    pub point: Point,
    pub words: Vec<Word>,
    /// Exact structure constants, when every bracket evaluated rationally.
    pub exact: Option<CarnotAlgebra>,
    pub numeric: FloatCarnotAlgebra,
}

impl SymbolAlgebra {
    /// Bracket form `ω(X_a, X_b) = <⟦X_a, X_b⟧, first stratum-2 vector>` on
    /// the horizontal layer.
    pub fn contact_form(&self) -> Matrix<f64> {
        let alg = &self.numeric;
        let m = alg.strata()[0];
        if alg.step() < 2 {
            return Matrix::zeros(m, m);
        }
        let z = alg.stratum_range(2).start;
        Matrix::from_fn(m, m, |a, b| alg.constant(a, b, z))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymbolClass {
    /// Growth `(2, 3, 4)`.
    Engel,
    /// Growth `(2, 3, 5)`.
    Cartan,
    /// Corank-one distribution of rank `2n` in dimension `2n + 1`.
    Contact {
        half_rank: usize,
    },
    Other,
}

impl fmt::Display for SymbolClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymbolClass::Engel => f.write_str("engel (2,3,4)"),
            SymbolClass::Cartan => f.write_str("cartan (2,3,5)"),
            SymbolClass::Contact { half_rank } => write!(f, "contact (rank {})", 2 * half_rank),
            SymbolClass::Other => f.write_str("other"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConstantSymbolReport {
    pub growth: Vec<usize>,
    pub class: SymbolClass,
    /// `None` when the class is not decidable here.
    pub constant: Option<bool>,
    pub details: Vec<String>,
}

/// Normalized spectrum `1 = λ_1 ≤ … ≤ λ_n` of a nondegenerate skew form
/// `ω` on `ℝ^{2n}` given in an orthonormal basis: the singular values `μ_j`
/// of `ω` come in pairs and `λ_j = μ_max / μ_j`. `None` if `ω` is degenerate.
pub fn contact_spectrum(omega: &Matrix<f64>) -> Option<Vec<f64>> {
    let m = omega.rows();
    if m == 0 || m % 2 == 1 {
        return None;
    }
    let gram = &omega.transpose() * omega;
    let eig = gram.symmetric_eigenvalues();
    let max = eig.last().copied().unwrap_or(0.0);
    if max <= 0.0 || eig[0] <= INDEPENDENCE_TOL * max {
        return None;
    }
    let mu_max = max.sqrt();
    let mut lambda: Vec<f64> = eig.iter().step_by(2).map(|e| mu_max / e.sqrt()).collect();
    lambda.sort_by(|a, b| a.partial_cmp(b).expect("finite spectrum"));
    Some(lambda)
}
