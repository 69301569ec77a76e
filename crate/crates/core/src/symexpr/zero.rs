//! Seeded sampling of chart points and the zero decision procedure.

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::expr::Expr;
use super::{Chart, ExprError};
use crate::scalar::{rational_to_f64, Rational};

/// Sampling parameters for numeric decisions.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleConfig {
    pub samples: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig { samples: 32, tol: 1e-9, seed: 0 }
    }
}

/// A chart point with exact rational coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub exact: Vec<Rational>,
    pub float: Vec<f64>,
}

impl Point {
    pub fn new(exact: Vec<Rational>) -> Point {
        let float = exact.iter().map(|q| rational_to_f64(q).unwrap_or(f64::NAN)).collect();
        Point { exact, float }
    }

    pub fn dim(&self) -> usize {
        self.exact.len()
    }
}

impl std::fmt::Display for Point {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, q) in self.exact.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{q}")?;
        }
        write!(f, ")")
    }
}

/// Denominator of sampled coordinates; coordinates are `k/997` in `[-2, 2]`.
const SAMPLE_DEN: i64 = 997;

/// Deterministic stream of points satisfying the chart constraints.
pub struct Sampler<'a> {
    chart: &'a Chart,
    rng: ChaCha8Rng,
}

impl<'a> Sampler<'a> {
    pub fn new(chart: &'a Chart, seed: u64) -> Self {
        Sampler { chart, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    fn raw(&mut self) -> Point {
        let exact = (0..self.chart.dim())
            .map(|_| {
                let k: i64 = self.rng.gen_range(-2 * SAMPLE_DEN..=2 * SAMPLE_DEN);
                Rational::new(BigInt::from(k), BigInt::from(SAMPLE_DEN))
            })
            .collect();
        Point::new(exact)
    }

    /// Next candidate, or `None` if it violates a constraint.
    pub fn candidate(&mut self) -> Option<Point> {
        let p = self.raw();
        self.chart.contains(&p).then_some(p)
    }

    /// Collects `n` points on which every `exprs` entry evaluates, within `100 n` draws.
    pub fn points(&mut self, n: usize, exprs: &[&Expr]) -> Result<Vec<Point>, ExprError> {
        let mut out = Vec::with_capacity(n);
        let budget = 100 * n.max(1);
        for _ in 0..budget {
            if out.len() == n {
                break;
            }
            let Some(p) = self.candidate() else { continue };
            if exprs.iter().all(|e| e.eval(&p.float).is_ok()) {
                out.push(p);
            }
        }
        if out.len() < n {
            return Err(ExprError::Sampling { wanted: n, attempts: budget });
        }
        Ok(out)
    }
}

/// Result of deciding whether an expression vanishes identically.
#[derive(Clone, Debug, PartialEq)]
pub enum ZeroVerdict {
    ProvenZero,
    ProvenNonZero { witness: Point, value: Rational },
    NumericallyZero { samples: usize, max_abs: f64 },
    NumericallyNonZero { witness: Point, value: f64 },
}

impl ZeroVerdict {
    pub fn is_zero(&self) -> bool {
        matches!(self, ZeroVerdict::ProvenZero | ZeroVerdict::NumericallyZero { .. })
    }

    pub fn is_proven(&self) -> bool {
        matches!(self, ZeroVerdict::ProvenZero | ZeroVerdict::ProvenNonZero { .. })
    }
}

/// Decides whether `e` vanishes on the chart domain.
///
/// Canonical zero is a proof. A nonzero rational function is certified by an
/// exact witness. Expressions with transcendental atoms are sampled.
pub fn is_zero(e: &Expr, chart: &Chart, config: &SampleConfig) -> Result<ZeroVerdict, ExprError> {
    if e.is_zero_canonical() {
        return Ok(ZeroVerdict::ProvenZero);
    }
    let mut sampler = Sampler::new(chart, config.seed);
    if e.is_rational() {
        let budget = 100 * config.samples.max(1);
        for _ in 0..budget {
            let Some(p) = sampler.candidate() else { continue };
            if let Ok(v) = e.eval_exact(&p.exact) {
                if !num_traits::Zero::is_zero(&v) {
                    return Ok(ZeroVerdict::ProvenNonZero { witness: p, value: v });
                }
            }
        }
        return Err(ExprError::Sampling { wanted: 1, attempts: budget });
    }
    let points = sampler.points(config.samples, &[e])?;
    let mut max_abs: f64 = 0.0;
    let mut worst: Option<(Point, f64, f64)> = None;
    for p in points {
        let v = e.eval(&p.float).expect("sampled points evaluate");
        let scale = e.envelope(&p.float).max(1.0);
        let ratio = v.abs() / scale;
        max_abs = max_abs.max(v.abs());
        if ratio > config.tol && worst.as_ref().is_none_or(|(_, _, r)| ratio > *r) {
            worst = Some((p, v, ratio));
        }
    }
    Ok(match worst {
        Some((witness, value, _)) => ZeroVerdict::NumericallyNonZero { witness, value },
        None => ZeroVerdict::NumericallyZero { samples: config.samples, max_abs },
    })
}
