//! Stratified nilpotent Lie algebras: validation, free nilpotent algebras,
//! the truncated Baker-Campbell-Hausdorff product, dilations, graded
//! isometries, the extended inner product and the Spencer complex.
//!
//! Elements are coordinate vectors in the stored basis. The basis is ordered
//! by stratum, so weights are non-decreasing.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::linalg::Matrix;
use crate::scalar::{Rational, Scalar};

/// Largest dimension accepted by [`StratifiedAlgebra::free_nilpotent`].
pub const FREE_DIMENSION_CAP: usize = 1000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CarnotError {
    #[error("{names} basis names for strata of total dimension {dim}")]
    Shape { names: usize, dim: usize },
    #[error("strata must be non-empty and each stratum positive-dimensional")]
    EmptyStratum,
    #[error("basis index {0} out of range")]
    Index(usize),
    #[error("inner product on the first stratum must be {expected}x{expected}, got {rows}x{cols}")]
    GramShape { expected: usize, rows: usize, cols: usize },
    #[error("structure table has {got} entries, expected {expected}")]
    TableShape { expected: usize, got: usize },
    #[error("free nilpotent algebra on {m} generators of step {s} exceeds dimension {cap}")]
    TooLarge { m: usize, s: usize, cap: usize },
    #[error("free nilpotent algebra needs at least 2 generators and step at least 1")]
    FreeParameters,
    #[error("stratum {0} is not spanned by brackets of lower strata")]
    Degenerate(usize),
    #[error("inner product is not invertible")]
    Singular,
}

/// Outcome of one structural check.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub failure: Option<String>,
}

/// Pass/fail per structural identity of a stratified algebra.
#[derive(Clone, Debug, PartialEq)]
pub struct Validation {
    pub checks: Vec<CheckOutcome>,
}

impl Validation {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.failure.is_none())
    }

    pub fn failed(&self, name: &str) -> bool {
        self.checks.iter().any(|c| c.name == name && c.failure.is_some())
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| c.failure.is_some())
    }
}

/// Graded Lie algebra `g_1 ⊕ … ⊕ g_s` with an inner product on `g_1`.
#[derive(Clone, Debug, PartialEq)]
pub struct StratifiedAlgebra<T> {
    names: Vec<String>,
    strata: Vec<usize>,
    weights: Vec<usize>,
    /// `table[i * n + j]` lists the nonzero `(k, c_ij^k)`.
    table: Vec<Vec<(usize, T)>>,
    gram: Matrix<T>,
}

fn add_into<T: Scalar>(acc: &mut [T], v: &[T], c: &T) {
    for (a, x) in acc.iter_mut().zip(v) {
        if !x.is_zero() {
            *a = a.clone() + c.clone() * x.clone();
        }
    }
}

fn vadd<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(x, y)| x.clone() + y.clone()).collect()
}

fn vsub<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(x, y)| x.clone() - y.clone()).collect()
}

fn vscale<T: Scalar>(a: &[T], c: &T) -> Vec<T> {
    a.iter().map(|x| x.clone() * c.clone()).collect()
}

fn ratio<T: Scalar>(p: i64, q: i64) -> T {
    T::from_rational(&Rational::new(BigInt::from(p), BigInt::from(q)))
}

fn factorial(n: usize) -> Rational {
    (1..=n).fold(Rational::one(), |acc, k| acc * Rational::from_integer(BigInt::from(k)))
}

/// Bernoulli numbers `B_0..=B_n` with `B_1 = -1/2`.
fn bernoulli(n: usize) -> Vec<Rational> {
    let mut b = vec![Rational::one()];
    for m in 1..=n {
        let mut acc = Rational::zero();
        let mut binom = BigInt::one();
        for (k, bk) in b.iter().enumerate() {
            acc += Rational::from_integer(binom.clone()) * bk;
            binom = binom * BigInt::from(m + 1 - k) / BigInt::from(k + 1);
        }
        b.push(-acc / Rational::from_integer(BigInt::from(m + 1)));
    }
    b
}

/// All ordered tuples of `parts` positive integers summing to `total`.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 0 {
        return if total == 0 { vec![Vec::new()] } else { Vec::new() };
    }
    let mut out = Vec::new();
    for first in 1..=total.saturating_sub(parts - 1) {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

impl<T: Scalar> StratifiedAlgebra<T> {
    /// Builds an algebra from the brackets `[e_i, e_j] = Σ c e_k` listed as
    /// `(i, j, k, c)` for `i < j` or `i > j`; the antisymmetric partner is
    /// filled in.
    pub fn new(
        names: Vec<String>,
        strata: Vec<usize>,
        brackets: &[(usize, usize, usize, T)],
        gram: Matrix<T>,
    ) -> Result<Self, CarnotError> {
        let n: usize = strata.iter().sum();
        let mut dense = vec![T::zero(); n * n * n];
        for (i, j, k, c) in brackets {
            for &idx in [i, j, k] {
                if idx >= n {
                    return Err(CarnotError::Index(idx));
                }
            }
            dense[(i * n + j) * n + k] = c.clone();
            dense[(j * n + i) * n + k] = -c.clone();
        }
        Self::from_constants(names, strata, dense, gram)
    }

    /// Builds an algebra from a dense table `c[(i * n + j) * n + k]` taken
    /// verbatim, without enforcing antisymmetry.
    pub fn from_constants(
        names: Vec<String>,
        strata: Vec<usize>,
        dense: Vec<T>,
        gram: Matrix<T>,
    ) -> Result<Self, CarnotError> {
        if strata.is_empty() || strata.contains(&0) {
            return Err(CarnotError::EmptyStratum);
        }
        let n: usize = strata.iter().sum();
        if names.len() != n {
            return Err(CarnotError::Shape { names: names.len(), dim: n });
        }
        if dense.len() != n * n * n {
            return Err(CarnotError::TableShape { expected: n * n * n, got: dense.len() });
        }
        if gram.rows() != strata[0] || gram.cols() != strata[0] {
            return Err(CarnotError::GramShape { expected: strata[0], rows: gram.rows(), cols: gram.cols() });
        }
        let weights = strata.iter().enumerate().flat_map(|(w, &d)| std::iter::repeat_n(w + 1, d)).collect();
        let table = (0..n * n)
            .map(|ij| {
                (0..n)
                    .filter_map(|k| {
                        let c = &dense[ij * n + k];
                        (!c.is_zero()).then(|| (k, c.clone()))
                    })
                    .collect()
            })
            .collect();
        Ok(StratifiedAlgebra { names, strata, weights, table, gram })
    }

    /// Abelian algebra of dimension `n` with a single stratum.
    pub fn abelian(n: usize) -> Result<Self, CarnotError> {
        let names = (1..=n).map(|i| format!("e{i}")).collect();
        Self::new(names, vec![n], &[], Matrix::identity(n))
    }

    /// `h_n(λ)`: `[X_j, Y_j] = Z` with `|X_j| = |Y_j| = λ_j`.
    pub fn heisenberg(lambda: &[Rational]) -> Result<Self, CarnotError> {
        let n = lambda.len();
        let mut names: Vec<String> = (1..=n).map(|j| format!("X{j}")).collect();
        names.extend((1..=n).map(|j| format!("Y{j}")));
        names.push("Z".into());
        let brackets: Vec<_> = (0..n).map(|j| (j, n + j, 2 * n, T::one())).collect();
        let diag: Vec<T> = lambda.iter().chain(lambda).map(|l| T::from_rational(&(l * l))).collect();
        Self::new(names, vec![2 * n, 1], &brackets, Matrix::diagonal(&diag))
    }

    /// Engel algebra: `[X, Y] = Z`, `[X, Z] = W`, orthonormal `X, Y`.
    pub fn engel() -> Self {
        let names = ["X", "Y", "Z", "W"].iter().map(|s| s.to_string()).collect();
        Self::new(names, vec![2, 1, 1], &[(0, 1, 2, T::one()), (0, 2, 3, T::one())], Matrix::identity(2))
            .expect("Engel table is well formed")
    }

    /// Free nilpotent algebra on `m` generators of step `s`.
    ///
    /// The basis is the Lyndon basis: Lyndon words over `a < b < …` ordered by
    /// length and then lexicographically, each realized by its standard
    /// bracketing (split off the longest proper Lyndon suffix). The stratum-1
    /// inner product is the identity.
    pub fn free_nilpotent(m: usize, s: usize) -> Result<Self, CarnotError> {
        if m < 2 || s < 1 {
            return Err(CarnotError::FreeParameters);
        }
        let counts = witt_counts(m, s).ok_or(CarnotError::TooLarge { m, s, cap: FREE_DIMENSION_CAP })?;
        let basis = lyndon_words(m, s);
        debug_assert_eq!(basis.len(), counts.iter().sum::<usize>());
        let index: HashMap<&[u8], usize> = basis.iter().enumerate().map(|(i, w)| (w.as_slice(), i)).collect();
        let polys: Vec<TensorPoly> = basis.iter().map(|w| standard_bracketing(w)).collect();
        let mut brackets = Vec::new();
        for (i, wi) in basis.iter().enumerate() {
            for (j, wj) in basis.iter().enumerate().skip(i + 1) {
                if wi.len() + wj.len() > s {
                    continue;
                }
                let mut l = commutator(&polys[i], &polys[j]);
                while let Some((w, c)) = l.iter().next().map(|(w, c)| (w.clone(), c.clone())) {
                    let k = *index.get(w.as_slice()).expect("leading word of a Lie element is Lyndon");
                    for (u, d) in &polys[k] {
                        let e = l.entry(u.clone()).or_insert_with(Rational::zero);
                        *e -= &c * d;
                        if e.is_zero() {
                            l.remove(u);
                        }
                    }
                    brackets.push((i, j, k, T::from_rational(&c)));
                }
            }
        }
        let names = basis.iter().map(|w| bracket_name(w, m)).collect();
        Self::new(names, counts, &brackets, Matrix::identity(m))
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn step(&self) -> usize {
        self.strata.len()
    }

    pub fn strata(&self) -> &[usize] {
        &self.strata
    }

    pub fn weights(&self) -> &[usize] {
        &self.weights
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Inner product on the first stratum.
    pub fn gram(&self) -> &Matrix<T> {
        &self.gram
    }

    /// Index range of stratum `k` (1-based).
    pub fn stratum_range(&self, k: usize) -> std::ops::Range<usize> {
        let start: usize = self.strata[..k - 1].iter().sum();
        start..start + self.strata[k - 1]
    }

    /// `c_ij^k`.
    pub fn constant(&self, i: usize, j: usize, k: usize) -> T {
        let n = self.dim();
        self.table[i * n + j].iter().find(|(kk, _)| *kk == k).map_or_else(T::zero, |(_, c)| c.clone())
    }

    /// Nonzero `(k, c_ij^k)`.
    pub fn bracket_terms(&self, i: usize, j: usize) -> &[(usize, T)] {
        &self.table[i * self.dim() + j]
    }

    /// Nonzero `(i, j, k, c)` with `i < j`.
    pub fn nonzero_brackets(&self) -> Vec<(usize, usize, usize, T)> {
        let n = self.dim();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                for (k, c) in self.bracket_terms(i, j) {
                    out.push((i, j, *k, c.clone()));
                }
            }
        }
        out
    }

    pub fn basis(&self, i: usize) -> Vec<T> {
        let mut v = vec![T::zero(); self.dim()];
        v[i] = T::one();
        v
    }

    pub fn bracket(&self, a: &[T], b: &[T]) -> Vec<T> {
        let n = self.dim();
        let mut out = vec![T::zero(); n];
        for (i, ai) in a.iter().enumerate() {
            if ai.is_zero() {
                continue;
            }
            for (j, bj) in b.iter().enumerate() {
                if bj.is_zero() {
                    continue;
                }
                let ab = ai.clone() * bj.clone();
                for (k, c) in &self.table[i * n + j] {
                    out[*k] = out[*k].clone() + ab.clone() * c.clone();
                }
            }
        }
        out
    }

    /// Matrix of `ad_a = [a, ·]`.
    pub fn ad(&self, a: &[T]) -> Matrix<T> {
        let cols: Vec<Vec<T>> = (0..self.dim()).map(|j| self.bracket(a, &self.basis(j))).collect();
        Matrix::from_columns(&cols)
    }

    /// Squared norm of a stratum-1 element under the declared inner product.
    pub fn norm_sq(&self, a: &[T]) -> T {
        let n1 = self.strata[0];
        let mut acc = T::zero();
        for i in 0..n1 {
            for j in 0..n1 {
                acc = acc + a[i].clone() * self.gram[(i, j)].clone() * a[j].clone();
            }
        }
        acc
    }

    /// Checks antisymmetry, Jacobi, the grading, generation of each stratum by
    /// the first and positivity of the inner product.
    pub fn validate(&self) -> Validation {
        let checks = vec![
            CheckOutcome { name: "antisymmetry", failure: self.check_antisymmetry() },
            CheckOutcome { name: "jacobi", failure: self.check_jacobi() },
            CheckOutcome { name: "grading", failure: self.check_grading() },
            CheckOutcome { name: "generation", failure: self.check_generation() },
            CheckOutcome { name: "inner product", failure: self.check_gram() },
        ];
        Validation { checks }
    }

    fn check_antisymmetry(&self) -> Option<String> {
        let n = self.dim();
        for i in 0..n {
            for j in i..n {
                for k in 0..n {
                    let s = self.constant(i, j, k) + self.constant(j, i, k);
                    if !s.is_negligible() {
                        return Some(format!("c_({i},{j})^{k} + c_({j},{i})^{k} = {s:?}"));
                    }
                }
            }
        }
        None
    }

    fn check_jacobi(&self) -> Option<String> {
        let n = self.dim();
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    let (a, b, c) = (self.basis(i), self.basis(j), self.basis(k));
                    let s1 = self.bracket(&a, &self.bracket(&b, &c));
                    let s2 = self.bracket(&b, &self.bracket(&c, &a));
                    let s3 = self.bracket(&c, &self.bracket(&a, &b));
                    let sum = vadd(&vadd(&s1, &s2), &s3);
                    if let Some(m) = sum.iter().position(|x| !x.is_negligible()) {
                        return Some(format!(
                            "Jacobi fails on ({}, {}, {}) in component {}",
                            self.names[i], self.names[j], self.names[k], self.names[m]
                        ));
                    }
                }
            }
        }
        None
    }

    fn check_grading(&self) -> Option<String> {
        let n = self.dim();
        for i in 0..n {
            for j in 0..n {
                for (k, c) in &self.table[i * n + j] {
                    if !c.is_negligible() && self.weights[*k] != self.weights[i] + self.weights[j] {
                        return Some(format!(
                            "[{}, {}] has a component along {} of weight {}",
                            self.names[i], self.names[j], self.names[*k], self.weights[*k]
                        ));
                    }
                }
            }
        }
        None
    }

    fn check_generation(&self) -> Option<String> {
        for k in 1..self.step() {
            let target = self.stratum_range(k + 1);
            let mut cols = Vec::new();
            for a in self.stratum_range(1) {
                for b in self.stratum_range(k) {
                    let v = self.bracket(&self.basis(a), &self.basis(b));
                    cols.push(v[target.clone()].to_vec());
                }
            }
            let rank = Matrix::from_columns(&cols).rank();
            if rank != self.strata[k] {
                return Some(format!("[g_1, g_{k}] spans {rank} of the {} dimensions of g_{}", self.strata[k], k + 1));
            }
        }
        None
    }

    fn check_gram(&self) -> Option<String> {
        if !self.gram.is_symmetric() {
            return Some("inner product is not symmetric".into());
        }
        for (i, m) in self.gram.leading_minors().iter().enumerate() {
            if !m.to_f64().is_some_and(|v| v > 0.0) {
                return Some(format!("leading minor {} is not positive", i + 1));
            }
        }
        None
    }

    /// `dil_r`: multiplication by `r^k` on `g_k`.
    pub fn dilation_matrix(&self, r: &T) -> Matrix<T> {
        let diag: Vec<T> = self.weights.iter().map(|&w| (0..w).fold(T::one(), |acc, _| acc * r.clone())).collect();
        Matrix::diagonal(&diag)
    }

    /// `log(exp(a) exp(b))` truncated at the step, by the recursion
    /// `Z_1 = a + b`,
    /// `(n+1) Z_{n+1} = ½[a − b, Z_n] + Σ_{p≥1, 2p≤n} B_{2p}/(2p)! Σ_{k_1+…+k_{2p}=n} [Z_{k_1}, […[Z_{k_{2p}}, a + b]…]]`.
    pub fn bch(&self, a: &[T], b: &[T]) -> Vec<T> {
        let s = self.step();
        let sum = vadd(a, b);
        let diff = vsub(a, b);
        let bern = bernoulli(s);
        let half = ratio::<T>(1, 2);
        let mut z: Vec<Vec<T>> = vec![sum.clone()];
        for n in 1..s {
            let mut acc = vscale(&self.bracket(&diff, &z[n - 1]), &half);
            for p in 1..=n / 2 {
                let coeff = T::from_rational(&(&bern[2 * p] / factorial(2 * p)));
                for comp in compositions(n, 2 * p) {
                    let mut v = sum.clone();
                    for &k in comp.iter().rev() {
                        v = self.bracket(&z[k - 1], &v);
                    }
                    add_into(&mut acc, &v, &coeff);
                }
            }
            z.push(vscale(&acc, &ratio(1, n as i64 + 1)));
        }
        z.iter().fold(vec![T::zero(); self.dim()], |acc, v| vadd(&acc, v))
    }

    /// Truncated BCH by Dynkin's sum
    /// `Σ_j (−1)^{j−1}/j Σ [a^{p_1} b^{q_1} … a^{p_j} b^{q_j}] / (Σ(p_i+q_i) Π p_i! q_i!)`
    /// over `p_i + q_i > 0`, with right-nested brackets of the letters.
    pub fn bch_dynkin(&self, a: &[T], b: &[T]) -> Vec<T> {
        let s = self.step();
        let mut out = vec![T::zero(); self.dim()];
        for j in 1..=s {
            let mut blocks = Vec::new();
            self.dynkin_blocks(a, b, j, s, &mut blocks, &mut out);
        }
        out
    }

    fn dynkin_blocks(
        &self,
        a: &[T],
        b: &[T],
        j: usize,
        budget: usize,
        blocks: &mut Vec<(usize, usize)>,
        out: &mut [T],
    ) {
        if blocks.len() == j {
            let mut letters: Vec<&[T]> = Vec::new();
            let mut denom = Rational::one();
            for &(p, q) in blocks.iter() {
                letters.extend(std::iter::repeat_n(a, p));
                letters.extend(std::iter::repeat_n(b, q));
                denom *= factorial(p) * factorial(q);
            }
            let len = letters.len();
            let mut v = letters[len - 1].to_vec();
            for l in letters[..len - 1].iter().rev() {
                v = self.bracket(l, &v);
            }
            let sign = if j % 2 == 1 { Rational::one() } else { -Rational::one() };
            let c = sign / (denom * Rational::from_integer(BigInt::from(j * len)));
            add_into(out, &v, &T::from_rational(&c));
            return;
        }
        let remaining_blocks = j - blocks.len() - 1;
        for total in 1..=budget.saturating_sub(remaining_blocks) {
            for p in 0..=total {
                blocks.push((p, total - p));
                self.dynkin_blocks(a, b, j, budget - total, blocks, out);
                blocks.pop();
            }
        }
    }

    /// Derivations preserving every stratum and skew-symmetric on `g_1`
    /// with respect to the declared inner product.
    pub fn isometry_algebra(&self) -> GradedDerivationBasis<T> {
        let n = self.dim();
        // Unknowns are the entries D[r][c] with r, c in the same stratum.
        let mut unknown = HashMap::new();
        for k in 1..=self.step() {
            for c in self.stratum_range(k) {
                for r in self.stratum_range(k) {
                    let idx = unknown.len();
                    unknown.insert((r, c), idx);
                }
            }
        }
        let nu = unknown.len();
        let mut rows: Vec<Vec<T>> = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                // D[e_i, e_j] − [D e_i, e_j] − [e_i, D e_j] = 0, component m.
                let mut eqs = vec![vec![T::zero(); nu]; n];
                for (k, c) in self.bracket_terms(i, j) {
                    for m in self.stratum_range(self.weights[*k]) {
                        let e = &mut eqs[m][unknown[&(m, *k)]];
                        *e = e.clone() + c.clone();
                    }
                }
                for r in self.stratum_range(self.weights[i]) {
                    for (m, c) in self.bracket_terms(r, j) {
                        let e = &mut eqs[*m][unknown[&(r, i)]];
                        *e = e.clone() - c.clone();
                    }
                }
                for r in self.stratum_range(self.weights[j]) {
                    for (m, c) in self.bracket_terms(i, r) {
                        let e = &mut eqs[*m][unknown[&(r, j)]];
                        *e = e.clone() - c.clone();
                    }
                }
                rows.extend(eqs.into_iter().filter(|row| row.iter().any(|x| !x.is_zero())));
            }
        }
        let g1 = self.stratum_range(1);
        for a in g1.clone() {
            for b in a..g1.end {
                // (G D)_{ab} + (G D)_{ba} = 0
                let mut row = vec![T::zero(); nu];
                for r in g1.clone() {
                    let e = &mut row[unknown[&(r, b)]];
                    *e = e.clone() + self.gram[(a, r)].clone();
                    let e = &mut row[unknown[&(r, a)]];
                    *e = e.clone() + self.gram[(b, r)].clone();
                }
                rows.push(row);
            }
        }
        let kernel = if rows.is_empty() {
            (0..nu).map(|i| (0..nu).map(|j| if i == j { T::one() } else { T::zero() }).collect()).collect()
        } else {
            Matrix::from_rows(rows).kernel()
        };
        let matrices = kernel
            .into_iter()
            .map(|v| {
                let mut d = Matrix::zeros(n, n);
                for (&(r, c), &idx) in &unknown {
                    d[(r, c)] = v[idx].clone();
                }
                d
            })
            .collect();
        GradedDerivationBasis { matrices }
    }

    /// Extends the stratum-1 inner product to all of `g`, stratum by stratum.
    ///
    /// `g_k` is the image under the bracket of `⊕_{j < k−j} g_j ⊗ g_{k−j}`
    /// together with `Λ² g_{k/2}` for even `k`. These carry the product inner
    /// products (the wedge one by `2×2` Gram minors), and the bracket
    /// restricted to the orthogonal complement of its kernel is made an
    /// isometry: `G_k = (B G_D^{-1} Bᵀ)^{-1}`.
    pub fn extend_inner_product(&self) -> Result<Matrix<T>, CarnotError> {
        let n = self.dim();
        let mut g = Matrix::zeros(n, n);
        for a in self.stratum_range(1) {
            for b in self.stratum_range(1) {
                g[(a, b)] = self.gram[(a, b)].clone();
            }
        }
        for k in 2..=self.step() {
            let target = self.stratum_range(k);
            let mut pairs = Vec::new();
            for j in 1..=k / 2 {
                let (lo, hi) = (self.stratum_range(j), self.stratum_range(k - j));
                for a in lo.clone() {
                    for b in hi.clone() {
                        if j < k - j || a < b {
                            pairs.push((a, b, j == k - j));
                        }
                    }
                }
            }
            let gd = Matrix::from_fn(pairs.len(), pairs.len(), |p, q| {
                let (a, b, wedge) = pairs[p];
                let (c, d, wedge2) = pairs[q];
                if self.weights[a] != self.weights[c] || wedge != wedge2 {
                    return T::zero();
                }
                let direct = g[(a, c)].clone() * g[(b, d)].clone();
                if wedge {
                    direct - g[(a, d)].clone() * g[(b, c)].clone()
                } else {
                    direct
                }
            });
            let bmat = Matrix::from_fn(target.len(), pairs.len(), |r, p| {
                let (a, b, _) = pairs[p];
                self.constant(a, b, target.start + r)
            });
            let gd_inv = gd.inverse().ok_or(CarnotError::Singular)?;
            let m = &(&bmat * &gd_inv) * &bmat.transpose();
            let gk = m.inverse().ok_or(CarnotError::Degenerate(k))?;
            for r in 0..target.len() {
                for c in 0..target.len() {
                    g[(target.start + r, target.start + c)] = gk[(r, c)].clone();
                }
            }
        }
        Ok(g)
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> StratifiedAlgebra<U> {
        StratifiedAlgebra {
            names: self.names.clone(),
            strata: self.strata.clone(),
            weights: self.weights.clone(),
            table: self.table.iter().map(|t| t.iter().map(|(k, c)| (*k, f(c))).collect()).collect(),
            gram: self.gram.map(f),
        }
    }
}

impl StratifiedAlgebra<f64> {
    /// Largest absolute difference of structure constants, or `None` if the
    /// strata differ.
    pub fn max_constant_difference(&self, other: &StratifiedAlgebra<f64>) -> Option<f64> {
        if self.strata() != other.strata() {
            return None;
        }
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    worst = worst.max((self.constant(i, j, k) - other.constant(i, j, k)).abs());
                }
            }
        }
        Some(worst)
    }
}

/// Basis of the graded isometry algebra `g_0`.
#[derive(Clone, Debug, PartialEq)]
pub struct GradedDerivationBasis<T> {
    pub matrices: Vec<Matrix<T>>,
}

impl<T: Scalar> GradedDerivationBasis<T> {
    pub fn dim(&self) -> usize {
        self.matrices.len()
    }

    /// Checks `D[e_i, e_j] = [D e_i, e_j] + [e_i, D e_j]` for all basis pairs.
    pub fn is_derivation(alg: &StratifiedAlgebra<T>, d: &Matrix<T>) -> bool {
        let n = alg.dim();
        (0..n).all(|i| {
            (0..n).all(|j| {
                let (a, b) = (alg.basis(i), alg.basis(j));
                let lhs = d.mul_vec(&alg.bracket(&a, &b));
                let rhs = vadd(&alg.bracket(&d.mul_vec(&a), &b), &alg.bracket(&a, &d.mul_vec(&b)));
                vsub(&lhs, &rhs).iter().all(Scalar::is_negligible)
            })
        })
    }
}

/// Sorted `k`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        rec(0, n, k, &mut Vec::new(), &mut out);
    }
    out
}

/// Cochains `Λ^k g* ⊗ ĝ` for `ĝ = g_0 ⊕ g`, with `[D, A] = DA` and
/// `[A, D] = −DA` for `D ∈ g_0`, `A ∈ g`.
///
/// A cochain basis element is a pair (target, sorted index tuple), ordered
/// target-major with the `g_0` block before the `g` block.
#[derive(Clone, Debug)]
pub struct SpencerComplex<T> {
    algebra: StratifiedAlgebra<T>,
    g0: Vec<Matrix<T>>,
    inner: Matrix<T>,
}

impl<T: Scalar> SpencerComplex<T> {
    pub fn new(algebra: &StratifiedAlgebra<T>) -> Result<Self, CarnotError> {
        let g0 = algebra.isometry_algebra().matrices;
        let inner = algebra.extend_inner_product()?;
        Ok(SpencerComplex { algebra: algebra.clone(), g0, inner })
    }

    pub fn algebra(&self) -> &StratifiedAlgebra<T> {
        &self.algebra
    }

    pub fn g0(&self) -> &[Matrix<T>] {
        &self.g0
    }

    /// Dimension of `ĝ`.
    pub fn hat_dim(&self) -> usize {
        self.g0.len() + self.algebra.dim()
    }

    pub fn cochain_dim(&self, k: usize) -> usize {
        self.hat_dim() * subsets(self.algebra.dim(), k).len()
    }

    /// `[e_a, u]` for `e_a ∈ g` and `u` the `t`-th basis vector of `ĝ`.
    fn act(&self, a: usize, t: usize) -> Vec<T> {
        let d0 = self.g0.len();
        let mut out = vec![T::zero(); self.hat_dim()];
        if t < d0 {
            let d = &self.g0[t];
            for m in 0..self.algebra.dim() {
                out[d0 + m] = -d[(m, a)].clone();
            }
        } else {
            for (m, c) in self.algebra.bracket_terms(a, t - d0) {
                out[d0 + m] = c.clone();
            }
        }
        out
    }

    /// Matrix of `∂: Λ^k g* ⊗ ĝ → Λ^{k+1} g* ⊗ ĝ`,
    /// `(∂α)(A_0..A_k) = Σ_i (−1)^i [A_i, α(…Â_i…)] + Σ_{i<j} (−1)^{i+j} α([A_i, A_j], …Â_i…Â_j…)`.
    pub fn differential(&self, k: usize) -> Matrix<T> {
        let n = self.algebra.dim();
        let h = self.hat_dim();
        let src = subsets(n, k);
        let dst = subsets(n, k + 1);
        let src_index: HashMap<&[usize], usize> = src.iter().enumerate().map(|(i, s)| (s.as_slice(), i)).collect();
        let (cs, cd) = (src.len(), dst.len());
        let mut m = Matrix::<T>::zeros(h * cd, h * cs);
        for (jdx, jset) in dst.iter().enumerate() {
            for i in 0..=k {
                let rest: Vec<usize> = jset.iter().enumerate().filter(|&(p, _)| p != i).map(|(_, &x)| x).collect();
                let col = src_index[rest.as_slice()];
                let sign = if i % 2 == 0 { T::one() } else { -T::one() };
                for t in 0..h {
                    for (u, v) in self.act(jset[i], t).into_iter().enumerate() {
                        if !v.is_zero() {
                            let e = &mut m[(u * cd + jdx, t * cs + col)];
                            *e = e.clone() + sign.clone() * v;
                        }
                    }
                }
            }
            for i in 0..=k {
                for j in i + 1..=k {
                    let rest: Vec<usize> =
                        jset.iter().enumerate().filter(|&(p, _)| p != i && p != j).map(|(_, &x)| x).collect();
                    let sign = if (i + j) % 2 == 0 { T::one() } else { -T::one() };
                    for (mm, c) in self.algebra.bracket_terms(jset[i], jset[j]) {
                        if rest.contains(mm) {
                            continue;
                        }
                        // Sorting (mm, rest…) moves mm past the smaller entries.
                        let pos = rest.iter().filter(|&&x| x < *mm).count();
                        let mut tuple = rest.clone();
                        tuple.insert(pos, *mm);
                        let col = src_index[tuple.as_slice()];
                        let coef = if pos % 2 == 0 { sign.clone() * c.clone() } else { -(sign.clone() * c.clone()) };
                        for t in 0..h {
                            let e = &mut m[(t * cd + jdx, t * cs + col)];
                            *e = e.clone() + coef.clone();
                        }
                    }
                }
            }
        }
        m
    }

    /// Inner product on `ĝ`: Hilbert-Schmidt `tr(G^{-1} D_1ᵀ G D_2)` on `g_0`
    /// and the extended inner product `G` on `g`, blocks orthogonal.
    pub fn hat_gram(&self) -> Result<Matrix<T>, CarnotError> {
        let d0 = self.g0.len();
        let n = self.algebra.dim();
        let ginv = self.inner.inverse().ok_or(CarnotError::Singular)?;
        let mut out = Matrix::zeros(d0 + n, d0 + n);
        for (p, dp) in self.g0.iter().enumerate() {
            for (q, dq) in self.g0.iter().enumerate() {
                out[(p, q)] = (&(&(&ginv * &dp.transpose()) * &self.inner) * dq).trace();
            }
        }
        for r in 0..n {
            for c in 0..n {
                out[(d0 + r, d0 + c)] = self.inner[(r, c)].clone();
            }
        }
        Ok(out)
    }

    /// Gram matrix of `Λ^k g* ⊗ ĝ` in the cochain basis: the `ĝ` Gram matrix
    /// tensored with the minors of `G^{-1}`.
    pub fn cochain_gram(&self, k: usize) -> Result<Matrix<T>, CarnotError> {
        let ginv = self.inner.inverse().ok_or(CarnotError::Singular)?;
        let sets = subsets(self.algebra.dim(), k);
        let forms = Matrix::from_fn(sets.len(), sets.len(), |p, q| {
            let sub = Matrix::from_fn(k, k, |r, c| ginv[(sets[p][r], sets[q][c])].clone());
            sub.determinant()
        });
        Ok(self.hat_gram()?.kron(&forms))
    }

    /// `∂* = G_k^{-1} ∂ᵀ G_{k+1}`, mapping degree `k + 1` to degree `k`.
    pub fn adjoint(&self, k: usize) -> Result<Matrix<T>, CarnotError> {
        let gk_inv = self.cochain_gram(k)?.inverse().ok_or(CarnotError::Singular)?;
        let gk1 = self.cochain_gram(k + 1)?;
        Ok(&(&gk_inv * &self.differential(k).transpose()) * &gk1)
    }
}

type TensorPoly = BTreeMap<Vec<u8>, Rational>;

/// Witt numbers per length, or `None` above the dimension cap.
fn witt_counts(m: usize, s: usize) -> Option<Vec<usize>> {
    fn mobius(mut n: usize) -> i64 {
        let mut result = 1;
        let mut p = 2;
        while p * p <= n {
            if n.is_multiple_of(p) {
                n /= p;
                if n.is_multiple_of(p) {
                    return 0;
                }
                result = -result;
            }
            p += 1;
        }
        if n > 1 {
            result = -result;
        }
        result
    }
    let mut counts = Vec::new();
    let mut total = 0usize;
    for d in 1..=s {
        let mut acc: i128 = 0;
        for e in (1..=d).filter(|e| d % e == 0) {
            let pow = (m as i128).checked_pow((d / e) as u32)?;
            acc += mobius(e) as i128 * pow;
        }
        let count = usize::try_from(acc / d as i128).ok()?;
        total = total.checked_add(count)?;
        if total > FREE_DIMENSION_CAP {
            return None;
        }
        counts.push(count);
    }
    Some(counts)
}

/// Lyndon words of length `≤ s` over `m` letters, by length then lex.
fn lyndon_words(m: usize, s: usize) -> Vec<Vec<u8>> {
    // Duval's generation algorithm.
    let mut out = Vec::new();
    let mut w: Vec<u8> = vec![0];
    while !w.is_empty() {
        out.push(w.clone());
        let len = w.len();
        while w.len() < s {
            let c = w[w.len() - len];
            w.push(c);
        }
        while w.last().is_some_and(|&c| c as usize == m - 1) {
            w.pop();
        }
        if let Some(last) = w.last_mut() {
            *last += 1;
        }
    }
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

fn is_lyndon(w: &[u8]) -> bool {
    (1..w.len()).all(|i| w < &w[i..] && w[..] != w[i..])
}

/// `(u, v)` with `v` the longest proper Lyndon suffix of `w`.
fn standard_factorization(w: &[u8]) -> (&[u8], &[u8]) {
    let split = (1..w.len()).find(|&i| is_lyndon(&w[i..])).expect("words of length ≥ 2 have a Lyndon suffix");
    (&w[..split], &w[split..])
}

fn commutator(p: &TensorPoly, q: &TensorPoly) -> TensorPoly {
    let mut out = TensorPoly::new();
    for (u, a) in p {
        for (v, b) in q {
            let c = a * b;
            for (w, sign) in [([u.as_slice(), v].concat(), true), ([v.as_slice(), u].concat(), false)] {
                let e = out.entry(w.clone()).or_insert_with(Rational::zero);
                if sign {
                    *e += &c;
                } else {
                    *e -= &c;
                }
                if e.is_zero() {
                    out.remove(&w);
                }
            }
        }
    }
    out
}

fn standard_bracketing(w: &[u8]) -> TensorPoly {
    if w.len() == 1 {
        return TensorPoly::from([(w.to_vec(), Rational::one())]);
    }
    let (u, v) = standard_factorization(w);
    commutator(&standard_bracketing(u), &standard_bracketing(v))
}

fn letter(c: u8, m: usize) -> String {
    if m <= 26 {
        ((b'a' + c) as char).to_string()
    } else {
        format!("e{}", c as usize + 1)
    }
}

fn bracket_name(w: &[u8], m: usize) -> String {
    if w.len() == 1 {
        return letter(w[0], m);
    }
    let (u, v) = standard_factorization(w);
    format!("[{},{}]", bracket_name(u, m), bracket_name(v, m))
}
