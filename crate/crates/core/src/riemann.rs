//! Levi-Civita connections, curvature, and torsion/curvature of connections
//! given in a frame.
//!
//! Index conventions: `gamma[k][i][j] = Γ^k_ij` for coordinate Christoffel
//! symbols, and `R(∂_i, ∂_j)∂_k = Σ_l R^l_ijk ∂_l` stored as `r[l][i][j][k]`.
//! Frame connections store `Γ^k_ij` as `gamma[i][j][k]` with
//! `∇_{E_i} E_j = Σ_k Γ^k_ij E_k`.

use std::sync::Arc;

use num_traits::Zero;

use crate::geometry::{Frame, GeometryError, Metric, Mode};
use crate::report::{FlatnessReport, ResidualCheck};
use crate::symexpr::{Expr, SampleConfig};

pub type Tensor3 = Vec<Vec<Vec<Expr>>>;
pub type Tensor4 = Vec<Vec<Vec<Vec<Expr>>>>;

fn zeros3(n: usize) -> Tensor3 {
    vec![vec![vec![Expr::zero(); n]; n]; n]
}

fn zeros4(n: usize) -> Tensor4 {
    vec![zeros3(n); n]
}

/// Christoffel symbols of a metric in its coordinate frame.
#[derive(Clone, Debug)]
pub struct ChristoffelTable {
    pub gamma: Tensor3,
}

impl ChristoffelTable {
    pub fn dim(&self) -> usize {
        self.gamma.len()
    }

    /// `Γ^k_ij`.
    pub fn get(&self, k: usize, i: usize, j: usize) -> &Expr {
        &self.gamma[k][i][j]
    }
}

/// `Γ^k_ij = ½ Σ_l g^{kl} (∂_i g_jl + ∂_j g_il − ∂_l g_ij)`.
pub fn levi_civita(g: &Metric) -> Result<ChristoffelTable, GeometryError> {
    let space = g.space();
    if space.mode() != Mode::Coordinates {
        return Err(GeometryError::NeedsCoordinates);
    }
    let n = space.dim();
    let ginv = g.matrix().inverse().ok_or(GeometryError::Singular)?;
    // dg[l][i][j] = ∂_l g_ij
    let dg: Tensor3 =
        (0..n).map(|l| (0..n).map(|i| (0..n).map(|j| g.entry(i, j).diff(l as u32)).collect()).collect()).collect();
    let half = Expr::frac(1, 2);
    let mut gamma = zeros3(n);
    for i in 0..n {
        for j in i..n {
            // lowered[l] = Γ_{l,ij}
            let lowered: Vec<Expr> = (0..n).map(|l| &(&dg[i][j][l] + &dg[j][i][l]) - &dg[l][i][j]).collect();
            for k in 0..n {
                let mut acc = Expr::zero();
                for (l, low) in lowered.iter().enumerate() {
                    if low.is_zero() || ginv[(k, l)].is_zero() {
                        continue;
                    }
                    acc = &acc + &(&ginv[(k, l)] * low);
                }
                let v = &acc * &half;
                gamma[k][j][i] = v.clone();
                gamma[k][i][j] = v;
            }
        }
    }
    Ok(ChristoffelTable { gamma })
}

/// Riemann tensor `R^l_ijk` from coordinate Christoffel symbols.
pub fn riemann_tensor(christoffel: &ChristoffelTable) -> Tensor4 {
    let n = christoffel.dim();
    let gm = &christoffel.gamma;
    let mut r = zeros4(n);
    for l in 0..n {
        for i in 0..n {
            for j in i + 1..n {
                for k in 0..n {
                    let mut v = &gm[l][j][k].diff(i as u32) - &gm[l][i][k].diff(j as u32);
                    for m in 0..n {
                        if !gm[l][i][m].is_zero() && !gm[m][j][k].is_zero() {
                            v = &v + &(&gm[l][i][m] * &gm[m][j][k]);
                        }
                        if !gm[l][j][m].is_zero() && !gm[m][i][k].is_zero() {
                            v = &v - &(&gm[l][j][m] * &gm[m][i][k]);
                        }
                    }
                    r[l][j][i][k] = -&v;
                    r[l][i][j][k] = v;
                }
            }
        }
    }
    r
}

/// `K = <R(∂_x, ∂_y)∂_y, ∂_x> / det g` for a surface metric.
pub fn gaussian_curvature(g: &Metric) -> Result<Expr, GeometryError> {
    let n = g.space().dim();
    if n != 2 {
        return Err(GeometryError::Dimension { expected: 2, got: n });
    }
    let r = riemann_tensor(&levi_civita(g)?);
    let num = &(&r[0][0][1][1] * g.entry(0, 0)) + &(&r[1][0][1][1] * g.entry(1, 0));
    Ok(&num / &g.matrix().determinant())
}

/// Flat iff every Riemann component of the Levi-Civita connection vanishes.
pub fn riemannian_flatness(g: &Metric, config: &SampleConfig) -> Result<FlatnessReport, GeometryError> {
    let space = g.space();
    let n = space.dim();
    let christoffel = levi_civita(g)?;
    let r = riemann_tensor(&christoffel);
    let names = space.chart().names();
    let mut transcript = Vec::new();
    for k in 0..n {
        for i in 0..n {
            for j in i..n {
                let v = &christoffel.gamma[k][i][j];
                if !v.is_zero() {
                    transcript.push((format!("Gamma^{}_{}{}", names[k], names[i], names[j]), v.to_string()));
                }
            }
        }
    }
    let mut check = ResidualCheck::new(space.chart(), config);
    for l in 0..n {
        for i in 0..n {
            for j in i + 1..n {
                for k in 0..n {
                    check.check(format!("R^{}_{}{}{}", names[l], names[i], names[j], names[k]), &r[l][i][j][k])?;
                }
            }
        }
    }
    Ok(check.finish(transcript, Vec::new()))
}

/// Connection coefficients relative to a frame.
#[derive(Clone, Debug)]
pub struct FrameConnection {
    pub frame: Arc<Frame>,
    /// `gamma[i][j][k] = Γ^k_ij`.
    pub gamma: Tensor3,
}

impl FrameConnection {
    pub fn zero(frame: Arc<Frame>) -> FrameConnection {
        let n = frame.len();
        FrameConnection { frame, gamma: zeros3(n) }
    }

    /// Levi-Civita connection of the metric making the frame orthonormal:
    /// `2<∇_{E_i}E_j, E_k> = <[E_i,E_j],E_k> − <[E_i,E_k],E_j> − <[E_j,E_k],E_i>`.
    pub fn levi_civita_orthonormal(frame: Arc<Frame>) -> FrameConnection {
        let n = frame.len();
        let mut gamma = zeros3(n);
        let half = Expr::frac(1, 2);
        for (i, gi) in gamma.iter_mut().enumerate() {
            for (j, gij) in gi.iter_mut().enumerate() {
                for (k, v) in gij.iter_mut().enumerate() {
                    let s = &(frame.b(i, j, k) - frame.b(i, k, j)) - frame.b(j, k, i);
                    *v = &s * &half;
                }
            }
        }
        FrameConnection { frame, gamma }
    }

    pub fn dim(&self) -> usize {
        self.gamma.len()
    }

    /// Coefficients of `∇_X Y` for frame coefficient vectors `x`, `y`.
    pub fn covariant(&self, x: &[Expr], y: &[Expr]) -> Vec<Expr> {
        let n = self.dim();
        let mut out = vec![Expr::zero(); n];
        for (i, xi) in x.iter().enumerate() {
            if xi.is_zero() {
                continue;
            }
            for (k, o) in out.iter_mut().enumerate() {
                let d = self.frame.apply(i, &y[k]);
                if !d.is_zero() {
                    *o = &*o + &(xi * &d);
                }
            }
            for (j, yj) in y.iter().enumerate() {
                if yj.is_zero() {
                    continue;
                }
                let c = xi * yj;
                for (k, o) in out.iter_mut().enumerate() {
                    if !self.gamma[i][j][k].is_zero() {
                        *o = &*o + &(&c * &self.gamma[i][j][k]);
                    }
                }
            }
        }
        out
    }
}

/// `T^k_ij = Γ^k_ij − Γ^k_ji − b^k_ij`, stored `t[i][j][k]`.
pub fn frame_torsion(c: &FrameConnection) -> Tensor3 {
    let n = c.dim();
    let mut t = zeros3(n);
    for i in 0..n {
        for j in i + 1..n {
            for k in 0..n {
                let v = &(&c.gamma[i][j][k] - &c.gamma[j][i][k]) - c.frame.b(i, j, k);
                t[j][i][k] = -&v;
                t[i][j][k] = v;
            }
        }
    }
    t
}

/// `R^l_ijk = E_i(Γ^l_jk) − E_j(Γ^l_ik) + Σ_m (Γ^m_jk Γ^l_im − Γ^m_ik Γ^l_jm) − Σ_m b^m_ij Γ^l_mk`,
/// stored `r[i][j][k][l]` with `R(E_i, E_j)E_k = Σ_l R^l_ijk E_l`.
pub fn frame_curvature(c: &FrameConnection) -> Tensor4 {
    let n = c.dim();
    let g = &c.gamma;
    let f = &c.frame;
    let mut r = zeros4(n);
    for i in 0..n {
        for j in i + 1..n {
            for k in 0..n {
                for l in 0..n {
                    let mut v = &f.apply(i, &g[j][k][l]) - &f.apply(j, &g[i][k][l]);
                    for m in 0..n {
                        if !g[j][k][m].is_zero() && !g[i][m][l].is_zero() {
                            v = &v + &(&g[j][k][m] * &g[i][m][l]);
                        }
                        if !g[i][k][m].is_zero() && !g[j][m][l].is_zero() {
                            v = &v - &(&g[i][k][m] * &g[j][m][l]);
                        }
                        if !f.b(i, j, m).is_zero() && !g[m][k][l].is_zero() {
                            v = &v - &(f.b(i, j, m) * &g[m][k][l]);
                        }
                    }
                    r[j][i][k][l] = -&v;
                    r[i][j][k][l] = v;
                }
            }
        }
    }
    r
}

/// Sectional value `<R(E_0, E_1)E_1, E_0>` for an orthonormal frame.
pub fn orthonormal_sectional(c: &FrameConnection) -> Expr {
    frame_curvature(c)[0][1][1][0].clone()
}

/// Metric-compatibility residuals `∂_k g_ij − Σ_l (Γ^l_ki g_lj + Γ^l_kj g_il)`.
pub fn compatibility_residuals(g: &Metric, christoffel: &ChristoffelTable) -> Vec<Expr> {
    let n = g.space().dim();
    let gm = &christoffel.gamma;
    let mut out = Vec::new();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut v = g.entry(i, j).diff(k as u32);
                for l in 0..n {
                    v = &v - &(&(&gm[l][k][i] * g.entry(l, j)) + &(&gm[l][k][j] * g.entry(i, l)));
                }
                out.push(v);
            }
        }
    }
    out
}

/// Diagonal metric `diag(entries)` helper for tests and examples.
pub fn diagonal_metric(
    space: &Arc<crate::geometry::Space>,
    entries: &[Expr],
    config: &SampleConfig,
) -> Result<Metric, GeometryError> {
    let n = entries.len();
    let m = crate::linalg::Matrix::from_fn(n, n, |r, c| if r == c { entries[r].clone() } else { Expr::zero() });
    Metric::new(space, m, config)
}
