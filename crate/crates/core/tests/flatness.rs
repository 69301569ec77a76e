use std::sync::Arc;
use std::time::Instant;

use flatcert::flatness::{
    contact_connection, contact_flatness, contact_normalize, engel_canonical_data, engel_flatness, engel_model,
    free235_model, g235_canonical_data, g235_connection, g235_flatness, g235_flatness_with, rotate_pair, span_distance,
    ModelTorsion, Y2Reading,
};
use flatcert::geometry::{Frame, Space, VectorField};
use flatcert::report::Verdict;
use flatcert::riemann::frame_curvature;
use flatcert::scalar::{frac, int};
use flatcert::subriemann::SubRiemannian;
use flatcert::symexpr::is_zero;
use flatcert::{CarnotAlgebra, Chart, Expr, SampleConfig};
use num_traits::Zero;

fn cfg() -> SampleConfig {
    SampleConfig { samples: 8, ..SampleConfig::default() }
}

fn coords(names: &[&str]) -> Arc<Space> {
    Space::coordinates(Chart::new(names).unwrap())
}

fn sr(fields: Vec<VectorField>) -> SubRiemannian {
    SubRiemannian::new(fields).unwrap()
}

// ------------------------------------------------------------ Engel

fn engel_coordinate_frame() -> (Arc<Space>, VectorField, VectorField) {
    let s = coords(&["x", "y", "z", "w"]);
    let x = s.field(&["1", "0", "-y/2", "-(z/2+x*y/12)"]).unwrap();
    let y = s.field(&["0", "1", "x/2", "x^2/12"]).unwrap();
    (s, x, y)
}

fn engel_constant() -> (Arc<Space>, VectorField, VectorField) {
    let s = Space::constant_structure(&["X", "Y", "Z", "W"], &[(0, 1, 2, int(1)), (0, 2, 3, int(1))]).unwrap();
    let x = s.basis_field(0);
    let y = s.basis_field(1);
    (s, x, y)
}

#[test]
fn engel_model_matches_library_engel_algebra() {
    // Canonical order (X_0, X_1, X_2, X_3) = (Y, X, -Z, -W) of the library algebra.
    let lib = CarnotAlgebra::engel();
    let m = engel_model();
    let basis: [(usize, i64); 4] = [(1, 1), (0, 1), (2, -1), (3, -1)];
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                let (bi, si) = basis[i];
                let (bj, sj) = basis[j];
                let (bk, sk) = basis[k];
                assert_eq!(m.constant(i, j, k), lib.constant(bi, bj, bk) * int(si * sj * sk));
            }
        }
    }
}

#[test]
fn engel_group_data_has_no_corrections() {
    let (_, x, y) = engel_constant();
    let d = engel_canonical_data(&sr(vec![x, y]), (true, true)).unwrap();
    assert!(d.c0.is_zero() && d.c1.is_zero());
    assert!(d.c_upper.iter().all(Zero::is_zero));
    assert_eq!(d.x2.comps(), d.z.comps());
    assert_eq!(d.x3.comps(), d.y.comps());
    // X_0 spans the kernel: it is ±Y, and θ([X_0, X_1]) = 1.
    assert!(d.x0.comps()[0].is_zero());
    let v01 = d.x0.bracket(&d.x1).unwrap();
    assert_eq!(d.theta.pair(&v01), Expr::int(1));
}

#[test]
fn engel_coordinate_data_is_orthonormal() {
    let (_, x, y) = engel_coordinate_frame();
    let s = sr(vec![x.clone(), y.clone()]);
    for signs in [(true, true), (false, true)] {
        let d = engel_canonical_data(&s, signs).unwrap();
        // Coefficients against the orthonormal input (X, Y).
        let coeff = |v: &VectorField| [v.comps()[0].clone(), v.comps()[1].clone()];
        let (a, b) = (coeff(&d.x0), coeff(&d.x1));
        let dot = &(&a[0] * &b[0]) + &(&a[1] * &b[1]);
        assert!(dot.is_zero());
        assert_eq!(&(&a[0] * &a[0]) + &(&a[1] * &a[1]), Expr::int(1));
        assert_eq!(&(&b[0] * &b[0]) + &(&b[1] * &b[1]), Expr::int(1));
        let v01 = d.x0.bracket(&d.x1).unwrap();
        assert_eq!(d.theta.pair(&v01), Expr::int(1));
        assert_eq!(d.psi.pair(&d.y), Expr::int(1));
        assert!(d.psi.pair(&d.z).is_zero());
    }
}

#[test]
fn engel_group_is_flat_in_both_modes() {
    let (_, x, y) = engel_constant();
    let rep = engel_flatness(&sr(vec![x, y]), &cfg()).unwrap();
    assert_eq!(rep.verdict, Verdict::FlatProven);
    let (_, x, y) = engel_coordinate_frame();
    let rep = engel_flatness(&sr(vec![x, y]), &cfg()).unwrap();
    assert_eq!(rep.verdict, Verdict::FlatProven);
    assert!(rep.residuals_checked > 0);
}

#[test]
fn engel_perturbation_is_not_flat() {
    let (s, x, y) = engel_coordinate_frame();
    let bent = x.scale(&s.chart().parse("1+x^2").unwrap());
    let rep = engel_flatness(&sr(vec![bent, y]), &cfg()).unwrap();
    assert_eq!(rep.verdict, Verdict::NotFlat);
    let v = &rep.violations[0];
    assert!(v.slot.starts_with("T("), "{}", v.slot);
    assert!(v.magnitude > 0.0);
}

#[test]
fn engel_verdict_is_invariant_under_frame_changes() {
    let (s, x, y) = engel_coordinate_frame();
    let swapped = engel_flatness(&sr(vec![y.clone(), x.clone()]), &cfg()).unwrap();
    assert_eq!(swapped.verdict, Verdict::FlatProven);
    let (r1, r2) = rotate_pair(&x, &y, &frac(3, 5), &frac(4, 5));
    assert_eq!(engel_flatness(&sr(vec![r1, r2]), &cfg()).unwrap().verdict, Verdict::FlatProven);
    let bent = x.scale(&s.chart().parse("1+x^2").unwrap());
    let a = engel_flatness(&sr(vec![bent.clone(), y.clone()]), &cfg()).unwrap();
    let b = engel_flatness(&sr(vec![y.clone(), bent.clone()]), &cfg()).unwrap();
    let c = engel_flatness(&sr(vec![bent.neg(), y.neg()]), &cfg()).unwrap();
    assert_eq!(a.verdict, b.verdict);
    assert_eq!(a.verdict, c.verdict);
}

#[test]
fn engel_rejects_other_growth() {
    let s = coords(&["x", "y", "z", "w"]);
    let x = s.field(&["1", "0", "0", "0"]).unwrap();
    let y = s.field(&["0", "1", "x", "0"]).unwrap();
    assert!(engel_flatness(&sr(vec![x, y]), &cfg()).is_err());
}

// ------------------------------------------------------------ contact

fn heisenberg() -> (Arc<Space>, VectorField, VectorField) {
    let s = coords(&["x", "y", "z"]);
    let x = s.field(&["1", "0", "-y/2"]).unwrap();
    let y = s.field(&["0", "1", "x/2"]).unwrap();
    (s, x, y)
}

fn su2() -> SubRiemannian {
    let s = Space::constant_structure(&["X", "Y", "Z"], &[(0, 1, 2, int(1)), (1, 2, 0, int(1)), (2, 0, 1, int(1))])
        .unwrap();
    sr(vec![s.basis_field(0), s.basis_field(1)])
}

#[test]
fn heisenberg_normalization() {
    let (s, x, y) = heisenberg();
    let d = contact_normalize(&sr(vec![x.clone(), y.clone()]), true, &cfg()).unwrap();
    let c = s.chart();
    let expected = [c.parse("y/2").unwrap(), c.parse("-x/2").unwrap(), Expr::int(1)];
    let sign = if d.theta.comps()[2] == Expr::int(1) { 1 } else { -1 };
    for (a, b) in d.theta.comps().iter().zip(&expected) {
        assert_eq!(a, &b.scale(&int(sign)));
    }
    assert_eq!(d.lambda, vec![1.0]);
    assert_eq!(d.reeb.comps(), &[Expr::zero(), Expr::zero(), Expr::int(sign)][..]);
    // J X_1 = ±X_2.
    assert!(d.j[(0, 0)].is_zero());
    assert_eq!(d.j[(1, 0)].constant_value().map(|v| v.clone() * v), Some(int(1)));
    assert_eq!(d.theta.pair(&d.reeb), Expr::int(1));
    for f in [&x, &y] {
        assert!(d.theta.d(&d.reeb, f).unwrap().is_zero());
    }
}

#[test]
fn heisenberg_connection_vanishes_horizontally() {
    let (_, x, y) = heisenberg();
    let d = contact_normalize(&sr(vec![x, y]), true, &cfg()).unwrap();
    let c = contact_connection(&d);
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..2 {
                assert!(c.nabla_prime.gamma[i][j][k].is_zero());
            }
        }
    }
}

#[test]
fn contact_certifier_verdicts() {
    let (_, x, y) = heisenberg();
    let t = Instant::now();
    assert_eq!(contact_flatness(&sr(vec![x, y]), &cfg()).unwrap().verdict, Verdict::FlatProven);
    assert!(t.elapsed().as_secs() < 30);
    let rep = contact_flatness(&su2(), &cfg()).unwrap();
    assert_eq!(rep.verdict, Verdict::NotFlat);
    assert!(rep.violations.iter().any(|v| v.slot.starts_with("R(")));
}

#[test]
fn su2_reeb_field_is_third_direction() {
    let d = contact_normalize(&su2(), true, &cfg()).unwrap();
    assert_eq!(d.lambda, vec![1.0]);
    let z = d.reeb.comps();
    assert!(z[0].is_zero() && z[1].is_zero());
    assert_eq!(z[2].constant_value().map(|v| v.clone() * v), Some(int(1)));
    // Brute-force curvature of the certified connection is a nonzero constant.
    let c = contact_connection(&d);
    let r = frame_curvature(&c.nabla_prime);
    assert!(r[0][1].iter().flatten().any(|e| e.constant_value().is_some_and(|v| !v.is_zero())));
}

/// Classical 3D contact invariants (chi matrix entries, kappa) at `p`, computed from brackets alone.
fn contact_invariants(f1: &VectorField, f2: &VectorField, p: &[f64]) -> [f64; 4] {
    let w = f2.bracket(f1).unwrap();
    let base = Frame::new(vec![f1.clone(), f2.clone(), w.clone()]).unwrap();
    let a0 = base.expand(&f1.bracket(&w).unwrap())[2].clone();
    let b0 = base.expand(&f2.bracket(&w).unwrap())[2].clone();
    let f0 = w.sub(&f1.scale(&b0)).add(&f2.scale(&a0));
    let reeb = Frame::new(vec![f1.clone(), f2.clone(), f0.clone()]).unwrap();
    let c01 = reeb.expand(&f1.bracket(&f0).unwrap());
    let c02 = reeb.expand(&f2.bracket(&f0).unwrap());
    let ev = |e: &Expr| e.eval(p).unwrap();
    let kappa =
        ev(&f2.apply(&b0)) + ev(&f1.apply(&a0)) - ev(&b0).powi(2) - ev(&a0).powi(2) + (ev(&c01[1]) - ev(&c02[0])) / 2.0;
    [ev(&c01[0]), ev(&c02[1]), ev(&c01[1]) + ev(&c02[0]), kappa]
}

fn atan_frame() -> (VectorField, VectorField) {
    let chart = Chart::new(&["x", "y", "z"]).unwrap().with_constraint("x").unwrap();
    let s = Space::coordinates(chart);
    let f = "(2*atan(1)+atan(z))";
    let y1 = s.field(&[f, "0", "0"]).unwrap();
    let y2 = s.field(&[&format!("x/((1+z^2)*{f})"), &format!("{f}/x"), &format!("x/(2*{f})")]).unwrap();
    (y1, y2)
}

#[test]
fn contact_invariants_oracle() {
    let (_, x, y) = heisenberg();
    assert!(contact_invariants(&x, &y, &[0.7, 0.3, 0.4]).iter().all(|v| v.abs() < 1e-12));
    // Frozen from an independent computer-algebra evaluation at (7/10, 3/10, 2/5).
    let (y1, y2) = atan_frame();
    let got = contact_invariants(&y1, &y2, &[0.7, 0.3, 0.4]);
    let want = [0.0, 0.0, -0.147154531908882, -0.126289378913485];
    for (g, w) in got.iter().zip(want) {
        assert!((g - w).abs() < 1e-9, "{got:?}");
    }
}

#[test]
fn atan_frame_is_not_flat() {
    // The invariants above are nonzero, so this frame is not locally Heisenberg.
    let (y1, y2) = atan_frame();
    let t = Instant::now();
    let rep = contact_flatness(&sr(vec![y1, y2]), &cfg()).unwrap();
    assert_eq!(rep.verdict, Verdict::NotFlat);
    assert!(t.elapsed().as_secs() < 30);
}

#[test]
fn weighted_heisenberg_is_flat() {
    // [e1, e2] = Z, [e3, e4] = Z/4: spectrum (1, 4).
    let s = Space::constant_structure(&["a", "b", "c", "d", "z"], &[(0, 1, 4, int(1)), (2, 3, 4, frac(1, 4))]).unwrap();
    let fields: Vec<_> = (0..4).map(|i| s.basis_field(i)).collect();
    let structure = sr(fields);
    let d = contact_normalize(&structure, true, &cfg()).unwrap();
    assert_eq!(d.lambda, vec![1.0, 4.0]);
    assert_eq!(d.projections.len(), 2);
    assert_eq!(contact_flatness(&structure, &cfg()).unwrap().verdict, Verdict::FlatProven);
}

#[test]
fn rescaled_contact_frame_is_not_flat() {
    let (s, x, y) = heisenberg();
    let f = s.chart().parse("1+x^2").unwrap();
    let rep = contact_flatness(&sr(vec![x.scale(&f), y.scale(&f)]), &cfg()).unwrap();
    assert_eq!(rep.verdict, Verdict::NotFlat);
}

#[test]
fn contact_connection_is_metric_on_e() {
    let (s, x, y) = heisenberg();
    let f = s.chart().parse("1+x^2").unwrap();
    let d = contact_normalize(&sr(vec![x.scale(&f), y]), true, &cfg()).unwrap();
    let c = contact_connection(&d);
    // Orthonormal frame: compatibility is antisymmetry of Γ in the E-slots.
    for i in 0..3 {
        for j in 0..2 {
            for k in 0..2 {
                let r = &c.nabla_prime.gamma[i][j][k] + &c.nabla_prime.gamma[i][k][j];
                assert!(is_zero(&r, s.chart(), &cfg()).unwrap().is_zero(), "Γ[{i}][{j}][{k}]");
            }
        }
    }
}

#[test]
fn varying_spectrum_is_undecided() {
    let s = coords(&["x", "y", "u", "v", "z"]);
    let x1 = s.field(&["1", "0", "0", "0", "-y/2"]).unwrap();
    let y1 = s.field(&["0", "1", "0", "0", "x/2"]).unwrap();
    let x2 = s.field(&["0", "0", "1", "0", "-(1+x^2)*v/2"]).unwrap();
    let y2 = s.field(&["0", "0", "0", "1", "(1+x^2)*u/2"]).unwrap();
    let rep = contact_flatness(&sr(vec![x1, y1, x2, y2]), &cfg()).unwrap();
    assert_eq!(rep.verdict, Verdict::Undecided);
}

// ------------------------------------------------------------ (2,3,5)

fn cartan_frame() -> (Arc<Space>, VectorField, VectorField) {
    let s = coords(&["x", "y", "z", "u", "v"]);
    let x1 = s.field(&["1", "0", "0", "0", "0"]).unwrap();
    let x2 = s.field(&["0", "1", "x", "x^2/2", "x*y"]).unwrap();
    (s, x1, x2)
}

fn free235_constant() -> SubRiemannian {
    let alg = CarnotAlgebra::free_nilpotent(2, 3).unwrap();
    let names: Vec<&str> = alg.names().iter().map(|s| s.as_str()).collect();
    let brackets: Vec<_> = alg.nonzero_brackets();
    let s = Space::constant_structure(&names, &brackets).unwrap();
    sr(vec![s.basis_field(0), s.basis_field(1)])
}

#[test]
fn model_torsion_matches_listed_components() {
    let t = ModelTorsion::from_algebra(&free235_model());
    // T(X_2, X_1) = Z, T(Z, X_1) = Y_1, T(Z, X_2) = Y_2.
    assert_eq!(t.get(1, 0, 2), &int(1));
    assert_eq!(t.get(2, 0, 3), &int(1));
    assert_eq!(t.get(2, 1, 4), &int(1));
    let nonzero = (0..5).flat_map(|i| (0..5).flat_map(move |j| (0..5).map(move |k| (i, j, k))));
    assert_eq!(nonzero.filter(|&(i, j, k)| !t.get(i, j, k).is_zero()).count(), 6);
    // Same algebra as free(2,3) with the last basis element negated.
    let free = CarnotAlgebra::free_nilpotent(2, 3).unwrap();
    let sign = [1i64, 1, 1, 1, -1];
    let m = free235_model();
    for i in 0..5 {
        for j in 0..5 {
            for k in 0..5 {
                assert_eq!(m.constant(i, j, k), free.constant(i, j, k) * int(sign[i] * sign[j] * sign[k]));
            }
        }
    }
}

#[test]
fn free235_data_collapses_to_brackets() {
    let s = free235_constant();
    let d = g235_canonical_data(&s, Y2Reading::Verbatim).unwrap();
    let f = &d.bracket_frame;
    assert_eq!(d.z.comps(), f.field(2).comps());
    assert_eq!(d.y1.comps(), f.field(3).comps());
    assert_eq!(d.y2.comps(), f.field(4).comps());
    assert!(d.warnings.is_empty());
    let c = g235_connection(&d);
    assert!(c.gamma.iter().flatten().flatten().all(Zero::is_zero));
}

#[test]
fn structure_constants_are_antisymmetric() {
    let (s, x1, x2) = cartan_frame();
    let bent = x1.scale(&s.chart().parse("1+y^2").unwrap());
    let d = g235_canonical_data(&sr(vec![bent, x2]), Y2Reading::Verbatim).unwrap();
    for i in 1..=5 {
        for j in 1..=5 {
            for k in 1..=5 {
                assert_eq!(d.c(i, j, k), &-d.c(j, i, k));
            }
        }
    }
}

#[test]
fn free235_is_flat() {
    assert_eq!(g235_flatness(&free235_constant(), &cfg()).unwrap().verdict, Verdict::FlatProven);
    let (_, x1, x2) = cartan_frame();
    assert_eq!(g235_flatness(&sr(vec![x1, x2]), &cfg()).unwrap().verdict, Verdict::FlatProven);
}

#[test]
fn perturbed_235_is_not_flat() {
    let (s, x1, x2) = cartan_frame();
    let bent = x1.scale(&s.chart().parse("1+y^2").unwrap());
    let rep = g235_flatness(&sr(vec![bent, x2]), &cfg()).unwrap();
    assert_eq!(rep.verdict, Verdict::NotFlat);
    assert!(!rep.violations.is_empty());
    // Constant structure with an extra [e0, e2] = e2 + ... term (Jacobi holds).
    let brackets = [(0, 1, 2, int(1)), (0, 2, 3, int(1)), (1, 2, 4, int(1)), (0, 2, 2, int(1)), (0, 4, 4, int(1))];
    let s = Space::constant_structure(&["a", "b", "c", "d", "e"], &brackets).unwrap();
    let rep = g235_flatness(&sr(vec![s.basis_field(0), s.basis_field(1)]), &cfg()).unwrap();
    assert_eq!(rep.verdict, Verdict::NotFlat);
}

#[test]
fn connection_preserves_layers_and_metric() {
    let (s, x1, x2) = cartan_frame();
    let bent = x1.scale(&s.chart().parse("1+y^2").unwrap());
    let d = g235_canonical_data(&sr(vec![bent, x2]), Y2Reading::Verbatim).unwrap();
    let c = g235_connection(&d);
    for i in 0..5 {
        for j in 0..5 {
            for k in 0..5 {
                if d.graded.layer_of(j) != d.graded.layer_of(k) || j == 2 {
                    assert!(c.gamma[i][j][k].is_zero());
                }
                assert!((&c.gamma[i][j][k] + &c.gamma[i][k][j]).is_zero());
            }
        }
    }
}

fn rotation_distance(x1: &VectorField, x2: &VectorField, reading: Y2Reading) -> f64 {
    let a = g235_canonical_data(&sr(vec![x1.clone(), x2.clone()]), reading).unwrap();
    let (r1, r2) = rotate_pair(x1, x2, &frac(3, 5), &frac(4, 5));
    let b = g235_canonical_data(&sr(vec![r1, r2]), reading).unwrap();
    let points = sr(vec![x1.clone(), x2.clone()]).sample_points(&cfg()).unwrap();
    let mut worst: f64 = 0.0;
    for p in &points {
        worst = worst.max(span_distance(std::slice::from_ref(&a.z), std::slice::from_ref(&b.z), p).unwrap());
        worst = worst.max(span_distance(&[a.y1.clone(), a.y2.clone()], &[b.y1.clone(), b.y2.clone()], p).unwrap());
    }
    worst
}

#[test]
fn spans_are_rotation_invariant() {
    let (_, x1, x2) = cartan_frame();
    assert!(rotation_distance(&x1, &x2, Y2Reading::Verbatim) < 1e-8);
    let (r1, r2) = rotate_pair(&x1, &x2, &frac(3, 5), &frac(4, 5));
    assert_eq!(g235_flatness(&sr(vec![r1, r2]), &cfg()).unwrap().verdict, Verdict::FlatProven);
}

#[test]
fn y2_readings_on_a_curved_structure() {
    let (s, x1, x2) = cartan_frame();
    let bent = x1.scale(&s.chart().parse("1+y^2").unwrap());
    let (r1, r2) = rotate_pair(&x1, &x2, &frac(3, 5), &frac(4, 5));
    for pair in [vec![x1.clone(), x2.clone()], vec![r1, r2], vec![bent, x2]] {
        let a = g235_flatness_with(&sr(pair.clone()), Y2Reading::Verbatim, &cfg()).unwrap();
        let b = g235_flatness_with(&sr(pair), Y2Reading::Symmetric, &cfg()).unwrap();
        assert_eq!(a.verdict, b.verdict);
    }
}
