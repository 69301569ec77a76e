use std::sync::Arc;

use flatcert::geometry::{annihilator, lie_derivative_metric, Frame, Metric, OneForm, Space, VectorField};
use flatcert::riemann::{
    compatibility_residuals, frame_curvature, frame_torsion, levi_civita, riemann_tensor, FrameConnection,
};
use flatcert::symexpr::is_zero;
use flatcert::{Chart, Expr, SampleConfig};
use num_traits::Zero;
use proptest::prelude::*;

fn r3() -> Arc<Space> {
    Space::coordinates(Chart::new(&["x", "y", "z"]).unwrap())
}

fn vanishes(e: &Expr, space: &Space) -> bool {
    is_zero(e, space.chart(), &SampleConfig { samples: 8, ..SampleConfig::default() }).unwrap().is_zero()
}

fn field_vanishes(v: &VectorField) -> bool {
    v.comps().iter().all(|c| vanishes(c, v.space()))
}

/// Small polynomial in x, y, z as text.
fn poly_text() -> impl Strategy<Value = String> {
    proptest::collection::vec((-2i32..=2, 0u32..=2, 0u32..=1, 0u32..=1), 1..=3).prop_map(|terms| {
        terms.iter().map(|(c, a, b, d)| format!("({c})*x^{a}*y^{b}*z^{d}")).collect::<Vec<_>>().join(" + ")
    })
}

/// Polynomial or a rational function with a positive denominator.
fn coeff_text() -> impl Strategy<Value = String> {
    prop_oneof![
        3 => poly_text(),
        1 => (poly_text(), linear_text()).prop_map(|(a, b)| format!("({a})/(1 + ({b})^2)")),
    ]
}

fn field_in(space: &Arc<Space>, comps: &[String]) -> VectorField {
    let refs: Vec<&str> = comps.iter().map(String::as_str).collect();
    space.field(&refs).unwrap()
}

fn field3() -> impl Strategy<Value = [String; 3]> {
    [coeff_text(), coeff_text(), coeff_text()]
}

fn poly_field3() -> impl Strategy<Value = [String; 3]> {
    [poly_text(), poly_text(), poly_text()]
}

fn linear_text() -> impl Strategy<Value = String> {
    (-2i32..=2, -2i32..=2, -2i32..=2).prop_map(|(a, b, c)| format!("({a}) + ({b})*x + ({c})*y"))
}

/// Unit lower-triangular frame: always independent.
fn triangular_frame(space: &Arc<Space>, below: &[String; 3]) -> Frame {
    let e0 = field_in(space, &["1".into(), below[0].clone(), below[1].clone()]);
    let e1 = field_in(space, &["0".into(), "1".into(), below[2].clone()]);
    Frame::new(vec![e0, e1, space.basis_field(2)]).unwrap()
}

#[test]
fn bracket_of_coordinate_fields() {
    let s = r3();
    let x = s.field(&["1", "0", "-y/2"]).unwrap();
    let y = s.field(&["0", "1", "x/2"]).unwrap();
    assert_eq!(x.bracket(&y).unwrap().comps(), &[Expr::zero(), Expr::zero(), Expr::int(1)]);
}

#[test]
fn contact_form_annihilates_heisenberg_plane() {
    let s = r3();
    let x = s.field(&["1", "0", "-y/2"]).unwrap();
    let y = s.field(&["0", "1", "x/2"]).unwrap();
    let forms = annihilator(&[x.clone(), y.clone()]).unwrap();
    assert_eq!(forms.len(), 1);
    assert!(forms[0].pair(&x).is_zero() && forms[0].pair(&y).is_zero());
    assert!(!forms[0].d(&x, &y).unwrap().is_zero());
}

#[test]
fn euclidean_fields_are_killing() {
    let s = Space::coordinates(Chart::new(&["x", "y"]).unwrap());
    let g = Metric::euclidean(&s);
    let rot = s.field(&["-y", "x"]).unwrap();
    let (ex, ey) = (s.basis_field(0), s.basis_field(1));
    for (a, b) in [(&ex, &ex), (&ex, &ey), (&ey, &ey)] {
        assert!(lie_derivative_metric(&rot, &g, a, b).unwrap().is_zero());
    }
    let dil = s.field(&["x", "y"]).unwrap();
    assert_eq!(lie_derivative_metric(&dil, &g, &ex, &ex).unwrap(), Expr::int(2));
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn bracket_is_antisymmetric_and_satisfies_jacobi(a in poly_field3(), b in poly_field3(), c in field3()) {
        let s = r3();
        let (x, y, z) = (field_in(&s, &a), field_in(&s, &b), field_in(&s, &c));
        prop_assert!(field_vanishes(&x.bracket(&y).unwrap().add(&y.bracket(&x).unwrap())));
        let jac = x.bracket(&y.bracket(&z).unwrap()).unwrap()
            .add(&y.bracket(&z.bracket(&x).unwrap()).unwrap())
            .add(&z.bracket(&x.bracket(&y).unwrap()).unwrap());
        prop_assert!(field_vanishes(&jac));
    }

    #[test]
    fn bracket_leibniz_rule(a in field3(), b in field3(), f in coeff_text()) {
        let s = r3();
        let (x, y) = (field_in(&s, &a), field_in(&s, &b));
        let f = s.chart().parse(&f).unwrap();
        let lhs = x.bracket(&y.scale(&f)).unwrap();
        let rhs = y.scale(&x.apply(&f)).add(&x.bracket(&y).unwrap().scale(&f));
        prop_assert!(field_vanishes(&lhs.sub(&rhs)));
    }

    #[test]
    fn exterior_derivative_is_tensorial(a in poly_field3(), b in poly_field3(), w in field3(), f in coeff_text()) {
        let s = r3();
        let (x, y) = (field_in(&s, &a), field_in(&s, &b));
        let alpha = OneForm::new(&s, w.iter().map(|t| s.chart().parse(t).unwrap()).collect()).unwrap();
        let f = s.chart().parse(&f).unwrap();
        let base = alpha.d(&x, &y).unwrap();
        prop_assert!(vanishes(&(&alpha.d(&x.scale(&f), &y).unwrap() - &(&f * &base)), &s));
        prop_assert!(vanishes(&(&alpha.d(&x, &y.scale(&f)).unwrap() - &(&f * &base)), &s));
        prop_assert!(vanishes(&(&alpha.d(&y, &x).unwrap() + &base), &s));
        // d(df) = 0.
        let df = OneForm::new(&s, (0..3).map(|i| f.diff(i)).collect()).unwrap();
        prop_assert!(vanishes(&df.d(&x, &y).unwrap(), &s));
    }

    #[test]
    fn frame_torsion_and_curvature_are_antisymmetric(below in poly_field3(), g in proptest::collection::vec(poly_text(), 27)) {
        let s = r3();
        let frame = Arc::new(triangular_frame(&s, &below));
        let mut c = FrameConnection::zero(frame);
        for (idx, t) in g.iter().enumerate() {
            c.gamma[idx / 9][(idx / 3) % 3][idx % 3] = s.chart().parse(t).unwrap();
        }
        let t = frame_torsion(&c);
        let r = frame_curvature(&c);
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    prop_assert!((&t[i][j][k] + &t[j][i][k]).is_zero());
                    for l in 0..3 {
                        prop_assert!((&r[i][j][k][l] + &r[j][i][k][l]).is_zero());
                    }
                }
            }
        }
    }

    #[test]
    fn orthonormal_levi_civita_is_compatible_torsion_free_and_bianchi(below in poly_field3()) {
        let s = r3();
        let c = FrameConnection::levi_civita_orthonormal(Arc::new(triangular_frame(&s, &below)));
        let t = frame_torsion(&c);
        prop_assert!(t.iter().flatten().flatten().all(|e| vanishes(e, &s)));
        let r = frame_curvature(&c);
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    // Orthonormal frame: compatibility is Γ^k_ij = −Γ^j_ik.
                    prop_assert!(vanishes(&(&c.gamma[i][j][k] + &c.gamma[i][k][j]), &s));
                    for l in 0..3 {
                        let cyc = &(&r[i][j][k][l] + &r[j][k][i][l]) + &r[k][i][j][l];
                        prop_assert!(vanishes(&cyc, &s));
                        prop_assert!(vanishes(&(&r[i][j][k][l] + &r[i][j][l][k]), &s));
                    }
                }
            }
        }
    }

    #[test]
    fn coordinate_levi_civita_properties(m in proptest::collection::vec(linear_text(), 4)) {
        // g = I + M M^T is positive definite everywhere.
        let plane = Space::coordinates(Chart::new(&["x", "y"]).unwrap());
        let p: Vec<Expr> = m.iter().map(|t| plane.chart().parse(t).unwrap()).collect();
        let entry = |i: usize, j: usize| {
            let d = if i == j { Expr::int(1) } else { Expr::zero() };
            &d + &(&(&p[2 * i] * &p[2 * j]) + &(&p[2 * i + 1] * &p[2 * j + 1]))
        };
        let rows: Vec<Vec<String>> = (0..2).map(|i| (0..2).map(|j| entry(i, j).to_string()).collect()).collect();
        let rows: Vec<Vec<&str>> = rows.iter().map(|r| r.iter().map(String::as_str).collect()).collect();
        let g = Metric::parse(&plane, &rows, &SampleConfig::default()).unwrap();
        let gamma = levi_civita(&g).unwrap();
        prop_assert!(compatibility_residuals(&g, &gamma).iter().all(Zero::is_zero));
        for k in 0..2 {
            prop_assert!((gamma.get(k, 0, 1) - gamma.get(k, 1, 0)).is_zero());
        }
        let r = riemann_tensor(&gamma);
        // Lowered R_lijk = g_lm R^m_ijk is antisymmetric in (l, k).
        let lower = |l: usize, i: usize, j: usize, k: usize| {
            (0..2).fold(Expr::zero(), |acc, mm| &acc + &(g.entry(l, mm) * &r[mm][i][j][k]))
        };
        prop_assert!((&lower(0, 0, 1, 1) + &lower(1, 0, 1, 0)).is_zero());
        prop_assert!(lower(0, 0, 1, 0).is_zero());
        for l in 0..2 {
            for k in 0..2 {
                let cyc = &(&r[l][0][1][k] + &r[l][1][k][0]) + &r[l][k][0][1];
                prop_assert!(cyc.is_zero());
            }
        }
    }
}
