#![allow(clippy::needless_range_loop)]

use minkowski_core::fields::Field;
use minkowski_core::geometry::Manifold;
use minkowski_core::hypersurface::{self, frame_at, surface_point, AxisKind, Immersion};
use minkowski_core::identity::{self, point_quantities, IdentityId, PointQuantities, Scene, Sequential};
use minkowski_core::linalg::{self, binomial, MAX_DIM};
use minkowski_core::Result;
use proptest::prelude::*;

fn cone() -> Manifold {
    Manifold::einstein_cone(1.0 / 3f64.sqrt()).unwrap()
}

/// Position-field scenes covering every ambient class.
fn fixtures() -> Vec<(&'static str, Manifold, Immersion)> {
    let e = Manifold::euclidean(3).unwrap();
    let w = Manifold::warped(3, "1 + r^2/4").unwrap();
    let s3 = Manifold::space_form(3, 1.0).unwrap();
    let s4 = Manifold::space_form(4, 1.0).unwrap();
    let h4 = Manifold::space_form(4, -1.0).unwrap();
    let c = cone();
    vec![
        (
            "ellipsoid",
            e.clone(),
            Immersion::ellipsoid(&e, &[1.0, 1.3, 0.7]).unwrap(),
        ),
        (
            "torus",
            e.clone(),
            Immersion::torus_of_revolution(&e, 2.0, 0.5).unwrap(),
        ),
        (
            "graph torus",
            w.clone(),
            Immersion::graph_torus(&w, 2.0, 0.5, 0.6).unwrap(),
        ),
        (
            "clifford S3",
            s3.clone(),
            Immersion::clifford_torus(&s3, std::f64::consts::FRAC_1_SQRT_2).unwrap(),
        ),
        ("clifford S4", s4.clone(), Immersion::clifford_torus(&s4, 0.6).unwrap()),
        (
            "perturbed S4",
            s4.clone(),
            Immersion::perturbed_sphere(&s4, 0.8, 0.1, "w1*w2 + w3^3").unwrap(),
        ),
        (
            "perturbed H4",
            h4.clone(),
            Immersion::perturbed_sphere(&h4, 0.8, 0.1, "w1*w2 + w3^3").unwrap(),
        ),
        ("cone sphere", c.clone(), Immersion::geodesic_sphere(&c, 1.0).unwrap()),
        (
            "cone perturbed",
            c.clone(),
            Immersion::perturbed_sphere(&c, 1.0, 0.1, "w1*w4 + w3").unwrap(),
        ),
    ]
}

fn param_point(imm: &Immersion, t: &[f64]) -> [f64; MAX_DIM] {
    let mut u = [0.0; MAX_DIM];
    for (b, axis) in imm.axes().iter().enumerate() {
        let s = match axis.kind {
            AxisKind::Periodic => t[b],
            AxisKind::Compact => 0.05 + 0.9 * t[b],
        };
        u[b] = axis.lo + (axis.hi - axis.lo) * s;
    }
    u
}

fn position_scene(m: &Manifold, s: &Immersion) -> Scene {
    Scene::new(
        m.clone(),
        s.clone(),
        Field::position(m).unwrap(),
        IdentityId::all(s.n()),
    )
}

fn sum(q: &PointQuantities, id: IdentityId) -> f64 {
    q.terms(id).iter().sum()
}

fn mass(q: &PointQuantities, id: IdentityId) -> f64 {
    q.terms(id).iter().map(|v| v.abs()).sum::<f64>()
}

#[test]
fn round_sphere_shape() {
    let m = Manifold::euclidean(3).unwrap();
    for rho in [0.5, 1.0, 2.5] {
        let s = Immersion::geodesic_sphere(&m, rho).unwrap();
        let sh = hypersurface::shape_operator(&s, &m, &[0.7, 2.0]).unwrap();
        assert!((sh.a[0][0] - 1.0 / rho).abs() < 1e-13);
        assert!((sh.a[1][1] - 1.0 / rho).abs() < 1e-13);
        assert!(sh.a[0][1].abs() < 1e-13);
        assert!((sh.h[1] - 1.0 / rho).abs() < 1e-13);
        assert!((sh.h[2] - 1.0 / (rho * rho)).abs() < 1e-13);
        let f = frame_at(&s, &m, &[0.7, 2.0]).unwrap();
        assert!((f.area_density - rho * rho * 0.7f64.sin()).abs() < 1e-13);
    }
}

#[test]
fn unit_ellipsoid_is_unit_sphere() {
    let m = Manifold::euclidean(3).unwrap();
    let e = Immersion::ellipsoid(&m, &[1.0, 1.0, 1.0]).unwrap();
    let s = Immersion::geodesic_sphere(&m, 1.0).unwrap();
    for u in [[0.4, 1.0], [2.0, 5.5]] {
        let a = frame_at(&e, &m, &u).unwrap();
        let b = frame_at(&s, &m, &u).unwrap();
        for k in 0..3 {
            assert!((a.x[k] - b.x[k]).abs() < 1e-15);
            assert!((a.nu[k] - b.nu[k]).abs() < 1e-15);
        }
        assert!((a.area_density - b.area_density).abs() < 1e-15);
    }
}

#[test]
fn clifford_torus_is_isoparametric() {
    let m = Manifold::space_form(3, 1.0).unwrap();
    let c = Immersion::clifford_torus(&m, std::f64::consts::FRAC_1_SQRT_2).unwrap();
    for t in [[0.1, 0.2], [0.5, 0.9], [0.77, 0.31]] {
        let sh = hypersurface::shape_operator(&c, &m, &param_point(&c, &t)).unwrap();
        assert!((sh.principal[0] + 1.0).abs() < 1e-9);
        assert!((sh.principal[1] - 1.0).abs() < 1e-9);
        assert!(sh.h[1].abs() < 1e-9);
        assert!((sh.h[2] + 1.0).abs() < 1e-9);
    }
}

#[test]
fn flat_ambient_traces_vanish() {
    let m = Manifold::euclidean(3).unwrap();
    let s = Immersion::ellipsoid(&m, &[1.0, 1.3, 0.7]).unwrap();
    let sc = position_scene(&m, &s);
    let q = point_quantities(&sc, &[0.8, 1.9]).unwrap();
    assert_eq!((q.t1, q.t2, q.t3), (0.0, 0.0, 0.0));
}

#[test]
fn sphere_integrands_vanish_pointwise() {
    let m = Manifold::euclidean(3).unwrap();
    let s = Immersion::geodesic_sphere(&m, 1.7).unwrap();
    let sc = position_scene(&m, &s);
    let q = point_quantities(&sc, &[1.1, 0.3]).unwrap();
    assert!(sum(&q, IdentityId::Pos(0)).abs() < 1e-14);
    let s4 = Manifold::space_form(4, 1.0).unwrap();
    let gs = Immersion::geodesic_sphere(&s4, 0.9).unwrap();
    let q = point_quantities(&position_scene(&s4, &gs), &[1.0, 2.0, 0.5]).unwrap();
    assert!(sum(&q, IdentityId::Ein(1)).abs() < 1e-13);
}

#[test]
fn rotation_field_lie_term_is_traceless() {
    let m = Manifold::euclidean(3).unwrap();
    let s = Immersion::ellipsoid(&m, &[1.0, 1.3, 0.7]).unwrap();
    let rot = Field::coordinate(&m, &["x2", "-x1", "0"], false).unwrap();
    let sc = Scene::new(m, s, rot, vec![IdentityId::Gen(0)]).with_levels(identity::uniform_levels(&[16, 32], 2));
    let q = point_quantities(&sc, &[0.8, 1.9]).unwrap();
    assert!(q.lie[0].abs() < 1e-14);
    let r = identity::convergence_sweep(&sc, &Sequential).unwrap();
    assert!(r.all_passed(), "{r:?}");
}

#[test]
fn reversed_evaluation_order_is_bit_identical() {
    struct Reversed;
    impl identity::Executor for Reversed {
        fn map(
            &self,
            count: usize,
            f: &(dyn Fn(usize) -> Result<PointQuantities> + Sync),
        ) -> Vec<Result<PointQuantities>> {
            let mut v: Vec<_> = (0..count).rev().map(|i| (i, f(i))).collect();
            v.sort_by_key(|p| p.0);
            v.into_iter().map(|p| p.1).collect()
        }
    }
    let m = Manifold::euclidean(3).unwrap();
    let s = Immersion::torus_of_revolution(&m, 2.0, 0.5).unwrap();
    let f = Field::random_polynomial(&m, 11, 3, 1.0).unwrap();
    let sc = Scene::new(m, s, f, vec![IdentityId::Gen(0), IdentityId::Gen(1)])
        .with_levels(identity::uniform_levels(&[12, 24], 2));
    let a = identity::convergence_sweep(&sc, &Sequential).unwrap();
    let b = identity::convergence_sweep(&sc, &Reversed).unwrap();
    assert_eq!(a, b);
}

#[test]
fn flip_keeps_relative_residuals() {
    for (name, m, s) in fixtures().into_iter().filter(|f| f.2.n() == 2) {
        let field = Field::random_polynomial(&m, 5, 2, 1.0).unwrap();
        let ids = vec![IdentityId::Gen(0), IdentityId::Gen(1), IdentityId::Gen(2)];
        let lv = identity::uniform_levels(&[10, 14], 2);
        let a = Scene::new(m.clone(), s.clone(), field.clone(), ids.clone()).with_levels(lv.clone());
        let b = Scene::new(m.clone(), s.clone().with_flip(true), field, ids).with_levels(lv);
        let ra = identity::convergence_sweep(&a, &Sequential).unwrap();
        let rb = identity::convergence_sweep(&b, &Sequential).unwrap();
        for (x, y) in ra.identities.iter().zip(&rb.identities) {
            for (lx, ly) in x.levels.iter().zip(&y.levels) {
                assert!(
                    (lx.relative - ly.relative).abs() <= 1e-12,
                    "{name} {}: {} vs {}",
                    x.id,
                    lx.relative,
                    ly.relative
                );
                assert!((lx.normalization - ly.normalization).abs() <= 1e-12 * lx.normalization.max(1.0));
            }
        }
    }
}

#[test]
fn classifier_on_geodesic_sphere() {
    let m = Manifold::euclidean(3).unwrap();
    let s = Immersion::geodesic_sphere(&m, 1.3).unwrap();
    let sc = position_scene(&m, &s).with_levels(identity::uniform_levels(&[8, 16], 2));
    let c = identity::classify_constant_curvature_case(&sc, &Sequential).unwrap();
    assert_eq!(c.case, identity::Case::Umbilic);
    assert_eq!(c.conclusion_holds, Some(true));
    assert!(c.umbilicity_rhs <= 1e-8);
    assert!(c.max_h1_sq_minus_h2 <= 1e-8);
}

#[test]
fn classifier_on_perturbed_sphere() {
    let m = Manifold::euclidean(3).unwrap();
    let s = Immersion::perturbed_sphere(&m, 1.0, 0.1, "cos(u1)*sin(u2)").unwrap();
    let sc = position_scene(&m, &s).with_levels(identity::uniform_levels(&[8, 16], 2));
    let c = identity::classify_constant_curvature_case(&sc, &Sequential).unwrap();
    assert_eq!(c.case, identity::Case::NotConstant);
    assert!(c.std_h1 > 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn shape_operator_matches_normal_differences(t in proptest::collection::vec(0.0..1.0f64, 4), idx in 0usize..9) {
        let fx = fixtures();
        let (_, m, s) = &fx[idx % fx.len()];
        let n = s.n();
        let d = n + 1;
        let u = param_point(s, &t);
        let sp = surface_point(s, m, &u).unwrap();
        let h = 1e-5;
        let mut fr = sp.frame.clone();
        for b in 0..n {
            let mut up = u;
            let mut um = u;
            up[b] += h;
            um[b] -= h;
            let np = frame_at(s, m, &up).unwrap().nu;
            let nm = frame_at(s, m, &um).unwrap().nu;
            for a in 0..d {
                let mut v = (np[a] - nm[a]) / (2.0 * h);
                for i in 0..d {
                    for j in 0..d {
                        v += sp.curvature.gamma[a][i][j] * sp.frame.jacobian[i][b] * sp.frame.nu[j];
                    }
                }
                fr.nabla_nu[b][a] = v;
            }
        }
        let oracle = fr.raw_shape_matrix(&sp.curvature.g);
        let scale = 1.0 + linalg::max_abs(&sp.shape.a, n);
        for k in 0..n {
            for b in 0..n {
                prop_assert!((oracle[k][b] - sp.shape.a[k][b]).abs() <= 1e-5 * scale);
            }
        }
        // ν unit and normal, frame orthonormal
        let g = &sp.curvature.g;
        prop_assert!((linalg::inner(g, &sp.frame.nu, &sp.frame.nu, d) - 1.0).abs() <= 1e-10);
        for k in 0..n {
            let ek = sp.frame.tangent(k);
            prop_assert!(linalg::inner(g, &ek, &sp.frame.nu, d).abs() <= 1e-10);
            for l in 0..n {
                let e = linalg::inner(g, &ek, &sp.frame.tangent(l), d);
                let delta = if k == l { 1.0 } else { 0.0 };
                prop_assert!((e - delta).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn position_field_reductions(t in proptest::collection::vec(0.0..1.0f64, 4), idx in 0usize..9) {
        let fx = fixtures();
        let (name, m, s) = &fx[idx % fx.len()];
        let n = s.n();
        let sc = position_scene(m, s);
        let q = point_quantities(&sc, &param_point(s, &t)).unwrap();
        for i in 0..3u8 {
            let (g, p) = (IdentityId::Gen(i), IdentityId::Pos(i));
            prop_assert!((sum(&q, g) - sum(&q, p)).abs() <= 1e-8 * (1.0 + mass(&q, p)), "{name} GEN{i}");
        }
        prop_assert!(q.proposition_defect() <= 1e-7, "{name}: {}", q.proposition_defect());
        let nf = n as f64;
        if q.einstein_defect <= 1e-7 {
            let ratio = nf * (nf - 1.0);
            let (e1, p1) = (sum(&q, IdentityId::Ein(1)), sum(&q, IdentityId::Pos(1)));
            prop_assert!((p1 - ratio * e1).abs() <= 1e-8 * (1.0 + mass(&q, IdentityId::Pos(1))), "{name}");
        }
        if q.space_form_defect <= 1e-7 {
            let c = q.ric_nu_nu / nf;
            prop_assert!((q.t3 + c * q.p_nu * nf * q.h[1]).abs() <= 1e-8);
            prop_assert!((q.t3 - q.p_nu * q.t1).abs() <= 1e-8);
            if n >= 3 {
                let k = 3.0 * binomial(n, 3);
                let (x, p2) = (sum(&q, IdentityId::Csc2X), sum(&q, IdentityId::Pos(2)));
                prop_assert!((p2 - k * x).abs() <= 1e-8 * (1.0 + mass(&q, IdentityId::Pos(2))), "{name}");
            }
        }
    }
}
