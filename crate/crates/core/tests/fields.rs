#![allow(clippy::needless_range_loop)]

use minkowski_core::fields::{self, field_eval, Field};
use minkowski_core::geometry::{self, Manifold};
use minkowski_core::linalg::MAX_DIM;
use minkowski_core::selftest::position_metrics;
use minkowski_core::Error;
use proptest::prelude::*;

fn unit(m: &Manifold, x: &[f64; MAX_DIM], v: &[f64]) -> [f64; MAX_DIM] {
    let d = m.dim();
    let g = m.metric(x);
    let mut out = [0.0; MAX_DIM];
    out[..d].copy_from_slice(&v[..d]);
    let n2 = minkowski_core::linalg::inner(&g, &out, &out, d);
    for c in &mut out[..d] {
        *c /= n2.sqrt();
    }
    out
}

#[test]
fn euclidean_position_field() {
    let m = Manifold::euclidean(3).unwrap();
    let p = Field::position(&m).unwrap();
    let jet = field_eval(&p, &m, &[0.5, -1.0, 2.0]).unwrap();
    assert_eq!(&jet.p[..3], &[0.5, -1.0, 2.0]);
    assert_eq!(jet.f, 1.0);
    assert_eq!(&jet.df[..3], &[0.0; 3]);
    for a in 0..3 {
        for b in 0..3 {
            assert_eq!(jet.nabla[a][b], if a == b { 1.0 } else { 0.0 });
        }
    }
    let r = fields::position_identity_residuals(&p, &m, &[0.5, -1.0, 2.0], &[0.0, 1.0, 0.0]).unwrap();
    assert_eq!(r.max(), 0.0);
    assert_eq!(r.constant_factor, Some(0.0));
}

#[test]
fn rotation_field_is_not_conformal() {
    let m = Manifold::euclidean(3).unwrap();
    let rot = Field::coordinate(&m, &["x2", "-x1", "0"], false).unwrap();
    let d = fields::conformal_factor_defect(&rot, &m, &[0.3, 0.1, -0.7]).unwrap();
    assert!((d - 1.0).abs() < 1e-14);
    assert!(matches!(
        fields::position_identity_residuals(&rot, &m, &[0.3, 0.1, -0.7], &[1.0, 0.0, 0.0]),
        Err(Error::NotAPositionField)
    ));
}

#[test]
fn space_form_factor_closed_form() {
    for c in [1.0, -1.0] {
        let m = Manifold::space_form(3, c).unwrap();
        let p = Field::position(&m).unwrap();
        let x = [0.2, -0.1, 0.3];
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let jet = field_eval(&p, &m, &x).unwrap();
        assert!((jet.f - (1.0 - c * r2) / (1.0 + c * r2)).abs() < 1e-14);
        // geodesic radius r: f = cos r (c = 1) or cosh r (c = −1)
        let r = if c > 0.0 {
            2.0 * r2.sqrt().atan()
        } else {
            2.0 * r2.sqrt().atanh()
        };
        let expect = if c > 0.0 { r.cos() } else { r.cosh() };
        assert!((jet.f - expect).abs() < 1e-14);
    }
}

#[test]
fn warped_factor_is_derivative_of_warp() {
    let m = Manifold::warped(3, "1 + r^2/4").unwrap();
    let p = Field::position(&m).unwrap();
    let x = [1.3, 0.9, 2.0];
    let jet = field_eval(&p, &m, &x).unwrap();
    assert!((jet.p[0] - (1.0 + 1.3 * 1.3 / 4.0)).abs() < 1e-15);
    assert!((jet.f - 1.3 / 2.0).abs() < 1e-14);
    assert!((jet.df[0] - 0.5).abs() < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn catalog_position_fields_are_conformal(u in proptest::collection::vec(0.0..1.0f64, MAX_DIM),
                                             v in proptest::collection::vec(-1.0..1.0f64, MAX_DIM),
                                             idx in 0usize..8) {
        let ms = position_metrics();
        let m = &ms[idx % ms.len()];
        let x = m.sample_point(&u);
        prop_assume!(v[..m.dim()].iter().map(|a| a * a).sum::<f64>() > 1e-3);
        let p = Field::position(m).unwrap();
        prop_assert!(fields::conformal_factor_defect(&p, m, &x).unwrap() <= 1e-8);
        let r = fields::position_identity_residuals(&p, m, &x, &unit(m, &x, &v)).unwrap();
        prop_assert!(r.max() <= 1e-7, "{:?}", r);
    }

    #[test]
    fn random_field_derivative_matches_differences(u in proptest::collection::vec(0.0..1.0f64, MAX_DIM),
                                                   seed in 0u64..1000, idx in 0usize..8) {
        let ms = position_metrics();
        let m = &ms[idx % ms.len()];
        let d = m.dim();
        let field = Field::random_polynomial(m, seed, 3, 1.0).unwrap();
        let x = m.sample_point(&u);
        let curv = geometry::riemann(m, &x).unwrap();
        let jet = fields::field_eval_with(&field, m, &curv, &x);
        let h = 1e-5;
        let mut scale: f64 = 1.0;
        for a in 0..d {
            for b in 0..d {
                scale = scale.max(jet.nabla[a][b].abs());
            }
        }
        for b in 0..d {
            let mut xp = x;
            let mut xm = x;
            xp[b] += h;
            xm[b] -= h;
            let pp = field.components(m, &xp);
            let pm = field.components(m, &xm);
            for a in 0..d {
                let mut fd = (pp[a] - pm[a]) / (2.0 * h);
                for c in 0..d {
                    fd += curv.gamma[a][b][c] * jet.p[c];
                }
                prop_assert!((jet.nabla[a][b] - fd).abs() <= 1e-6 * scale);
            }
        }
        // f·id + traceless symmetric + skew reassembles ∇P
        let frame = curv.orthonormal_frame();
        let nf = fields::nabla_in_frame(&jet, &frame, &curv.g, d);
        let f = (0..d).map(|i| nf[i][i]).sum::<f64>() / d as f64;
        prop_assert!((f - jet.f).abs() <= 1e-12 * scale);
        for i in 0..d {
            for j in 0..d {
                let sym = 0.5 * (nf[i][j] + nf[j][i]) - if i == j { f } else { 0.0 };
                let skew = 0.5 * (nf[i][j] - nf[j][i]);
                let id = if i == j { f } else { 0.0 };
                prop_assert!((id + sym + skew - nf[i][j]).abs() <= 1e-14 * scale);
            }
        }
    }
}
