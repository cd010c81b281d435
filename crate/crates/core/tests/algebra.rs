#![allow(clippy::needless_range_loop)]

use minkowski_core::hypersurface::{lie_term_pullback, mean_curvatures_charpoly, newton_transforms, ShapeData};
use minkowski_core::identity::{umbilicity_defect, umbilicity_from_eigenvalues};
use minkowski_core::linalg::{self, Matrix, MAX_DIM};
use minkowski_core::oracle::brute_force_lie_term;
use proptest::prelude::*;

fn square(n: usize) -> impl Strategy<Value = Matrix> {
    proptest::collection::vec(-1.0..1.0f64, MAX_DIM * MAX_DIM).prop_map(move |v| {
        let mut m = [[0.0; MAX_DIM]; MAX_DIM];
        for r in 0..n {
            for c in 0..n {
                m[r][c] = v[r * MAX_DIM + c];
            }
        }
        m
    })
}

fn symmetric(n: usize) -> impl Strategy<Value = Matrix> {
    square(n).prop_map(move |mut m| {
        for r in 0..n {
            for c in 0..r {
                m[r][c] = m[c][r];
            }
        }
        m
    })
}

fn sized<S: Strategy<Value = Matrix>>(max: usize, f: fn(usize) -> S) -> impl Strategy<Value = (usize, Matrix)> {
    (1..=max).prop_flat_map(move |n| (Just(n), f(n)))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + b.abs())
}

#[test]
fn injected_diagonal_shape() {
    let mut a = [[0.0; MAX_DIM]; MAX_DIM];
    a[0][0] = 1.0;
    a[1][1] = 2.0;
    a[2][2] = 3.0;
    let s = ShapeData::from_matrix(&a, 3);
    assert!((s.h[1] - 2.0).abs() < 1e-14);
    assert!((s.h[2] - 11.0 / 3.0).abs() < 1e-14);
    assert!((s.h[3] - 6.0).abs() < 1e-14);
    for (k, v) in [5.0, 4.0, 3.0].iter().enumerate() {
        assert!((s.newton[1][k][k] - v).abs() < 1e-14);
    }
}

#[test]
fn lie_term_small_cases() {
    let mut a = [[0.0; MAX_DIM]; MAX_DIM];
    a[0] = [0.3, -1.2, 0.0, 0.0, 0.0, 0.0];
    a[1] = [0.7, 2.1, 0.0, 0.0, 0.0, 0.0];
    let f = 1.7;
    let fid = {
        let mut m = [[0.0; MAX_DIM]; MAX_DIM];
        m[0][0] = f;
        m[1][1] = f;
        m
    };
    let v = lie_term_pullback(&fid, &a, 2, 1).unwrap();
    assert!((v - f * (0.3 + 2.1)).abs() < 1e-14);
    let mut s = [[0.0; MAX_DIM]; MAX_DIM];
    s[0] = [1.0, 2.0, 0.0, 0.0, 0.0, 0.0];
    s[1] = [-4.0, 0.5, 0.0, 0.0, 0.0, 0.0];
    assert!((lie_term_pullback(&s, &a, 2, 0).unwrap() - 1.5).abs() < 1e-14);
    assert_eq!(lie_term_pullback(&s, &a, 2, 2).unwrap(), 0.0);
    assert!(lie_term_pullback(&s, &a, 2, 3).is_err());
}

#[test]
fn umbilicity_examples() {
    assert_eq!(umbilicity_from_eigenvalues(&[2.5, 2.5, 2.5], 3), (0.0, 0.0));
    assert_eq!(umbilicity_from_eigenvalues(&[1.0, -1.0], 2), (4.0, 4.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn lie_term_routes_agree((n, s) in sized(5, square), seed in symmetric(5), f in -2.0..2.0f64) {
        let mut a = seed;
        for r in 0..MAX_DIM {
            for c in 0..MAX_DIM {
                if r >= n || c >= n {
                    a[r][c] = 0.0;
                }
            }
        }
        let shape = ShapeData::from_matrix(&a, n);
        let id = linalg::identity(n);
        let mut fid = id;
        for (r, row) in fid.iter_mut().enumerate().take(n) {
            row[r] = f;
        }
        for i in 0..n {
            let bf = brute_force_lie_term(&s, &a, n, i);
            let comb = lie_term_pullback(&s, &a, n, i).unwrap();
            let tr = linalg::trace_product(&shape.newton[i], &s, n);
            prop_assert!(rel(comb, bf) <= 1e-10);
            prop_assert!(rel(tr, bf) <= 1e-10);
            let ci = linalg::binomial(n, i) * shape.h[i];
            prop_assert!(rel(lie_term_pullback(&id, &a, n, i).unwrap(), (n - i) as f64 * ci) <= 1e-10);
            prop_assert!(rel(lie_term_pullback(&fid, &a, n, i).unwrap(), (n - i) as f64 * f * ci) <= 1e-10);
        }
    }

    #[test]
    fn newton_identities((n, a) in sized(6, symmetric)) {
        let shape = ShapeData::from_matrix(&a, n);
        let h = shape.h;
        let t = newton_transforms(&a, &h, n, n + 1);
        for i in 0..n {
            let c = linalg::binomial(n, i);
            prop_assert!(rel(linalg::trace(&t[i], n), (n - i) as f64 * c * h[i]) <= 1e-10);
            let c1 = linalg::binomial(n, i + 1);
            prop_assert!(rel(linalg::trace_product(&t[i], &a, n), (i + 1) as f64 * c1 * h[i + 1]) <= 1e-10);
        }
        prop_assert!(linalg::max_abs(&t[n], n) <= 1e-10);
        let cp = mean_curvatures_charpoly(&a, n);
        for i in 0..=n {
            prop_assert!(rel(cp[i], h[i]) <= 1e-10);
        }
    }

    #[test]
    fn umbilicity_sides_agree((n, a) in sized(6, symmetric)) {
        let (lhs, rhs) = umbilicity_defect(&a, n);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (lhs.abs() + 1.0));
        prop_assert!(rhs >= -1e-12);
    }
}
