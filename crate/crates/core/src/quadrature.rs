//! Tensor-product quadrature over parameter boxes and a fixed-order
//! pairwise summation.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::hypersurface::{Axis, AxisKind};
use crate::linalg::{Vector, MAX_DIM};

/// Gauss–Legendre nodes (ascending) and weights on `[-1, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for k in 0..m.div_ceil(2) {
        let mut z = libm::cos(PI * (k as f64 + 0.75) / (m as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(m, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if libm::fabs(dz) <= 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(m, z);
        dp = if d != 0.0 { d } else { dp };
        let wk = 2.0 / ((1.0 - z * z) * dp * dp);
        x[k] = -z;
        x[m - 1 - k] = z;
        w[k] = wk;
        w[m - 1 - k] = wk;
    }
    if m % 2 == 1 {
        x[m / 2] = 0.0;
    }
    (x, w)
}

/// `P_m(z)` and `P_m'(z)` by the three-term recurrence.
fn legendre(m: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, m as f64 * (z * p1 - p0) / (z * z - 1.0))
}

/// One-dimensional rule for `axis` with `m` nodes.
pub fn axis_rule(axis: &Axis, m: usize) -> (Vec<f64>, Vec<f64>) {
    let len = axis.hi - axis.lo;
    match axis.kind {
        AxisKind::Periodic => (
            (0..m).map(|j| axis.lo + len * j as f64 / m as f64).collect(),
            vec![len / m as f64; m],
        ),
        AxisKind::Compact => {
            let (x, w) = gauss_legendre(m);
            (
                x.iter().map(|t| axis.lo + 0.5 * len * (t + 1.0)).collect(),
                w.iter().map(|v| 0.5 * len * v).collect(),
            )
        }
    }
}

/// Tensor grid; node index is row-major with the last axis fastest.
#[derive(Clone, Debug)]
pub struct TensorGrid {
    rules: Vec<(Vec<f64>, Vec<f64>)>,
    len: usize,
}

impl TensorGrid {
    pub fn new(axes: &[Axis], counts: &[usize]) -> Self {
        let rules: Vec<_> = axes.iter().zip(counts).map(|(a, &m)| axis_rule(a, m)).collect();
        let len = rules.iter().map(|r| r.0.len()).product();
        Self { rules, len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn node(&self, mut idx: usize) -> (Vector, f64) {
        let mut u = [0.0; MAX_DIM];
        let mut w = 1.0;
        for (b, (x, wx)) in self.rules.iter().enumerate().rev() {
            let m = x.len();
            let j = idx % m;
            idx /= m;
            u[b] = x[j];
            w *= wx[j];
        }
        (u, w)
    }
}

/// Sum by a balanced binary tree over the index range; the association
/// depends only on the length.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().fold(0.0, |a, b| a + b);
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exactness() {
        for m in 1..=20 {
            let (x, w) = gauss_legendre(m);
            assert!(x.windows(2).all(|p| p[0] < p[1]));
            for k in 0..2 * m {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * libm::pow(*x, k as f64)).sum();
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k + 1) as f64 };
                assert!(libm::fabs(q - exact) < 1e-13, "m={m} k={k}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn sphere_area() {
        let grid = TensorGrid::new(&[Axis::polar(), Axis::periodic()], &[12, 8]);
        assert_eq!(grid.len(), 96);
        let s: f64 = (0..grid.len())
            .map(|i| {
                let (u, w) = grid.node(i);
                w * libm::sin(u[0])
            })
            .sum();
        assert!(libm::fabs(s - 4.0 * PI) < 1e-12);
    }

    #[test]
    fn pairwise_is_fixed_order() {
        let v: Vec<f64> = (0..1000).map(|i| 1.0 / (i as f64 + 1.0)).collect();
        assert_eq!(pairwise_sum(&v), pairwise_sum(&v.clone()));
        assert!(libm::fabs(pairwise_sum(&v) - v.iter().sum::<f64>()) < 1e-12);
    }
}
