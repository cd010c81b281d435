//! Small dense kernels on fixed-capacity arrays with a runtime dimension.
//!
//! Everything here works for dimensions up to [`MAX_DIM`]; entries beyond the
//! active dimension are ignored and left at zero.

use crate::scalar::Scalar;

pub const MAX_DIM: usize = 6;

pub type Vector<T = f64> = [T; MAX_DIM];
pub type Matrix<T = f64> = [[T; MAX_DIM]; MAX_DIM];

#[inline]
pub fn zeros<T: Scalar>() -> Vector<T> {
    [T::zero(); MAX_DIM]
}

#[inline]
pub fn zero_matrix<T: Scalar>() -> Matrix<T> {
    [[T::zero(); MAX_DIM]; MAX_DIM]
}

pub fn identity(n: usize) -> Matrix {
    let mut m = [[0.0; MAX_DIM]; MAX_DIM];
    for (i, row) in m.iter_mut().enumerate().take(n) {
        row[i] = 1.0;
    }
    m
}

#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

pub fn matmul(a: &Matrix, b: &Matrix, n: usize) -> Matrix {
    let mut c = [[0.0; MAX_DIM]; MAX_DIM];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

pub fn transpose(a: &Matrix, n: usize) -> Matrix {
    let mut t = [[0.0; MAX_DIM]; MAX_DIM];
    for i in 0..n {
        for j in 0..n {
            t[j][i] = a[i][j];
        }
    }
    t
}

pub fn trace(a: &Matrix, n: usize) -> f64 {
    (0..n).map(|i| a[i][i]).sum()
}

/// `tr(a b)` without forming the product.
pub fn trace_product(a: &Matrix, b: &Matrix, n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for k in 0..n {
            s += a[i][k] * b[k][i];
        }
    }
    s
}

pub fn max_abs(a: &Matrix, n: usize) -> f64 {
    let mut m: f64 = 0.0;
    for row in a.iter().take(n) {
        for v in row.iter().take(n) {
            m = m.max(abs(*v));
        }
    }
    m
}

/// `⟨u, v⟩_g` for a metric matrix `g`.
pub fn inner(g: &Matrix, u: &Vector, v: &Vector, n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        let mut gi = 0.0;
        for j in 0..n {
            gi += g[i][j] * v[j];
        }
        s += u[i] * gi;
    }
    s
}

pub fn mat_vec(a: &Matrix, v: &Vector, n: usize) -> Vector {
    let mut out = [0.0; MAX_DIM];
    for i in 0..n {
        for j in 0..n {
            out[i] += a[i][j] * v[j];
        }
    }
    out
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det(m: &Matrix, n: usize) -> f64 {
    let mut a = *m;
    let mut d = 1.0;
    for col in 0..n {
        let mut piv = col;
        let mut best = abs(a[col][col]);
        for (r, row) in a.iter().enumerate().take(n).skip(col + 1) {
            let v = abs(row[col]);
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best == 0.0 {
            return 0.0;
        }
        if piv != col {
            a.swap(piv, col);
            d = -d;
        }
        let p = a[col][col];
        d *= p;
        for r in col + 1..n {
            let factor = a[r][col] / p;
            if factor == 0.0 {
                continue;
            }
            for c in col..n {
                a[r][c] -= factor * a[col][c];
            }
        }
    }
    d
}

/// Lower Cholesky factor of a symmetric positive definite matrix, or `None`
/// when a pivot is not strictly positive.
pub fn cholesky<T: Scalar>(g: &Matrix<T>, n: usize) -> Option<Matrix<T>> {
    let mut l = zero_matrix::<T>();
    for i in 0..n {
        for j in 0..=i {
            let mut s = g[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if !(s.value() > 0.0) {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Some(l)
}

/// Solves `g x = b` given the Cholesky factor of `g`.
pub fn cholesky_solve<T: Scalar>(l: &Matrix<T>, b: &Vector<T>, n: usize) -> Vector<T> {
    let mut y = zeros::<T>();
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i][k] * y[k];
        }
        y[i] = s / l[i][i];
    }
    let mut x = zeros::<T>();
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k][i] * x[k];
        }
        x[i] = s / l[i][i];
    }
    x
}

/// Inverse of a symmetric positive definite matrix.
pub fn spd_inverse(g: &Matrix, n: usize) -> Option<Matrix> {
    let l = cholesky(g, n)?;
    let mut inv = [[0.0; MAX_DIM]; MAX_DIM];
    for j in 0..n {
        let mut e = [0.0; MAX_DIM];
        e[j] = 1.0;
        let col = cholesky_solve(&l, &e, n);
        for i in 0..n {
            inv[i][j] = col[i];
        }
    }
    Some(inv)
}

/// Inverse of a lower-triangular matrix.
pub fn lower_inverse(l: &Matrix, n: usize) -> Matrix {
    let mut inv = [[0.0; MAX_DIM]; MAX_DIM];
    for j in 0..n {
        inv[j][j] = 1.0 / l[j][j];
        for i in j + 1..n {
            let mut s = 0.0;
            for k in j..i {
                s -= l[i][k] * inv[k][j];
            }
            inv[i][j] = s / l[i][i];
        }
    }
    inv
}

/// Eigenvalues and eigenvectors of a symmetric matrix by cyclic Jacobi
/// rotations. Eigenvalues are sorted ascending; column `k` of the returned
/// matrix is the eigenvector of eigenvalue `k`.
pub fn symmetric_eigen(a: &Matrix, n: usize) -> (Vector, Matrix) {
    let mut m = *a;
    let mut v = identity(n);
    let scale = max_abs(a, n);
    if n > 1 && scale > 0.0 {
        for _sweep in 0..64 {
            let mut off = 0.0;
            for p in 0..n {
                for q in p + 1..n {
                    off += m[p][q] * m[p][q];
                }
            }
            if libm::sqrt(off) <= 1e-17 * scale {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = m[p][q];
                    if abs(apq) <= 1e-300 {
                        continue;
                    }
                    let theta = (m[q][q] - m[p][p]) / (2.0 * apq);
                    let sgn = if theta >= 0.0 { 1.0 } else { -1.0 };
                    let t = sgn / (abs(theta) + libm::sqrt(theta * theta + 1.0));
                    let c = 1.0 / libm::sqrt(t * t + 1.0);
                    let s = t * c;
                    for k in 0..n {
                        let mkp = m[k][p];
                        let mkq = m[k][q];
                        m[k][p] = c * mkp - s * mkq;
                        m[k][q] = s * mkp + c * mkq;
                    }
                    for k in 0..n {
                        let mpk = m[p][k];
                        let mqk = m[q][k];
                        m[p][k] = c * mpk - s * mqk;
                        m[q][k] = s * mpk + c * mqk;
                    }
                    for row in v.iter_mut().take(n) {
                        let vkp = row[p];
                        let vkq = row[q];
                        row[p] = c * vkp - s * vkq;
                        row[q] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }
    let mut order = [0usize; MAX_DIM];
    for (i, o) in order.iter_mut().enumerate() {
        *o = i;
    }
    order[..n].sort_by(|&i, &j| m[i][i].total_cmp(&m[j][j]));
    let mut vals = [0.0; MAX_DIM];
    let mut vecs = [[0.0; MAX_DIM]; MAX_DIM];
    for (k, &src) in order.iter().take(n).enumerate() {
        vals[k] = m[src][src];
        for i in 0..n {
            vecs[i][k] = v[i][src];
        }
    }
    (vals, vecs)
}

pub fn symmetric_eigenvalues(a: &Matrix, n: usize) -> Vector {
    symmetric_eigen(a, n).0
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    libm::round(r)
}

/// Elementary symmetric polynomials `e_0..e_n` of the first `n` values.
pub fn elementary_symmetric(vals: &[f64], n: usize) -> [f64; MAX_DIM + 1] {
    let mut e = [0.0; MAX_DIM + 1];
    e[0] = 1.0;
    for &a in vals.iter().take(n) {
        for k in (1..=n).rev() {
            e[k] += a * e[k - 1];
        }
    }
    e
}

/// Symmetric part `(a + aᵀ)/2` and the largest entry of the skew part.
pub fn symmetrize(a: &Matrix, n: usize) -> (Matrix, f64) {
    let mut s = *a;
    let mut defect: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let m = 0.5 * (a[i][j] + a[j][i]);
            defect = defect.max(0.5 * abs(a[i][j] - a[j][i]));
            s[i][j] = m;
            s[j][i] = m;
        }
    }
    (s, defect)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_rows(rows: &[&[f64]]) -> Matrix {
        let mut m = [[0.0; MAX_DIM]; MAX_DIM];
        for (i, r) in rows.iter().enumerate() {
            for (j, v) in r.iter().enumerate() {
                m[i][j] = *v;
            }
        }
        m
    }

    #[test]
    fn det_with_pivoting() {
        let m = from_rows(&[&[0.0, 2.0, 1.0], &[1.0, 0.0, 0.0], &[3.0, 1.0, 4.0]]);
        // expansion along the second row
        assert!(abs(det(&m, 3) - -(2.0 * 4.0 - 1.0 * 1.0)) < 1e-14);
    }

    #[test]
    fn jacobi_recovers_known_spectrum() {
        let m = from_rows(&[&[2.0, 1.0, 0.0], &[1.0, 2.0, 1.0], &[0.0, 1.0, 2.0]]);
        let (vals, vecs) = symmetric_eigen(&m, 3);
        let r2 = libm::sqrt(2.0);
        let expect = [2.0 - r2, 2.0, 2.0 + r2];
        for k in 0..3 {
            assert!(abs(vals[k] - expect[k]) < 1e-13);
            let mut col = [0.0; MAX_DIM];
            for i in 0..3 {
                col[i] = vecs[i][k];
            }
            let mv = mat_vec(&m, &col, 3);
            for i in 0..3 {
                assert!(abs(mv[i] - vals[k] * col[i]) < 1e-13);
            }
        }
    }

    #[test]
    fn cholesky_inverse_roundtrip() {
        let g = from_rows(&[&[4.0, 1.0, 0.5], &[1.0, 3.0, 0.2], &[0.5, 0.2, 2.0]]);
        let inv = spd_inverse(&g, 3).unwrap();
        let p = matmul(&g, &inv, 3);
        let id = identity(3);
        for i in 0..3 {
            for j in 0..3 {
                assert!(abs(p[i][j] - id[i][j]) < 1e-14);
            }
        }
        let l = cholesky(&g, 3).unwrap();
        let li = lower_inverse(&l, 3);
        let p = matmul(&l, &li, 3);
        for i in 0..3 {
            for j in 0..3 {
                assert!(abs(p[i][j] - id[i][j]) < 1e-14);
            }
        }
    }

    #[test]
    fn not_positive_definite() {
        let g = from_rows(&[&[1.0, 2.0], &[2.0, 1.0]]);
        assert!(cholesky(&g, 2).is_none());
    }

    #[test]
    fn binomials_and_elementary() {
        assert_eq!(binomial(4, 2), 6.0);
        assert_eq!(binomial(2, 3), 0.0);
        assert_eq!(binomial(5, 0), 1.0);
        let e = elementary_symmetric(&[1.0, 2.0, 3.0], 3);
        assert_eq!(&e[..4], &[1.0, 6.0, 11.0, 6.0]);
    }
}
