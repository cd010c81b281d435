//! Brute-force reference for the pulled-back Lie term: the permutation sum
//! defining `(η_1∧…∧η_n)∘(B_1∧…∧B_n)`, evaluated on pulled-back rows.

use alloc::vec::Vec;

use crate::linalg::{self, Matrix, MAX_DIM};

/// All permutations of `0..n` (Heap's algorithm).
pub fn permutations(n: usize) -> Vec<[usize; MAX_DIM]> {
    let mut p = [0usize; MAX_DIM];
    for (i, v) in p.iter_mut().enumerate() {
        *v = i;
    }
    let mut out = Vec::new();
    let mut c = [0usize; MAX_DIM];
    out.push(p);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                p.swap(0, i);
            } else {
                p.swap(c[i], i);
            }
            out.push(p);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

#[derive(Clone, Copy)]
enum Endo {
    LieB,
    Mirror,
    Identity,
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

/// `(1/(i!(n−i)!))·α_n∘(L_P(B^{n−i})∧1^i)` on `N`, expanded over all `n!`
/// permutations. `η_k∘B` pulls back to the unit row `e^k`, `η_k∘1` to row
/// `k` of `A`, `η_k∘L_PB` to row `k` of `S`. The Leibniz rule puts `L_P` on
/// each of the `n−i` mirror factors; by symmetry of the permutation sum
/// every placement contributes the same amount.
pub fn brute_force_lie_term(s: &Matrix, a: &Matrix, n: usize, i: usize) -> f64 {
    if i >= n {
        return 0.0;
    }
    let mut endos = [Endo::Identity; MAX_DIM];
    endos[0] = Endo::LieB;
    for e in endos.iter_mut().take(n - i).skip(1) {
        *e = Endo::Mirror;
    }
    let mut total = 0.0;
    for sigma in permutations(n) {
        let mut m = [[0.0; MAX_DIM]; MAX_DIM];
        for k in 0..n {
            match endos[sigma[k]] {
                Endo::LieB => m[k][..n].copy_from_slice(&s[k][..n]),
                Endo::Mirror => m[k][k] = 1.0,
                Endo::Identity => m[k][..n].copy_from_slice(&a[k][..n]),
            }
        }
        total += linalg::det(&m, n);
    }
    (n - i) as f64 * total / (factorial(i) * factorial(n - i))
}
