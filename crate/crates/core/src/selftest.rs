//! Invariant battery run by the `selftest` command.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fields::{self, Field};
use crate::geometry::{self, Manifold};
use crate::hypersurface::{lie_term_pullback, mean_curvatures_charpoly, newton_transforms, ShapeData};
use crate::identity::umbilicity_defect;
use crate::linalg::{self, abs, Matrix, Vector, MAX_DIM};
use crate::oracle::brute_force_lie_term;

pub const SUITES: [&str; 6] = [
    "curvature",
    "space-form",
    "position",
    "lie-term",
    "newton",
    "umbilicity",
];

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub checks: usize,
    /// Largest observed error divided by its tolerance.
    pub worst_ratio: f64,
    pub failures: Vec<String>,
}

impl SuiteReport {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            checks: 0,
            worst_ratio: 0.0,
            failures: Vec::new(),
        }
    }

    fn check(&mut self, what: impl FnOnce() -> String, err: f64, tol: f64) {
        self.checks += 1;
        let ratio = if err.is_finite() { err / tol } else { f64::INFINITY };
        self.worst_ratio = self.worst_ratio.max(ratio);
        if !(err <= tol) && self.failures.len() < 20 {
            self.failures.push(format!("{}: error {err:e} > {tol:e}", what()));
        }
    }

    fn error(&mut self, what: String) {
        self.checks += 1;
        self.worst_ratio = f64::INFINITY;
        if self.failures.len() < 20 {
            self.failures.push(what);
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Catalog metrics exercised by the curvature suite.
pub fn catalog_metrics() -> Vec<Manifold> {
    let third = libm::sqrt(1.0 / 3.0);
    vec![
        Manifold::euclidean(3).unwrap(),
        Manifold::euclidean(4).unwrap(),
        Manifold::space_form(3, 1.0).unwrap(),
        Manifold::space_form(3, -1.0).unwrap(),
        Manifold::space_form(4, 1.0).unwrap(),
        Manifold::space_form(4, -1.0).unwrap(),
        Manifold::warped(3, "1 + r^2/4").unwrap(),
        Manifold::warped(4, "sinh(r)").unwrap(),
        Manifold::product_spheres(0.8).unwrap(),
        Manifold::einstein_cone(third).unwrap(),
        Manifold::expression(
            3,
            &[
                "1 + x1^2",
                "x1*x2/4",
                "0",
                "x1*x2/4",
                "2 + sin(x3)",
                "0",
                "0",
                "0",
                "exp(x2/3)",
            ],
        )
        .unwrap(),
    ]
}

/// Catalog metrics carrying a position field.
pub fn position_metrics() -> Vec<Manifold> {
    catalog_metrics()
        .into_iter()
        .filter(Manifold::has_position_field)
        .collect()
}

fn unit_point(rng: &mut ChaCha8Rng, d: usize) -> Vector {
    let mut u = [0.0; MAX_DIM];
    for v in u.iter_mut().take(d) {
        *v = rng.random::<f64>();
    }
    u
}

fn label(m: &Manifold) -> String {
    match m.catalog_id() {
        Some(id) => {
            let p: Vec<String> = id.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
            format!("{}({})", id.name, p.join(", "))
        }
        None => "manifold".into(),
    }
}

pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let mut m = [[0.0; MAX_DIM]; MAX_DIM];
    for row in m.iter_mut().take(n) {
        for v in row.iter_mut().take(n) {
            *v = rng.random_range(-1.0..=1.0);
        }
    }
    m
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let mut m = random_matrix(rng, n);
    for r in 0..n {
        for c in 0..r {
            m[r][c] = m[c][r];
        }
    }
    m
}

fn curvature_suite(rng: &mut ChaCha8Rng, samples: usize) -> SuiteReport {
    let mut rep = SuiteReport::new("curvature");
    for m in catalog_metrics() {
        let d = m.dim();
        for _ in 0..samples {
            let x = m.sample_point(&unit_point(rng, d));
            match geometry::riemann(&m, &x) {
                Ok(c) => {
                    rep.check(
                        || format!("{} symmetries at {:?}", label(&m), &x[..d]),
                        c.symmetry_defect(),
                        1e-8,
                    );
                    let expect_einstein = matches!(
                        m.model(),
                        geometry::MetricModel::ProductSpheres { .. } | geometry::MetricModel::EinsteinCone { .. }
                    );
                    if expect_einstein {
                        rep.check(|| format!("{} Einstein defect", label(&m)), c.einstein_defect(), 1e-7);
                    }
                }
                Err(e) => rep.error(format!("{}: {e}", label(&m))),
            }
        }
    }
    rep
}

fn space_form_suite(rng: &mut ChaCha8Rng, samples: usize) -> SuiteReport {
    let mut rep = SuiteReport::new("space-form");
    let mut cases: Vec<(Manifold, f64)> = Vec::new();
    for d in [3, 4] {
        for c in [1.0, -1.0, 0.25] {
            cases.push((Manifold::space_form(d, c).unwrap(), c));
        }
        cases.push((Manifold::warped(d, "sin(r)").unwrap(), 1.0));
        cases.push((Manifold::warped(d, "sinh(r)").unwrap(), -1.0));
        cases.push((Manifold::warped(d, "r").unwrap(), 0.0));
    }
    for (m, c) in cases {
        let d = m.dim();
        for _ in 0..samples {
            let mut x = m.sample_point(&unit_point(rng, d));
            if matches!(m.model(), geometry::MetricModel::Warped { .. }) {
                // stay below the first zero of sin
                x[0] = 0.2 + 2.6 * rng.random::<f64>();
            }
            match geometry::curvature_model_residual(&m, &x, c) {
                Ok(r) => rep.check(|| format!("{} at {:?}", label(&m), &x[..d]), r, 1e-8),
                Err(e) => rep.error(format!("{}: {e}", label(&m))),
            }
        }
    }
    rep
}

/// A random unit vector at `x`.
pub fn random_unit(rng: &mut ChaCha8Rng, m: &Manifold, x: &Vector) -> Vector {
    let d = m.dim();
    let g = m.metric(x);
    loop {
        let mut v = [0.0; MAX_DIM];
        for c in v.iter_mut().take(d) {
            *c = rng.random_range(-1.0..=1.0);
        }
        let n2 = linalg::inner(&g, &v, &v, d);
        if n2 > 1e-6 {
            let s = 1.0 / libm::sqrt(n2);
            for c in v.iter_mut().take(d) {
                *c *= s;
            }
            return v;
        }
    }
}

fn position_suite(rng: &mut ChaCha8Rng, samples: usize) -> SuiteReport {
    let mut rep = SuiteReport::new("position");
    for m in position_metrics() {
        let field = Field::position(&m).unwrap();
        let d = m.dim();
        for _ in 0..samples {
            let x = m.sample_point(&unit_point(rng, d));
            let v = random_unit(rng, &m, &x);
            match fields::position_identity_residuals(&field, &m, &x, &v) {
                Ok(r) => rep.check(|| format!("{} at {:?}", label(&m), &x[..d]), r.max(), 1e-7),
                Err(e) => rep.error(format!("{}: {e}", label(&m))),
            }
        }
    }
    rep
}

fn lie_term_suite(rng: &mut ChaCha8Rng, samples: usize) -> SuiteReport {
    let mut rep = SuiteReport::new("lie-term");
    for k in 0..samples {
        let n = 1 + k % 5;
        let s = random_matrix(rng, n);
        let a = random_symmetric(rng, n);
        let shape = ShapeData::from_matrix(&a, n);
        let f: f64 = rng.random_range(-2.0..=2.0);
        let mut fid = [[0.0; MAX_DIM]; MAX_DIM];
        for (i, row) in fid.iter_mut().enumerate().take(n) {
            row[i] = f;
        }
        for i in 0..n {
            let bf = brute_force_lie_term(&s, &a, n, i);
            let comb = lie_term_pullback(&s, &a, n, i).unwrap();
            let tr = linalg::trace_product(&shape.newton[i], &s, n);
            let scale = 1.0 + abs(bf);
            rep.check(
                || format!("n={n} i={i} minor sum vs permutation sum"),
                abs(comb - bf) / scale,
                1e-10,
            );
            rep.check(
                || format!("n={n} i={i} trace vs permutation sum"),
                abs(tr - bf) / scale,
                1e-10,
            );
            let red = lie_term_pullback(&fid, &a, n, i).unwrap();
            let expect = (n - i) as f64 * f * linalg::binomial(n, i) * shape.h[i];
            rep.check(
                || format!("n={n} i={i} S = f·id"),
                abs(red - expect) / (1.0 + abs(expect)),
                1e-10,
            );
        }
    }
    rep
}

fn newton_suite(rng: &mut ChaCha8Rng, samples: usize) -> SuiteReport {
    let mut rep = SuiteReport::new("newton");
    for k in 0..samples {
        let n = 1 + k % 6;
        let a = random_symmetric(rng, n);
        let shape = ShapeData::from_matrix(&a, n);
        let h = shape.h;
        let t = newton_transforms(&a, &h, n, n + 1);
        let cp = mean_curvatures_charpoly(&a, n);
        for i in 0..=n {
            rep.check(
                || format!("n={n} eigen vs characteristic H_{i}"),
                abs(cp[i] - h[i]) / (1.0 + abs(h[i])),
                1e-10,
            );
        }
        for i in 0..n {
            let expect = (n - i) as f64 * linalg::binomial(n, i) * h[i];
            let tri = linalg::trace(&t[i], n);
            rep.check(
                || format!("n={n} tr T_{i}"),
                abs(tri - expect) / (1.0 + abs(expect)),
                1e-10,
            );
            let expect = (i + 1) as f64 * linalg::binomial(n, i + 1) * h[i + 1];
            let tra = linalg::trace_product(&t[i], &a, n);
            rep.check(
                || format!("n={n} tr(T_{i} A)"),
                abs(tra - expect) / (1.0 + abs(expect)),
                1e-10,
            );
        }
        rep.check(|| format!("n={n} T_n = 0"), linalg::max_abs(&t[n], n), 1e-10);
    }
    rep
}

fn umbilicity_suite(rng: &mut ChaCha8Rng, samples: usize) -> SuiteReport {
    let mut rep = SuiteReport::new("umbilicity");
    for k in 0..samples {
        let n = 1 + k % 6;
        let a = random_symmetric(rng, n);
        let (lhs, rhs) = umbilicity_defect(&a, n);
        rep.check(|| format!("n={n} lhs vs rhs"), abs(lhs - rhs) / (abs(lhs) + 1.0), 1e-12);
        let tr = linalg::trace(&a, n);
        let tr2 = linalg::trace_product(&a, &a, n);
        let direct = n as f64 * tr2 - tr * tr;
        rep.check(
            || format!("n={n} lhs vs n·tr A² − (tr A)²"),
            abs(lhs - direct) / (abs(lhs) + 1.0),
            1e-12,
        );
    }
    rep
}

/// Runs the named suites (all when `only` is empty) with draws from `seed`.
pub fn run(seed: u64, only: &[&str], samples: usize) -> Result<Vec<SuiteReport>, String> {
    for s in only {
        if !SUITES.contains(s) {
            return Err(format!("unknown suite '{s}'; known: {}", SUITES.join(", ")));
        }
    }
    let mut out = Vec::new();
    for (k, name) in SUITES.iter().enumerate() {
        if !only.is_empty() && !only.contains(name) {
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
        out.push(match *name {
            "curvature" => curvature_suite(&mut rng, samples),
            "space-form" => space_form_suite(&mut rng, samples),
            "position" => position_suite(&mut rng, samples),
            "lie-term" => lie_term_suite(&mut rng, samples),
            "newton" => newton_suite(&mut rng, samples),
            _ => umbilicity_suite(&mut rng, samples),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_suites_green_small() {
        for rep in run(7, &[], 10).unwrap() {
            assert!(rep.passed(), "{}: {:?}", rep.name, rep.failures);
            assert!(rep.checks > 0);
        }
    }

    #[test]
    fn unknown_suite_rejected() {
        assert!(run(0, &["nope"], 1).is_err());
    }

    #[test]
    fn seeds_reproduce() {
        assert_eq!(run(42, &["newton"], 12), run(42, &["newton"], 12));
    }
}
