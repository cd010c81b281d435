//! Closed parametric hypersurfaces: adapted frames, unit normal, shape
//! operator, higher mean curvatures, Newton transformations and the
//! pulled-back Lie-derivative term.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};
use core::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::expr::{indexed_names, Formula};
use crate::geometry::{self, param, CatalogId, ChartKind, CurvatureData, Fiber, Manifold, MetricModel};
use crate::jet::{Dual, Jet2};
use crate::linalg::{self, abs, Matrix, Vector, MAX_DIM};
use crate::scalar::Scalar;

/// Smallest admissible eigenvalue of the induced metric.
pub const EPS_RANK: f64 = 1e-12;
/// Shape operators with a larger skew part are rejected.
pub const MAX_SYM_DEFECT: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AxisKind {
    /// Equispaced trapezoid rule over a full period.
    Periodic,
    /// Gauss–Legendre on an interval whose ends carry zero density.
    Compact,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Axis {
    pub kind: AxisKind,
    pub lo: f64,
    pub hi: f64,
}

impl Axis {
    pub const fn periodic() -> Self {
        Self {
            kind: AxisKind::Periodic,
            lo: 0.0,
            hi: 2.0 * PI,
        }
    }

    pub const fn polar() -> Self {
        Self {
            kind: AxisKind::Compact,
            lo: 0.0,
            hi: PI,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Realization {
    /// `center + s·(1 + εh)·ω(u)` in a Cartesian chart.
    CartesianSphere {
        center: Vec<f64>,
        radius: f64,
        perturbation: Option<(f64, Formula)>,
        azimuth_sign: f64,
    },
    Ellipsoid {
        semi_axes: Vec<f64>,
        azimuth_sign: f64,
    },
    Torus {
        major: f64,
        minor: f64,
    },
    /// `S¹(r₁)×S^k(r₂)` in the unit sphere, pushed to the conformal chart by
    /// stereographic projection and scaled by `1/√c`.
    Clifford {
        r1: f64,
        r2: f64,
        scale: f64,
    },
    /// `r = ρ + εh` over the fibre of a polar chart.
    PolarGraph {
        fiber: Fiber,
        rho: f64,
        perturbation: Option<(f64, Formula)>,
    },
    /// Tube `r = r₀ + ρ cos v`, `θ = π/2 − β sin v`, `φ = w`.
    PolarTube {
        r0: f64,
        rho: f64,
        beta: f64,
    },
    Expression {
        components: Vec<Formula>,
    },
}

/// A closed immersion `N^n → M^{n+1}` given on a parameter box.
#[derive(Clone, Debug, PartialEq)]
pub struct Immersion {
    n: usize,
    axes: Vec<Axis>,
    realization: Realization,
    flip: bool,
    catalog_id: CatalogId,
}

fn perturbation_names(n: usize, m: usize) -> Vec<String> {
    let mut names = indexed_names("u", n);
    names.extend(indexed_names("w", m));
    names
}

fn parse_perturbation(h: &str, n: usize, m: usize) -> Result<Formula> {
    let names = perturbation_names(n, m);
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    Formula::parse(h, &names)
}

fn sphere_axes(n: usize) -> Vec<Axis> {
    let mut axes = vec![Axis::polar(); n];
    axes[n - 1] = Axis::periodic();
    axes
}

fn fiber_axes(fiber: &Fiber) -> Vec<Axis> {
    (0..fiber.dim())
        .map(|j| {
            if fiber.is_azimuth(j) {
                Axis::periodic()
            } else {
                Axis::polar()
            }
        })
        .collect()
}

/// `+1` if hyperspherical angles parametrize `S^n` with the outward
/// orientation, `−1` otherwise; flipping the azimuth corrects it.
fn hyperspherical_orientation(n: usize) -> f64 {
    let mut u = [Jet2::<MAX_DIM>::constant(0.0); MAX_DIM];
    for (b, ub) in u.iter_mut().enumerate().take(n) {
        *ub = Jet2::var(0.7 + 0.3 * b as f64, b);
    }
    let w = geometry::hyperspherical(&u[..n]);
    let mut m = [[0.0; MAX_DIM]; MAX_DIM];
    for (a, wa) in w.iter().enumerate() {
        m[a][0] = wa.v;
        for b in 0..n {
            m[a][b + 1] = wa.g[b];
        }
    }
    if linalg::det(&m, n + 1) > 0.0 {
        1.0
    } else {
        -1.0
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

/// Chart radius of the geodesic sphere of radius `ρ` about the origin of
/// the conformal chart.
pub fn conformal_chart_radius(rho: f64, c: f64) -> f64 {
    if c > 0.0 {
        let k = libm::sqrt(c);
        libm::tan(k * rho / 2.0) / k
    } else if c < 0.0 {
        let k = libm::sqrt(-c);
        libm::tanh(k * rho / 2.0) / k
    } else {
        rho / 2.0
    }
}

impl Immersion {
    fn new(n: usize, axes: Vec<Axis>, realization: Realization, name: &str, params: Vec<(String, String)>) -> Self {
        Self {
            n,
            axes,
            realization,
            flip: false,
            catalog_id: CatalogId {
                name: name.into(),
                params,
            },
        }
    }

    fn sphere_realization(
        manifold: &Manifold,
        rho: f64,
        perturbation: Option<(f64, &str)>,
    ) -> Result<(usize, Vec<Axis>, Realization)> {
        check_positive("rho", rho)?;
        let d = manifold.dim();
        let n = d - 1;
        match (manifold.chart(), manifold.model()) {
            (ChartKind::Cartesian, MetricModel::Euclidean | MetricModel::SpaceForm { .. }) => {
                let radius = match manifold.model() {
                    MetricModel::SpaceForm { curvature } => {
                        if *curvature > 0.0 && libm::sqrt(*curvature) * rho >= PI {
                            return Err(Error::InvalidParameter(format!(
                                "geodesic radius {rho} reaches the antipode"
                            )));
                        }
                        conformal_chart_radius(rho, *curvature)
                    }
                    _ => rho,
                };
                let perturbation = match perturbation {
                    Some((eps, h)) => Some((eps, parse_perturbation(h, n, d)?)),
                    None => None,
                };
                Ok((
                    n,
                    sphere_axes(n),
                    Realization::CartesianSphere {
                        center: vec![0.0; d],
                        radius,
                        perturbation,
                        azimuth_sign: hyperspherical_orientation(n),
                    },
                ))
            }
            (ChartKind::Polar(fiber), _) => {
                let perturbation = match perturbation {
                    Some((eps, h)) => Some((eps, parse_perturbation(h, n, fiber.embedding_dim())?)),
                    None => None,
                };
                Ok((
                    n,
                    fiber_axes(fiber),
                    Realization::PolarGraph {
                        fiber: *fiber,
                        rho,
                        perturbation,
                    },
                ))
            }
            _ => Err(Error::InvalidParameter(
                "geodesic spheres need a euclidean, space-form or polar chart".into(),
            )),
        }
    }

    /// Geodesic sphere of radius `ρ` about the chart origin (or apex).
    pub fn geodesic_sphere(manifold: &Manifold, rho: f64) -> Result<Self> {
        let (n, axes, r) = Self::sphere_realization(manifold, rho, None)?;
        Ok(Self::new(n, axes, r, "geodesic_sphere", vec![param("rho", rho)]))
    }

    /// Geodesic sphere with chart radius scaled by `1 + εh`, where `h` is a
    /// formula in the angles `u1..un` and the unit-sphere point `w1..`.
    /// On polar charts the perturbation is additive: `r = ρ + εh`.
    pub fn perturbed_sphere(manifold: &Manifold, rho: f64, eps: f64, h: &str) -> Result<Self> {
        let (n, axes, r) = Self::sphere_realization(manifold, rho, Some((eps, h)))?;
        Ok(Self::new(
            n,
            axes,
            r,
            "perturbed_sphere",
            vec![param("rho", rho), param("eps", eps), param("h", h)],
        ))
    }

    /// `r = ρ + εh(angles)` on a polar chart.
    pub fn graph_over_fiber(manifold: &Manifold, rho: f64, eps: f64, h: &str) -> Result<Self> {
        if !matches!(manifold.chart(), ChartKind::Polar(_)) {
            return Err(Error::InvalidParameter("graph_over_fiber needs a polar chart".into()));
        }
        let (n, axes, r) = Self::sphere_realization(manifold, rho, Some((eps, h)))?;
        Ok(Self::new(
            n,
            axes,
            r,
            "graph_over_fiber",
            vec![param("rho", rho), param("eps", eps), param("h", h)],
        ))
    }

    /// Ellipsoid `Σ x_i²/a_i² = 1` in a Cartesian chart.
    pub fn ellipsoid(manifold: &Manifold, semi_axes: &[f64]) -> Result<Self> {
        let d = manifold.dim();
        if !matches!(manifold.chart(), ChartKind::Cartesian) {
            return Err(Error::InvalidParameter("ellipsoid needs a Cartesian chart".into()));
        }
        if semi_axes.len() != d {
            return Err(Error::InvalidParameter(format!(
                "expected {d} semi-axes, got {}",
                semi_axes.len()
            )));
        }
        for &a in semi_axes {
            check_positive("semi-axis", a)?;
        }
        let n = d - 1;
        let params = semi_axes
            .iter()
            .enumerate()
            .map(|(i, a)| param(&format!("a{}", i + 1), a))
            .collect();
        Ok(Self::new(
            n,
            sphere_axes(n),
            Realization::Ellipsoid {
                semi_axes: semi_axes.to_vec(),
                azimuth_sign: hyperspherical_orientation(n),
            },
            "ellipsoid",
            params,
        ))
    }

    /// Torus of revolution about the `x3` axis in a three-dimensional
    /// Cartesian chart, parameters `(w, v)` = (azimuth, tube angle).
    pub fn torus_of_revolution(manifold: &Manifold, major: f64, minor: f64) -> Result<Self> {
        if manifold.dim() != 3 || !matches!(manifold.chart(), ChartKind::Cartesian) {
            return Err(Error::InvalidParameter(
                "torus_of_revolution needs a 3-dimensional Cartesian chart".into(),
            ));
        }
        check_positive("R", major)?;
        check_positive("rho", minor)?;
        if minor >= major {
            return Err(Error::InvalidParameter("torus needs rho < R".into()));
        }
        Ok(Self::new(
            2,
            vec![Axis::periodic(); 2],
            Realization::Torus { major, minor },
            "torus_of_revolution",
            vec![param("R", major), param("rho", minor)],
        ))
    }

    /// `S¹(r₁)×S^{d−2}(√(1−r₁²))` inside the round sphere of curvature `c`,
    /// in the conformal chart. For `d = 3` and `r₁ = 1/√2` this is the
    /// minimal Clifford torus.
    pub fn clifford_torus(manifold: &Manifold, r1: f64) -> Result<Self> {
        let d = manifold.dim();
        let c = match manifold.model() {
            MetricModel::SpaceForm { curvature } if *curvature > 0.0 => *curvature,
            _ => {
                return Err(Error::InvalidParameter(
                    "clifford_torus needs a space form of positive curvature".into(),
                ))
            }
        };
        if !(3..=4).contains(&d) {
            return Err(Error::InvalidParameter("clifford_torus supports d = 3 or 4".into()));
        }
        if !(r1 > 0.0 && r1 < 1.0) {
            return Err(Error::InvalidParameter(format!("r1 must lie in (0, 1), got {r1}")));
        }
        let axes = if d == 3 {
            vec![Axis::periodic(); 2]
        } else {
            vec![Axis::periodic(), Axis::polar(), Axis::periodic()]
        };
        Ok(Self::new(
            d - 1,
            axes,
            Realization::Clifford {
                r1,
                r2: libm::sqrt(1.0 - r1 * r1),
                scale: 1.0 / libm::sqrt(c),
            },
            "clifford_torus",
            vec![param("r1", r1)],
        ))
    }

    /// Torus in a three-dimensional polar chart: a tube around the equatorial
    /// circle `r = r₀, θ = π/2`, with radial half-width `ρ` and polar
    /// half-width `β`.
    pub fn graph_torus(manifold: &Manifold, r0: f64, rho: f64, beta: f64) -> Result<Self> {
        if manifold.dim() != 3 || !matches!(manifold.chart(), ChartKind::Polar(Fiber::Sphere(2))) {
            return Err(Error::InvalidParameter(
                "graph_torus needs a 3-dimensional polar chart".into(),
            ));
        }
        check_positive("r0", r0)?;
        check_positive("rho", rho)?;
        check_positive("beta", beta)?;
        if rho >= r0 || beta >= FRAC_PI_2 {
            return Err(Error::InvalidParameter(
                "graph_torus needs rho < r0 and beta < π/2".into(),
            ));
        }
        Ok(Self::new(
            2,
            vec![Axis::periodic(); 2],
            Realization::PolarTube { r0, rho, beta },
            "graph_torus",
            vec![param("r0", r0), param("rho", rho), param("beta", beta)],
        ))
    }

    /// Immersion given by chart components in the parameters `u1..un` on the
    /// supplied axes.
    pub fn expression(manifold: &Manifold, components: &[&str], axes: &[Axis]) -> Result<Self> {
        let d = manifold.dim();
        if components.len() != d || axes.len() + 1 != d {
            return Err(Error::InvalidParameter(format!(
                "expected {d} components and {} axes",
                d - 1
            )));
        }
        let names = indexed_names("u", d - 1);
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        let components = components
            .iter()
            .map(|c| Formula::parse(c, &names))
            .collect::<Result<Vec<_>>>()?;
        let params = components
            .iter()
            .enumerate()
            .map(|(i, f)| param(&format!("x{}", i + 1), &f.source))
            .collect();
        Ok(Self::new(
            d - 1,
            axes.to_vec(),
            Realization::Expression { components },
            "expression",
            params,
        ))
    }

    /// Reverses the chosen unit normal.
    pub fn with_flip(mut self, flip: bool) -> Self {
        self.flip = flip;
        self
    }

    pub fn flipped(&self) -> bool {
        self.flip
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn catalog_id(&self) -> &CatalogId {
        &self.catalog_id
    }

    /// Chart point of the parameter point `u`.
    pub fn map<T: Scalar>(&self, u: &[T]) -> Vector<T> {
        let n = self.n;
        let d = n + 1;
        let mut x = linalg::zeros::<T>();
        let eval_h = |h: &Formula, w: &[T]| -> T {
            let mut vars: Vec<T> = u[..n].to_vec();
            vars.extend_from_slice(w);
            h.eval(&vars)
        };
        match &self.realization {
            Realization::CartesianSphere {
                center,
                radius,
                perturbation,
                azimuth_sign,
            } => {
                let mut ang: Vec<T> = u[..n].to_vec();
                ang[n - 1] = ang[n - 1] * *azimuth_sign;
                let w = geometry::hyperspherical(&ang);
                let s = match perturbation {
                    Some((eps, h)) => (eval_h(h, &w) * *eps + 1.0) * *radius,
                    None => T::cst(*radius),
                };
                for i in 0..d {
                    x[i] = s * w[i] + center[i];
                }
            }
            Realization::Ellipsoid {
                semi_axes,
                azimuth_sign,
            } => {
                let mut ang: Vec<T> = u[..n].to_vec();
                ang[n - 1] = ang[n - 1] * *azimuth_sign;
                let w = geometry::hyperspherical(&ang);
                for i in 0..d {
                    x[i] = w[i] * semi_axes[i];
                }
            }
            Realization::Torus { major, minor } => {
                let (w, v) = (u[0], u[1]);
                let rad = v.cos() * *minor + *major;
                x[0] = rad * w.cos();
                x[1] = rad * w.sin();
                x[2] = v.sin() * *minor;
            }
            Realization::Clifford { r1, r2, scale } => {
                let mut y: Vec<T> = vec![u[0].cos() * *r1, u[0].sin() * *r1];
                let rest = geometry::hyperspherical(&u[1..n]);
                y.extend(rest.iter().map(|v| *v * *r2));
                let denom = (T::one() - y[d]).recip() * *scale;
                for i in 0..d {
                    x[i] = y[i] * denom;
                }
            }
            Realization::PolarGraph {
                fiber,
                rho,
                perturbation,
            } => {
                x[0] = match perturbation {
                    Some((eps, h)) => eval_h(h, &fiber.embedding(&u[..n])) * *eps + *rho,
                    None => T::cst(*rho),
                };
                x[1..d].copy_from_slice(&u[..n]);
            }
            Realization::PolarTube { r0, rho, beta } => {
                let (w, v) = (u[0], u[1]);
                x[0] = v.cos() * *rho + *r0;
                x[1] = -(v.sin() * *beta) + FRAC_PI_2;
                x[2] = w;
            }
            Realization::Expression { components } => {
                for (i, c) in components.iter().enumerate() {
                    x[i] = c.eval(&u[..n]);
                }
            }
        }
        x
    }
}

/// Adapted frame of the hypersurface at one parameter point.
#[derive(Clone, Debug)]
pub struct SurfaceFrameData {
    pub n: usize,
    pub x: Vector,
    /// `jacobian[a][b] = ∂x^a/∂u_b`
    pub jacobian: Matrix,
    pub g_ind: Matrix,
    /// Column `b` holds `E_b`; `E = J·C`.
    pub frame: Matrix,
    /// Upper-triangular Gram–Schmidt coefficients.
    pub gs: Matrix,
    pub nu: Vector,
    /// `nabla_nu[b] = ∇_{∂u_b}ν`
    pub nabla_nu: [Vector; MAX_DIM],
    pub area_density: f64,
}

impl SurfaceFrameData {
    pub fn tangent(&self, b: usize) -> Vector {
        let mut e = [0.0; MAX_DIM];
        for (a, ea) in e.iter_mut().enumerate().take(self.n + 1) {
            *ea = self.frame[a][b];
        }
        e
    }

    /// `A_{kb} = ⟨∇_{E_b}ν, E_k⟩` before symmetrization.
    pub fn raw_shape_matrix(&self, g: &Matrix) -> Matrix {
        let (n, d) = (self.n, self.n + 1);
        let mut a = [[0.0; MAX_DIM]; MAX_DIM];
        for b in 0..n {
            let mut dn = [0.0; MAX_DIM];
            for c in 0..=b {
                for (i, v) in dn.iter_mut().enumerate().take(d) {
                    *v += self.gs[c][b] * self.nabla_nu[c][i];
                }
            }
            for k in 0..n {
                a[k][b] = linalg::inner(g, &dn, &self.tangent(k), d);
            }
        }
        a
    }
}

/// Shape operator in the frame `E` and everything derived from it.
#[derive(Clone, Debug)]
pub struct ShapeData {
    pub n: usize,
    /// Symmetrized `A^k_b`.
    pub a: Matrix,
    pub sym_defect: f64,
    /// Principal curvatures, ascending.
    pub principal: Vector,
    /// `H_0..H_n`.
    pub h: [f64; MAX_DIM + 1],
    /// `T_0..T_{n−1}`.
    pub newton: Vec<Matrix>,
}

impl ShapeData {
    pub fn from_matrix(raw: &Matrix, n: usize) -> Self {
        let (a, sym_defect) = linalg::symmetrize(raw, n);
        let principal = linalg::symmetric_eigenvalues(&a, n);
        let h = mean_curvatures(&principal, n);
        let newton = newton_transforms(&a, &h, n, n);
        Self {
            n,
            a,
            sym_defect,
            principal,
            h,
            newton,
        }
    }

    /// `H_i`, zero above `n`.
    pub fn hi(&self, i: usize) -> f64 {
        if i <= self.n {
            self.h[i]
        } else {
            0.0
        }
    }
}

/// `H_i = e_i(a)/C(n,i)`.
pub fn mean_curvatures(principal: &[f64], n: usize) -> [f64; MAX_DIM + 1] {
    let e = linalg::elementary_symmetric(principal, n);
    let mut h = [0.0; MAX_DIM + 1];
    for i in 0..=n {
        h[i] = e[i] / linalg::binomial(n, i);
    }
    h
}

/// `H_i` from the characteristic polynomial by Faddeev–LeVerrier.
pub fn mean_curvatures_charpoly(a: &Matrix, n: usize) -> [f64; MAX_DIM + 1] {
    let mut h = [0.0; MAX_DIM + 1];
    h[0] = 1.0;
    let mut m = [[0.0; MAX_DIM]; MAX_DIM];
    let mut c_prev = 1.0;
    for k in 1..=n {
        let mut next = linalg::matmul(a, &m, n);
        for (i, row) in next.iter_mut().enumerate().take(n) {
            row[i] += c_prev;
        }
        m = next;
        let c = -linalg::trace_product(a, &m, n) / k as f64;
        // det(λ − A) = Σ c_k λ^{n−k} with c_k = (−1)^k e_k
        let e = if k % 2 == 0 { c } else { -c };
        h[k] = e / linalg::binomial(n, k);
        c_prev = c;
    }
    h
}

/// `T_0 = id`, `T_i = C(n,i)H_i id − A T_{i−1}` for `i < count`.
pub fn newton_transforms(a: &Matrix, h: &[f64], n: usize, count: usize) -> Vec<Matrix> {
    let mut out = Vec::with_capacity(count);
    let mut t = linalg::identity(n);
    for i in 0..count {
        if i > 0 {
            let at = linalg::matmul(a, &t, n);
            let s = linalg::binomial(n, i) * h[i];
            for r in 0..n {
                for c in 0..n {
                    t[r][c] = -at[r][c] + if r == c { s } else { 0.0 };
                }
            }
        }
        out.push(t);
    }
    out
}

/// How the Lie term is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LieMethod {
    /// Sum of principal minors; the reference definition.
    Combinatorial,
    /// `tr(T_i S)`.
    Trace,
}

/// `Σ_{|K|=i} Σ_{k∉K} det M(K,k)`, where `M(K,k)` takes rows `K` from `A`,
/// row `k` from `S` and all other rows from the identity. Defined for
/// `0 ≤ i ≤ n`; the value at `i = n` is zero.
pub fn lie_term_pullback(s: &Matrix, a: &Matrix, n: usize, i: usize) -> Result<f64> {
    if i > n {
        return Err(Error::IndexOutOfRange { index: i, max: n });
    }
    let mut total = 0.0;
    for mask in 0u32..(1u32 << n) {
        if mask.count_ones() as usize != i {
            continue;
        }
        for k in 0..n {
            if mask & (1 << k) != 0 {
                continue;
            }
            let mut idx = [0usize; MAX_DIM];
            let mut m = 0;
            for j in 0..n {
                if mask & (1 << j) != 0 || j == k {
                    idx[m] = j;
                    m += 1;
                }
            }
            let mut minor = [[0.0; MAX_DIM]; MAX_DIM];
            for r in 0..m {
                let src = if idx[r] == k { s } else { a };
                for c in 0..m {
                    minor[r][c] = src[idx[r]][idx[c]];
                }
            }
            total += linalg::det(&minor, m);
        }
    }
    Ok(total)
}

/// Lie term by the selected method; `newton` must hold `T_i` for `i < n`.
pub fn lie_term(method: LieMethod, s: &Matrix, shape: &ShapeData, i: usize) -> Result<f64> {
    let n = shape.n;
    match method {
        LieMethod::Combinatorial => lie_term_pullback(s, &shape.a, n, i),
        LieMethod::Trace => {
            if i > n {
                Err(Error::IndexOutOfRange { index: i, max: n })
            } else if i == n {
                Ok(0.0)
            } else {
                Ok(linalg::trace_product(&shape.newton[i], s, n))
            }
        }
    }
}

/// `A·E_q` for each `q`, as chart vectors.
fn shape_images(frame: &SurfaceFrameData, a: &Matrix) -> [Vector; MAX_DIM] {
    let (n, d) = (frame.n, frame.n + 1);
    let mut out = [[0.0; MAX_DIM]; MAX_DIM];
    for (q, img) in out.iter_mut().enumerate().take(n) {
        for k in 0..n {
            for (c, v) in img.iter_mut().enumerate().take(d) {
                *v += a[k][q] * frame.frame[c][k];
            }
        }
    }
    out
}

/// `(t1, t2, t3)` with `t1 = Σ⟨R(ν,AE_q)ν,E_q⟩`, `t2 = Ric(A·Pᵀ, ν)` and
/// `t3 = Σ⟨R(P,AE_q)ν,E_q⟩` for the full vector `P`.
pub fn curvature_traces(curv: &CurvatureData, frame: &SurfaceFrameData, a: &Matrix, p: &Vector) -> (f64, f64, f64) {
    let (n, d) = (frame.n, frame.n + 1);
    let img = shape_images(frame, a);
    let nu = &frame.nu;
    let mut t1 = 0.0;
    let mut t3 = 0.0;
    for q in 0..n {
        let eq = frame.tangent(q);
        t1 += curv.rm(nu, &img[q], nu, &eq);
        t3 += curv.rm(p, &img[q], nu, &eq);
    }
    let mut ap = [0.0; MAX_DIM];
    for b in 0..n {
        let pb = linalg::inner(&curv.g, p, &frame.tangent(b), d);
        for (c, v) in ap.iter_mut().enumerate().take(d) {
            *v += pb * img[b][c];
        }
    }
    (t1, curv.ric(&ap, nu), t3)
}

/// `ω_i = (−1)^i det(J without row i)` with its parameter derivatives.
/// Each derivative replaces one column of the minor by its derivative, so
/// no division by a possibly vanishing pivot enters the jet.
fn cofactor_normal(jac: &Matrix, hess: &[Matrix; MAX_DIM], d: usize) -> Vector<Dual<MAX_DIM>> {
    let n = d - 1;
    let mut omega = [Dual::<MAX_DIM>::constant(0.0); MAX_DIM];
    for (i, om) in omega.iter_mut().enumerate().take(d) {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let rows: Vec<usize> = (0..d).filter(|&a| a != i).collect();
        let mut minor = [[0.0; MAX_DIM]; MAX_DIM];
        for (r, &a) in rows.iter().enumerate() {
            minor[r][..n].copy_from_slice(&jac[a][..n]);
        }
        om.v = sign * linalg::det(&minor, n);
        for b in 0..n {
            let mut s = 0.0;
            for c in 0..n {
                let mut m = minor;
                for (r, &a) in rows.iter().enumerate() {
                    m[r][c] = hess[a][c][b];
                }
                s += linalg::det(&m, n);
            }
            om.g[b] = sign * s;
        }
    }
    omega
}

/// Unit normal `g⁻¹ω/|ω|`, which makes `(ν, ∂u_1, …, ∂u_n)` positively
/// oriented.
fn unit_normal<T: Scalar>(g: &Matrix<T>, omega: &Vector<T>, d: usize) -> Vector<T> {
    let l = linalg::cholesky(g, d).expect("metric checked positive definite");
    let raw = linalg::cholesky_solve(&l, omega, d);
    let mut norm2 = T::zero();
    for i in 0..d {
        norm2 += omega[i] * raw[i];
    }
    let inv = norm2.sqrt().recip();
    let mut nu = linalg::zeros::<T>();
    for i in 0..d {
        nu[i] = raw[i] * inv;
    }
    nu
}

/// Frame, shape and ambient curvature at one parameter point.
#[derive(Clone, Debug)]
pub struct SurfacePoint {
    pub frame: SurfaceFrameData,
    pub shape: ShapeData,
    pub curvature: CurvatureData,
}

pub fn surface_point(imm: &Immersion, manifold: &Manifold, u: &[f64]) -> Result<SurfacePoint> {
    let n = imm.n();
    let d = manifold.dim();
    if d != n + 1 {
        return Err(Error::InvalidParameter(format!(
            "immersion of dimension {n} in a manifold of dimension {d}"
        )));
    }
    let mut uj = [Jet2::<MAX_DIM>::constant(0.0); MAX_DIM];
    for b in 0..n {
        uj[b] = Jet2::var(u[b], b);
    }
    let xj = imm.map(&uj);
    let mut x = [0.0; MAX_DIM];
    let mut jac = [[0.0; MAX_DIM]; MAX_DIM];
    for a in 0..d {
        x[a] = xj[a].v;
        jac[a][..n].copy_from_slice(&xj[a].g[..n]);
    }
    let jet = geometry::metric_eval(manifold, &x)?;
    let curv = geometry::curvature_from_jet(&jet)?;
    let g = &jet.g;

    let mut g_ind = [[0.0; MAX_DIM]; MAX_DIM];
    for b in 0..n {
        for c in 0..n {
            let mut s = 0.0;
            for i in 0..d {
                for j in 0..d {
                    s += jac[i][b] * g[i][j] * jac[j][c];
                }
            }
            g_ind[b][c] = s;
        }
    }
    let min_ev = linalg::symmetric_eigenvalues(&g_ind, n)[0];
    if !(min_ev > EPS_RANK) {
        return Err(Error::RankDeficient(min_ev));
    }
    let area_density = libm::sqrt(linalg::det(&g_ind, n));

    // ν and ∂_u ν by first-order jets in the parameters
    let mut gd = [[Dual::<MAX_DIM>::constant(0.0); MAX_DIM]; MAX_DIM];
    let mut hess = [[[0.0; MAX_DIM]; MAX_DIM]; MAX_DIM];
    for i in 0..d {
        for j in 0..d {
            gd[i][j].v = g[i][j];
            for b in 0..n {
                let mut s = 0.0;
                for k in 0..d {
                    s += jet.dg[i][j][k] * jac[k][b];
                }
                gd[i][j].g[b] = s;
            }
        }
        for b in 0..n {
            for c in 0..n {
                hess[i][b][c] = xj[i].h[b][c];
            }
        }
    }
    let omega = cofactor_normal(&jac, &hess, d);
    let nud = unit_normal(&gd, &omega, d);
    let sign = manifold.orientation() * if imm.flipped() { -1.0 } else { 1.0 };
    let mut nu = [0.0; MAX_DIM];
    let mut nabla_nu = [[0.0; MAX_DIM]; MAX_DIM];
    for a in 0..d {
        nu[a] = sign * nud[a].v;
    }
    for b in 0..n {
        for a in 0..d {
            let mut s = sign * nud[a].g[b];
            for c in 0..d {
                for e in 0..d {
                    s += curv.gamma[a][c][e] * jac[c][b] * nu[e];
                }
            }
            nabla_nu[b][a] = s;
        }
    }

    // Gram–Schmidt on the Jacobian columns, in axis order
    let mut frame = [[0.0; MAX_DIM]; MAX_DIM];
    let mut gs = [[0.0; MAX_DIM]; MAX_DIM];
    for b in 0..n {
        let mut v = [0.0; MAX_DIM];
        let mut coef = [0.0; MAX_DIM];
        for a in 0..d {
            v[a] = jac[a][b];
        }
        coef[b] = 1.0;
        for pass in 0..2 {
            let mut loss: f64 = 0.0;
            for k in 0..b {
                let mut ek = [0.0; MAX_DIM];
                for a in 0..d {
                    ek[a] = frame[a][k];
                }
                let p = linalg::inner(g, &v, &ek, d);
                loss = loss.max(abs(p));
                for a in 0..d {
                    v[a] -= p * ek[a];
                }
                for c in 0..n {
                    coef[c] -= p * gs[c][k];
                }
            }
            let norm = libm::sqrt(linalg::inner(g, &v, &v, d));
            if pass == 1 && loss <= 1e-12 * norm {
                break;
            }
            if pass == 0 {
                for a in 0..d {
                    v[a] /= norm;
                }
                for c in coef.iter_mut().take(n) {
                    *c /= norm;
                }
            } else {
                let norm = libm::sqrt(linalg::inner(g, &v, &v, d));
                for a in 0..d {
                    v[a] /= norm;
                }
                for c in coef.iter_mut().take(n) {
                    *c /= norm;
                }
            }
        }
        for a in 0..d {
            frame[a][b] = v[a];
        }
        for c in 0..n {
            gs[c][b] = coef[c];
        }
    }

    let frame = SurfaceFrameData {
        n,
        x,
        jacobian: jac,
        g_ind,
        frame,
        gs,
        nu,
        nabla_nu,
        area_density,
    };
    let shape = ShapeData::from_matrix(&frame.raw_shape_matrix(g), n);
    Ok(SurfacePoint {
        frame,
        shape,
        curvature: curv,
    })
}

pub fn frame_at(imm: &Immersion, manifold: &Manifold, u: &[f64]) -> Result<SurfaceFrameData> {
    Ok(surface_point(imm, manifold, u)?.frame)
}

pub fn shape_operator(imm: &Immersion, manifold: &Manifold, u: &[f64]) -> Result<ShapeData> {
    let shape = surface_point(imm, manifold, u)?.shape;
    if shape.sym_defect > MAX_SYM_DEFECT {
        return Err(Error::SymmetryDefectTooLarge(shape.sym_defect));
    }
    Ok(shape)
}
