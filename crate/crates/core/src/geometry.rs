//! Chart-defined Riemannian metrics, their jets and curvature tensors.
//!
//! Curvature convention: `R(X,Y) = ∇_X∇_Y − ∇_Y∇_X − ∇_[X,Y]` and
//! `R_{lkij} = ⟨R(∂_i,∂_j)∂_k, ∂_l⟩`, so that the round sphere has
//! `R(X,Y)Z = c(⟨Y,Z⟩X − ⟨X,Z⟩Y)` with `c > 0`. Ricci is
//! `Ric(X,Y) = Σ_j ⟨R(E_j,X)Y, E_j⟩`.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};

use crate::error::{Error, Result};
use crate::expr::{indexed_names, Formula};
use crate::jet::Jet2;
use crate::linalg::{self, abs, Matrix, Vector, MAX_DIM};
use crate::scalar::Scalar;

/// Minimum admissible eigenvalue of the metric.
pub const EPS_PD: f64 = 1e-12;
/// Margin kept from chart boundaries and coordinate singularities.
pub const EPS_DOM: f64 = 1e-9;

pub type Tensor3 = [[[f64; MAX_DIM]; MAX_DIM]; MAX_DIM];
pub type Tensor4 = [[[[f64; MAX_DIM]; MAX_DIM]; MAX_DIM]; MAX_DIM];

pub const ZERO3: Tensor3 = [[[0.0; MAX_DIM]; MAX_DIM]; MAX_DIM];
pub const ZERO4: Tensor4 = [[[[0.0; MAX_DIM]; MAX_DIM]; MAX_DIM]; MAX_DIM];

/// Parameterised fibre of a polar or angular chart.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fiber {
    /// Round `S^k` in hyperspherical angles `θ_1..θ_k`; the last is an azimuth.
    Sphere(usize),
    /// `S²×S²` in angles `(θ_1, φ_1, θ_2, φ_2)`.
    SphereProduct,
}

impl Fiber {
    pub fn dim(&self) -> usize {
        match self {
            Fiber::Sphere(k) => *k,
            Fiber::SphereProduct => 4,
        }
    }

    /// Whether angle `j` (0-based) is periodic; the others are polar angles
    /// living in `(0, π)`.
    pub fn is_azimuth(&self, j: usize) -> bool {
        match self {
            Fiber::Sphere(k) => j + 1 == *k,
            Fiber::SphereProduct => j % 2 == 1,
        }
    }

    /// Diagonal of the unit fibre metric at the given angles.
    pub fn metric_diag<T: Scalar>(&self, ang: &[T]) -> Vector<T> {
        let mut out = linalg::zeros::<T>();
        match self {
            Fiber::Sphere(k) => {
                let mut prod = T::one();
                for j in 0..*k {
                    out[j] = prod;
                    if j + 1 < *k {
                        prod *= ang[j].sin().square();
                    }
                }
            }
            Fiber::SphereProduct => {
                out[0] = T::one();
                out[1] = ang[0].sin().square();
                out[2] = T::one();
                out[3] = ang[2].sin().square();
            }
        }
        out
    }

    /// Euclidean embedding coordinates of the fibre point (the unit sphere
    /// point, or both sphere points concatenated).
    pub fn embedding<T: Scalar>(&self, ang: &[T]) -> Vec<T> {
        match self {
            Fiber::Sphere(k) => hyperspherical(&ang[..*k]),
            Fiber::SphereProduct => {
                let mut a = hyperspherical(&ang[0..2]);
                a.extend(hyperspherical(&ang[2..4]));
                a
            }
        }
    }

    pub fn embedding_dim(&self) -> usize {
        match self {
            Fiber::Sphere(k) => k + 1,
            Fiber::SphereProduct => 6,
        }
    }
}

/// Point of the unit sphere `S^k ⊂ R^{k+1}` with hyperspherical angles.
pub fn hyperspherical<T: Scalar>(ang: &[T]) -> Vec<T> {
    let k = ang.len();
    let mut out = vec![T::zero(); k + 1];
    let mut prod = T::one();
    for j in 0..k {
        out[j] = prod * ang[j].cos();
        prod *= ang[j].sin();
    }
    out[k] = prod;
    out
}

#[derive(Clone, Debug, PartialEq)]
pub enum ChartKind {
    /// Coordinates are Cartesian-like on an open subset of `R^d`.
    Cartesian,
    /// `(r, fibre angles)` with `r > 0`.
    Polar(Fiber),
    /// Fibre angles only.
    Angular(Fiber),
}

#[derive(Clone, Debug, PartialEq)]
pub enum MetricModel {
    Euclidean,
    /// `g = λ²δ`, `λ = 2/(1 + c|x|²)`.
    SpaceForm {
        curvature: f64,
    },
    /// `g = dr² + φ(r)² g_{S^{d-1}}`.
    Warped {
        warp: Formula,
    },
    /// `S²(a)×S²(a)`.
    ProductSpheres {
        radius: f64,
    },
    /// `dr² + r² g_{S²(a)×S²(a)}`.
    EinsteinCone {
        radius: f64,
    },
    /// Arbitrary components `g_ij(x1..xd)`, row-major.
    Expression {
        components: Vec<Formula>,
    },
}

/// Catalog name plus the parameters a manifold was built from.
#[derive(Clone, Debug, PartialEq)]
pub struct CatalogId {
    pub name: String,
    pub params: Vec<(String, String)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Manifold {
    dim: usize,
    model: MetricModel,
    chart: ChartKind,
    orientation: f64,
    catalog_id: Option<CatalogId>,
}

/// Metric and its first two coordinate derivatives at a point.
#[derive(Clone, Debug)]
pub struct MetricJet {
    pub dim: usize,
    pub g: Matrix,
    /// `dg[i][j][k] = ∂_k g_ij`
    pub dg: Tensor3,
    /// `d2g[i][j][k][l] = ∂_l ∂_k g_ij`
    pub d2g: Tensor4,
}

#[derive(Clone, Debug)]
pub struct CurvatureData {
    pub dim: usize,
    pub g: Matrix,
    pub g_inv: Matrix,
    /// `gamma[a][b][c] = Γ^a_{bc}`
    pub gamma: Tensor3,
    /// `dgamma[a][b][c][e] = ∂_e Γ^a_{bc}`
    pub dgamma: Tensor4,
    /// `riemann[l][k][i][j] = R_{lkij}`
    pub riemann: Tensor4,
    pub ricci: Matrix,
}

pub(crate) fn param(name: &str, v: impl ToString) -> (String, String) {
    (name.to_string(), v.to_string())
}

impl Manifold {
    fn build(dim: usize, model: MetricModel, chart: ChartKind, id: CatalogId) -> Result<Self> {
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidParameter(format!(
                "dimension {dim} outside supported range 2..={MAX_DIM}"
            )));
        }
        Ok(Self {
            dim,
            model,
            chart,
            orientation: 1.0,
            catalog_id: Some(id),
        })
    }

    pub fn euclidean(dim: usize) -> Result<Self> {
        Self::build(
            dim,
            MetricModel::Euclidean,
            ChartKind::Cartesian,
            CatalogId {
                name: "euclidean".into(),
                params: vec![param("d", dim)],
            },
        )
    }

    pub fn space_form(dim: usize, curvature: f64) -> Result<Self> {
        if !curvature.is_finite() {
            return Err(Error::InvalidParameter("curvature must be finite".into()));
        }
        Self::build(
            dim,
            MetricModel::SpaceForm { curvature },
            ChartKind::Cartesian,
            CatalogId {
                name: "spaceform_conformal".into(),
                params: vec![param("d", dim), param("c", curvature)],
            },
        )
    }

    pub fn warped(dim: usize, warp: &str) -> Result<Self> {
        let warp = Formula::parse(warp, &["r"])?;
        let id = CatalogId {
            name: "warped".into(),
            params: vec![param("d", dim), param("phi", &warp.source)],
        };
        Self::build(
            dim,
            MetricModel::Warped { warp },
            ChartKind::Polar(Fiber::Sphere(dim.saturating_sub(1))),
            id,
        )
    }

    pub fn product_spheres(radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidParameter("radius must be positive".into()));
        }
        Self::build(
            4,
            MetricModel::ProductSpheres { radius },
            ChartKind::Angular(Fiber::SphereProduct),
            CatalogId {
                name: "product_spheres".into(),
                params: vec![param("a", radius)],
            },
        )
    }

    /// Cone over `S²(a)×S²(a)`; Ricci-flat exactly when `a² = 1/3`.
    pub fn einstein_cone(radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidParameter("radius must be positive".into()));
        }
        Self::build(
            5,
            MetricModel::EinsteinCone { radius },
            ChartKind::Polar(Fiber::SphereProduct),
            CatalogId {
                name: "einstein_cone".into(),
                params: vec![param("a", radius)],
            },
        )
    }

    /// Metric given componentwise in the variables `x1..xd`; `components`
    /// is row-major `d×d` and must be symmetric as text-level formulas
    /// evaluated at any point.
    pub fn expression(dim: usize, components: &[&str]) -> Result<Self> {
        if components.len() != dim * dim {
            return Err(Error::InvalidParameter(format!(
                "expected {} metric components, got {}",
                dim * dim,
                components.len()
            )));
        }
        let names = indexed_names("x", dim);
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        let components = components
            .iter()
            .map(|c| Formula::parse(c, &names))
            .collect::<Result<Vec<_>>>()?;
        let params = components
            .iter()
            .enumerate()
            .map(|(k, f)| param(&format!("g{}{}", k / dim + 1, k % dim + 1), &f.source))
            .collect();
        Self::build(
            dim,
            MetricModel::Expression { components },
            ChartKind::Cartesian,
            CatalogId {
                name: "expression".into(),
                params,
            },
        )
    }

    pub fn with_orientation(mut self, positive: bool) -> Self {
        self.orientation = if positive { 1.0 } else { -1.0 };
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn model(&self) -> &MetricModel {
        &self.model
    }

    pub fn chart(&self) -> &ChartKind {
        &self.chart
    }

    /// `+1` or `−1`; multiplies the chart-orientation normal.
    pub fn orientation(&self) -> f64 {
        self.orientation
    }

    pub fn catalog_id(&self) -> Option<&CatalogId> {
        self.catalog_id.as_ref()
    }

    /// Metric matrix at `x`, generic over the scalar so that jets give
    /// exact derivatives.
    pub fn metric<T: Scalar>(&self, x: &Vector<T>) -> Matrix<T> {
        let d = self.dim;
        let mut g = linalg::zero_matrix::<T>();
        match &self.model {
            MetricModel::Euclidean => {
                for (i, row) in g.iter_mut().enumerate().take(d) {
                    row[i] = T::one();
                }
            }
            MetricModel::SpaceForm { curvature } => {
                let mut r2 = T::zero();
                for xi in x.iter().take(d) {
                    r2 += *xi * *xi;
                }
                let lam = (r2 * *curvature + 1.0).recip() * 2.0;
                let l2 = lam * lam;
                for (i, row) in g.iter_mut().enumerate().take(d) {
                    row[i] = l2;
                }
            }
            MetricModel::Warped { warp } => {
                let phi = warp.eval(&[x[0]]);
                let fib = Fiber::Sphere(d - 1).metric_diag(&x[1..d]);
                g[0][0] = T::one();
                let p2 = phi * phi;
                for j in 1..d {
                    g[j][j] = p2 * fib[j - 1];
                }
            }
            MetricModel::ProductSpheres { radius } => {
                let fib = Fiber::SphereProduct.metric_diag(&x[0..4]);
                for j in 0..4 {
                    g[j][j] = fib[j] * (radius * radius);
                }
            }
            MetricModel::EinsteinCone { radius } => {
                let fib = Fiber::SphereProduct.metric_diag(&x[1..5]);
                let s = x[0] * x[0] * (radius * radius);
                g[0][0] = T::one();
                for j in 1..5 {
                    g[j][j] = s * fib[j - 1];
                }
            }
            MetricModel::Expression { components } => {
                for i in 0..d {
                    for j in 0..d {
                        g[i][j] = components[i * d + j].eval(&x[..d]);
                    }
                }
            }
        }
        g
    }

    /// Checks that `x` lies inside the chart domain with margin
    /// [`EPS_DOM`] from its excluded locus.
    pub fn check_admissible(&self, x: &[f64]) -> Result<()> {
        let d = self.dim;
        if x.iter().take(d).any(|v| !v.is_finite()) {
            return Err(Error::DomainViolation("non-finite coordinate".into()));
        }
        let angle_check = |fiber: &Fiber, ang: &[f64]| -> Result<()> {
            for j in 0..fiber.dim() {
                if !fiber.is_azimuth(j) {
                    let s = libm::sin(ang[j]);
                    if !(s > EPS_DOM) {
                        return Err(Error::DomainViolation(format!(
                            "polar angle {} = {} on a coordinate pole",
                            j + 1,
                            ang[j]
                        )));
                    }
                }
            }
            Ok(())
        };
        match (&self.chart, &self.model) {
            (ChartKind::Cartesian, MetricModel::SpaceForm { curvature }) => {
                let r2: f64 = x.iter().take(d).map(|v| v * v).sum();
                if !(1.0 + curvature * r2 > EPS_DOM) {
                    return Err(Error::DomainViolation(format!(
                        "|x|² = {r2} outside the ball of the hyperbolic chart"
                    )));
                }
                Ok(())
            }
            (ChartKind::Cartesian, _) => Ok(()),
            (ChartKind::Polar(fiber), _) => {
                if !(x[0] > EPS_DOM) {
                    return Err(Error::DomainViolation(format!("radius {} not positive", x[0])));
                }
                angle_check(fiber, &x[1..d])
            }
            (ChartKind::Angular(fiber), _) => angle_check(fiber, &x[..d]),
        }
    }

    /// Maps a point of the unit cube to an admissible chart point, well
    /// inside the domain. Used for random sampling.
    pub fn sample_point(&self, unit: &[f64]) -> Vector {
        let d = self.dim;
        let mut x = [0.0; MAX_DIM];
        let pi = core::f64::consts::PI;
        let angles = |fiber: &Fiber, u: &[f64], out: &mut [f64]| {
            for j in 0..fiber.dim() {
                out[j] = if fiber.is_azimuth(j) {
                    2.0 * pi * u[j]
                } else {
                    0.2 + (pi - 0.4) * u[j]
                };
            }
        };
        match (&self.chart, &self.model) {
            (ChartKind::Cartesian, MetricModel::SpaceForm { curvature }) if *curvature < 0.0 => {
                let half = 0.9 / (libm::sqrt(-curvature) * libm::sqrt(d as f64));
                for i in 0..d {
                    x[i] = half * (2.0 * unit[i] - 1.0);
                }
            }
            (ChartKind::Cartesian, _) => {
                for i in 0..d {
                    x[i] = 1.5 * (2.0 * unit[i] - 1.0);
                }
            }
            (ChartKind::Polar(fiber), _) => {
                x[0] = 0.5 + 2.5 * unit[0];
                angles(fiber, &unit[1..d], &mut x[1..d]);
            }
            (ChartKind::Angular(fiber), _) => angles(fiber, &unit[..d], &mut x[..d]),
        }
        x
    }

    /// Position vector field components shipped with the catalog, if the
    /// metric has one.
    pub fn position_field<T: Scalar>(&self, x: &Vector<T>) -> Option<Vector<T>> {
        let d = self.dim;
        let mut p = linalg::zeros::<T>();
        match &self.model {
            MetricModel::Euclidean | MetricModel::SpaceForm { .. } => {
                p[..d].copy_from_slice(&x[..d]);
            }
            MetricModel::Warped { warp } => p[0] = warp.eval(&[x[0]]),
            MetricModel::EinsteinCone { .. } => p[0] = x[0],
            MetricModel::ProductSpheres { .. } | MetricModel::Expression { .. } => return None,
        }
        Some(p)
    }

    pub fn has_position_field(&self) -> bool {
        !matches!(
            self.model,
            MetricModel::ProductSpheres { .. } | MetricModel::Expression { .. }
        )
    }
}

/// Evaluates `g`, `∂g`, `∂²g` at `x` by second-order forward differentiation.
pub fn metric_eval(manifold: &Manifold, x: &[f64]) -> Result<MetricJet> {
    manifold.check_admissible(x)?;
    let d = manifold.dim();
    let mut xj = [Jet2::<MAX_DIM>::constant(0.0); MAX_DIM];
    for i in 0..d {
        xj[i] = Jet2::var(x[i], i);
    }
    let gj = manifold.metric(&xj);
    let mut jet = MetricJet {
        dim: d,
        g: [[0.0; MAX_DIM]; MAX_DIM],
        dg: ZERO3,
        d2g: ZERO4,
    };
    for i in 0..d {
        for j in 0..d {
            let e = &gj[i][j];
            jet.g[i][j] = e.v;
            for k in 0..d {
                jet.dg[i][j][k] = e.g[k];
                for l in 0..d {
                    jet.d2g[i][j][k][l] = e.h[k][l];
                }
            }
        }
    }
    check_positive_definite(&jet.g, d)?;
    Ok(jet)
}

pub fn check_positive_definite(g: &Matrix, d: usize) -> Result<()> {
    let (s, _) = linalg::symmetrize(g, d);
    let ev = linalg::symmetric_eigenvalues(&s, d);
    if !(ev[0] > EPS_PD) {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: ev[0] });
    }
    Ok(())
}

/// Christoffel symbols `Γ^a_{bc}` and their partials `∂_e Γ^a_{bc}`.
pub fn christoffel(jet: &MetricJet) -> Result<(Matrix, Tensor3, Tensor4)> {
    let d = jet.dim;
    check_positive_definite(&jet.g, d)?;
    let gi = linalg::spd_inverse(&jet.g, d).ok_or(Error::NotPositiveDefinite { min_eigenvalue: 0.0 })?;
    // first kind: c1[e][b][c] = ½(∂_b g_ec + ∂_c g_eb − ∂_e g_bc)
    let mut c1 = ZERO3;
    let mut dc1 = ZERO4;
    for e in 0..d {
        for b in 0..d {
            for c in 0..d {
                c1[e][b][c] = 0.5 * (jet.dg[e][c][b] + jet.dg[e][b][c] - jet.dg[b][c][e]);
                for f in 0..d {
                    dc1[e][b][c][f] = 0.5 * (jet.d2g[e][c][b][f] + jet.d2g[e][b][c][f] - jet.d2g[b][c][e][f]);
                }
            }
        }
    }
    // ∂_f g^{ae} = −g^{ap} ∂_f g_pq g^{qe}
    let mut dgi = ZERO3;
    for f in 0..d {
        let mut tmp = [[0.0; MAX_DIM]; MAX_DIM];
        for a in 0..d {
            for q in 0..d {
                let mut s = 0.0;
                for p in 0..d {
                    s += gi[a][p] * jet.dg[p][q][f];
                }
                tmp[a][q] = s;
            }
        }
        for a in 0..d {
            for e in 0..d {
                let mut s = 0.0;
                for q in 0..d {
                    s += tmp[a][q] * gi[q][e];
                }
                dgi[a][e][f] = -s;
            }
        }
    }
    let mut gamma = ZERO3;
    let mut dgamma = ZERO4;
    for a in 0..d {
        for b in 0..d {
            for c in b..d {
                let mut s = 0.0;
                for e in 0..d {
                    s += gi[a][e] * c1[e][b][c];
                }
                gamma[a][b][c] = s;
                gamma[a][c][b] = s;
                for f in 0..d {
                    let mut s = 0.0;
                    for e in 0..d {
                        s += dgi[a][e][f] * c1[e][b][c] + gi[a][e] * dc1[e][b][c][f];
                    }
                    dgamma[a][b][c][f] = s;
                    dgamma[a][c][b][f] = s;
                }
            }
        }
    }
    Ok((gi, gamma, dgamma))
}

/// Full curvature data at `x`.
pub fn riemann(manifold: &Manifold, x: &[f64]) -> Result<CurvatureData> {
    let jet = metric_eval(manifold, x)?;
    curvature_from_jet(&jet)
}

pub fn curvature_from_jet(jet: &MetricJet) -> Result<CurvatureData> {
    let d = jet.dim;
    let (g_inv, gamma, dgamma) = christoffel(jet)?;
    // R^a_{kij} = ∂_iΓ^a_{jk} − ∂_jΓ^a_{ik} + Γ^a_{ie}Γ^e_{jk} − Γ^a_{je}Γ^e_{ik}
    let mut up = ZERO4;
    for a in 0..d {
        for k in 0..d {
            for i in 0..d {
                for j in (i + 1)..d {
                    let mut s = dgamma[a][j][k][i] - dgamma[a][i][k][j];
                    for e in 0..d {
                        s += gamma[a][i][e] * gamma[e][j][k] - gamma[a][j][e] * gamma[e][i][k];
                    }
                    up[a][k][i][j] = s;
                    up[a][k][j][i] = -s;
                }
            }
        }
    }
    let mut riemann = ZERO4;
    for l in 0..d {
        for k in 0..d {
            for i in 0..d {
                for j in 0..d {
                    let mut s = 0.0;
                    for a in 0..d {
                        s += jet.g[l][a] * up[a][k][i][j];
                    }
                    riemann[l][k][i][j] = s;
                }
            }
        }
    }
    // Ric_{bc} = R^i_{c i b}
    let mut ricci = [[0.0; MAX_DIM]; MAX_DIM];
    for b in 0..d {
        for c in 0..d {
            let mut s = 0.0;
            for i in 0..d {
                s += up[i][c][i][b];
            }
            ricci[b][c] = s;
        }
    }
    Ok(CurvatureData {
        dim: d,
        g: jet.g,
        g_inv,
        gamma,
        dgamma,
        riemann,
        ricci,
    })
}

impl CurvatureData {
    /// `⟨R(X,Y)Z, W⟩`.
    pub fn rm(&self, x: &Vector, y: &Vector, z: &Vector, w: &Vector) -> f64 {
        let d = self.dim;
        let mut s = 0.0;
        for l in 0..d {
            if w[l] == 0.0 {
                continue;
            }
            for k in 0..d {
                if z[k] == 0.0 {
                    continue;
                }
                let wz = w[l] * z[k];
                for i in 0..d {
                    if x[i] == 0.0 {
                        continue;
                    }
                    for j in 0..d {
                        s += self.riemann[l][k][i][j] * wz * x[i] * y[j];
                    }
                }
            }
        }
        s
    }

    /// Chart components of `R(X,Y)Z`.
    pub fn rm_vector(&self, x: &Vector, y: &Vector, z: &Vector) -> Vector {
        let d = self.dim;
        let mut lowered = [0.0; MAX_DIM];
        for (l, out) in lowered.iter_mut().enumerate().take(d) {
            let mut s = 0.0;
            for k in 0..d {
                for i in 0..d {
                    for j in 0..d {
                        s += self.riemann[l][k][i][j] * z[k] * x[i] * y[j];
                    }
                }
            }
            *out = s;
        }
        linalg::mat_vec(&self.g_inv, &lowered, d)
    }

    pub fn ric(&self, x: &Vector, y: &Vector) -> f64 {
        let d = self.dim;
        let mut s = 0.0;
        for b in 0..d {
            for c in 0..d {
                s += x[b] * self.ricci[b][c] * y[c];
            }
        }
        s
    }

    pub fn scalar_curvature(&self) -> f64 {
        linalg::trace_product(&self.g_inv, &self.ricci, self.dim)
    }

    /// Lower Cholesky factor `L` of `g`; columns of `L^{-T}` form an
    /// orthonormal frame.
    pub fn orthonormal_frame(&self) -> Matrix {
        let d = self.dim;
        let l = linalg::cholesky(&self.g, d).expect("metric checked positive definite");
        linalg::transpose(&linalg::lower_inverse(&l, d), d)
    }

    /// `max |Ric − (scal/d) g|` measured in an orthonormal frame.
    pub fn einstein_defect(&self) -> f64 {
        let d = self.dim;
        let e = self.orthonormal_frame();
        let lambda = self.scalar_curvature() / d as f64;
        let mut m: f64 = 0.0;
        for p in 0..d {
            for q in 0..d {
                let mut s = 0.0;
                for b in 0..d {
                    for c in 0..d {
                        s += e[b][p] * self.ricci[b][c] * e[c][q];
                    }
                }
                if p == q {
                    s -= lambda;
                }
                m = m.max(abs(s));
            }
        }
        m
    }

    /// `max |R_{lkij} − c(g_{jk}g_{il} − g_{ik}g_{jl})|`.
    pub fn model_residual(&self, c: f64) -> f64 {
        let d = self.dim;
        let g = &self.g;
        let mut m: f64 = 0.0;
        for l in 0..d {
            for k in 0..d {
                for i in 0..d {
                    for j in 0..d {
                        let model = c * (g[j][k] * g[i][l] - g[i][k] * g[j][l]);
                        m = m.max(abs(self.riemann[l][k][i][j] - model));
                    }
                }
            }
        }
        m
    }

    /// Sectional-curvature constant implied by the scalar curvature.
    pub fn mean_sectional_curvature(&self) -> f64 {
        let d = self.dim as f64;
        self.scalar_curvature() / (d * (d - 1.0))
    }

    /// Largest violation of the pair symmetries and first Bianchi identity,
    /// relative to `max(1, max|R|)`.
    pub fn symmetry_defect(&self) -> f64 {
        let d = self.dim;
        let r = &self.riemann;
        let mut scale: f64 = 1.0;
        let mut m: f64 = 0.0;
        for l in 0..d {
            for k in 0..d {
                for i in 0..d {
                    for j in 0..d {
                        let v = r[l][k][i][j];
                        scale = scale.max(abs(v));
                        m = m.max(abs(v + r[l][k][j][i]));
                        m = m.max(abs(v + r[k][l][i][j]));
                        m = m.max(abs(v - r[i][j][l][k]));
                        m = m.max(abs(v + r[l][i][j][k] + r[l][j][k][i]));
                    }
                }
            }
        }
        m / scale
    }

    pub fn max_riemann(&self) -> f64 {
        let d = self.dim;
        let mut m: f64 = 0.0;
        for l in 0..d {
            for k in 0..d {
                for i in 0..d {
                    for j in 0..d {
                        m = m.max(abs(self.riemann[l][k][i][j]));
                    }
                }
            }
        }
        m
    }
}

/// Max-norm deviation of the curvature at `x` from constant sectional
/// curvature `c`.
pub fn curvature_model_residual(manifold: &Manifold, x: &[f64], c: f64) -> Result<f64> {
    Ok(riemann(manifold, x)?.model_residual(c))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(v: &[f64]) -> Vector {
        let mut x = [0.0; MAX_DIM];
        x[..v.len()].copy_from_slice(v);
        x
    }

    #[test]
    fn euclidean_is_flat() {
        let m = Manifold::euclidean(3).unwrap();
        let jet = metric_eval(&m, &pt(&[1.0, 2.0, 3.0])).unwrap();
        assert_eq!(jet.g, linalg::identity(3));
        assert_eq!(jet.dg, ZERO3);
        assert_eq!(jet.d2g, ZERO4);
        let c = curvature_from_jet(&jet).unwrap();
        assert_eq!(c.gamma, ZERO3);
        assert_eq!(c.max_riemann(), 0.0);
        assert_eq!(curvature_model_residual(&m, &pt(&[0.3, 0.1, 0.0]), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn space_form_at_origin() {
        let m = Manifold::space_form(3, 1.0).unwrap();
        let jet = metric_eval(&m, &pt(&[0.0, 0.0, 0.0])).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(jet.g[i][j], if i == j { 4.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn polar_plane_christoffels() {
        let m = Manifold::warped(2, "r").unwrap();
        let x = pt(&[2.0, core::f64::consts::PI / 3.0]);
        let jet = metric_eval(&m, &x).unwrap();
        assert_eq!(jet.g[0][0], 1.0);
        assert_eq!(jet.g[1][1], 4.0);
        let (_, gamma, _) = christoffel(&jet).unwrap();
        assert!(abs(gamma[0][1][1] + 2.0) < 1e-15);
        assert!(abs(gamma[1][0][1] - 0.5) < 1e-15);
        assert!(abs(gamma[1][1][0] - 0.5) < 1e-15);
        let c = curvature_from_jet(&jet).unwrap();
        assert!(c.max_riemann() < 1e-14);
    }

    #[test]
    fn sphere_ricci_positive() {
        let m = Manifold::space_form(3, 1.0).unwrap();
        let c = riemann(&m, &pt(&[0.2, -0.4, 0.5])).unwrap();
        let v = pt(&[0.3, 0.7, -0.2]);
        assert!(c.ric(&v, &v) > 0.0);
        assert!(c.model_residual(1.0) < 1e-12);
        assert!(c.model_residual(-1.0) > 1e-2);
    }

    #[test]
    fn hyperbolic_chart_boundary() {
        let m = Manifold::space_form(3, -1.0).unwrap();
        assert!(matches!(
            metric_eval(&m, &pt(&[1.0, 0.1, 0.0])),
            Err(Error::DomainViolation(_))
        ));
    }

    #[test]
    fn pole_is_excluded() {
        let m = Manifold::warped(3, "r").unwrap();
        assert!(matches!(
            metric_eval(&m, &pt(&[1.0, 0.0, 0.3])),
            Err(Error::DomainViolation(_))
        ));
        assert!(matches!(
            metric_eval(&m, &pt(&[-1.0, 1.0, 0.3])),
            Err(Error::DomainViolation(_))
        ));
    }

    #[test]
    fn indefinite_expression_metric_rejected() {
        let m = Manifold::expression(2, &["1", "0", "0", "-1"]).unwrap();
        assert!(matches!(
            metric_eval(&m, &pt(&[0.0, 0.0])),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn generic_warped_product_is_curved() {
        let m = Manifold::warped(3, "r^2 + 1").unwrap();
        let r = curvature_model_residual(&m, &pt(&[0.8, 1.1, 0.4]), 0.0).unwrap();
        assert!(r > 1e-3);
    }
}
