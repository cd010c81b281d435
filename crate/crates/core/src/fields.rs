//! Vector fields on the ambient manifold, their covariant derivatives and
//! the pointwise position-field identities.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::expr::{indexed_names, Formula};
use crate::geometry::{self, ChartKind, CurvatureData, Fiber, Manifold};
use crate::jet::Jet2;
use crate::linalg::{self, abs, Matrix, Vector, MAX_DIM};
use crate::scalar::Scalar;

/// Feature map the random polynomial fields are built on. Angles enter
/// through `cos`/`sin` so the field is periodic in them.
#[derive(Clone, Debug, PartialEq)]
pub enum Feature {
    Coord(usize),
    Cos(usize),
    Sin(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub enum FieldKind {
    /// The catalog position field of the ambient metric.
    PositionCatalog,
    /// Chart components given as formulas in `x1..xd`.
    Coordinate { components: Vec<Formula> },
    /// Seeded random polynomial in the chart features.
    RandomPolynomial {
        seed: u64,
        degree: u32,
        amplitude: f64,
        features: Vec<Feature>,
        monomials: Vec<Vec<u32>>,
        /// `coefficients[a][m]` multiplies monomial `m` in component `a`.
        coefficients: Vec<Vec<f64>>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    dim: usize,
    kind: FieldKind,
    claims_position: bool,
}

/// Value and first covariant derivative of a field, plus the conformal
/// factor `f = tr(∇P)/d` and its differential.
#[derive(Clone, Debug)]
pub struct FieldJet {
    pub p: Vector,
    /// `nabla[a][b] = (∇P)^a_b = ∂_b P^a + Γ^a_{bc} P^c`
    pub nabla: Matrix,
    pub f: f64,
    pub df: Vector,
}

/// Residuals of the pointwise position-field identities at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct PositionResiduals {
    /// Skew part of `∇P` (closedness of `P♭`).
    pub skew: f64,
    /// Traceless symmetric part of `∇P` (`L_P g = 2f g` together with `skew`).
    pub traceless_symmetric: f64,
    /// `max ‖R(X,Y)P − (df(X)Y − df(Y)X)‖` over orthonormal frame pairs.
    pub curvature: f64,
    /// `|Ric(P,v) + n df(v)|`.
    pub ricci: f64,
    /// `max ‖R(X,Y)P‖` when `‖df‖ ≤ 1e−10`, otherwise `None`.
    pub constant_factor: Option<f64>,
}

impl PositionResiduals {
    pub fn max(&self) -> f64 {
        let mut m = self
            .skew
            .max(self.traceless_symmetric)
            .max(self.curvature)
            .max(self.ricci);
        if let Some(c) = self.constant_factor {
            m = m.max(c);
        }
        m
    }
}

fn features_for(manifold: &Manifold) -> Vec<Feature> {
    let d = manifold.dim();
    let angles = |fiber: &Fiber, offset: usize, out: &mut Vec<Feature>| {
        for j in 0..fiber.dim() {
            out.push(Feature::Cos(offset + j));
            out.push(Feature::Sin(offset + j));
        }
    };
    let mut out = Vec::new();
    match manifold.chart() {
        ChartKind::Cartesian => out.extend((0..d).map(Feature::Coord)),
        ChartKind::Polar(fiber) => {
            out.push(Feature::Coord(0));
            angles(fiber, 1, &mut out);
        }
        ChartKind::Angular(fiber) => angles(fiber, 0, &mut out),
    }
    out
}

/// All exponent vectors over `nvars` variables with total degree `≤ degree`,
/// in graded lexicographic order.
fn monomials(nvars: usize, degree: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for total in 0..=degree {
        let mut cur = vec![0u32; nvars];
        fill(&mut out, &mut cur, 0, total);
    }
    out
}

fn fill(out: &mut Vec<Vec<u32>>, cur: &mut Vec<u32>, pos: usize, left: u32) {
    if pos + 1 == cur.len() {
        cur[pos] = left;
        out.push(cur.clone());
        return;
    }
    for e in (0..=left).rev() {
        cur[pos] = e;
        fill(out, cur, pos + 1, left - e);
    }
    cur[pos] = 0;
}

impl Field {
    /// Catalog position field of `manifold`.
    pub fn position(manifold: &Manifold) -> Result<Self> {
        if !manifold.has_position_field() {
            return Err(Error::InvalidParameter(format!(
                "manifold '{}' has no catalog position field",
                manifold.catalog_id().map(|c| c.name.as_str()).unwrap_or("?")
            )));
        }
        Ok(Self {
            dim: manifold.dim(),
            kind: FieldKind::PositionCatalog,
            claims_position: true,
        })
    }

    pub fn coordinate(manifold: &Manifold, components: &[&str], claims_position: bool) -> Result<Self> {
        let d = manifold.dim();
        if components.len() != d {
            return Err(Error::InvalidParameter(format!(
                "expected {d} field components, got {}",
                components.len()
            )));
        }
        let names = indexed_names("x", d);
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        let components = components
            .iter()
            .map(|c| Formula::parse(c, &names))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dim: d,
            kind: FieldKind::Coordinate { components },
            claims_position,
        })
    }

    /// Random polynomial field with coefficients uniform in
    /// `[-amplitude, amplitude]`, drawn from ChaCha8 seeded with `seed`.
    pub fn random_polynomial(manifold: &Manifold, seed: u64, degree: u32, amplitude: f64) -> Result<Self> {
        if degree > 6 {
            return Err(Error::InvalidParameter("random polynomial degree must be ≤ 6".into()));
        }
        let d = manifold.dim();
        let features = features_for(manifold);
        let monomials = monomials(features.len(), degree);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coefficients = (0..d)
            .map(|_| {
                monomials
                    .iter()
                    .map(|_| amplitude * rng.random_range(-1.0..=1.0))
                    .collect()
            })
            .collect();
        Ok(Self {
            dim: d,
            kind: FieldKind::RandomPolynomial {
                seed,
                degree,
                amplitude,
                features,
                monomials,
                coefficients,
            },
            claims_position: false,
        })
    }

    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    pub fn claims_position(&self) -> bool {
        self.claims_position
    }

    pub fn seed(&self) -> Option<u64> {
        match self.kind {
            FieldKind::RandomPolynomial { seed, .. } => Some(seed),
            _ => None,
        }
    }

    /// Chart components of the field at `x`.
    pub fn components<T: Scalar>(&self, manifold: &Manifold, x: &Vector<T>) -> Vector<T> {
        let d = self.dim;
        match &self.kind {
            FieldKind::PositionCatalog => manifold
                .position_field(x)
                .expect("position field existence checked at construction"),
            FieldKind::Coordinate { components } => {
                let mut p = linalg::zeros::<T>();
                for (a, c) in components.iter().enumerate() {
                    p[a] = c.eval(&x[..d]);
                }
                p
            }
            FieldKind::RandomPolynomial {
                features,
                monomials,
                coefficients,
                ..
            } => {
                let vals: Vec<T> = features
                    .iter()
                    .map(|f| match f {
                        Feature::Coord(i) => x[*i],
                        Feature::Cos(i) => x[*i].cos(),
                        Feature::Sin(i) => x[*i].sin(),
                    })
                    .collect();
                let terms: Vec<T> = monomials
                    .iter()
                    .map(|m| {
                        let mut t = T::one();
                        for (v, &e) in vals.iter().zip(m) {
                            if e > 0 {
                                t *= v.powi(e as i32);
                            }
                        }
                        t
                    })
                    .collect();
                let mut p = linalg::zeros::<T>();
                for a in 0..d {
                    let mut s = T::zero();
                    for (c, t) in coefficients[a].iter().zip(&terms) {
                        s += *t * *c;
                    }
                    p[a] = s;
                }
                p
            }
        }
    }
}

/// Field jet at `x`, reusing curvature data already computed there.
pub fn field_eval_with(field: &Field, manifold: &Manifold, curv: &CurvatureData, x: &[f64]) -> FieldJet {
    let d = manifold.dim();
    let mut xj = [Jet2::<MAX_DIM>::constant(0.0); MAX_DIM];
    for i in 0..d {
        xj[i] = Jet2::var(x[i], i);
    }
    let pj = field.components(manifold, &xj);
    let mut jet = FieldJet {
        p: [0.0; MAX_DIM],
        nabla: [[0.0; MAX_DIM]; MAX_DIM],
        f: 0.0,
        df: [0.0; MAX_DIM],
    };
    for a in 0..d {
        jet.p[a] = pj[a].v;
    }
    for a in 0..d {
        for b in 0..d {
            let mut s = pj[a].g[b];
            for c in 0..d {
                s += curv.gamma[a][b][c] * jet.p[c];
            }
            jet.nabla[a][b] = s;
        }
    }
    jet.f = linalg::trace(&jet.nabla, d) / d as f64;
    // ∂_e tr∇P = Σ_a ∂_e∂_a P^a + Σ_{a,c} (∂_eΓ^a_{ac} P^c + Γ^a_{ac} ∂_e P^c)
    for e in 0..d {
        let mut s = 0.0;
        for a in 0..d {
            s += pj[a].h[a][e];
            for c in 0..d {
                s += curv.dgamma[a][a][c][e] * jet.p[c] + curv.gamma[a][a][c] * pj[c].g[e];
            }
        }
        jet.df[e] = s / d as f64;
    }
    jet
}

pub fn field_eval(field: &Field, manifold: &Manifold, x: &[f64]) -> Result<FieldJet> {
    let curv = geometry::riemann(manifold, x)?;
    Ok(field_eval_with(field, manifold, &curv, x))
}

/// `∇P` expressed in the orthonormal frame given by the columns of `frame`.
pub fn nabla_in_frame(jet: &FieldJet, frame: &Matrix, g: &Matrix, d: usize) -> Matrix {
    // frame⁻¹ = frameᵀ g for an orthonormal frame
    let ft_g = linalg::matmul(&linalg::transpose(frame, d), g, d);
    linalg::matmul(&linalg::matmul(&ft_g, &jet.nabla, d), frame, d)
}

/// `‖∇P − f·id‖_max` in an orthonormal frame.
pub fn conformal_defect_of(jet: &FieldJet, curv: &CurvatureData) -> f64 {
    let d = curv.dim;
    let m = nabla_in_frame(jet, &curv.orthonormal_frame(), &curv.g, d);
    let f = linalg::trace(&m, d) / d as f64;
    let mut out: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let target = if i == j { f } else { 0.0 };
            out = out.max(abs(m[i][j] - target));
        }
    }
    out
}

pub fn conformal_factor_defect(field: &Field, manifold: &Manifold, x: &[f64]) -> Result<f64> {
    let curv = geometry::riemann(manifold, x)?;
    let jet = field_eval_with(field, manifold, &curv, x);
    Ok(conformal_defect_of(&jet, &curv))
}

/// Pointwise residuals of `dP♭ = 0`, `L_P g = 2fg`, `R(·,·)P = df∧1`,
/// `Ric(P,v) = −n df(v)` and, for constant `f`, `R(·,·)P = 0`.
pub fn position_identity_residuals(
    field: &Field,
    manifold: &Manifold,
    x: &[f64],
    v: &[f64],
) -> Result<PositionResiduals> {
    if !field.claims_position() {
        return Err(Error::NotAPositionField);
    }
    let d = manifold.dim();
    let curv = geometry::riemann(manifold, x)?;
    let mut vv = [0.0; MAX_DIM];
    vv[..d].copy_from_slice(&v[..d]);
    let vnorm = linalg::inner(&curv.g, &vv, &vv, d);
    if abs(vnorm - 1.0) > 1e-8 {
        return Err(Error::InvalidParameter(format!("v is not unit: ⟨v,v⟩ = {vnorm}")));
    }
    let jet = field_eval_with(field, manifold, &curv, x);
    let frame = curv.orthonormal_frame();
    let m = nabla_in_frame(&jet, &frame, &curv.g, d);
    let f = linalg::trace(&m, d) / d as f64;
    let mut skew: f64 = 0.0;
    let mut tsym: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            skew = skew.max(abs(0.5 * (m[i][j] - m[j][i])));
            let sym = 0.5 * (m[i][j] + m[j][i]) - if i == j { f } else { 0.0 };
            tsym = tsym.max(abs(sym));
        }
    }
    let col = |k: usize| -> Vector {
        let mut e = [0.0; MAX_DIM];
        for a in 0..d {
            e[a] = frame[a][k];
        }
        e
    };
    let df_of = |w: &Vector| -> f64 { (0..d).map(|a| jet.df[a] * w[a]).sum() };
    let mut curvature: f64 = 0.0;
    let mut rp_max: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            if i == j {
                continue;
            }
            let (ei, ej) = (col(i), col(j));
            let rp = curv.rm_vector(&ei, &ej, &jet.p);
            let mut diff = rp;
            let (dfi, dfj) = (df_of(&ei), df_of(&ej));
            for a in 0..d {
                diff[a] -= dfi * ej[a] - dfj * ei[a];
            }
            curvature = curvature.max(libm::sqrt(linalg::inner(&curv.g, &diff, &diff, d).max(0.0)));
            rp_max = rp_max.max(libm::sqrt(linalg::inner(&curv.g, &rp, &rp, d).max(0.0)));
        }
    }
    let n = (d - 1) as f64;
    let ricci = abs(curv.ric(&jet.p, &vv) + n * df_of(&vv));
    let df_norm = libm::sqrt(linalg::inner(&curv.g_inv, &jet.df, &jet.df, d).max(0.0));
    Ok(PositionResiduals {
        skew,
        traceless_symmetric: tsym,
        curvature,
        ricci,
        constant_factor: (df_norm <= 1e-10).then_some(rp_max),
    })
}
