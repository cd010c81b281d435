//! Integrands of the integral identities, their quadrature over the
//! parameter domain, convergence reports and the constant-curvature
//! classifier.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::fields::{self, Field, FieldJet};
use crate::geometry::{CurvatureData, Manifold};
use crate::hypersurface::{self, Immersion, LieMethod, SurfacePoint};
use crate::linalg::{self, abs, Matrix, Vector, MAX_DIM};
use crate::quadrature::{pairwise_sum, TensorGrid};

/// Relative residuals below this are treated as converged to round-off.
pub const SATURATION_FLOOR: f64 = 1e-13;
/// Scenes whose normalization per unit area is below this are degenerate:
/// every term vanishes up to round-off.
pub const DEGENERATE_DENSITY: f64 = 1e-13;

pub fn is_degenerate(normalization: f64, area: f64) -> bool {
    !(normalization > DEGENERATE_DENSITY * area)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IdentityId {
    Gen(u8),
    Pos(u8),
    Ein(u8),
    Csc(u8),
    Csc2X,
}

impl fmt::Display for IdentityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IdentityId::Gen(i) => write!(f, "GEN{i}"),
            IdentityId::Pos(i) => write!(f, "POS{i}"),
            IdentityId::Ein(i) => write!(f, "EIN{i}"),
            IdentityId::Csc(i) => write!(f, "CSC_{i}"),
            IdentityId::Csc2X => write!(f, "CSC2X"),
        }
    }
}

impl FromStr for IdentityId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let up = s.trim().to_ascii_uppercase();
        let bad = || Error::InvalidParameter(format!("unknown identity '{s}'"));
        if up == "CSC2X" {
            return Ok(IdentityId::Csc2X);
        }
        let (head, idx) = if let Some(rest) = up.strip_prefix("CSC") {
            ("CSC", rest.trim_start_matches('_'))
        } else if up.len() > 3 {
            up.split_at(3)
        } else {
            return Err(bad());
        };
        let i: u8 = idx.parse().map_err(|_| bad())?;
        match head {
            "GEN" if i <= 2 => Ok(IdentityId::Gen(i)),
            "POS" if i <= 2 => Ok(IdentityId::Pos(i)),
            "EIN" if (1..=2).contains(&i) => Ok(IdentityId::Ein(i)),
            "CSC" => Ok(IdentityId::Csc(i)),
            _ => Err(bad()),
        }
    }
}

/// Requirements an identity places on a scene.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Gates {
    pub position: bool,
    pub einstein: bool,
    pub space_form: bool,
}

impl IdentityId {
    pub fn gates(&self) -> Gates {
        let (position, einstein, space_form) = match self {
            IdentityId::Gen(_) => (false, false, false),
            IdentityId::Pos(_) => (true, false, false),
            IdentityId::Ein(_) => (true, true, false),
            IdentityId::Csc(_) | IdentityId::Csc2X => (true, false, true),
        };
        Gates {
            position,
            einstein,
            space_form,
        }
    }

    /// Every identity defined for hypersurfaces of dimension `n`.
    pub fn all(n: usize) -> Vec<IdentityId> {
        let mut v = vec![
            IdentityId::Gen(0),
            IdentityId::Gen(1),
            IdentityId::Gen(2),
            IdentityId::Pos(0),
            IdentityId::Pos(1),
            IdentityId::Pos(2),
            IdentityId::Ein(1),
            IdentityId::Ein(2),
        ];
        v.extend((0..n as u8).map(IdentityId::Csc));
        v.push(IdentityId::Csc2X);
        v
    }

    pub fn check_dimension(&self, n: usize) -> Result<()> {
        match self {
            IdentityId::Csc(i) if *i as usize >= n => Err(Error::IndexOutOfRange {
                index: *i as usize,
                max: n - 1,
            }),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Relative residual for a pass.
    pub identity: f64,
    /// Surface-wide standard deviation below which `H_i` counts as constant.
    pub constancy: f64,
    pub umbilicity: f64,
    /// Conformal defect `‖∇P − f·id‖` allowed for a position field.
    pub position_gate: f64,
    pub einstein_gate: f64,
    pub space_form_gate: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            identity: 1e-6,
            constancy: 1e-7,
            umbilicity: 1e-8,
            position_gate: 1e-8,
            einstein_gate: 1e-6,
            space_form_gate: 1e-6,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Scene {
    pub manifold: Manifold,
    pub immersion: Immersion,
    pub field: Field,
    pub identities: Vec<IdentityId>,
    /// Per-axis node counts, one entry per refinement level.
    pub levels: Vec<Vec<usize>>,
    pub tolerances: Tolerances,
    pub lie_method: LieMethod,
}

impl Scene {
    pub fn new(manifold: Manifold, immersion: Immersion, field: Field, identities: Vec<IdentityId>) -> Self {
        let n = immersion.n();
        let levels = if n <= 2 {
            uniform_levels(&[16, 32, 64, 128], n)
        } else if n == 3 {
            uniform_levels(&[12, 16, 24, 32], n)
        } else {
            uniform_levels(&[8, 12, 16], n)
        };
        Self {
            manifold,
            immersion,
            field,
            identities,
            levels,
            tolerances: Tolerances::default(),
            lie_method: LieMethod::Combinatorial,
        }
    }

    pub fn with_levels(mut self, levels: Vec<Vec<usize>>) -> Self {
        self.levels = levels;
        self
    }

    pub fn n(&self) -> usize {
        self.immersion.n()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if self.manifold.dim() != n + 1 {
            return Err(Error::InvalidParameter(format!(
                "surface dimension {n} does not fit a manifold of dimension {}",
                self.manifold.dim()
            )));
        }
        if self.levels.is_empty() {
            return Err(Error::InvalidParameter("no quadrature levels".into()));
        }
        for l in &self.levels {
            if l.len() != n || l.contains(&0) {
                return Err(Error::InvalidParameter(format!(
                    "level {l:?} must list {n} positive node counts"
                )));
            }
        }
        for id in &self.identities {
            id.check_dimension(n)?;
        }
        Ok(())
    }
}

/// The same node count on every axis for each level.
pub fn uniform_levels(per_axis: &[usize], n: usize) -> Vec<Vec<usize>> {
    per_axis.iter().map(|&m| vec![m; n]).collect()
}

/// Every pointwise quantity the identities and diagnostics need.
#[derive(Clone, Debug)]
pub struct PointQuantities {
    pub n: usize,
    pub area_density: f64,
    pub f: f64,
    pub p_nu: f64,
    pub h: [f64; MAX_DIM + 1],
    pub principal: Vector,
    /// `L_i` for `i = 0, 1, 2` by the configured method.
    pub lie: [f64; 3],
    /// `max_i |L_i^comb − L_i^trace|`.
    pub lie_method_defect: f64,
    pub ric_p_nu: f64,
    pub ric_nu_nu: f64,
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub df_nu: f64,
    pub sym_defect: f64,
    pub conformal_defect: f64,
    pub einstein_defect: f64,
    pub space_form_defect: f64,
}

impl PointQuantities {
    pub fn hi(&self, i: usize) -> f64 {
        if i <= self.n {
            self.h[i]
        } else {
            0.0
        }
    }

    /// `(n−i)·f·C(n,i)·H_i`.
    pub fn position_lie(&self, i: usize) -> f64 {
        let n = self.n;
        if i >= n {
            0.0
        } else {
            (n - i) as f64 * self.f * linalg::binomial(n, i) * self.h[i]
        }
    }

    /// Pointwise `|L_i − (n−i) f C(n,i) H_i|`, the position-field reduction
    /// defect.
    pub fn reduction_defect(&self) -> f64 {
        (0..3)
            .map(|i| abs(self.lie[i] - self.position_lie(i)))
            .fold(0.0, f64::max)
    }

    /// `|tr R(P,∇ν)ν − nH₁ df(ν)|`.
    pub fn proposition_defect(&self) -> f64 {
        abs(self.t3 - self.n as f64 * self.h[1] * self.df_nu)
    }

    /// Individual terms of the identity's integrand, without `dA`.
    pub fn terms(&self, id: IdentityId) -> Vec<f64> {
        let n = self.n;
        let nf = n as f64;
        let b = |k: usize| linalg::binomial(n, k);
        let pn = self.p_nu;
        let gen = |i: u8, l: f64| -> Vec<f64> {
            match i {
                0 => vec![l, -nf * pn * self.hi(1)],
                1 => vec![l, -2.0 * b(2) * pn * self.hi(2), -self.ric_p_nu, pn * self.ric_nu_nu],
                _ => vec![
                    l,
                    pn * self.ric_nu_nu * nf * self.hi(1),
                    -self.ric_p_nu * nf * self.hi(1),
                    -3.0 * b(3) * pn * self.hi(3),
                    pn * self.t1,
                    self.t2,
                    -self.t3,
                ],
            }
        };
        match id {
            IdentityId::Gen(i) => gen(i, self.lie[i as usize]),
            IdentityId::Pos(i) => gen(i, self.position_lie(i as usize)),
            IdentityId::Ein(1) => vec![self.f * self.hi(1), -pn * self.hi(2)],
            IdentityId::Ein(_) => vec![
                3.0 * b(3) * self.f * self.hi(2),
                -3.0 * b(3) * pn * self.hi(3),
                pn * self.t1,
                -self.t3,
            ],
            IdentityId::Csc(i) => vec![self.f * self.hi(i as usize), -pn * self.hi(i as usize + 1)],
            IdentityId::Csc2X => vec![self.f * self.hi(2), -pn * self.hi(3)],
        }
    }

    /// `lhs`/`rhs` of the umbilicity identity at this point.
    pub fn umbilicity(&self) -> (f64, f64) {
        umbilicity_from_eigenvalues(&self.principal, self.n)
    }
}

fn tangential_block(jet: &FieldJet, sp: &SurfacePoint) -> Matrix {
    let n = sp.frame.n;
    let d = n + 1;
    let g = &sp.curvature.g;
    let mut s = [[0.0; MAX_DIM]; MAX_DIM];
    for b in 0..n {
        let eb = sp.frame.tangent(b);
        let dp = linalg::mat_vec(&jet.nabla, &eb, d);
        for (k, row) in s.iter_mut().enumerate().take(n) {
            row[b] = linalg::inner(g, &dp, &sp.frame.tangent(k), d);
        }
    }
    s
}

fn space_form_defect(curv: &CurvatureData) -> f64 {
    let d = curv.dim as f64;
    let c = curv.scalar_curvature() / (d * (d - 1.0));
    curv.model_residual(c)
}

/// Evaluates all pointwise quantities at the parameter point `u`.
pub fn point_quantities(scene: &Scene, u: &[f64]) -> Result<PointQuantities> {
    let sp = hypersurface::surface_point(&scene.immersion, &scene.manifold, u)?;
    if sp.shape.sym_defect > hypersurface::MAX_SYM_DEFECT {
        return Err(Error::SymmetryDefectTooLarge(sp.shape.sym_defect));
    }
    let n = sp.frame.n;
    let d = n + 1;
    let curv = &sp.curvature;
    let jet = fields::field_eval_with(&scene.field, &scene.manifold, curv, &sp.frame.x);
    let s = tangential_block(&jet, &sp);
    let mut lie = [0.0; 3];
    let mut lie_method_defect: f64 = 0.0;
    for (i, l) in lie.iter_mut().enumerate() {
        let comb = hypersurface::lie_term(LieMethod::Combinatorial, &s, &sp.shape, i.min(n))?;
        let tr = hypersurface::lie_term(LieMethod::Trace, &s, &sp.shape, i.min(n))?;
        let (comb, tr) = if i > n { (0.0, 0.0) } else { (comb, tr) };
        lie_method_defect = lie_method_defect.max(abs(comb - tr));
        *l = match scene.lie_method {
            LieMethod::Combinatorial => comb,
            LieMethod::Trace => tr,
        };
    }
    let nu = &sp.frame.nu;
    let (t1, t2, t3) = hypersurface::curvature_traces(curv, &sp.frame, &sp.shape.a, &jet.p);
    Ok(PointQuantities {
        n,
        area_density: sp.frame.area_density,
        f: jet.f,
        p_nu: linalg::inner(&curv.g, &jet.p, nu, d),
        h: sp.shape.h,
        principal: sp.shape.principal,
        lie,
        lie_method_defect,
        ric_p_nu: curv.ric(&jet.p, nu),
        ric_nu_nu: curv.ric(nu, nu),
        t1,
        t2,
        t3,
        df_nu: (0..d).map(|a| jet.df[a] * nu[a]).sum(),
        sym_defect: sp.shape.sym_defect,
        conformal_defect: fields::conformal_defect_of(&jet, curv),
        einstein_defect: curv.einstein_defect(),
        space_form_defect: space_form_defect(curv),
    })
}

/// Pointwise integrand `Σ terms · dA` of `id` at `u`, with gates checked
/// at that point.
pub fn integrand(scene: &Scene, id: IdentityId, u: &[f64]) -> Result<f64> {
    id.check_dimension(scene.n())?;
    let q = point_quantities(scene, u)?;
    if let Some(v) = gate_failures(scene, id, &GateMeasures::from_point(&q))
        .into_iter()
        .next()
    {
        return Err(v.into_error());
    }
    Ok(q.terms(id).iter().sum::<f64>() * q.area_density)
}

/// Largest gate-relevant defects seen over a set of points.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GateMeasures {
    pub conformal: f64,
    pub einstein: f64,
    pub space_form: f64,
}

impl GateMeasures {
    pub fn from_point(q: &PointQuantities) -> Self {
        Self {
            conformal: q.conformal_defect,
            einstein: q.einstein_defect,
            space_form: q.space_form_defect,
        }
    }

    pub fn merge(&mut self, other: &Self) {
        self.conformal = self.conformal.max(other.conformal);
        self.einstein = self.einstein.max(other.einstein);
        self.space_form = self.space_form.max(other.space_form);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GateFailure {
    pub identity: IdentityId,
    pub gate: String,
    pub value: f64,
    pub limit: f64,
}

impl GateFailure {
    pub fn into_error(self) -> Error {
        Error::GateViolation {
            identity: self.identity.to_string(),
            gate: self.gate,
            value: self.value,
            limit: self.limit,
        }
    }
}

pub fn gate_failures(scene: &Scene, id: IdentityId, m: &GateMeasures) -> Vec<GateFailure> {
    let g = id.gates();
    let tol = &scene.tolerances;
    let mut out = Vec::new();
    let mut push = |gate: &str, value: f64, limit: f64| {
        out.push(GateFailure {
            identity: id,
            gate: gate.into(),
            value,
            limit,
        })
    };
    if g.position {
        if !scene.field.claims_position() {
            push("position field claimed", 1.0, 0.0);
        } else if !(m.conformal <= tol.position_gate) {
            push("conformal defect", m.conformal, tol.position_gate);
        }
    }
    if g.einstein && !(m.einstein <= tol.einstein_gate) {
        push("Einstein defect", m.einstein, tol.einstein_gate);
    }
    if g.space_form && !(m.space_form <= tol.space_form_gate) {
        push("constant curvature defect", m.space_form, tol.space_form_gate);
    }
    out
}

/// Parallel map over node indices. Implementations must return results in
/// index order.
pub trait Executor {
    fn map(&self, count: usize, f: &(dyn Fn(usize) -> Result<PointQuantities> + Sync)) -> Vec<Result<PointQuantities>>;
}

pub struct Sequential;

impl Executor for Sequential {
    fn map(&self, count: usize, f: &(dyn Fn(usize) -> Result<PointQuantities> + Sync)) -> Vec<Result<PointQuantities>> {
        (0..count).map(f).collect()
    }
}

/// Quantities at every node of one level, in node order, with weights.
pub struct LevelSamples {
    pub counts: Vec<usize>,
    pub weights: Vec<f64>,
    pub points: Vec<PointQuantities>,
}

impl LevelSamples {
    /// `∫ g dA` by pairwise summation.
    pub fn integrate(&self, g: impl Fn(&PointQuantities) -> f64) -> f64 {
        let v: Vec<f64> = self
            .points
            .iter()
            .zip(&self.weights)
            .map(|(q, w)| g(q) * q.area_density * w)
            .collect();
        pairwise_sum(&v)
    }

    /// `(∫ Σ terms, ∫ Σ |terms|)`.
    pub fn identity_integral(&self, id: IdentityId) -> (f64, f64) {
        let mut raw = Vec::with_capacity(self.points.len());
        let mut norm = Vec::with_capacity(self.points.len());
        for (q, w) in self.points.iter().zip(&self.weights) {
            let t = q.terms(id);
            let s = q.area_density * w;
            raw.push(t.iter().sum::<f64>() * s);
            norm.push(t.iter().map(|v| abs(*v)).sum::<f64>() * s);
        }
        (pairwise_sum(&raw), pairwise_sum(&norm))
    }

    pub fn max_of(&self, g: impl Fn(&PointQuantities) -> f64) -> f64 {
        self.points.iter().map(g).fold(0.0, f64::max)
    }

    pub fn gate_measures(&self) -> GateMeasures {
        let mut m = GateMeasures::default();
        for q in &self.points {
            m.merge(&GateMeasures::from_point(q));
        }
        m
    }

    /// Area-weighted standard deviation of `g` over the surface.
    pub fn std_dev(&self, g: impl Fn(&PointQuantities) -> f64) -> f64 {
        let area = self.integrate(|_| 1.0);
        let mean = self.integrate(&g) / area;
        let var = self.integrate(|q| (g(q) - mean) * (g(q) - mean)) / area;
        libm::sqrt(var.max(0.0))
    }
}

pub fn sample_level(scene: &Scene, counts: &[usize], exec: &dyn Executor) -> Result<LevelSamples> {
    let grid = TensorGrid::new(scene.immersion.axes(), counts);
    let eval = |i: usize| {
        let (u, _) = grid.node(i);
        point_quantities(scene, &u)
    };
    let points = exec.map(grid.len(), &eval).into_iter().collect::<Result<Vec<_>>>()?;
    let weights = (0..grid.len()).map(|i| grid.node(i).1).collect();
    Ok(LevelSamples {
        counts: counts.to_vec(),
        weights,
        points,
    })
}

/// `(∫ integrand, ∫ Σ|terms|)` at the given level.
pub fn integrate(scene: &Scene, id: IdentityId, level: usize, exec: &dyn Executor) -> Result<(f64, f64)> {
    let counts = scene.levels.get(level).ok_or(Error::IndexOutOfRange {
        index: level,
        max: scene.levels.len().saturating_sub(1),
    })?;
    let samples = sample_level(scene, counts, exec)?;
    if let Some(f) = gate_failures(scene, id, &samples.gate_measures()).into_iter().next() {
        return Err(f.into_error());
    }
    let (raw, norm) = samples.identity_integral(id);
    if is_degenerate(norm, samples.integrate(|_| 1.0)) {
        return Err(Error::DegenerateScene(norm));
    }
    Ok((raw, norm))
}

/// Checks gates for every selected identity on a coarse grid.
pub fn precheck_gates(scene: &Scene, exec: &dyn Executor) -> Result<Vec<GateFailure>> {
    scene.validate()?;
    let counts: Vec<usize> = vec![5; scene.n()];
    let samples = sample_level(scene, &counts, exec)?;
    let m = samples.gate_measures();
    Ok(scene
        .identities
        .iter()
        .flat_map(|id| gate_failures(scene, *id, &m))
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Order {
    Observed(f64),
    /// Both residuals at the round-off floor.
    Saturated,
    Undefined,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelResult {
    pub counts: Vec<usize>,
    pub nodes: usize,
    /// `∫ dA` at this level.
    pub area: f64,
    pub raw: f64,
    pub normalization: f64,
    pub relative: f64,
    /// Normalization at round-off; `relative` is then a ratio of noise.
    pub degenerate: bool,
    /// Order relative to the previous level.
    pub order: Option<Order>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// Every term vanishes identically; the identity holds trivially.
    Degenerate,
    GateViolation,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::Degenerate => "degenerate",
            Status::GateViolation => "GATE",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdentityReport {
    pub id: IdentityId,
    pub status: Status,
    pub levels: Vec<LevelResult>,
    /// Strictly decreasing relative residuals, or at the floor.
    pub monotone: bool,
    pub gate: Vec<GateFailure>,
    pub notes: Vec<String>,
}

impl IdentityReport {
    pub fn top(&self) -> Option<&LevelResult> {
        self.levels.last()
    }

    pub fn passed(&self) -> bool {
        matches!(self.status, Status::Pass | Status::Degenerate)
    }
}

/// Largest pointwise diagnostics over all levels.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Diagnostics {
    pub sym_defect: f64,
    pub lie_method_defect: f64,
    pub reduction_defect: Option<f64>,
    pub proposition_defect: Option<f64>,
    pub conformal_defect: f64,
    pub einstein_defect: f64,
    pub space_form_defect: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResidualReport {
    pub identities: Vec<IdentityReport>,
    pub diagnostics: Diagnostics,
    pub classification: Option<Classification>,
}

impl ResidualReport {
    pub fn all_passed(&self) -> bool {
        self.identities.iter().all(IdentityReport::passed)
    }

    pub fn get(&self, id: IdentityId) -> Option<&IdentityReport> {
        self.identities.iter().find(|r| r.id == id)
    }
}

impl LevelResult {
    fn at_floor(&self) -> bool {
        self.degenerate || self.relative <= SATURATION_FLOOR
    }
}

fn observed_order(prev: &LevelResult, cur: &LevelResult) -> Order {
    if prev.at_floor() && cur.at_floor() {
        return Order::Saturated;
    }
    let geo = |c: &[usize]| libm::pow(c.iter().map(|&m| m as f64).product::<f64>(), 1.0 / c.len() as f64);
    let ratio = geo(&cur.counts) / geo(&prev.counts);
    if !(prev.relative > 0.0 && cur.relative > 0.0) || ratio <= 1.0 {
        return Order::Undefined;
    }
    Order::Observed(libm::log(prev.relative / cur.relative) / libm::log(ratio))
}

fn is_monotone(levels: &[LevelResult]) -> bool {
    levels
        .windows(2)
        .all(|w| w[1].relative < w[0].relative || w[1].at_floor())
}

/// Runs every configured level and identity. `on_level` is called after
/// each level with its index.
pub fn convergence_sweep_with(
    scene: &Scene,
    exec: &dyn Executor,
    on_level: &mut dyn FnMut(usize),
) -> Result<ResidualReport> {
    scene.validate()?;
    let n = scene.n();
    let mut per_id: Vec<Vec<LevelResult>> = vec![Vec::new(); scene.identities.len()];
    let mut gates = GateMeasures::default();
    let mut diag = Diagnostics::default();
    let mut top: Option<LevelSamples> = None;
    for (li, counts) in scene.levels.iter().enumerate() {
        let samples = sample_level(scene, counts, exec)?;
        gates.merge(&samples.gate_measures());
        diag.sym_defect = diag.sym_defect.max(samples.max_of(|q| q.sym_defect));
        diag.lie_method_defect = diag.lie_method_defect.max(samples.max_of(|q| q.lie_method_defect));
        if scene.field.claims_position() {
            let r = samples.max_of(PointQuantities::reduction_defect);
            let p = samples.max_of(PointQuantities::proposition_defect);
            diag.reduction_defect = Some(diag.reduction_defect.unwrap_or(0.0).max(r));
            diag.proposition_defect = Some(diag.proposition_defect.unwrap_or(0.0).max(p));
        }
        let area = samples.integrate(|_| 1.0);
        for (k, id) in scene.identities.iter().enumerate() {
            let (raw, norm) = samples.identity_integral(*id);
            let relative = if norm > 0.0 { abs(raw) / norm } else { 0.0 };
            let mut lr = LevelResult {
                counts: counts.clone(),
                nodes: samples.points.len(),
                area,
                raw,
                normalization: norm,
                relative,
                degenerate: is_degenerate(norm, area),
                order: None,
            };
            if let Some(prev) = per_id[k].last() {
                lr.order = Some(observed_order(prev, &lr));
            }
            per_id[k].push(lr);
        }
        on_level(li);
        top = Some(samples);
    }
    diag.conformal_defect = gates.conformal;
    diag.einstein_defect = gates.einstein;
    diag.space_form_defect = gates.space_form;

    let mut identities = Vec::new();
    for (id, levels) in scene.identities.iter().zip(per_id) {
        let gate = gate_failures(scene, *id, &gates);
        let last = levels.last().expect("at least one level");
        let status = if !gate.is_empty() {
            Status::GateViolation
        } else if is_degenerate(last.normalization, last.area) {
            Status::Degenerate
        } else if last.relative <= scene.tolerances.identity {
            Status::Pass
        } else {
            Status::Fail
        };
        let mut notes = Vec::new();
        if *id == IdentityId::Csc2X && n < 3 {
            notes.push("CSC2X is not implied for n < 3; H_3 = 0".to_string());
        }
        if status == Status::Degenerate {
            notes.push("every term vanishes identically".to_string());
        }
        identities.push(IdentityReport {
            id: *id,
            status,
            monotone: is_monotone(&levels),
            levels,
            gate,
            notes,
        });
    }

    let classification = match top {
        Some(s) if scene.field.claims_position() && gates.einstein <= scene.tolerances.einstein_gate => {
            Some(classify_samples(&s, &scene.tolerances))
        }
        _ => None,
    };
    Ok(ResidualReport {
        identities,
        diagnostics: diag,
        classification,
    })
}

pub fn convergence_sweep(scene: &Scene, exec: &dyn Executor) -> Result<ResidualReport> {
    convergence_sweep_with(scene, exec, &mut |_| {})
}

/// `((n−1)Σa_i² − 2Σ_{i<j}a_ia_j, Σ_{i<j}(a_i−a_j)²)`.
pub fn umbilicity_from_eigenvalues(a: &[f64], n: usize) -> (f64, f64) {
    let mut sq = 0.0;
    let mut cross = 0.0;
    let mut rhs = 0.0;
    for i in 0..n {
        sq += a[i] * a[i];
        for j in i + 1..n {
            cross += a[i] * a[j];
            rhs += (a[i] - a[j]) * (a[i] - a[j]);
        }
    }
    ((n as f64 - 1.0) * sq - 2.0 * cross, rhs)
}

pub fn umbilicity_defect(a: &Matrix, n: usize) -> (f64, f64) {
    umbilicity_from_eigenvalues(&linalg::symmetric_eigenvalues(a, n), n)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Case {
    /// `∫f = 0`, `∫⟨P,ν⟩ ≠ 0`: forces `H₁ = H₂ = 0`.
    VanishingFactor,
    /// `∫f ≠ 0`: forces a totally umbilic surface.
    Umbilic,
    /// Neither hypothesis set applies.
    NotCase,
    /// `H₁` or `H₂` is not constant.
    NotConstant,
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Case::VanishingFactor => "case (i)",
            Case::Umbilic => "case (ii)",
            Case::NotCase => "NotCase",
            Case::NotConstant => "NotConstant",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Classification {
    pub case: Case,
    pub integral_f: f64,
    pub integral_p_nu: f64,
    pub std_h1: f64,
    pub std_h2: f64,
    pub max_principal: f64,
    /// Area-weighted mean of `Σ_{i<j}(a_i − a_j)²`.
    pub umbilicity_rhs: f64,
    pub max_h1_sq_minus_h2: f64,
    /// Whether the theorem's conclusion holds for the selected case.
    pub conclusion_holds: Option<bool>,
}

fn classify_samples(s: &LevelSamples, tol: &Tolerances) -> Classification {
    let area = s.integrate(|_| 1.0);
    let integral_f = s.integrate(|q| q.f);
    let integral_p_nu = s.integrate(|q| q.p_nu);
    let abs_f = s.integrate(|q| abs(q.f));
    let abs_p = s.integrate(|q| abs(q.p_nu));
    let std_h1 = s.std_dev(|q| q.h[1]);
    let std_h2 = s.std_dev(|q| q.h[2]);
    let max_principal = s.max_of(|q| (0..q.n).map(|i| abs(q.principal[i])).fold(0.0, f64::max));
    let umbilicity_rhs = s.integrate(|q| q.umbilicity().1) / area;
    let max_h1_sq_minus_h2 = s.max_of(|q| abs(q.h[1] * q.h[1] - q.h[2]));
    let zero_f = abs(integral_f) <= tol.identity * abs_f.max(DEGENERATE_DENSITY * area);
    let zero_p = abs(integral_p_nu) <= tol.identity * abs_p.max(DEGENERATE_DENSITY * area);
    let (case, conclusion_holds) = if std_h1 > tol.constancy || std_h2 > tol.constancy {
        (Case::NotConstant, None)
    } else if zero_f && !zero_p {
        (Case::VanishingFactor, Some(max_principal <= tol.umbilicity))
    } else if !zero_f {
        (
            Case::Umbilic,
            Some(umbilicity_rhs <= tol.umbilicity && max_h1_sq_minus_h2 <= tol.umbilicity),
        )
    } else {
        (Case::NotCase, None)
    };
    Classification {
        case,
        integral_f,
        integral_p_nu,
        std_h1,
        std_h2,
        max_principal,
        umbilicity_rhs,
        max_h1_sq_minus_h2,
        conclusion_holds,
    }
}

/// Runs the classifier on the top level of the scene.
pub fn classify_constant_curvature_case(scene: &Scene, exec: &dyn Executor) -> Result<Classification> {
    scene.validate()?;
    if !scene.field.claims_position() {
        return Err(Error::GateViolation {
            identity: "classifier".into(),
            gate: "position field claimed".into(),
            value: 1.0,
            limit: 0.0,
        });
    }
    let counts = scene.levels.last().expect("validated");
    let s = sample_level(scene, counts, exec)?;
    let m = s.gate_measures();
    if !(m.einstein <= scene.tolerances.einstein_gate) {
        return Err(Error::GateViolation {
            identity: "classifier".into(),
            gate: "Einstein defect".into(),
            value: m.einstein,
            limit: scene.tolerances.einstein_gate,
        });
    }
    Ok(classify_samples(&s, &scene.tolerances))
}

/// Boxed executor for callers that pick one at runtime.
pub type DynExecutor = Box<dyn Executor + Sync>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_names_round_trip() {
        for id in IdentityId::all(4) {
            assert_eq!(id.to_string().parse::<IdentityId>().unwrap(), id);
        }
        assert_eq!("csc1".parse::<IdentityId>().unwrap(), IdentityId::Csc(1));
        assert!("EIN0".parse::<IdentityId>().is_err());
        assert!("GEN3".parse::<IdentityId>().is_err());
        assert!("XYZ".parse::<IdentityId>().is_err());
    }

    #[test]
    fn umbilicity_examples() {
        assert_eq!(umbilicity_from_eigenvalues(&[2.0, 2.0, 2.0], 3), (0.0, 0.0));
        assert_eq!(umbilicity_from_eigenvalues(&[1.0, -1.0], 2), (4.0, 4.0));
    }

    #[test]
    fn order_saturates() {
        let l = |r: f64, m: usize| LevelResult {
            counts: vec![m, m],
            nodes: m * m,
            area: 1.0,
            raw: r,
            normalization: 1.0,
            relative: r,
            degenerate: false,
            order: None,
        };
        assert_eq!(observed_order(&l(1e-15, 16), &l(1e-16, 32)), Order::Saturated);
        match observed_order(&l(1e-4, 16), &l(1e-6, 32)) {
            Order::Observed(p) => assert!(abs(p - libm::log2(100.0)) < 1e-12),
            o => panic!("{o:?}"),
        }
        assert!(is_monotone(&[l(1e-3, 8), l(1e-5, 16), l(1e-14, 32), l(2e-14, 64)]));
        assert!(!is_monotone(&[l(1e-3, 8), l(1e-2, 16)]));
        let noisy = |r: f64, m: usize| LevelResult {
            degenerate: true,
            ..l(r, m)
        };
        assert!(is_monotone(&[noisy(1e-3, 8), noisy(1e-2, 16)]));
        assert_eq!(observed_order(&noisy(1e-3, 8), &noisy(1e-2, 16)), Order::Saturated);
    }
}
