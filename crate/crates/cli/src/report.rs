//! JSON and table renderings of a verification run.

use minkowski_core::identity::{
    Case, Classification, Diagnostics, GateFailure, IdentityReport, LevelResult, Order, Status,
};
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub tool: Tool,
    pub environment: Environment,
    pub scene: SceneEcho,
    pub seeds: Seeds,
    pub passed: bool,
    pub exit_code: i32,
    pub identities: Vec<IdentityOut>,
    pub diagnostics: Option<DiagnosticsOut>,
    pub classification: Option<ClassificationOut>,
    /// Everything that may change between identical runs.
    pub timing: Timing,
}

#[derive(Clone, Debug, Serialize)]
pub struct Tool {
    pub name: &'static str,
    pub version: &'static str,
}

impl Default for Tool {
    fn default() -> Self {
        Self {
            name: "minkowski",
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Environment {
    pub os: &'static str,
    pub arch: &'static str,
    pub float: &'static str,
}

impl Default for Environment {
    fn default() -> Self {
        Self {
            os: std::env::consts::OS,
            arch: std::env::consts::ARCH,
            float: "f64",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SceneEcho {
    pub path: Option<String>,
    /// The scene file as read.
    pub source: String,
    /// Effective scene after command-line overrides, as TOML.
    pub effective: String,
    pub overrides: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Seeds {
    pub field: Option<u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Timing {
    pub workers: usize,
    pub total_seconds: f64,
    pub level_seconds: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum OrderOut {
    Observed(f64),
    Saturated,
    Undefined,
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelOut {
    pub counts: Vec<usize>,
    pub nodes: usize,
    pub area: f64,
    pub raw: f64,
    pub normalization: f64,
    pub relative: f64,
    pub degenerate: bool,
    pub order: Option<OrderOut>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GateOut {
    pub gate: String,
    pub value: f64,
    pub limit: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityOut {
    pub id: String,
    pub status: &'static str,
    pub monotone: bool,
    pub top_relative: Option<f64>,
    pub levels: Vec<LevelOut>,
    pub gate: Vec<GateOut>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DiagnosticsOut {
    pub shape_symmetry_defect: f64,
    pub lie_method_defect: f64,
    pub position_reduction_defect: Option<f64>,
    pub proposition_defect: Option<f64>,
    pub conformal_defect: f64,
    pub einstein_defect: f64,
    pub space_form_defect: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassificationOut {
    pub case: String,
    pub integral_f: f64,
    pub integral_p_nu: f64,
    pub std_h1: f64,
    pub std_h2: f64,
    pub max_abs_principal: f64,
    pub mean_umbilicity_rhs: f64,
    pub max_h1_sq_minus_h2: f64,
    pub conclusion_holds: Option<bool>,
}

pub fn status_name(s: Status) -> &'static str {
    match s {
        Status::Pass => "pass",
        Status::Fail => "fail",
        Status::Degenerate => "degenerate",
        Status::GateViolation => "gate_violation",
    }
}

fn level(l: &LevelResult) -> LevelOut {
    LevelOut {
        counts: l.counts.clone(),
        nodes: l.nodes,
        area: l.area,
        raw: l.raw,
        normalization: l.normalization,
        relative: l.relative,
        degenerate: l.degenerate,
        order: l.order.map(|o| match o {
            Order::Observed(p) => OrderOut::Observed(p),
            Order::Saturated => OrderOut::Saturated,
            Order::Undefined => OrderOut::Undefined,
        }),
    }
}

fn gate(g: &GateFailure) -> GateOut {
    GateOut {
        gate: g.gate.clone(),
        value: g.value,
        limit: g.limit,
    }
}

pub fn identity(r: &IdentityReport) -> IdentityOut {
    IdentityOut {
        id: r.id.to_string(),
        status: status_name(r.status),
        monotone: r.monotone,
        top_relative: r.top().map(|l| l.relative),
        levels: r.levels.iter().map(level).collect(),
        gate: r.gate.iter().map(gate).collect(),
        notes: r.notes.clone(),
    }
}

/// Identity rejected by the coarse gate pre-check; no levels were run.
pub fn gated(id: String, failures: &[&GateFailure]) -> IdentityOut {
    IdentityOut {
        id,
        status: status_name(Status::GateViolation),
        monotone: false,
        top_relative: None,
        levels: Vec::new(),
        gate: failures.iter().map(|g| gate(g)).collect(),
        notes: vec!["rejected by the gate pre-check before quadrature".into()],
    }
}

pub fn diagnostics(d: &Diagnostics) -> DiagnosticsOut {
    DiagnosticsOut {
        shape_symmetry_defect: d.sym_defect,
        lie_method_defect: d.lie_method_defect,
        position_reduction_defect: d.reduction_defect,
        proposition_defect: d.proposition_defect,
        conformal_defect: d.conformal_defect,
        einstein_defect: d.einstein_defect,
        space_form_defect: d.space_form_defect,
    }
}

pub fn classification(c: &Classification) -> ClassificationOut {
    ClassificationOut {
        case: match c.case {
            Case::VanishingFactor => "case_i",
            Case::Umbilic => "case_ii",
            Case::NotCase => "not_case",
            Case::NotConstant => "not_constant",
        }
        .into(),
        integral_f: c.integral_f,
        integral_p_nu: c.integral_p_nu,
        std_h1: c.std_h1,
        std_h2: c.std_h2,
        max_abs_principal: c.max_principal,
        mean_umbilicity_rhs: c.umbilicity_rhs,
        max_h1_sq_minus_h2: c.max_h1_sq_minus_h2,
        conclusion_holds: c.conclusion_holds,
    }
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        if let Some(p) = &self.scene.path {
            out.push_str(&format!("scene {p}\n"));
        }
        if let Some(seed) = self.seeds.field {
            out.push_str(&format!("field seed {seed}\n"));
        }
        let nlev = self.identities.iter().map(|i| i.levels.len()).max().unwrap_or(0);
        let mut header = format!("{:<8} {:<14}", "identity", "status");
        for k in 0..nlev {
            header.push_str(&format!(" {:>10}", format!("rel[{k}]")));
        }
        header.push_str(&format!(" {:>9} {:>9}", "order", "monotone"));
        out.push_str(&header);
        out.push('\n');
        out.push_str(&"-".repeat(header.len()));
        out.push('\n');
        for i in &self.identities {
            let mut line = format!("{:<8} {:<14}", i.id, i.status);
            for k in 0..nlev {
                match i.levels.get(k) {
                    Some(l) if l.degenerate => line.push_str(&format!(" {:>10}", "degen")),
                    Some(l) => line.push_str(&format!(" {:>10.2e}", l.relative)),
                    None => line.push_str(&format!(" {:>10}", "-")),
                }
            }
            let order = match i.levels.last().and_then(|l| l.order.as_ref()) {
                Some(OrderOut::Observed(p)) => format!("{p:.1}"),
                Some(OrderOut::Saturated) => "sat".into(),
                Some(OrderOut::Undefined) | None => "-".into(),
            };
            let mono = if i.levels.is_empty() {
                "-"
            } else if i.monotone {
                "yes"
            } else {
                "no"
            };
            line.push_str(&format!(" {order:>9} {mono:>9}"));
            out.push_str(&line);
            out.push('\n');
            for g in &i.gate {
                out.push_str(&format!(
                    "         gate: {} = {:.3e} > {:.1e}\n",
                    g.gate, g.value, g.limit
                ));
            }
            for n in &i.notes {
                out.push_str(&format!("         note: {n}\n"));
            }
        }
        if let Some(d) = &self.diagnostics {
            out.push_str(&format!(
                "diagnostics: shape symmetry {:.1e}, lie methods {:.1e}, conformal {:.1e}, Einstein {:.1e}, space form {:.1e}",
                d.shape_symmetry_defect, d.lie_method_defect, d.conformal_defect, d.einstein_defect, d.space_form_defect
            ));
            if let (Some(r), Some(p)) = (d.position_reduction_defect, d.proposition_defect) {
                out.push_str(&format!(", reduction {r:.1e}, proposition {p:.1e}"));
            }
            out.push('\n');
        }
        if let Some(c) = &self.classification {
            out.push_str(&format!(
                "classifier: {} (int f = {:.3e}, int <P,nu> = {:.3e}, std H1 = {:.1e}, std H2 = {:.1e}, umbilicity rhs = {:.1e}, max|H1^2 - H2| = {:.1e}",
                c.case, c.integral_f, c.integral_p_nu, c.std_h1, c.std_h2, c.mean_umbilicity_rhs, c.max_h1_sq_minus_h2
            ));
            if let Some(h) = c.conclusion_holds {
                out.push_str(&format!(", conclusion {}", if h { "holds" } else { "FAILS" }));
            }
            out.push_str(")\n");
        }
        out.push_str(&format!(
            "result: {} ({:.2}s, {} workers)\n",
            if self.passed { "PASS" } else { "FAIL" },
            self.timing.total_seconds,
            self.timing.workers
        ));
        out
    }
}
