//! Scene files: a TOML document naming a manifold, a surface, a field, the
//! identities to check and the quadrature levels.

use std::collections::BTreeSet;

use minkowski_core::fields::Field;
use minkowski_core::geometry::Manifold;
use minkowski_core::hypersurface::{Axis, Immersion, LieMethod};
use minkowski_core::identity::{uniform_levels, IdentityId, Scene, Tolerances};
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub identities: Vec<String>,
    pub manifold: Entry,
    pub surface: Entry,
    pub field: FieldSpec,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub tolerances: ToleranceSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Entry {
    pub id: String,
    #[serde(default)]
    pub params: Table,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub kind: String,
    #[serde(default)]
    pub params: Table,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Either one node count per level (used on every axis) or explicit
/// per-axis counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Levels {
    Uniform(Vec<usize>),
    PerAxis(Vec<Vec<usize>>),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Levels>,
    #[serde(default)]
    pub orientation_flip: bool,
    /// `"combinatorial"` (default) or `"trace"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lie_method: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constancy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub umbilicity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position_gate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub einstein_gate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space_form_gate: Option<f64>,
}

impl SceneFile {
    pub fn parse(src: &str) -> Result<Self, CliError> {
        toml::from_str(src).map_err(|e| CliError::Config(format!("scene file: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scene serializes")
    }

    pub fn build(&self) -> Result<Scene, CliError> {
        let manifold = build_manifold(&self.manifold)?;
        let immersion = build_surface(&self.surface, &manifold)?.with_flip(self.quadrature.orientation_flip);
        let field = build_field(&self.field, &manifold)?;
        let n = immersion.n();
        let mut identities = Vec::new();
        for name in &self.identities {
            if name.eq_ignore_ascii_case("all") {
                identities.extend(IdentityId::all(n));
                continue;
            }
            let id: IdentityId = name.parse().map_err(|e| CliError::Config(format!("identities: {e}")))?;
            identities.push(id);
        }
        if identities.is_empty() {
            return Err(CliError::Config("identities: list is empty".into()));
        }
        let mut seen = BTreeSet::new();
        identities.retain(|id| seen.insert(*id));
        let mut scene = Scene::new(manifold, immersion, field, identities);
        if let Some(levels) = &self.quadrature.levels {
            scene.levels = match levels {
                Levels::Uniform(v) => uniform_levels(v, n),
                Levels::PerAxis(v) => v.clone(),
            };
        }
        scene.lie_method = match self.quadrature.lie_method.as_deref() {
            None | Some("combinatorial") => LieMethod::Combinatorial,
            Some("trace") => LieMethod::Trace,
            Some(other) => {
                return Err(CliError::Config(format!(
                    "quadrature.lie_method: unknown method '{other}' (combinatorial, trace)"
                )))
            }
        };
        scene.tolerances = self.tolerances.apply(Tolerances::default());
        scene.validate().map_err(|e| CliError::Config(format!("scene: {e}")))?;
        Ok(scene)
    }

    /// Sets the scalar at a dotted path such as `surface.a2`,
    /// `field.seed`, `tolerances.identity` or `manifold.c`.
    pub fn set_param(&mut self, key: &str, value: f64) -> Result<(), CliError> {
        let parts: Vec<&str> = key.split('.').collect();
        let bad = || CliError::Config(format!("--param: unknown key '{key}'"));
        match parts.as_slice() {
            ["manifold", p] => set_existing(&mut self.manifold.params, p, value).ok_or_else(bad),
            ["surface", p] => set_existing(&mut self.surface.params, p, value).ok_or_else(bad),
            ["field", "seed"] => {
                self.field.seed = Some(value as u64);
                Ok(())
            }
            ["field", p] => set_existing(&mut self.field.params, p, value).ok_or_else(bad),
            ["tolerances", p] => {
                let mut t = toml::Value::try_from(&self.tolerances).expect("tolerances serialize");
                let table = t.as_table_mut().expect("table");
                if !ToleranceSpec::KEYS.contains(p) {
                    return Err(bad());
                }
                table.insert(p.to_string(), Value::Float(value));
                self.tolerances = t.try_into().map_err(|_| bad())?;
                Ok(())
            }
            _ => Err(bad()),
        }
    }
}

fn set_existing(table: &mut Table, key: &str, value: f64) -> Option<()> {
    let slot = table.get_mut(key)?;
    *slot = match slot {
        Value::Integer(_) if value.fract() == 0.0 => Value::Integer(value as i64),
        Value::Integer(_) | Value::Float(_) => Value::Float(value),
        _ => return None,
    };
    Some(())
}

impl ToleranceSpec {
    pub const KEYS: [&'static str; 6] = [
        "identity",
        "constancy",
        "umbilicity",
        "position_gate",
        "einstein_gate",
        "space_form_gate",
    ];

    pub fn apply(&self, mut t: Tolerances) -> Tolerances {
        let set = |dst: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut t.identity, self.identity);
        set(&mut t.constancy, self.constancy);
        set(&mut t.umbilicity, self.umbilicity);
        set(&mut t.position_gate, self.position_gate);
        set(&mut t.einstein_gate, self.einstein_gate);
        set(&mut t.space_form_gate, self.space_form_gate);
        t
    }
}

/// Typed access to a `params` table that rejects keys nobody read.
struct Params<'a> {
    section: &'static str,
    table: &'a Table,
    used: BTreeSet<String>,
}

impl<'a> Params<'a> {
    fn new(section: &'static str, table: &'a Table) -> Self {
        Self {
            section,
            table,
            used: BTreeSet::new(),
        }
    }

    fn err(&self, key: &str, msg: impl std::fmt::Display) -> CliError {
        CliError::Config(format!("{}.params.{key}: {msg}", self.section))
    }

    fn raw(&mut self, key: &str) -> Option<&'a Value> {
        self.used.insert(key.to_string());
        self.table.get(key)
    }

    fn f64_opt(&mut self, key: &str) -> Result<Option<f64>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::Float(v)) => Ok(Some(*v)),
            Some(Value::Integer(v)) => Ok(Some(*v as f64)),
            Some(v) => Err(self.err(key, format!("expected a number, found {}", v.type_str()))),
        }
    }

    fn f64(&mut self, key: &str) -> Result<f64, CliError> {
        self.f64_opt(key)?.ok_or_else(|| self.err(key, "missing"))
    }

    fn usize_opt(&mut self, key: &str) -> Result<Option<usize>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::Integer(v)) if *v >= 0 => Ok(Some(*v as usize)),
            Some(v) => Err(self.err(key, format!("expected a non-negative integer, found {v}"))),
        }
    }

    fn usize(&mut self, key: &str) -> Result<usize, CliError> {
        self.usize_opt(key)?.ok_or_else(|| self.err(key, "missing"))
    }

    fn string(&mut self, key: &str) -> Result<&'a str, CliError> {
        match self.raw(key) {
            Some(Value::String(s)) => Ok(s),
            None => Err(self.err(key, "missing")),
            Some(v) => Err(self.err(key, format!("expected a string, found {}", v.type_str()))),
        }
    }

    fn strings(&mut self, key: &str) -> Result<Vec<&'a str>, CliError> {
        match self.raw(key) {
            Some(Value::Array(a)) => a
                .iter()
                .map(|v| v.as_str().ok_or_else(|| self.err(key, "expected strings")))
                .collect(),
            None => Err(self.err(key, "missing")),
            Some(v) => Err(self.err(key, format!("expected an array, found {}", v.type_str()))),
        }
    }

    fn bool_opt(&mut self, key: &str) -> Result<Option<bool>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::Boolean(b)) => Ok(Some(*b)),
            Some(v) => Err(self.err(key, format!("expected a boolean, found {}", v.type_str()))),
        }
    }

    fn finish(self) -> Result<(), CliError> {
        for k in self.table.keys() {
            if !self.used.contains(k) {
                return Err(self.err(k, "unknown parameter"));
            }
        }
        Ok(())
    }
}

fn engine(section: &str, e: minkowski_core::Error) -> CliError {
    CliError::Config(format!("{section}: {e}"))
}

pub fn build_manifold(e: &Entry) -> Result<Manifold, CliError> {
    let mut p = Params::new("manifold", &e.params);
    let m = match e.id.as_str() {
        "euclidean" => Manifold::euclidean(p.usize("dim")?),
        "spaceform_conformal" => {
            let d = p.usize("dim")?;
            Manifold::space_form(d, p.f64("c")?)
        }
        "warped" => {
            let d = p.usize("dim")?;
            Manifold::warped(d, p.string("phi")?)
        }
        "product_spheres" => Manifold::product_spheres(p.f64("a")?),
        "einstein_cone" => {
            if let Some(d) = p.usize_opt("dim")? {
                if d != 5 {
                    return Err(p.err("dim", "the cone is five-dimensional"));
                }
            }
            let a = p.f64_opt("a")?.unwrap_or(1.0 / 3f64.sqrt());
            Manifold::einstein_cone(a)
        }
        "expression" => {
            let d = p.usize("dim")?;
            let comps = p.strings("metric")?;
            if comps.len() != d * d {
                return Err(p.err(
                    "metric",
                    format!("expected {} components, found {}", d * d, comps.len()),
                ));
            }
            Manifold::expression(d, &comps)
        }
        other => return Err(CliError::Config(format!("manifold.id: unknown manifold '{other}'"))),
    }
    .map_err(|err| engine("manifold", err))?;
    let flip = p.bool_opt("negative_orientation")?.unwrap_or(false);
    p.finish()?;
    Ok(if flip { m.with_orientation(false) } else { m })
}

pub fn build_surface(e: &Entry, m: &Manifold) -> Result<Immersion, CliError> {
    let mut p = Params::new("surface", &e.params);
    let s = match e.id.as_str() {
        "geodesic_sphere" => Immersion::geodesic_sphere(m, p.f64("rho")?),
        "perturbed_sphere" | "graph_over_fiber" => {
            let rho = p.f64("rho")?;
            let eps = p.f64("eps")?;
            let h = p.string("h")?;
            if e.id == "perturbed_sphere" {
                Immersion::perturbed_sphere(m, rho, eps, h)
            } else {
                Immersion::graph_over_fiber(m, rho, eps, h)
            }
        }
        "ellipsoid" => {
            let axes = (1..=m.dim())
                .map(|i| p.f64(&format!("a{i}")))
                .collect::<Result<Vec<_>, _>>()?;
            Immersion::ellipsoid(m, &axes)
        }
        "torus_of_revolution" => {
            let major = p.f64("R")?;
            Immersion::torus_of_revolution(m, major, p.f64("rho")?)
        }
        "clifford_torus" => Immersion::clifford_torus(m, p.f64("r1")?),
        "graph_torus" => {
            let r0 = p.f64("r0")?;
            let rho = p.f64("rho")?;
            Immersion::graph_torus(m, r0, rho, p.f64("beta")?)
        }
        "expression" => {
            let comps = p.strings("components")?;
            let axes = p
                .strings("axes")?
                .into_iter()
                .map(|a| match a {
                    "periodic" => Ok(Axis::periodic()),
                    "polar" => Ok(Axis::polar()),
                    other => Err(CliError::Config(format!(
                        "surface.params.axes: unknown axis '{other}' (periodic, polar)"
                    ))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            Immersion::expression(m, &comps, &axes)
        }
        other => return Err(CliError::Config(format!("surface.id: unknown surface '{other}'"))),
    }
    .map_err(|err| engine("surface", err))?;
    p.finish()?;
    Ok(s)
}

pub fn build_field(spec: &FieldSpec, m: &Manifold) -> Result<Field, CliError> {
    let mut p = Params::new("field", &spec.params);
    let f = match spec.kind.as_str() {
        "position" => Field::position(m),
        "random_polynomial" => {
            let degree = p.usize_opt("degree")?.unwrap_or(3);
            let amplitude = p.f64_opt("amplitude")?.unwrap_or(1.0);
            Field::random_polynomial(m, spec.seed.unwrap_or(0), degree as u32, amplitude)
        }
        "coordinate" => {
            let comps = p.strings("components")?;
            let claims = p.bool_opt("claims_position")?.unwrap_or(false);
            Field::coordinate(m, &comps, claims)
        }
        other => return Err(CliError::Config(format!("field.kind: unknown kind '{other}'"))),
    }
    .map_err(|err| engine("field", err))?;
    p.finish()?;
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SRC: &str = r#"
identities = ["POS0", "POS1", "POS2"]

[manifold]
id = "euclidean"
params = { dim = 3 }

[surface]
id = "ellipsoid"
params = { a1 = 1.0, a2 = 1.3, a3 = 0.7 }

[field]
kind = "position"

[quadrature]
levels = [8, 16]
"#;

    #[test]
    fn parses_and_builds() {
        let f = SceneFile::parse(SRC).unwrap();
        let s = f.build().unwrap();
        assert_eq!(s.identities.len(), 3);
        assert_eq!(s.levels, vec![vec![8, 8], vec![16, 16]]);
    }

    #[test]
    fn echo_round_trips() {
        let f = SceneFile::parse(SRC).unwrap();
        assert_eq!(SceneFile::parse(&f.to_toml()).unwrap(), f);
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = SRC.replace("[quadrature]", "[quadrature]\nspeed = 3");
        assert!(matches!(SceneFile::parse(&bad), Err(CliError::Config(_))));
        let bad = SRC.replace("a3 = 0.7", "a3 = 0.7, a4 = 1.0");
        let e = SceneFile::parse(&bad).unwrap().build().unwrap_err();
        assert!(e.to_string().contains("a4"), "{e}");
    }

    #[test]
    fn param_paths() {
        let mut f = SceneFile::parse(SRC).unwrap();
        f.set_param("surface.a2", 1.5).unwrap();
        assert_eq!(f.surface.params["a2"], Value::Float(1.5));
        f.set_param("tolerances.identity", 1e-3).unwrap();
        assert_eq!(f.tolerances.identity, Some(1e-3));
        assert!(f.set_param("surface.zz", 1.0).is_err());
        assert!(f.set_param("nothing", 1.0).is_err());
    }
}
