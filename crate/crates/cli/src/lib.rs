//! Scene files, the verification driver and report emission for the
//! `minkowski` command-line tool.

pub mod catalog;
pub mod error;
pub mod exec;
pub mod report;
pub mod scene;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use minkowski_core::identity::{self, Executor, IdentityId};

pub use error::CliError;
pub use scene::SceneFile;

use report::{Report, SceneEcho, Seeds, Timing};

/// Command-line overrides applied on top of a scene file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub levels: Option<scene::Levels>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub flip_normal: bool,
}

impl Overrides {
    pub fn apply(&self, file: &mut SceneFile) -> Vec<String> {
        let mut notes = Vec::new();
        if let Some(l) = &self.levels {
            file.quadrature.levels = Some(l.clone());
            notes.push(format!("levels = {l:?}"));
        }
        if let Some(t) = self.tol {
            file.tolerances.identity = Some(t);
            notes.push(format!("tolerances.identity = {t:e}"));
        }
        if let Some(s) = self.seed {
            if file.field.kind == "random_polynomial" {
                file.field.seed = Some(s);
                notes.push(format!("field.seed = {s}"));
            }
        }
        if self.flip_normal {
            file.quadrature.orientation_flip = !file.quadrature.orientation_flip;
            notes.push(format!(
                "quadrature.orientation_flip = {}",
                file.quadrature.orientation_flip
            ));
        }
        notes
    }
}

/// Parses `16,32,64` (same count on every axis) or `16x32;32x64`
/// (explicit per-axis counts).
pub fn parse_levels(s: &str) -> Result<scene::Levels, CliError> {
    let bad = |v: &str| CliError::Config(format!("--levels: cannot parse '{v}'"));
    let num = |v: &str| v.trim().parse::<usize>().ok().filter(|&m| m > 0).ok_or_else(|| bad(v));
    if s.contains('x') || s.contains(';') {
        let levels = s
            .split(';')
            .map(|lvl| lvl.split('x').map(num).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        Ok(scene::Levels::PerAxis(levels))
    } else {
        Ok(scene::Levels::Uniform(
            s.split(',').map(num).collect::<Result<Vec<_>, _>>()?,
        ))
    }
}

pub fn read_scene(path: &Path) -> Result<(String, SceneFile), CliError> {
    let src = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let file = SceneFile::parse(&src).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    })?;
    Ok((src, file))
}

/// Runs every selected identity of `file` and assembles the report.
pub fn verify(
    file: &SceneFile,
    source: &str,
    path: Option<&str>,
    overrides: Vec<String>,
    exec: &(dyn Executor + Sync),
    workers: usize,
) -> Result<Report, CliError> {
    let start = Instant::now();
    let engine = |e: minkowski_core::Error| CliError::Config(format!("scene evaluation: {e}"));
    let mut scene = file.build()?;
    let order = scene.identities.clone();

    let pre = identity::precheck_gates(&scene, exec).map_err(engine)?;
    let mut gated: BTreeMap<IdentityId, Vec<&identity::GateFailure>> = BTreeMap::new();
    for g in &pre {
        gated.entry(g.identity).or_default().push(g);
    }
    scene.identities.retain(|id| !gated.contains_key(id));

    let mut level_seconds = Vec::new();
    let mut swept = None;
    if !scene.identities.is_empty() {
        let mut last = Instant::now();
        let r = identity::convergence_sweep_with(&scene, exec, &mut |_| {
            level_seconds.push(last.elapsed().as_secs_f64());
            last = Instant::now();
        })
        .map_err(engine)?;
        swept = Some(r);
    }

    let mut identities = Vec::new();
    for id in &order {
        if let Some(g) = gated.get(id) {
            identities.push(report::gated(id.to_string(), g));
        } else if let Some(r) = swept.as_ref().and_then(|s| s.get(*id)) {
            identities.push(report::identity(r));
        }
    }
    let passed = identities
        .iter()
        .all(|i| i.status == "pass" || i.status == "degenerate");
    Ok(Report {
        tool: Default::default(),
        environment: Default::default(),
        scene: SceneEcho {
            path: path.map(str::to_string),
            source: source.to_string(),
            effective: file.to_toml(),
            overrides,
        },
        seeds: Seeds {
            field: scene.field.seed(),
        },
        passed,
        exit_code: if passed { 0 } else { 1 },
        identities,
        diagnostics: swept.as_ref().map(|s| report::diagnostics(&s.diagnostics)),
        classification: swept
            .as_ref()
            .and_then(|s| s.classification.as_ref())
            .map(report::classification),
        timing: Timing {
            workers,
            total_seconds: start.elapsed().as_secs_f64(),
            level_seconds,
        },
    })
}

/// Parses `key=a:b:steps` into the key and `steps` evenly spaced values.
pub fn parse_sweep(spec: &str) -> Result<(String, Vec<f64>), CliError> {
    let bad = || CliError::Config(format!("--param: expected key=start:stop:steps, got '{spec}'"));
    let (key, range) = spec.split_once('=').ok_or_else(bad)?;
    let parts: Vec<&str> = range.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let steps: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if steps == 0 || key.trim().is_empty() {
        return Err(bad());
    }
    let values = if steps == 1 {
        vec![a]
    } else {
        (0..steps)
            .map(|k| a + (b - a) * k as f64 / (steps - 1) as f64)
            .collect()
    };
    Ok((key.trim().to_string(), values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levels_syntax() {
        assert_eq!(parse_levels("8,16").unwrap(), scene::Levels::Uniform(vec![8, 16]));
        assert_eq!(
            parse_levels("8x16;16x32").unwrap(),
            scene::Levels::PerAxis(vec![vec![8, 16], vec![16, 32]])
        );
        assert!(parse_levels("8,,16").is_err());
        assert!(parse_levels("0").is_err());
    }

    #[test]
    fn sweep_syntax() {
        let (k, v) = parse_sweep("surface.a2=1.0:2.0:5").unwrap();
        assert_eq!(k, "surface.a2");
        assert_eq!(v, vec![1.0, 1.25, 1.5, 1.75, 2.0]);
        assert!(parse_sweep("surface.a2=1:2").is_err());
        assert!(parse_sweep("1:2:3").is_err());
    }
}
