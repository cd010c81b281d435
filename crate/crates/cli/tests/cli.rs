use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use minkowski_verify::SceneFile;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_minkowski"));
    c.env("MINKOWSKI_WORKERS", "2");
    c
}

fn scene(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenes")
        .join(format!("{name}.toml"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("valid JSON on stdout")
}

#[test]
fn passing_scene_exits_zero() {
    let o = bin().arg("verify").arg(scene("sphere_euclidean")).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("result: PASS"));
}

#[test]
fn gate_violation_exits_one() {
    let o = bin()
        .arg("verify")
        .arg(scene("bad_gate_einstein_on_generic_warped"))
        .args(["--format", "json"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    let v = json(&o);
    assert_eq!(v["passed"], false);
    assert_eq!(v["exit_code"], 1);
    let id = &v["identities"][0];
    assert_eq!(id["id"], "EIN1");
    assert_eq!(id["status"], "gate_violation");
    assert!(id["gate"][0]["value"].as_f64().unwrap() > 1e-6);
}

#[test]
fn configuration_errors_exit_two() {
    let o = run(&["verify", "/nonexistent/scene.toml"]);
    assert_eq!(o.status.code(), Some(2));
    let dir = std::env::temp_dir().join(format!("minkowski-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.toml");
    std::fs::write(&bad, "identities = [\"POS0\"]\n[manifold]\nid = \"euclidean\"\nparams = { dim = 3, colour = 1 }\n[surface]\nid = \"geodesic_sphere\"\nparams = { rho = 1.0 }\n[field]\nkind = \"position\"\n").unwrap();
    let o = bin().arg("verify").arg(&bad).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));
    let o = bin()
        .arg("verify")
        .arg(scene("sphere_euclidean"))
        .args(["--levels", "8,x"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn identity_failure_exits_one() {
    let o = bin()
        .arg("verify")
        .arg(scene("ellipsoid_random_field"))
        .args(["--levels", "4", "--tol", "1e-14"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn catalog_lists_required_entries() {
    let o = run(&["catalog"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    for id in [
        "spaceform_conformal",
        "einstein_cone",
        "clifford_torus",
        "graph_torus",
        "random_polynomial",
        "GEN2",
        "CSC2X",
    ] {
        assert!(s.contains(id), "{id} missing");
    }
    let ids = stdout(&run(&["catalog", "--identities"]));
    assert!(ids.contains("EIN1") && ids.contains("gates:"));
    assert!(!ids.contains("spaceform_conformal"));
    let v = json(&run(&["catalog", "--json"]));
    let names: Vec<&str> = v["manifolds"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| m["id"].as_str().unwrap())
        .collect();
    assert!(names.contains(&"warped"));
    assert!(v["identities"].as_array().unwrap().iter().any(|i| i["id"] == "POS1"));
}

#[test]
fn selftest_is_green_and_reproducible() {
    let a = run(&["selftest", "--samples", "20"]);
    assert_eq!(a.status.code(), Some(0), "{}", stdout(&a));
    let s = stdout(&a);
    for suite in minkowski_core::selftest::SUITES {
        assert!(
            s.lines().any(|l| l.starts_with(suite) && l.ends_with("green")),
            "{suite}: {s}"
        );
    }
    let one = stdout(&run(&[
        "selftest",
        "--suite",
        "lie-term",
        "--seed",
        "9",
        "--samples",
        "30",
    ]));
    assert_eq!(one.lines().count(), 3);
    assert_eq!(
        one,
        stdout(&run(&[
            "selftest",
            "--suite",
            "lie-term",
            "--seed",
            "9",
            "--samples",
            "30"
        ]))
    );
    assert_eq!(run(&["selftest", "--suite", "nonsense"]).status.code(), Some(2));
}

#[test]
fn sweep_over_semi_axis() {
    let o = bin()
        .arg("sweep")
        .arg(scene("ellipsoid_euclidean"))
        .args([
            "--param",
            "surface.a2=1.0:2.0:5",
            "--levels",
            "16,32,64",
            "--format",
            "json",
        ])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["passed"], true);
    assert_eq!(v["values"].as_array().unwrap().len(), 5);
    assert_eq!(v["reports"].as_array().unwrap().len(), 5);
    let table = bin()
        .arg("sweep")
        .arg(scene("spaceform4_pos_perturbed_sphere"))
        .args(["--param", "surface.eps=0:0.3:4"])
        .output()
        .unwrap();
    assert_eq!(table.status.code(), Some(0), "{}", stdout(&table));
    let t = stdout(&table);
    assert_eq!(t.lines().filter(|l| l.contains("pass")).count(), 4);
    assert!(t.lines().nth(1).unwrap().starts_with('0'));
}

#[test]
fn sweep_rejects_unknown_key() {
    let o = bin()
        .arg("sweep")
        .arg(scene("ellipsoid_euclidean"))
        .args(["--param", "surface.zz=1:2:3"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn report_echoes_effective_scene() {
    let o = bin()
        .arg("verify")
        .arg(scene("torus_euclidean"))
        .args(["--format", "json", "--seed", "5", "--levels", "16,32", "--flip-normal"])
        .output()
        .unwrap();
    let v = json(&o);
    assert_eq!(v["seeds"]["field"], 5);
    let effective = SceneFile::parse(v["scene"]["effective"].as_str().unwrap()).unwrap();
    assert_eq!(effective.field.seed, Some(5));
    assert!(effective.quadrature.orientation_flip);
    let reparsed = SceneFile::parse(&effective.to_toml()).unwrap();
    assert_eq!(reparsed, effective);
    assert_eq!(v["scene"]["overrides"].as_array().unwrap().len(), 3);
    for key in ["tool", "environment", "identities", "diagnostics", "timing"] {
        assert!(v.get(key).is_some(), "{key}");
    }
}

#[test]
fn out_flag_writes_file() {
    let path = std::env::temp_dir().join(format!("minkowski-out-{}.json", std::process::id()));
    let o = bin()
        .arg("verify")
        .arg(scene("sphere_euclidean"))
        .args(["--format", "json", "--out"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["passed"], true);
    std::fs::remove_file(&path).ok();
}
