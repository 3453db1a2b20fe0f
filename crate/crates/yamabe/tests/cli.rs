use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use yamabe::io;
use yamabe_core::analysis::{harnack_audit, AuditOptions};
use yamabe_core::conformal::{bubble_exact, schouten_flat};
use yamabe_core::curvature::{elementary_symmetric, in_gamma_k, CurvatureSpec, EigenvalueVector};
use yamabe_core::field::{AnalyticField, BubbleParams, FieldDescriptor, GridSpec, GriddedField, ScalarField};

fn yamabe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_yamabe")).args(args).output().expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    assert!(text.ends_with('\n'), "output must be newline-terminated");
    serde_json::from_str(&text).unwrap()
}

fn write(path: &Path, text: &str) -> String {
    std::fs::write(path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn cone_check_examples() {
    let out = yamabe(&["cone-check", "--k", "2", "(-1,1,1)"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json_of(&out);
    assert_eq!(doc["schema"], "1");
    assert_eq!(doc["command"], "cone-check");
    assert_eq!(doc["seed"], 0);
    let row = &doc["result"]["rows"][0];
    assert_eq!(row["member"], false);
    assert_eq!(row["sigma"][1], -1.0);

    let doc = json_of(&yamabe(&["cone-check", "--k", "5", "--n", "5", "e"]));
    assert_eq!(doc["result"]["rows"][0]["member"], true);

    // vectors after `--` may start with a minus sign
    let doc = json_of(&yamabe(&["cone-check", "--k", "1", "--", "-1,1,1"]));
    assert_eq!(doc["result"]["rows"][0]["member"], true);
}

#[test]
fn malformed_input_is_a_usage_error() {
    for args in [
        vec!["cone-check", "--k", "2", "1,x,3"],
        vec!["cone-check", "--k", "4", "1,2,3"],
        vec!["cone-check", "1,2,3"],
        vec!["cone-check", "--k", "2", "e"],
        vec!["solve", "--n", "4"],
        vec!["bubble", "--n", "3", "--k", "7"],
        vec!["frobnicate"],
        vec!["verify", "bogus"],
    ] {
        let out = yamabe(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn batch_cone_check_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = yamabe_core::sampling::rng(77);
    let vectors: Vec<Vec<f64>> =
        (0..1000).map(|_| (0..4).map(|_| yamabe_core::sampling::gaussian(&mut rng)).collect()).collect();
    let text: String =
        vectors.iter().map(|v| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",") + "\n").collect();
    let path = write(&dir.path().join("batch.txt"), &text);
    let doc = json_of(&yamabe(&["cone-check", "--k", "3", "--input", &path]));
    let rows = doc["result"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 1000);
    for (row, v) in rows.iter().zip(&vectors) {
        let lambda: Vec<f64> = serde_json::from_value(row["lambda"].clone()).unwrap();
        assert_eq!(&lambda, v);
        let sigma: Vec<f64> = serde_json::from_value(row["sigma"].clone()).unwrap();
        assert_eq!(sigma, elementary_symmetric(v, 3)[1..].to_vec());
        assert_eq!(row["member"], in_gamma_k(&EigenvalueVector::new(v.clone()).unwrap(), 3));
    }
}

#[test]
fn eval_on_vectors_and_field_points() {
    let dir = tempfile::tempdir().unwrap();
    let b = AnalyticField::Bubble(BubbleParams::standard(4));
    let path = write(&dir.path().join("b.json"), &io::to_json_string(&b));
    let out = yamabe(&["eval", "--n", "4", "--k", "2", "--field", &path, "--point", "0.5,-0.2,0,1", "e", "(-3,1,1,1)"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json_of(&out);
    let l = &doc["result"]["lambdas"];
    assert_eq!(l[0]["f"].as_f64().unwrap(), 6f64.sqrt());
    assert_eq!(l[1]["member"], false);
    assert!(l[1]["f"].is_null());
    let p = &doc["result"]["points"][0];
    let want = schouten_flat(&b, &[0.5, -0.2, 0.0, 1.0]).unwrap().eigenvalues();
    let got: Vec<f64> = serde_json::from_value(p["eigenvalues"].clone()).unwrap();
    assert_eq!(got, want);
}

#[test]
fn bubble_equals_library_call() {
    let doc = json_of(&yamabe(&["bubble", "--n", "4", "--k", "3", "--s", "2.5"]));
    let field: AnalyticField = serde_json::from_value(doc["result"]["field"].clone()).unwrap();
    let spec = CurvatureSpec::sigma_k(4, 3).unwrap();
    assert_eq!(field, AnalyticField::Bubble(bubble_exact(&spec, 2.5, vec![0.0; 4]).unwrap()));
    assert!((doc["result"]["f_at_center"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn solve_writes_certified_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("sol.json");
    let out = yamabe(&["solve", "--n", "4", "--k", "2", "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(doc["status"], "pass");
    assert_eq!(doc["result"]["certified"], true);
    assert!(doc["result"]["solution"]["residual_norm"].as_f64().unwrap() <= 1e-10);
    assert_eq!(doc["config"]["params"]["spec"]["k"], 2);
    let csv = std::fs::read_to_string(dir.path().join("sol.csv")).unwrap();
    assert!(csv.starts_with("# schema=1\n# command=solve\n# seed=0\n# config={"));
    let body: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body[0], "r,u,lambda_rad,lambda_tan,f_residual");
    assert_eq!(body.len(), 1 + doc["result"]["solution"]["radii"].as_array().unwrap().len());
    // the stored solution reads back through the file format
    let sol: yamabe_core::radial::RadialSolution = serde_json::from_value(doc["result"]["solution"].clone()).unwrap();
    assert_eq!(sol.spec, CurvatureSpec::sigma_k(4, 2).unwrap());
}

#[test]
fn tiny_domain_reports_tail_failure() {
    let out = yamabe(&["solve", "--n", "4", "--k", "2", "--r-max", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let doc = json_of(&out);
    assert_eq!(doc["status"], "error");
    assert_eq!(doc["error"]["code"], "TAIL_CONDITION");
}

#[test]
fn continuation_run() {
    let doc = json_of(&yamabe(&["continue", "--n", "4", "--k", "2"]));
    assert_eq!(doc["status"], "pass");
    assert!(doc["result"]["steps"].as_u64().unwrap() <= 50);
    assert_eq!(doc["result"]["path"].as_array().unwrap().last().unwrap()["t"], 1.0);
}

#[test]
fn audit_of_a_narrow_bubble() {
    let dir = tempfile::tempdir().unwrap();
    let b = AnalyticField::Bubble(BubbleParams::new(1.0, 10.0, vec![0.0; 3]).unwrap());
    let path = write(&dir.path().join("b.json"), &io::to_json_string(&b));
    let out = yamabe(&["audit-harnack", "--field", &path, "--radius", "1", "--n", "3", "--samples", "20000"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json_of(&out);
    let r = &doc["result"];
    assert_eq!(r["pass"], true);
    let orders = (r["bound"].as_f64().unwrap() / r["product"].as_f64().unwrap()).log10();
    assert!(orders >= 6.0, "{orders}");
    let opts = AuditOptions { samples: 20_000, ..AuditOptions::default() };
    let direct = harnack_audit(&b, 1.0, 1.0, 3, &opts).unwrap();
    assert_eq!(serde_json::to_value(&direct).unwrap(), *r);
}

#[test]
fn audit_of_a_gridded_field() {
    let dir = tempfile::tempdir().unwrap();
    let b = AnalyticField::Bubble(BubbleParams::new(1.0, 0.5, vec![0.0; 3]).unwrap());
    let grid = GridSpec { origin: vec![-3.5; 3], spacing: 0.125, shape: vec![57; 3] };
    let g = GriddedField::sample(grid, |p| b.value(p).unwrap()).unwrap();
    let path = dir.path().join("g.json");
    io::write_gridded(&path, &g).unwrap();
    assert_eq!(io::read_gridded(&path).unwrap(), g);
    let field: FieldDescriptor = io::read_json(&path).unwrap();
    assert!(matches!(field, FieldDescriptor::Gridded(_)));
    let out = yamabe(&["audit-harnack", "--field", path.to_str().unwrap(), "--radius", "1", "--samples", "2000"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json_of(&out);
    assert_eq!(doc["result"]["pass"], true);
}

#[test]
fn verify_suites() {
    let dir = tempfile::tempdir().unwrap();
    let small = r#"{"seed": 3, "params": {"fields": 6, "moebius": 2, "points": 5, "certified_fields": 5,
        "violators": 3, "touching_cases": 20, "concavity_points": 20, "max_dim": 4}}"#;
    let cfg = write(&dir.path().join("small.json"), small);
    let out = yamabe(&["verify", "invariance"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_of(&out)["result"]["pass"], true);
    let out = yamabe(&["verify", "all", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json_of(&out);
    assert_eq!(doc["seed"], 3);
    let names: Vec<&str> =
        doc["result"]["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    for suite in ["invariance.", "lemma2.", "touching.", "duality.", "concavity."] {
        assert!(names.iter().any(|n| n.starts_with(suite)), "{suite}");
    }
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let bad_top = write(&dir.path().join("a.json"), r#"{"sed": 1, "params": {}}"#);
    let bad_nested = write(&dir.path().join("b.json"), r#"{"params": {"solver": {"newton_tolerance": 1e-9}}}"#);
    let bad_spec = write(
        &dir.path().join("c.json"),
        r#"{"params": {"spec": {"n": 4, "kind": "sigma_k", "k": 2, "t": 1, "x": 0}}}"#,
    );
    assert_eq!(yamabe(&["verify", "duality", "--config", &bad_top]).status.code(), Some(2));
    assert_eq!(yamabe(&["solve", "--config", &bad_nested]).status.code(), Some(2));
    assert_eq!(yamabe(&["solve", "--config", &bad_spec]).status.code(), Some(2));
}

#[test]
fn resolved_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let first = yamabe(&["solve", "--n", "3", "--k", "2", "--points", "400", "--seed", "5"]);
    let doc = json_of(&first);
    let cfg = serde_json::json!({ "seed": doc["config"]["seed"], "params": doc["config"]["params"] });
    let path = write(&dir.path().join("cfg.json"), &cfg.to_string());
    let second = yamabe(&["solve", "--config", &path]);
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn repeated_runs_are_byte_identical() {
    for args in [
        vec!["solve", "--n", "4", "--k", "2"],
        vec!["continue", "--n", "3", "--k", "2", "--format", "csv"],
        vec!["verify", "lemma2", "--seed", "11"],
        vec!["cone-check", "--k", "2", "1,2,3", "e", "--n", "3"],
    ] {
        let a = yamabe(&args);
        let b = yamabe(&args);
        assert_eq!(a.status.code(), b.status.code());
        assert!(!a.stdout.is_empty());
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}
