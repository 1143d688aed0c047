use std::fs;
use std::path::PathBuf;

use orex::cli::{run, EXIT_CHECK, EXIT_DEGENERATE, EXIT_OK, EXIT_SCHEMA};
use serde_json::Value;

fn orex(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["orex"];
    full.extend_from_slice(args);
    let code = run(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("orex-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn generate(name: &str, extra: &[&str]) -> String {
    let path = scratch(name);
    let p = path.to_str().unwrap().to_string();
    let mut args = vec!["generate", &p];
    args.extend_from_slice(extra);
    let (code, _, err) = orex(&args);
    assert_eq!(code, EXIT_OK, "{err}");
    p
}

fn json(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn constant_basis_estimate() {
    let f = generate("const.json", &["--kind", "constant-basis"]);
    let (code, out, _) = orex(&["estimate", &f]);
    assert_eq!(code, EXIT_OK);
    let v = json(&out);
    assert!((v["gwce"].as_f64().unwrap() - 0.2).abs() < 1e-12);
    let a: Vec<f64> = serde_json::from_value(v["sparsified_weights"].clone()).unwrap();
    let y = [1.3, 0.7];
    let expect: f64 = a.iter().zip(y).map(|(a, y)| a * y).sum();
    let with_data = scratch("const-data.json");
    let mut file = json(&fs::read_to_string(&f).unwrap());
    file["data"] = serde_json::json!({ "y": [[1.3, 0.7]] });
    fs::write(&with_data, file.to_string()).unwrap();
    let (_, out, _) = orex(&["estimate", with_data.to_str().unwrap()]);
    assert!((json(&out)["estimate"].as_f64().unwrap() - expect).abs() < 1e-15);
}

#[test]
fn rank_deficient_functional_is_degenerate() {
    let f = generate("deg.json", &["--kind", "constant-basis", "--no-data"]);
    let mut file = json(&fs::read_to_string(&f).unwrap());
    file["payload"]["levels"][0]["basis"] = serde_json::json!({ "type": "monomial", "degree": 2 });
    fs::write(&f, file.to_string()).unwrap();
    let (code, _, err) = orex(&["estimate", &f]);
    assert_eq!(code, EXIT_DEGENERATE);
    assert!(err.contains("model-degeneracy"));
}

#[test]
fn zero_data_local_estimate_is_zero() {
    let f = generate("zero.json", &["--kind", "digital-twin", "--seed", "2", "--n", "5"]);
    let mut file = json(&fs::read_to_string(&f).unwrap());
    for k in ["y0", "y1"] {
        let len = file["data"][k].as_array().unwrap().len();
        file["data"][k] = serde_json::json!(vec![0.0; len]);
    }
    fs::write(&f, file.to_string()).unwrap();
    let (code, out, _) = orex(&["recover", &f, "--mode", "local"]);
    assert_eq!(code, EXIT_OK);
    let est: Vec<f64> = serde_json::from_value(json(&out)["estimate"].clone()).unwrap();
    assert!(est.iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn twin_local_is_certified_and_below_global() {
    let f = generate("twin.json", &["--kind", "digital-twin", "--seed", "5", "--n", "6", "--s-active"]);
    let (_, local, _) = orex(&["recover", &f, "--mode", "local"]);
    let (_, global, _) = orex(&["recover", &f, "--mode", "global", "--emit-map"]);
    let (l, g) = (json(&local), json(&global));
    assert_eq!(l["certified"], Value::Bool(true));
    assert!(l["radius"].as_f64().unwrap() <= g["bound"].as_f64().unwrap() + 1e-7);
    let map = &g["map"];
    assert_eq!(map["cols"].as_u64().unwrap() as usize, map["data"].as_array().unwrap().len() / map["rows"].as_u64().unwrap() as usize);
}

#[test]
fn consistent_mode_reports_factor_two() {
    let f = generate("gen.json", &["--kind", "generic", "--seed", "4"]);
    let (code, out, _) = orex(&["recover", &f, "--mode", "consistent"]);
    assert_eq!(code, EXIT_OK);
    let v = json(&out);
    assert!((v["lwce_bound"].as_f64().unwrap() - 2.0 * v["radius_bound"].as_f64().unwrap()).abs() < 1e-12);
}

#[test]
fn local_without_data_is_a_schema_error() {
    let f = generate("nodata.json", &["--kind", "generic", "--no-data"]);
    assert_eq!(orex(&["recover", &f, "--mode", "local"]).0, EXIT_SCHEMA);
    assert_eq!(orex(&["recover", &f, "--mode", "global"]).0, EXIT_OK);
}

#[test]
fn negative_radius_is_a_schema_error() {
    let f = generate("broken.json", &["--kind", "digital-twin"]);
    let mut file = json(&fs::read_to_string(&f).unwrap());
    file["payload"]["eps1"] = serde_json::json!(-1.0);
    fs::write(&f, file.to_string()).unwrap();
    let (code, _, err) = orex(&["validate", &f]);
    assert_eq!(code, EXIT_SCHEMA);
    assert!(err.contains("schema"));
}

#[test]
fn validate_certified_and_functional_files_pass() {
    for (name, args) in [
        ("v1.json", vec!["--kind", "digital-twin", "--seed", "9", "--n", "5", "--s-active"]),
        ("v2.json", vec!["--kind", "graph-signal", "--n", "9"]),
        ("v3.json", vec!["--kind", "random-functional", "--n", "3", "--seed", "1"]),
        ("v4.json", vec!["--kind", "disk-slice"]),
    ] {
        let f = generate(name, &args);
        let (code, out, err) = orex(&["validate", &f, "--budget", "4000", "--seed", "3"]);
        assert_eq!(code, EXIT_OK, "{name}: {out}{err}");
        assert_eq!(json(&out)["passed"], Value::Bool(true));
    }
}

#[test]
fn failing_check_exits_one() {
    // A certificate threshold of -1 cannot be met.
    let f = generate("strict.json", &["--kind", "digital-twin", "--seed", "1", "--s-active"]);
    let (code, out, _) = orex(&["validate", &f, "--budget", "500", "--tol-cert=-1"]);
    assert_eq!(code, EXIT_CHECK, "{out}");
}

#[test]
fn reports_reparse_and_are_deterministic() {
    let f = generate("det.json", &["--kind", "generic", "--seed", "7"]);
    let a = orex(&["validate", &f, "--seed", "11", "--budget", "3000"]).1;
    let b = orex(&["validate", &f, "--seed", "11", "--budget", "3000"]).1;
    assert_eq!(a, b);
    json(&a);
    let out = scratch("det-report.json");
    orex(&["validate", &f, "--seed", "11", "--budget", "3000", "--out", out.to_str().unwrap()]);
    assert_eq!(fs::read_to_string(out).unwrap(), a);
}

#[test]
fn unknown_subcommand_is_a_schema_error() {
    assert_eq!(orex(&["frobnicate", "x"]).0, EXIT_SCHEMA);
    assert_eq!(orex(&["recover", "/nonexistent/file.json"]).0, EXIT_SCHEMA);
}
