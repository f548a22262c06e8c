use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

const BIN: &str = env!("CARGO_BIN_EXE_levyfluct");

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env("LEVYFLUCT_THREADS", "2").output().unwrap()
}

fn run_spec(cmd: &str, spec: &Value, extra: &[&str]) -> Output {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("spec.json");
    std::fs::write(&path, serde_json::to_string(spec).unwrap()).unwrap();
    let mut args = vec![cmd, "--spec", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "exit {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json_out(o: &Output) -> Value {
    serde_json::from_str(&stdout(o)).expect("valid JSON")
}

fn csv_out(o: &Output) -> (Vec<String>, Vec<Vec<String>>) {
    let text = stdout(o);
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn problem(model: &str, f: Value, ext: &str) -> Value {
    json!({"model": model, "penalty": {"f": f, "extension": {"kind": ext}},
           "a": 0.0, "b": 1.5, "q": 0.1, "x": 0.75})
}

#[test]
fn golden_eval_output() {
    let o = run(&["eval", "--spec", fixture("golden_eval_spec.json").to_str().unwrap()]);
    let want = std::fs::read_to_string(fixture("golden_eval.json")).unwrap();
    assert_eq!(stdout(&o), want);
}

#[test]
fn eval_json_schema_and_dispatch() {
    let v = json_out(&run_spec("eval", &problem("cramer_lundberg", json!(1), "constant_one"), &[]));
    assert_eq!(v["formula_used"], "simple");
    for k in ["value", "accuracy"] {
        assert!(v[k].is_f64(), "{k}");
    }
    for k in ["boundary", "integral", "creeping"] {
        assert!(v["terms"][k].is_f64(), "{k}");
    }
    let sum = ["boundary", "integral", "creeping"].iter().map(|k| v["terms"][k].as_f64().unwrap()).sum::<f64>();
    let value = v["value"].as_f64().unwrap();
    assert!((sum - value).abs() <= 1e-14 * value.abs().max(1.0), "{sum} vs {value}");
}

#[test]
fn eval_csv_has_one_row() {
    let (h, rows) = csv_out(&run_spec("eval", &problem("jump_diffusion", json!("exp(y)"), "zero"), &["--format", "csv"]));
    assert_eq!(h, ["value", "boundary", "integral", "creeping", "accuracy", "formula_used"]);
    assert_eq!(rows.len(), 1);
    assert!(rows[0][0].parse::<f64>().is_ok());
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.json");
    let o = run_spec("eval", &problem("brownian_motion", json!(1), "constant_one"), &["--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert!(v["value"].is_f64());
}

#[test]
fn exit_codes_on_error_matrix() {
    let base = problem("cramer_lundberg", json!("exp(y)"), "affine_at_a");
    let with = |k: &str, v: Value| {
        let mut s = base.clone();
        s[k] = v;
        s
    };
    let spec_errors = [
        ("unknown field", with("colour", json!("red"))),
        ("x outside", with("x", json!(2.0))),
        ("a above b", with("a", json!(3.0))),
        ("negative q", with("q", json!(-1.0))),
        ("unknown model", with("model", json!("no_such_model"))),
        ("negative sigma", with("model", json!({"gamma": 1.0, "sigma": -1.0}))),
        ("bad extension", with("penalty", json!({"f": 1, "extension": {"kind": "cubic"}}))),
        ("bad expression", with("penalty", json!({"f": "exp(y", "extension": "zero"}))),
        ("missing extension", with("penalty", json!("exp(y)"))),
        ("wrong type", with("b", json!("two"))),
    ];
    for (what, s) in &spec_errors {
        let o = run_spec("eval", s, &[]);
        assert_eq!(o.status.code(), Some(2), "{what}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty(), "{what}: no diagnostic");
    }
    // simple form on a case where no simplification condition holds
    let mut s = problem("tempered_stable", json!("exp(y)"), "zero");
    s["formula"] = json!("simple");
    let o = run_spec("eval", &s, &[]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("extension continuous at a: false"));
    // accuracy requirement that cannot be met
    assert_eq!(run_spec("eval", &base, &["--tol", "1e-300"]).status.code(), Some(3));
    // refracted start at the lower barrier
    let mut s = with("x", json!(0.0));
    s["delta"] = json!(0.2);
    s["c"] = json!(1.0);
    assert_eq!(run_spec("eval-refracted", &s, &[]).status.code(), Some(3));
    // simulation at q = 0 without a horizon
    let mut s = with("q", json!(0.0));
    s["paths"] = json!(100);
    assert_eq!(run_spec("mc", &s, &[]).status.code(), Some(2));
    // command line problems
    assert_eq!(run(&["eval"]).status.code(), Some(2));
    assert_eq!(run(&["eval", "--spec", "/nonexistent/spec.json"]).status.code(), Some(2));
    assert_eq!(run(&["nonsense"]).status.code(), Some(2));
    assert_eq!(run_spec("eval", &base, &["--format", "xml"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(&p, "{ not json").unwrap();
    assert_eq!(run(&["eval", "--spec", p.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn spec_errors_name_the_field() {
    let mut s = problem("cramer_lundberg", json!(1), "constant_one");
    s["penalty"]["extension"]["kind"] = json!("cubic");
    let o = run_spec("eval", &s, &[]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("penalty.extension.kind"));
}

#[test]
fn scale_csv_is_monotone() {
    let spec = json!({"model": "jump_diffusion", "q": 0.05, "grid": {"from": 0.0, "to": 4.0, "n": 41}});
    let o = run_spec("scale", &spec, &[]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("method="));
    let (h, rows) = csv_out(&o);
    assert_eq!(h, ["x", "W", "W_prime", "Z"]);
    assert_eq!(rows.len(), 41);
    let w: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(w.windows(2).all(|p| p[1] > p[0]));
    let v = json_out(&run_spec("scale", &spec, &["--format", "json"]));
    assert_eq!(v.as_array().unwrap().len(), 41);
}

#[test]
fn mc_is_reproducible_and_overridable() {
    let mut s = problem("cramer_lundberg", json!("exp(y)"), "zero");
    s["paths"] = json!(4000);
    s["seed"] = json!(1);
    let first = stdout(&run_spec("mc", &s, &[]));
    assert_eq!(first, stdout(&run_spec("mc", &s, &[])));
    let v: Value = serde_json::from_str(&first).unwrap();
    assert_eq!(v["n_paths"], 4000);
    for k in ["mean", "stderr", "capped_fraction"] {
        assert!(v[k].is_f64(), "{k}");
    }
    let o = json_out(&run_spec("mc", &s, &["--paths", "3000", "--seed", "2"]));
    assert_eq!(o["n_paths"], 3000);
    assert_ne!(o["mean"], v["mean"]);
    let (h, rows) = csv_out(&run_spec("mc", &s, &["--format", "csv"]));
    assert_eq!(h, ["mean", "stderr", "n_paths", "capped_fraction"]);
    assert_eq!(rows.len(), 1);
}

#[test]
fn refracted_with_zero_delta_matches_eval() {
    let mut s = problem("jump_diffusion", json!("exp(y)"), "affine_at_a");
    let plain = json_out(&run_spec("eval", &s, &[]));
    s["delta"] = json!(0.0);
    s["c"] = json!(1.0);
    let r = json_out(&run_spec("eval-refracted", &s, &[]));
    assert_eq!(r["provider"], "closed_form");
    let (a, b) = (plain["value"].as_f64().unwrap(), r["value"].as_f64().unwrap());
    let tol = plain["accuracy"].as_f64().unwrap() + r["accuracy"].as_f64().unwrap() + 1e-10;
    assert!((a - b).abs() <= tol, "{a} vs {b}");
}

#[test]
fn reflected_mc_provider_output() {
    let mut s = problem("cramer_lundberg", json!("exp(y)"), "constant_one");
    s["provider"] = json!("mc");
    s["mc"] = json!({"paths": 2000, "dt": 0.002, "seed": 3, "horizon": 100.0});
    let v = json_out(&run_spec("eval-reflected", &s, &[]));
    assert_eq!(v["provider"], "mc");
    assert_eq!(v["n_paths"], 2000);
    assert!(v["stderr"].as_f64().unwrap() > 0.0);
    let (h, rows) = csv_out(&run_spec("eval-reflected", &s, &["--format", "csv"]));
    assert_eq!(h.len(), 8);
    assert_eq!(rows.len(), 1);
}

#[test]
fn compare_rows_per_pair_and_tolerance_gate() {
    let mut s = problem("cramer_lundberg", json!(1), "constant_one");
    s["mc"] = json!({"paths": 5000, "seed": 4});
    let v = json_out(&run_spec("compare", &s, &[]));
    let routes = v["routes"].as_array().unwrap();
    let n = routes.iter().filter(|r| r["value"].is_f64()).count();
    assert!(n >= 7, "{routes:?}");
    assert_eq!(v["all_pass"], true, "{v}");
    let (h, rows) = csv_out(&run_spec("compare", &s, &["--format", "csv"]));
    assert_eq!(h, ["route_a", "route_b", "value_a", "value_b", "deviation", "tolerance", "pass"]);
    assert_eq!(rows.len(), n * (n - 1) / 2);
    let (_, rows) = csv_out(&run_spec("compare", &s, &["--format", "csv", "--tol", "0"]));
    assert!(rows.iter().any(|r| r[6] == "false"));
}
