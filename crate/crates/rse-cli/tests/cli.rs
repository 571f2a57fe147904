use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_rse-toolkit"));
    c.env_remove("RSE_TOOLKIT_THREADS");
    c
}

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("bad json ({e}): {}", String::from_utf8_lossy(&o.stdout)))
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn report(cmd: &str, spec: &Path) -> Output {
    run(&[cmd, "--spec", spec.to_str().unwrap()])
}

#[test]
fn pca_rse_is_one_over_root_two() {
    let o = report("rse", &shipped("pca_diag.json"));
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout.clone()).unwrap();
    assert!(text.contains("\"rse\": 0.7071067811865476,"), "{text}");
    let v = json(&o);
    assert_eq!(v["command"], "rse");
    assert_eq!(v["rse"].as_f64().unwrap(), std::f64::consts::FRAC_1_SQRT_2);
}

#[test]
fn reg_values() {
    let v = json(&report("reg", &shipped("pca_diag.json")));
    assert_eq!(v["reg"]["kind"], "exact");
    assert!((v["reg"]["value"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-15);
    let v = json(&report("reg", &shipped("qmle_linear.json")));
    assert!((v["reg"]["value"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn pca_report_product_matches_prediction() {
    let v = json(&report("report", &shipped("pca_diag.json")));
    let expected = 1.0 / (3.0 * 2f64.sqrt());
    let p = v["product"].as_array().unwrap();
    assert!((p[0].as_f64().unwrap() - expected).abs() < 1e-15);
    assert_eq!(v["product_in_bounds"], true);
}

#[test]
fn gaussian_phase_report() {
    let o = report("report", &shipped("phase_gaussian.json"));
    assert_eq!(code(&o), 0);
    let v = json(&o);
    let p = v["product"][0].as_f64().unwrap();
    assert!((p - (1.0 - std::f64::consts::FRAC_2_PI)).abs() < 1e-6, "{p}");
    let lo = v["predicted_bounds"][0].as_f64().unwrap();
    assert!((lo - 0.12113).abs() < 1e-5);
    assert_eq!(v["product_in_bounds"], true);
    let d = &v["diagnostics"];
    let gap = (d["objective_mc"].as_f64().unwrap() - d["objective_closed_form"].as_f64().unwrap()).abs();
    assert!(gap <= 4.0 * d["objective_mc_stderr"].as_f64().unwrap(), "{d}");
}

#[test]
fn bilinear_product_in_bracket() {
    let v = json(&report("report", &shipped("bilinear.json")));
    assert_eq!(v["reg"]["kind"], "bracket");
    assert_eq!(v["product_in_bounds"], true);
}

#[test]
fn ill_posed_exits_two_with_inf_sentinel() {
    let o = report("reg", &shipped("mc_single_edge.json"));
    assert_eq!(code(&o), 2);
    let v = json(&o);
    assert_eq!(v["rse"].as_f64().unwrap(), 0.0);
    assert_eq!(v["reg"]["value"], "inf");
    assert_eq!(v["ill_posed"], true);
}

#[test]
fn invalid_specs_exit_three() {
    let dir = TempDir::new().unwrap();
    let no_beta = write(&dir, "a.json", r#"{"problem":"phase_retrieval","data":{"gaussian":{"covariance":[[1]]}},"estimation":{"seed":1}}"#);
    let o = report("rse", &no_beta);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("beta_star"));

    let unknown = write(&dir, "b.json", "{\"problem\":\"pca\",\n\"q\":1,\"qq\":2}");
    let o = report("rse", &unknown);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    let two_sources = write(
        &dir,
        "c.json",
        r#"{"problem":"pca","q":1,"data":{"gaussian":{"covariance":[[1,0],[0,2]]},"empirical":{"path":"x.csv"}}}"#,
    );
    assert_eq!(code(&report("rse", &two_sources)), 3);

    let no_seed = write(&dir, "d.json", r#"{"problem":"phase_retrieval","beta_star":[1,0],"data":{"gaussian":{"covariance":[[1,0],[0,1]]}}}"#);
    assert_eq!(code(&report("rse", &no_seed)), 3);

    let not_psd = write(&dir, "e.json", r#"{"problem":"pca","q":1,"data":{"gaussian":{"covariance":[[1,0],[0,-1]]}}}"#);
    assert_eq!(code(&report("rse", &not_psd)), 3);

    assert_eq!(code(&report("rse", &dir.path().join("missing.json"))), 3);
}

#[test]
fn maxcut_verify_limit_exits_four() {
    let dir = TempDir::new().unwrap();
    let edges: String = (1..13).map(|i| format!("{i} {}\n", i + 1)).collect();
    let g = write(&dir, "path13.txt", &edges);
    let o = run(&["maxcut", g.to_str().unwrap(), "--verify"]);
    assert_eq!(code(&o), 4);
    let o = run(&["maxcut", g.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["maxcut_via_rse"], 12);
}

#[test]
fn maxcut_odd_cycle_agrees_with_enumeration() {
    let o = run(&["maxcut", shipped("c5.txt").to_str().unwrap(), "--verify"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["maxcut_via_rse"], 4);
    assert_eq!(v["agrees"], true);
}

#[test]
fn maxcut_mismatch_exits_one() {
    // Isolating the pendant vertex is cheaper than making K4 bipartite.
    let o = run(&["maxcut", shipped("k4_pendant.txt").to_str().unwrap(), "--verify"]);
    assert_eq!(code(&o), 1);
    let v = json(&o);
    assert_eq!(v["maxcut_via_rse"], 6);
    assert_eq!(v["brute_force"], 5);
}

#[test]
fn report_round_trips() {
    for name in ["pca_diag.json", "mc_single_edge.json", "bilinear.json", "empirical_phase.json"] {
        let o = report("report", &shipped(name));
        let text = String::from_utf8(o.stdout).unwrap();
        let v: Value = serde_json::from_str(&text).unwrap();
        let again: Value = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
        assert_eq!(v, again, "{name}");
    }
}

fn without_wall_time(o: &Output) -> Value {
    let mut v = json(o);
    v["provenance"].as_object_mut().unwrap().remove("wall_time_seconds");
    v
}

#[test]
fn reports_are_deterministic() {
    for name in ["phase_gaussian.json", "empirical_phase.json", "mc_triangle.json"] {
        let cmd = if name.starts_with("mc_") { "mc-analyze" } else { "report" };
        let a = report(cmd, &shipped(name));
        let b = bin().args([cmd, "--spec", shipped(name).to_str().unwrap(), "--threads", "1"]).output().unwrap();
        let c = bin().args([cmd, "--spec", shipped(name).to_str().unwrap()]).env("RSE_TOOLKIT_THREADS", "3").output().unwrap();
        assert_eq!(without_wall_time(&a), without_wall_time(&b), "{name}");
        assert_eq!(without_wall_time(&a), without_wall_time(&c), "{name}");
    }
}

#[test]
fn out_flag_writes_file() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("r.json");
    let o = run(&["report", "--spec", shipped("qmle_linear.json").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    let v: Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(v["problem"], "qmle");
    assert_eq!(v["provenance"]["spec_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn mc_analyze_reports_witness() {
    let o = report("mc-analyze", &shipped("mc_triangle.json"));
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["mode"], "exact");
    assert!((v["rse_sq"].as_f64().unwrap() - 0.3).abs() < 1e-15);
    assert_eq!(v["removed"], serde_json::json!([[1, 3]]));

    let o = report("mc-analyze", &shipped("mc_single_edge.json"));
    assert_eq!(code(&o), 2);
    let v = json(&o);
    assert_eq!(v["bipartite_components"], serde_json::json!([[1, 2]]));
    assert_eq!(v["rse_sq"].as_f64().unwrap().to_bits(), 0f64.to_bits());
    assert_eq!(v["reg_exact"], "inf");
    assert!(v["kernel_witness"].is_array());
}

#[test]
fn mode_flag_overrides_spec() {
    let spec = shipped("mc_triangle.json");
    let v = json(&run(&["mc-analyze", "--spec", spec.to_str().unwrap(), "--mode", "greedy"]));
    assert_eq!(v["mode"], "greedy");
    assert_eq!(v["certified"], false);
}

#[test]
fn sample_writes_seeded_csv() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let spec = shipped("pca_diag.json");
    for out in [&a, &b] {
        let o = run(&["sample", "--spec", spec.to_str().unwrap(), "-n", "50", "--seed", "9", "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0);
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x1,x2,weight");
    assert_eq!(lines.len(), 51);

    // The sample is itself a valid empirical data source.
    let s = write(&dir, "emp.json", r#"{"problem":"pca","q":1,"data":{"empirical":{"path":"a.csv","center":false}}}"#);
    assert_eq!(code(&report("rse", &s)), 0);

    let o = run(&["sample", "--spec", spec.to_str().unwrap(), "-n", "5", "--out", a.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
}

#[test]
fn verify_single_criterion() {
    let o = run(&["verify", "--criterion", "1"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("[PASS]"), "{text}");
    assert_eq!(code(&run(&["verify", "--criterion", "11"])), 3);
}
