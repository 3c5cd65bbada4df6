use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn mzq(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mzq"))
        .args(args)
        .current_dir(dir)
        .env_remove("MZQ_ORACLE_ORDER")
        .output()
        .expect("run mzq")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn build(dir: &Path, domain: &str, n: usize, file: &str) {
    let n = n.to_string();
    let out = mzq(dir, &["build-family", "--domain", domain, "--mu", "0.5", "--n", &n, "--out", file]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn build_family_writes_certified_layer() {
    let dir = TempDir::new().unwrap();
    let args = [
        "build-family", "--domain", "disk", "--mu", "0.5", "--n", "8", "--gamma", "0.5", "--seed", "7", "--out",
        "fam.json",
    ];
    assert_eq!(code(&mzq(dir.path(), &args)), 0);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("fam.json")).unwrap()).unwrap();
    assert_eq!(json["certified"], true);
    assert_eq!(json["n"], 8);
    assert_eq!(json["domain"]["kind"], "disk");
    assert_eq!(json["points"].as_array().unwrap().len(), json["tau"].as_array().unwrap().len());

    // existing output needs --force
    assert_eq!(code(&mzq(dir.path(), &args)), 3);
    let mut forced = args.to_vec();
    forced.push("--force");
    assert_eq!(code(&mzq(dir.path(), &forced)), 0);
}

#[test]
fn degree_zero_layer_has_unit_condition() {
    let dir = TempDir::new().unwrap();
    build(dir.path(), "disk", 0, "f0.json");
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("f0.json")).unwrap()).unwrap();
    assert_eq!(json["points"].as_array().unwrap().len(), 1);
    assert!((json["kappa"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn build_family_is_byte_reproducible() {
    let dir = TempDir::new().unwrap();
    build(dir.path(), "sphere2", 6, "a.json");
    build(dir.path(), "sphere2", 6, "b.json");
    let a = std::fs::read(dir.path().join("a.json")).unwrap();
    let b = std::fs::read(dir.path().join("b.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn certify_reports_constants() {
    let dir = TempDir::new().unwrap();
    build(dir.path(), "disk", 4, "fam.json");
    let out = mzq(dir.path(), &["certify", "--family", "fam.json", "--q", "3", "--out", "fam3.json"]);
    assert_eq!(code(&out), 0);
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["certified"], true);
    assert!(report["A"].as_f64().unwrap() > 0.0);
    assert!(dir.path().join("fam3.json").exists());
}

#[test]
fn approx_packet_errors_decrease() {
    let dir = TempDir::new().unwrap();
    for n in [4, 8, 16] {
        build(dir.path(), "disk", n, &format!("f{n}.json"));
    }
    let out = mzq(
        dir.path(),
        &["approx", "--family", "f4.json", "--family", "f8.json", "--family", "f16.json", "--testfn", "packet", "--r", "3", "--out", "err.csv"],
    );
    assert_eq!(code(&out), 0);
    let csv = std::fs::read_to_string(dir.path().join("err.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,error,sobolev_norm,kappa"));
    let errors: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(errors.len(), 3);
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
}

#[test]
fn approx_polynomial_witness_is_exact() {
    let dir = TempDir::new().unwrap();
    build(dir.path(), "disk", 4, "fam.json");
    for q in ["1", "2", "3"] {
        let out = mzq(dir.path(), &["approx", "--family", "fam.json", "--testfn", "x1", "--q", q, "--out", "e.json", "--force"]);
        assert_eq!(code(&out), 0);
        let rows: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("e.json")).unwrap()).unwrap();
        assert!(rows[0]["error"].as_f64().unwrap() <= 1e-9, "q={q}");
        assert!(rows[0]["sobolev_norm"].is_null());
    }
}

#[test]
fn input_errors_exit_4_and_bad_parameters_exit_5() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&mzq(dir.path(), &["approx", "--family", "missing.json"])), 4);
    std::fs::write(dir.path().join("bad.json"), "{not json").unwrap();
    assert_eq!(code(&mzq(dir.path(), &["approx", "--family", "bad.json"])), 4);
    assert_eq!(code(&mzq(dir.path(), &["certify", "--family", "bad.json"])), 4);

    build(dir.path(), "disk", 2, "fam.json");
    assert_eq!(code(&mzq(dir.path(), &["approx", "--family", "fam.json", "--q", "0.5"])), 5);
    assert_eq!(code(&mzq(dir.path(), &["approx", "--family", "fam.json", "--testfn", "nope"])), 5);
    assert_eq!(code(&mzq(dir.path(), &["build-family", "--domain", "torus", "--n", "2", "--out", "x.json"])), 5);
    assert_eq!(code(&mzq(dir.path(), &["frobnicate"])), 5);
    assert_eq!(code(&mzq(dir.path(), &["--help"])), 0);
}

#[test]
fn oracle_order_override_is_validated() {
    let dir = TempDir::new().unwrap();
    let run = |value: &str| {
        Command::new(env!("CARGO_BIN_EXE_mzq"))
            .arg("witness-list")
            .env("MZQ_ORACLE_ORDER", value)
            .current_dir(dir.path())
            .output()
            .unwrap()
    };
    assert_eq!(code(&run("zero")), 5);
    assert_eq!(code(&run("0")), 5);
    assert_eq!(code(&run("64")), 0);
}

#[test]
fn quad_integrates_witness() {
    let dir = TempDir::new().unwrap();
    build(dir.path(), "sphere2", 6, "fam.json");
    let out = mzq(dir.path(), &["quad", "--family", "fam.json", "--testfn", "constant", "--out", "rule.json"]);
    assert_eq!(code(&out), 0);
    let line = stdout(&out);
    let err: f64 = line.trim().rsplit("error=").next().unwrap().parse().unwrap();
    assert!(err < 1e-12, "{line}");
    let rule: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("rule.json")).unwrap()).unwrap();
    let total: f64 = rule["w"].as_array().unwrap().iter().map(|w| w.as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn convergence_prints_slope_and_is_reproducible() {
    let dir = TempDir::new().unwrap();
    std::fs::write(
        dir.path().join("spec.json"),
        r#"{"domain": {"kind": "sphere2", "mu": 0}, "degrees": [3, 4, 6], "r": 2.5, "packet_degree": 16, "csv": "table.csv"}"#,
    )
    .unwrap();
    let out = mzq(dir.path(), &["convergence", "spec.json", "--jobs", "2"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let slope: f64 = stdout(&out).trim().strip_prefix("slope=").unwrap().parse().unwrap();
    assert!(slope < 0.0);
    let first = std::fs::read(dir.path().join("table.csv")).unwrap();
    assert!(String::from_utf8_lossy(&first).starts_with("n,l_n,kappa,error,rate\n"));

    assert_eq!(code(&mzq(dir.path(), &["convergence", "spec.json"])), 3);
    assert_eq!(code(&mzq(dir.path(), &["convergence", "spec.json", "--force", "--jobs", "1"])), 0);
    assert_eq!(std::fs::read(dir.path().join("table.csv")).unwrap(), first);
}

#[test]
fn degenerate_specs_exit_5() {
    let dir = TempDir::new().unwrap();
    let cases = [
        r#"{"domain": {"kind": "disk", "mu": 0.5}, "degrees": [4, 8], "r": 3}"#,
        r#"{"domain": {"kind": "disk", "mu": 0.5}, "degrees": [8, 4, 16], "r": 3}"#,
        r#"{"domain": {"kind": "disk", "mu": 0.5}, "degrees": [4, 8, 16], "r": 1}"#,
        r#"{"domain": {"kind": "disk", "mu": 0.5}, "degrees": [4, 8, 16], "r": 3, "q": 0.5}"#,
    ];
    for (i, spec) in cases.iter().enumerate() {
        let name = format!("s{i}.json");
        std::fs::write(dir.path().join(&name), spec).unwrap();
        assert_eq!(code(&mzq(dir.path(), &["convergence", &name])), 5, "{spec}");
    }
    std::fs::write(dir.path().join("broken.json"), "[1, 2").unwrap();
    assert_eq!(code(&mzq(dir.path(), &["convergence", "broken.json"])), 4);
}

#[test]
fn witness_list_names_all_witnesses() {
    let dir = TempDir::new().unwrap();
    let out = mzq(dir.path(), &["witness-list", "--domain", "interval"]);
    assert_eq!(code(&out), 0);
    let names: Vec<String> = stdout(&out).lines().map(|l| l.split('\t').next().unwrap().to_string()).collect();
    assert_eq!(names, ["constant", "x1", "exp", "cusp"]);
}
