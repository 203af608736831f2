use std::io::Write;
use std::process::{Command, Output, Stdio};

use isserlis_cli::record::{ResultRecord, Verdict};
use tempfile::NamedTempFile;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_isserlis"))
}

fn spec_file(text: &str) -> NamedTempFile {
    let mut f = NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

fn run(args: &[&str], spec: &str) -> Output {
    let f = spec_file(spec);
    bin().args(args).arg("--spec").arg(f.path()).output().unwrap()
}

fn records(out: &Output) -> Vec<ResultRecord> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| ResultRecord::from_json(l).unwrap())
        .collect()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const MINIMAL: &str = r#"{"spec_version": 1, "model": "gaussian", "dimension": 2, "index_set": [1, 2],
    "params": {"covariance": [[1, 0], [0, 1]]}}"#;

const FOUR: &str = r#"{"spec_version": 1, "model": "gaussian", "dimension": 4, "index_set": [1, 2, 3, 4],
    "params": {"covariance": [[2, 0.3, -0.4, 0.5], [0.3, 1.5, 0.2, -0.1], [-0.4, 0.2, 1.8, 0.6], [0.5, -0.1, 0.6, 2.2]]}}"#;

#[test]
fn minimal_gaussian_moment_is_zero() {
    let out = run(&["moment"], MINIMAL);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = records(&out);
    assert_eq!(r.len(), 1);
    assert_eq!(r[0].exact, 0.0);
    assert_eq!(r[0].terms, 1);
}

#[test]
fn three_pairing_identity() {
    let out = run(&["moment"], FOUR);
    let r = &records(&out)[0];
    let want = 0.3 * 0.6 + (-0.4) * (-0.1) + 0.5 * 0.2;
    assert!((r.exact - want).abs() < 1e-15);
    assert_eq!(r.terms, 3);
}

#[test]
fn zero_location_mixture_matches_gaussian() {
    let mixture = FOUR
        .replace("\"gaussian\"", "\"location_mixture\"")
        .replace("\"params\": {", "\"params\": {\"mixing\": {\"kind\": \"deterministic\", \"location\": [0, 0, 0, 0]}, ");
    let a = records(&run(&["moment"], FOUR))[0].exact;
    let b = records(&run(&["moment"], &mixture))[0].exact;
    assert_eq!(a, b);
}

#[test]
fn input_errors_exit_2() {
    let out = run(&["moment"], &MINIMAL.replace("[1, 2]", "[1, 5]"));
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("index out of range"), "{}", stderr(&out));

    let out = run(&["moment"], "{ not json");
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("syntax error at line 1"), "{}", stderr(&out));

    let out = run(&["moment"], &MINIMAL.replace("gaussian", "cauchy"));
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("unknown model kind"));

    let out = bin().args(["moment", "--spec", "/nonexistent/spec.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

const HYPER_DET2: &str = r#"{"spec_version": 1, "model": "hyperbolic", "dimension": 2, "index_set": [1, 2],
    "params": {"mu": [0.1, 0.2], "beta": [0.3, -0.1], "delta": [[2, 0], [0, 1]], "psi": 1, "chi": 2, "lambda": 0.5}}"#;

#[test]
fn determinant_policy() {
    let out = run(&["moment"], HYPER_DET2);
    assert_eq!(out.status.code(), Some(0));
    assert!(stderr(&out).contains("det Δ"), "{}", stderr(&out));

    let out = run(&["moment", "--strict-det"], HYPER_DET2);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("determinant check failed"), "{}", stderr(&out));
}

#[test]
fn size_guard_exits_3() {
    let index: Vec<String> = (0..22).map(|_| "1".to_string()).collect();
    let spec = MINIMAL.replace("[1, 2]", &format!("[{}]", index.join(",")));
    let out = run(&["moment"], &spec);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("1.375e10 terms"), "{}", stderr(&out));
    let out = run(&["moment", "--max-index-size", "3"], FOUR);
    assert_eq!(out.status.code(), Some(3));
    let out = run(&["moment", "--max-index-size", "4"], FOUR);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn verify_passes_and_reports_z() {
    let out = run(&["verify", "--samples", "200000", "--seed", "5"], FOUR);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = &records(&out)[0];
    let a = r.agreement.as_ref().unwrap();
    assert_eq!(a.verdict, Verdict::Pass);
    assert!(a.z.unwrap().abs() <= 5.0);
    assert_eq!(r.mc.as_ref().unwrap().samples, 200_000);
}

#[test]
fn verify_odd_index_is_zero_and_passes() {
    let spec = FOUR.replace("[1, 2, 3, 4]", "[1, 2, 4]");
    let out = run(&["verify", "--samples", "200000"], &spec);
    assert_eq!(out.status.code(), Some(0));
    let r = &records(&out)[0];
    assert_eq!(r.exact, 0.0);
    assert_eq!(r.agreement.as_ref().unwrap().relative_se, None);
}

const HEAVY: &str = r#"{"spec_version": 1, "model": "hyperbolic", "dimension": 1, "index_set": [1,1,1,1,1,1,1,1],
    "params": {"mu": [0], "beta": [0], "delta": [[1]], "psi": 0.01, "chi": 0.5, "lambda": 0.05}}"#;

#[test]
fn missed_tail_fails_with_exit_1() {
    // this seed never reaches the tail, so the sample SE is far too small
    let out = run(&["verify", "--samples", "2000", "--seed", "6"], HEAVY);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(records(&out)[0].verdict(), Some(Verdict::Fail));
}

#[test]
fn heavy_tail_is_inconclusive() {
    let out = run(&["verify", "--samples", "2000", "--seed", "3"], HEAVY);
    assert_eq!(out.status.code(), Some(0));
    let r = &records(&out)[0];
    let a = r.agreement.as_ref().unwrap();
    assert_eq!(a.verdict, Verdict::Inconclusive);
    assert!(a.relative_se.unwrap() > 0.5);
    assert!(stderr(&out).contains("inconclusive"));
}

#[test]
fn independent_formula_verifies() {
    let spec = r#"{"spec_version": 1, "model": "location_mixture", "dimension": 2, "index_set": [1, 2],
        "params": {"covariance": [[1, 0], [0, 1]],
                   "mixing": {"kind": "product", "marginals": [[[1, 0.5], [-1, 0.5]], [[2, 0.25], [0, 0.75]]]},
                   "formula": "independent"}}"#;
    let out = run(&["verify", "--samples", "100000"], spec);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
}

#[test]
fn csv_batch() {
    let batch = format!("[{MINIMAL}, {FOUR}]");
    let out = run(&["moment", "--csv"], &batch);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "model,A,exact,mc,se,z,terms,ms");
    assert!(lines[1].starts_with("gaussian,\"(1,2)\",0,,,,1,"));
    assert!(lines[2].starts_with("gaussian,\"(1,2,3,4)\","));
    assert_eq!(lines.len(), 3);
}

#[test]
fn spec_from_stdin() {
    let mut child = bin()
        .args(["moment", "--spec", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(FOUR.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(records(&out)[0].terms, 3);
}

#[test]
fn bessel_subcommand() {
    let out = bin().args(["bessel", "--nu", "0.5", "--x", "2"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let want = (std::f64::consts::PI / 4.0).sqrt() * (-2.0f64).exp();
    assert!((v["k"].as_f64().unwrap() - want).abs() < 1e-15);

    let out = bin().args(["bessel", "--nu", "-1", "--x", "0"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn selftest_fault_injection_fails_loudly() {
    let out = bin().args(["selftest", "--inject-fault", "asymmetric-covariance"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("wick-fixtures"));
    assert!(text.contains("FAIL"));
    assert!(text.contains("not symmetric"));
}
