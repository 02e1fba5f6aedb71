use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gurarii"))
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn path_str(p: &std::path::Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn space_linf2_has_the_square_vertices() {
    let out = run(&["space", "linf", "2"]);
    assert!(out.status.success());
    let v = json(&out);
    let mut vs: Vec<Vec<String>> = serde_json::from_value(v["vertices"].clone()).unwrap();
    vs.sort();
    let expect: Vec<Vec<String>> = [["-1", "-1"], ["-1", "1"], ["1", "-1"], ["1", "1"]]
        .iter()
        .map(|p| p.iter().map(|s| s.to_string()).collect())
        .collect();
    assert_eq!(vs, expect);
}

#[test]
fn space_output_reparses() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["space", "l1", "3"]);
    let p = dir.path().join("l1.json");
    std::fs::write(&p, &out.stdout).unwrap();
    let again = run(&["space", "from-json", path_str(&p)]);
    assert!(again.status.success());
    assert_eq!(json(&out)["functionals"], json(&again)["functionals"]);
}

#[test]
fn embed_check_identity_l1_to_linf() {
    let f = fixture("id-l1-to-linf.json");
    let out = run(&["embed-check", path_str(&f), "--eps", "1"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["verdict"], true);
    assert_eq!(v["distortion"]["eps_star"], "1");
    let strict = run(&["embed-check", path_str(&f), "--eps", "1", "--strict"]);
    assert_eq!(strict.status.code(), Some(1));
}

#[test]
fn pushout_emits_a_result() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("w.json");
    let out = run(&[
        "pushout",
        path_str(&fixture("line-in-linf2.json")),
        path_str(&fixture("line-in-l1-2.json")),
        "--eps",
        "0",
        "--out",
        path_str(&p),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
    assert_eq!(v["w"]["dim"], 3);
    assert_eq!(v["checks"]["j_isometric"], true);
}

#[test]
fn extend_subcommands() {
    let sub = fixture("diagonal-in-linf2.json");
    let out = run(&[
        "extend",
        "norm",
        "--subspace",
        path_str(&sub),
        "--norm",
        path_str(&fixture("two-thirds-norm-on-line.json")),
        "--eps",
        "1",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(json(&out)["dim"], 2);
    let out = run(&[
        "extend",
        "linf",
        "--map",
        path_str(&fixture("identity-on-line.json")),
        "--subspace",
        path_str(&sub),
    ]);
    assert!(out.status.success());
    assert_eq!(json(&out)["matrix"], serde_json::json!([["0", "1"]]));
}

fn chain(out: &std::path::Path, mode: &str) -> Output {
    run(&[
        "chain",
        "--steps",
        "50",
        "--dim-cap",
        "3",
        "--bit-cap",
        "6",
        "--seed",
        "0",
        "--mode",
        mode,
        "--out",
        path_str(out),
    ])
}

#[test]
fn chain_transcripts_are_byte_identical_and_certify() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    assert!(chain(&a, "gurarii").status.success());
    assert!(chain(&b, "gurarii").status.success());
    let ta = std::fs::read(&a).unwrap();
    assert_eq!(ta, std::fs::read(&b).unwrap());
    assert!(ta
        .split(|&c| c == b'\n')
        .filter(|l| !l.is_empty())
        .all(|l| serde_json::from_slice::<Value>(l).is_ok()));

    let csv = dir.path().join("coverage.csv");
    let out = run(&["certify", path_str(&a), "--csv", path_str(&csv)]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = json(&out);
    assert_eq!(report["verified"], report["applicable"]);
    assert!(std::fs::read_to_string(&csv)
        .unwrap()
        .starts_with("level,scheduled"));
}

#[test]
fn tampered_transcript_fails_certification() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    assert!(chain(&a, "complemented").status.success());
    let text = std::fs::read_to_string(&a).unwrap();
    // Overwrite the first nonzero witness entry of an applicable certificate.
    let mut lines: Vec<Value> = text
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let cert = lines
        .iter_mut()
        .find(|v| {
            v["type"] == "certificate" && v["applicable"] == true && v["request"]["e_dim"] != 0
        })
        .unwrap();
    let m = cert["witness"]["matrix"].as_array_mut().unwrap();
    let entry = m
        .iter_mut()
        .flat_map(|r| r.as_array_mut().unwrap().iter_mut())
        .find(|x| *x != "0")
        .unwrap();
    assert_ne!(entry, "7");
    *entry = Value::String("7".into());
    let tampered: String = lines.iter().map(|v| format!("{v}\n")).collect();
    let t = dir.path().join("t.jsonl");
    std::fs::write(&t, tampered).unwrap();
    let out = run(&["certify", path_str(&t)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("certificate"));
}

#[test]
fn malformed_json_is_an_input_error_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(&p, "{\n  \"dim\": 2,\n  \"functionals\": [[\"1\", \n").unwrap();
    let out = run(&["space", "from-json", path_str(&p)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));
}

#[test]
fn unknown_flags_are_rejected() {
    assert_eq!(
        run(&["space", "linf", "2", "--frobnicate"]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["chain", "--mode", "banach"]).status.code(), Some(2));
}

#[test]
fn cap_override_reports_resource_exhaustion() {
    let out = bin()
        .env("GURARII_MAX_DIM", "2")
        .args([
            "pushout",
            path_str(&fixture("line-in-linf2.json")),
            path_str(&fixture("line-in-l1-2.json")),
            "--eps",
            "0",
        ])
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
