use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

use mqsp::grid::GridExport;
use mqsp::{build_unitary, LaurentPoly2, ProtocolSpec};

fn mqsp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mqsp"))
        .args(args)
        .env_remove("MQSP_TOLERANCE")
        .output()
        .expect("run mqsp")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn write(dir: &TempDir, name: &str, value: &Value) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, value.to_string()).unwrap();
    path
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn hermitian_part(p: &LaurentPoly2) -> LaurentPoly2 {
    (p + &p.conj_reciprocal()).scale(mqsp::Cplx::new(0.5, 0.0))
}

#[test]
fn build_then_readoff_round_trip() {
    let dir = TempDir::new().unwrap();
    let spec = json!({"s": [1, 0, 1, 1], "phases": [0.1, -0.7, 1.3, 0.4, -2.2]});
    let proto = write(&dir, "proto.json", &spec);
    let out = mqsp(&["build", arg(&proto)]);
    assert_eq!(code(&out), 0);
    let built = stdout_json(&out);
    assert_eq!(built["report"]["passed"], json!(true));

    let poly = write(
        &dir,
        "poly.json",
        &json!({"P": built["P"], "Q": built["Q"]}),
    );
    let out = mqsp(&["readoff", arg(&poly)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let res = stdout_json(&out);
    let back: ProtocolSpec = serde_json::from_value(res["spec"].clone()).unwrap();
    let orig: ProtocolSpec = serde_json::from_value(spec).unwrap();
    assert!(build_unitary(&back).distance(&build_unitary(&orig)) < 1e-9);
}

#[test]
fn build_rejects_phase_count() {
    let dir = TempDir::new().unwrap();
    let proto = write(&dir, "bad.json", &json!({"s": [1, 0], "phases": [0.0]}));
    assert_eq!(code(&mqsp(&["build", arg(&proto)])), 2);
}

#[test]
fn verify_flags_wrong_structure() {
    let dir = TempDir::new().unwrap();
    let poly = write(
        &dir,
        "p.json",
        &json!({"P": [{"j": 1, "re": 1.0, "im": 0.0}], "Q": []}),
    );
    let out = mqsp(&["verify", arg(&poly), "--n", "1", "--m", "1"]);
    assert_eq!(code(&out), 1);
    assert_eq!(stdout_json(&out)["passed"], json!(false));
}

#[test]
fn readoff_of_identity_and_garbage() {
    let dir = TempDir::new().unwrap();
    let id = write(
        &dir,
        "id.json",
        &json!({"P": [{"j": 0, "re": 1.0, "im": 0.0}], "Q": []}),
    );
    let out = mqsp(&["readoff", arg(&id)]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_json(&out)["spec"]["phases"], json!([0.0]));

    let junk = write(
        &dir,
        "junk.json",
        &json!({"P": [{"j": 1, "k": 0, "re": 0.9, "im": 0.0}], "Q": [{"j": 1, "k": 0, "re": 0.0, "im": 0.3}]}),
    );
    assert_eq!(code(&mqsp(&["readoff", arg(&junk)])), 1);
}

#[test]
fn complete_one_variable_chebyshev() {
    let dir = TempDir::new().unwrap();
    let poly = write(
        &dir,
        "t3.json",
        &json!({"P": [{"j": 3, "re": 0.5, "im": 0.0}, {"j": -3, "re": 0.5, "im": 0.0}], "Q": []}),
    );
    let out = mqsp(&["complete", arg(&poly), "--vars", "1", "--deg", "3"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let res = stdout_json(&out);
    assert_eq!(res["spec"]["s"].as_array().unwrap().len(), 3);
    assert!(res["readoffResidual"].as_f64().unwrap() < 1e-9);
}

#[test]
fn complete_two_variable_fixtures() {
    let dir = TempDir::new().unwrap();
    let u = build_unitary(&ProtocolSpec::from_bits(&[0, 1], vec![1.04, -0.28, 0.54]).unwrap());
    let poly = write(
        &dir,
        "ok.json",
        &json!({"P": hermitian_part(&u.p), "Q": hermitian_part(&u.q)}),
    );
    let out = mqsp(&["complete", arg(&poly), "--vars", "2", "--deg", "1,1"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    // 1 - P~^2 - Q~^2 vanishes on a curve for the trivial n = 1 protocol
    let t = build_unitary(&ProtocolSpec::from_bits(&[0, 1], vec![0.0; 3]).unwrap());
    let poly = write(
        &dir,
        "degenerate.json",
        &json!({"P": hermitian_part(&t.p), "Q": hermitian_part(&t.q)}),
    );
    assert_eq!(
        code(&mqsp(&[
            "complete",
            arg(&poly),
            "--vars",
            "2",
            "--deg",
            "1,1"
        ])),
        1
    );
    assert_eq!(
        code(&mqsp(&[
            "complete",
            arg(&poly),
            "--vars",
            "2",
            "--deg",
            "1"
        ])),
        2
    );
}

#[test]
fn scan_with_no_trials() {
    let dir = TempDir::new().unwrap();
    let dump = dir.path().join("dump");
    let out = mqsp(&["scan", "--trials", "0", "--dump-dir", arg(&dump)]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_json(&out)["passed"], json!(0));
    assert!(!dump.exists());
}

#[test]
fn plot_named_families() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("t1.csv");
    assert_eq!(
        code(&mqsp(&[
            "plot",
            "--named",
            "trivial:1",
            "--grid",
            "64",
            "-o",
            arg(&csv)
        ])),
        0
    );
    let g = GridExport::from_csv(&fs::read_to_string(&csv).unwrap()).unwrap();
    assert_eq!(g.size(), 64);
    for ia in 0..64 {
        for ib in 0..64 {
            assert!((g.at(ia, ib) - g.at((ia + 1) % 64, (ib + 63) % 64)).abs() < 1e-9);
        }
    }

    let csv = dir.path().join("x3.csv");
    assert_eq!(
        code(&mqsp(&["plot", "--named", "xyz:3", "-o", arg(&csv)])),
        0
    );
    let g = GridExport::from_csv(&fs::read_to_string(&csv).unwrap()).unwrap();
    // θ = ±π/4, ±3π/4 lie on 4cos²θa cos²θb = 1
    for ia in [16, 48, 80, 112] {
        for ib in [16, 48, 80, 112] {
            assert!(
                g.at(ia, ib) >= 1.0 - 1e-9,
                "({ia}, {ib}) -> {}",
                g.at(ia, ib)
            );
        }
    }

    let pgm = dir.path().join("x3.pgm");
    assert_eq!(
        code(&mqsp(&[
            "plot",
            "--named",
            "xyz:3",
            "--format",
            "pgm",
            "-o",
            arg(&pgm)
        ])),
        0
    );
    assert!(fs::read(&pgm).unwrap().starts_with(b"P5\n128 128\n255\n"));
}

#[test]
fn plot_protocol_file_and_bad_grid() {
    let dir = TempDir::new().unwrap();
    let id = write(&dir, "id.json", &json!({"s": [], "phases": [0.3]}));
    let csv = dir.path().join("id.csv");
    assert_eq!(
        code(&mqsp(&["plot", arg(&id), "--grid", "16", "-o", arg(&csv)])),
        0
    );
    let g = GridExport::from_csv(&fs::read_to_string(&csv).unwrap()).unwrap();
    assert!(g.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
    assert_eq!(
        code(&mqsp(&["plot", arg(&id), "--grid", "8", "-o", arg(&csv)])),
        2
    );
    assert_eq!(
        code(&mqsp(&["plot", "--named", "bogus:2", "-o", arg(&csv)])),
        2
    );
}
