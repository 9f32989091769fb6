use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BELL: &str = "qubits 2; params 0;\nh q[0];\ncx q[0], q[1];\n";
// One SingleParam block sandwiched between Fixed Hadamards.
const ONE_PARAM: &str = "qubits 1; params 1;\nh q[0];\nrz(t[0]) q[0];\nh q[0];\n";
const SMALL_GRID: &str = "learning_rates = 0.05, 0.1\ndecay_rates = 0.999\n";

fn vqpulse(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vqpulse"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = vqpulse(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fails(dir: &Path, args: &[&str]) -> String {
    let out = vqpulse(dir, args);
    assert_eq!(out.status.code(), Some(1), "{args:?} should exit 1");
    String::from_utf8(out.stderr).unwrap()
}

fn workdir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bell.vqc"), BELL).unwrap();
    fs::write(dir.path().join("one.vqc"), ONE_PARAM).unwrap();
    fs::write(dir.path().join("grid.cfg"), SMALL_GRID).unwrap();
    dir
}

/// Every command of a one-circuit, four-mode run. Schedules land in `out/`.
fn full_run(dir: &Path) {
    ok(dir, &["precompute", "--circuit", "one.vqc", "--mode", "strict", "--cache", "cache", "--jobs", "2"]);
    ok(dir, &["tune", "--circuit", "one.vqc", "--grid", "grid.cfg", "--samples", "2", "--out", "tuned.json", "--jobs", "2"]);
    // Written in reverse of the report order.
    for mode in ["flexible", "strict", "grape", "gate"] {
        let out = format!("out/{mode}.json");
        ok(dir, &[
            "compile", "--circuit", "one.vqc", "--mode", mode, "--params", "-0.8",
            "--cache", "cache", "--tuned", "tuned.json", "--out", &out,
        ]);
    }
    ok(dir, &["report", "--in", "out", "--out", "report.csv"]);
}

fn strip_wall(v: &mut Value) {
    match v {
        Value::Object(m) => {
            m.retain(|k, _| !k.starts_with("wall"));
            m.values_mut().for_each(strip_wall);
        }
        Value::Array(a) => a.iter_mut().for_each(strip_wall),
        _ => {}
    }
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(dir).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

#[test]
fn gate_mode_without_params_on_unparametrized_circuit() {
    let dir = workdir();
    let stdout = ok(dir.path(), &["compile", "--circuit", "bell.vqc", "--mode", "gate", "--out", "bell.json"]);
    assert!(stdout.starts_with("duration_ns=5.2 "), "{stdout}");
    let v: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("bell.json")).unwrap()).unwrap();
    assert_eq!(v["format"], "vqpulse-schedule/1");
    assert_eq!(v["circuit"], "bell");
    assert!(v["fidelity"].as_f64().unwrap() > 0.99);
}

#[test]
fn flexible_without_tuned_file_fails() {
    let dir = workdir();
    let err = fails(dir.path(), &["compile", "--circuit", "one.vqc", "--mode", "flexible", "--params", "0.1", "--out", "x.json"]);
    assert!(err.starts_with("error[missing-tuned]: "), "{err}");
    assert!(err.contains("missing tuned hyperparameters"), "{err}");
    assert!(!dir.path().join("x.json").exists());
}

#[test]
fn strict_without_cache_is_a_cache_miss() {
    let dir = workdir();
    let err = fails(dir.path(), &[
        "compile", "--circuit", "one.vqc", "--mode", "strict", "--params", "0.1",
        "--cache", "empty", "--out", "x.json",
    ]);
    assert!(err.starts_with("error[usage]: ") && err.contains("precompute"), "{err}");
    fs::create_dir(dir.path().join("empty")).unwrap();
    let err = fails(dir.path(), &[
        "compile", "--circuit", "one.vqc", "--mode", "strict", "--params", "0.1",
        "--cache", "empty", "--out", "x.json",
    ]);
    assert!(err.starts_with("error[cache-miss]: "), "{err}");
}

#[test]
fn report_has_one_ordered_row_per_mode() {
    let dir = workdir();
    full_run(dir.path());
    let csv = fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "circuit,mode,duration_ns,fidelity,grape_calls,iterations,wall_ms");
    assert_eq!(lines.len(), 5, "{csv}");
    let modes: Vec<&str> = lines[1..].iter().map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(modes, ["gate", "grape", "strict", "flexible"]);
    for l in &lines[1..] {
        assert!(l.starts_with("one,"));
        let f: f64 = l.split(',').nth(3).unwrap().parse().unwrap();
        assert!(f > 0.99, "{l}");
    }
    let strict: Vec<&str> = lines[3].split(',').collect();
    assert_eq!(strict[4], "0");
}

#[test]
fn runs_are_deterministic_apart_from_wall_clock() {
    let a = workdir();
    let b = workdir();
    full_run(a.path());
    full_run(b.path());
    let names = files(a.path());
    assert_eq!(names, files(b.path()));
    for name in names {
        let x = fs::read(a.path().join(&name)).unwrap();
        let y = fs::read(b.path().join(&name)).unwrap();
        let is_schedule = name.starts_with("out");
        if is_schedule {
            let mut x: Value = serde_json::from_slice(&x).unwrap();
            let mut y: Value = serde_json::from_slice(&y).unwrap();
            strip_wall(&mut x);
            strip_wall(&mut y);
            assert_eq!(x, y, "{}", name.display());
        } else if name.as_os_str() == "report.csv" {
            let drop_wall = |s: &[u8]| -> Vec<String> {
                String::from_utf8_lossy(s)
                    .lines()
                    .map(|l| l.rsplit_once(',').unwrap().0.to_string())
                    .collect()
            };
            assert_eq!(drop_wall(&x), drop_wall(&y));
        } else {
            assert!(x == y, "{} differs", name.display());
        }
    }
}

#[test]
fn verify_reads_params_from_schedule_and_checks_threshold() {
    let dir = workdir();
    ok(dir.path(), &["compile", "--circuit", "one.vqc", "--mode", "gate", "--params", "0.4", "--out", "s.json"]);
    let stdout = ok(dir.path(), &["verify", "--circuit", "one.vqc", "--schedule", "s.json", "--min-fidelity", "0.99"]);
    assert!(stdout.starts_with("fidelity=0.99"), "{stdout}");
    let err = fails(dir.path(), &["verify", "--circuit", "one.vqc", "--schedule", "s.json", "--min-fidelity", "1.5"]);
    assert!(err.starts_with("error[below-threshold]: "), "{err}");
    // Verifying against other parameters fails the threshold too.
    let err = fails(dir.path(), &[
        "verify", "--circuit", "one.vqc", "--schedule", "s.json", "--params", "2.0", "--min-fidelity", "0.99",
    ]);
    assert!(err.starts_with("error[below-threshold]: "), "{err}");
}

#[test]
fn config_errors_name_file_and_line() {
    let dir = workdir();
    fs::write(dir.path().join("bad.cfg"), "seed = 1\ndt_ns = fast\n").unwrap();
    let err = fails(dir.path(), &[
        "compile", "--circuit", "bell.vqc", "--mode", "gate", "--config", "bad.cfg", "--out", "x.json",
    ]);
    assert!(err.starts_with("error[config]: "), "{err}");
    assert!(err.contains("bad.cfg:2"), "{err}");
}

#[test]
fn malformed_inputs_exit_one_with_error_line() {
    let dir = workdir();
    fs::write(dir.path().join("broken.vqc"), "qubits 1; params 0;\nfoo q[0];\n").unwrap();
    let err = fails(dir.path(), &["compile", "--circuit", "broken.vqc", "--mode", "gate", "--out", "x.json"]);
    assert!(err.starts_with("error[format]: "), "{err}");
    assert!(err.contains("line 2, column 1"), "{err}");

    let err = fails(dir.path(), &["compile", "--circuit", "missing.vqc", "--mode", "gate", "--out", "x.json"]);
    assert!(err.starts_with("error[io]: "), "{err}");

    let err = fails(dir.path(), &["compile", "--circuit", "one.vqc", "--mode", "gate", "--out", "x.json"]);
    assert!(err.lines().count() == 1 && err.starts_with("error["), "{err}");

    let err = fails(dir.path(), &["compile", "--circuit", "bell.vqc", "--mode", "turbo", "--out", "x.json"]);
    assert!(err.starts_with("error[usage]: "), "{err}");
}

#[test]
fn gen_qaoa_writes_circuit_and_manifest() {
    let dir = workdir();
    let stdout = ok(dir.path(), &["gen-qaoa", "--nodes", "4", "--kind", "3reg", "--p", "2", "--seed", "5", "--out", "bench"]);
    assert!(stdout.trim().ends_with("qaoa-3reg-n4-p2-s5.vqc"), "{stdout}");
    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("bench/manifest.json")).unwrap()).unwrap();
    let entries = manifest.as_array().expect("manifest is a list");
    assert_eq!(entries.len(), 1);
    assert_eq!(entries[0]["edges"].as_array().unwrap().len(), 6);
    let text = fs::read_to_string(dir.path().join("bench/qaoa-3reg-n4-p2-s5.vqc")).unwrap();
    assert!(text.contains("qubits 4; params 4;"), "{text}");
}
