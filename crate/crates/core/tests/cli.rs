//! Drives the `freebound` binary end to end and checks exit codes and the run
//! directory contract.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use freebound::io::{sha256_hex, Manifest, LOCKFILE};

const SMALL_BALL: &str = "ball_only = true\n\n[mesh]\nh = 0.1\n\n[sweep]\nsteps = 2\n\n[solver]\nmultistart_count = 2\n";

fn freebound(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_freebound"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.toml");
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn invalid_config_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[problem]\nalpha = 0.3\nbeta = 0.2\n");
    let o = freebound(&["radial", "--config", &cfg], &tmp.path().join("run"));
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!tmp.path().join("run").exists());

    let cfg = write_config(tmp.path(), "[mesh]\nsize = 0.1\n");
    assert_eq!(code(&freebound(&["domain", "--config", &cfg], &tmp.path().join("run"))), 2);

    let missing = tmp.path().join("nope.toml");
    let o = freebound(&["radial", "--config", missing.to_str().unwrap()], &tmp.path().join("run"));
    assert_eq!(code(&o), 2);
    assert_eq!(code(&freebound(&["radial", "--threads", "0"], &tmp.path().join("run"))), 2);
}

#[test]
fn verify_and_analyze_need_a_finished_run() {
    let tmp = tempfile::tempdir().unwrap();
    let o = freebound(&["verify"], tmp.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("manifest.json"));
    assert_eq!(code(&freebound(&["analyze"], tmp.path())), 2);
}

#[test]
fn radial_is_reproducible_and_digested() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("nested/run");
    let o = freebound(&["radial"], &out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let names = ["radial/w_profile.csv", "radial/scaling_audit.csv", "radial/barrier.json"];
    let first: Vec<Vec<u8>> = names.iter().map(|n| fs::read(out.join(n)).unwrap()).collect();

    let m = Manifest::load(&out).unwrap().unwrap();
    for (n, bytes) in names.iter().zip(&first) {
        assert_eq!(m.files[*n], sha256_hex(bytes), "{n}");
    }
    assert!(m.check_digests(&out).is_empty());
    assert!(!out.join(LOCKFILE).exists());

    let w = String::from_utf8(first[0].clone()).unwrap();
    assert!(w.starts_with("r,w,w_prime\n"));
    assert_eq!(w.lines().count(), 1 + 1025);

    assert_eq!(code(&freebound(&["radial"], &out)), 0);
    for (n, bytes) in names.iter().zip(&first) {
        assert_eq!(&fs::read(out.join(n)).unwrap(), bytes, "{n} changed on rerun");
    }
}

#[test]
fn held_lock_is_refused() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join(LOCKFILE), "12345\n").unwrap();
    let o = freebound(&["radial"], tmp.path());
    assert_eq!(code(&o), 2);
    assert!(tmp.path().join(LOCKFILE).exists());
}

#[test]
fn small_ball_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL_BALL);
    let out = tmp.path().join("run");
    for cmd in ["radial", "domain", "solve"] {
        let o = freebound(&[cmd, "--config", &cfg, "--seed", "7", "--threads", "2"], &out);
        assert_eq!(code(&o), 0, "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let summary = fs::read_to_string(out.join("analysis/summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 2);
    assert!(out.join("solve/fields/step_01.csv").exists());
    assert!(out.join("analysis/flux/step_01.csv").exists());
    let m = Manifest::load(&out).unwrap().unwrap();
    assert_eq!(m.config["seed"], 7);
    assert_eq!(m.config["ball_only"], true);

    let o = freebound(&["analyze", "--config", &cfg, "--seed", "7"], &out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(out.join("analysis/summary.csv")).unwrap(), summary);

    // a tampered field must show up as an integrity failure
    let field = out.join("solve/fields/step_00.csv");
    let text = fs::read_to_string(&field).unwrap();
    let last = text.lines().last().unwrap().to_owned();
    let (head, value) = last.rsplit_once(',').unwrap();
    let bumped = format!("{head},{}", freebound::io::num(value.parse::<f64>().unwrap() + 1e-3));
    fs::write(&field, text.replace(&last, &bumped)).unwrap();
    let o = freebound(&["verify", "--config", &cfg, "--seed", "7"], &out);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(code(&o), 1, "{stdout}");
    assert!(stdout.contains("solve/fields/step_00.csv"), "{stdout}");
    assert!(out.join("verify/report.txt").exists());
}
