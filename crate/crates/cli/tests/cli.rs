use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ratchet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ratchet"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not a report ({e}); stderr: {}",
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn without_runtime(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("runtime_seconds");
    v
}

const SMALL_SPEED: &[&str] = &["speed", "--t-max", "100", "--replicas", "8", "--chain-steps", "20000"];

#[test]
fn selftest_is_green() {
    let out = ratchet(&["selftest"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["command"], "selftest");
    assert!(r["runtime_seconds"].as_f64().unwrap() < 10.0);
    let tests = r["tests"].as_object().unwrap();
    assert!(tests.len() >= 6);
    assert!(tests.values().all(|t| t["pass"] == true));
    for key in ["params_echo", "metrics", "seed", "artifact_version"] {
        assert!(r.get(key).is_some(), "{key}");
    }
}

#[test]
fn configuration_errors_exit_2() {
    assert_eq!(ratchet(&["speed"]).status.code(), Some(2));
    assert_eq!(ratchet(&["speed", "--gamma", "-1"]).status.code(), Some(2));
    assert_eq!(ratchet(&["speed", "--gamma", "1", "--engine", "euler"]).status.code(), Some(2));
    assert_eq!(ratchet(&["variant"]).status.code(), Some(2));
    assert_eq!(ratchet(&["chain", "--y0", "-1"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"gamma": 1.0, "tmax": 5}"#).unwrap();
    assert_eq!(ratchet(&["selftest", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{gamma: ").unwrap();
    assert_eq!(ratchet(&["selftest", "--config", broken.to_str().unwrap()]).status.code(), Some(2));
    let missing = dir.path().join("missing.json");
    assert_eq!(ratchet(&["selftest", "--config", missing.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn failed_check_exits_3_with_a_report() {
    let out = ratchet(&["chain", "--steps", "50", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(3));
    let r = report(&out);
    assert!(r["tests"].as_object().unwrap().values().any(|t| t["pass"] == false));
}

#[test]
fn reports_are_deterministic() {
    let args = ["chain", "--steps", "20000", "--seed", "9"];
    let a = without_runtime(report(&ratchet(&args)));
    let b = without_runtime(report(&ratchet(&args)));
    assert_eq!(a, b);
    assert_eq!(a["seed"], 9);
}

#[test]
fn metrics_do_not_depend_on_thread_count() {
    let run = |threads: &str| {
        let mut args = vec!["--gamma", "1", "--seed", "5", "--threads", threads];
        args.splice(0..0, SMALL_SPEED.iter().copied());
        report(&ratchet(&args))
    };
    let one = run("1");
    let four = run("4");
    assert_eq!(one["metrics"], four["metrics"]);
    assert_eq!(one["tests"], four["tests"]);
}

#[test]
fn flags_override_config_and_echo_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"steps": 5000, "seed": 3, "y0": 1.5}"#).unwrap();
    let a = report(&ratchet(&["chain", "--config", cfg.to_str().unwrap(), "--seed", "4"]));
    let echo = &a["params_echo"];
    assert_eq!(echo["steps"], 5000);
    assert_eq!(echo["seed"], 4);
    assert_eq!(echo["y0"], 1.5);

    let again = dir.path().join("echo.json");
    std::fs::write(&again, serde_json::to_string(echo).unwrap()).unwrap();
    let b = report(&ratchet(&["chain", "--config", again.to_str().unwrap()]));
    assert_eq!(without_runtime(a), without_runtime(b));
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn speed_writes_csv_files() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let mut args = SMALL_SPEED.to_vec();
    args.extend(["--gamma", "1", "--out", out_dir.to_str().unwrap()]);
    let r = report(&ratchet(&args));
    for key in ["speed_ensemble_thinning", "speed_renewal", "speed_chain"] {
        assert!(r["metrics"][key]["stderr"].as_f64().unwrap() > 0.0, "{key}");
    }
    assert!(r["metrics"]["speed_analytic"]["stderr"].is_null());
    assert_eq!(header(&out_dir.join("trajectory.csv")), "t,x,r");
    assert_eq!(header(&out_dir.join("jumps.csv")), "n,tau,x_pre,r_pre,r_post");
    assert_eq!(header(&out_dir.join("cycles.csv")), "n,duration,displacement");
    assert_eq!(header(&out_dir.join("chain.csv")), "n,y,w,eta_expected");

    let cycles = std::fs::File::open(out_dir.join("cycles.csv")).unwrap();
    let back = ratchet::io::read_cycles::<f64, _>(cycles).unwrap();
    assert_eq!(back.len() as f64, r["metrics"]["cycles"]["value"].as_f64().unwrap());
}

#[test]
fn dissociation_writes_bound_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = ratchet(&[
        "variant",
        "--kind",
        "dissociation",
        "--dissociation-rate",
        "0.1",
        "--t-max",
        "20",
        "--replicas",
        "50",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let r = report(&out);
    assert!(r["metrics"]["dissociation_speed"]["value"].as_f64().unwrap() > 0.0);
    assert_eq!(header(&dir.path().join("diagnostics.csv")), "t,n_bound");
}

#[test]
fn analytic_speeds_scale_as_cube_root() {
    let speed_of = |gamma: &str| {
        let mut args = SMALL_SPEED.to_vec();
        args.extend(["--gamma", gamma]);
        let out = ratchet(&args);
        assert!(matches!(out.status.code(), Some(0 | 3)));
        report(&out)["metrics"]["speed_analytic"]["value"].as_f64().unwrap()
    };
    let ratio = speed_of("0.125") / speed_of("1");
    assert!((ratio - 0.5).abs() < 1e-12, "{ratio}");
}
