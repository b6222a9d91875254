use std::path::Path;
use std::process::{Command, Output};

use host_cli::{builtin, run_scenario, verify_csv, Manifest, ScenarioConfig};

fn host(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_host")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const RAW: &str = r#"
name = "custom"
order = 4

[controller]
law = "hong"
feedback = "raw_u0"
gains = [1.0, 1.0, 4.0, 8.0]

[sim]
initial_state = [-5.0, 2.0, 4.0, 4.0]
horizon = 20.0

[outputs]
plot = ["states"]
"#;

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("scenario.toml");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn lists_six_scenarios() {
    let o = host(&["list-scenarios"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 6);
    assert!(stdout(&o).contains("mhong-host-perturbed"));
}

#[test]
fn builtin_run_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = host(&["run", "--scenario", "hong-pure-u0", "--out", out]);
    assert!(o.status.success(), "{}", stderr(&o));
    let sd = dir.path().join("hong-pure-u0");
    for f in [
        "trajectory.csv",
        "plot.svg",
        "report.txt",
        "manifest.json",
        "scenario.toml",
    ] {
        assert!(sd.join(f).exists(), "{f}");
    }
    let m: Manifest = serde_json::from_str(&std::fs::read_to_string(sd.join("manifest.json")).unwrap()).unwrap();
    assert!(m.passed());
    assert_eq!(m.checks[0].name, "convergence");
}

#[test]
fn csv_is_deterministic_and_verifiable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ScenarioConfig::from_toml(RAW).unwrap();
    let a = run_scenario(&cfg, &dir.path().join("a")).unwrap();
    run_scenario(&cfg, &dir.path().join("b")).unwrap();
    let ca = std::fs::read(dir.path().join("a/trajectory.csv")).unwrap();
    let cb = std::fs::read(dir.path().join("b/trajectory.csv")).unwrap();
    assert_eq!(ca, cb);
    let again = verify_csv(&cfg, &dir.path().join("a/trajectory.csv")).unwrap();
    assert_eq!(again, a.checks);
}

#[test]
fn verify_agrees_with_manifest_for_host_checks() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = builtin("hong-host-pure").unwrap();
    cfg.checks.integral = true;
    cfg.outputs.plot.clear();
    let m = run_scenario(&cfg, dir.path()).unwrap();
    // the residual integral at the default step exceeds the tolerance
    assert!(!m.passed());
    let again = verify_csv(&cfg, &dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(again, m.checks);

    let cfg_path = dir.path().join("scenario.toml");
    let o = host(&[
        "verify",
        "--csv",
        dir.path().join("trajectory.csv").to_str().unwrap(),
        "--config",
        cfg_path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("integral"));
}

#[test]
fn failing_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let text = RAW.replace("horizon = 20.0", "horizon = 5.0");
    let cfg = write_config(dir.path(), &text);
    let o = host(&[
        "run",
        "--config",
        &cfg,
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn unknown_key_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &RAW.replace("horizon = 20.0", "horizon = 20.0\nhorizn = 3.0"),
    );
    let o = host(&["run", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sim.horizn"), "{}", stderr(&o));
}

#[test]
fn general_host_rejects_vanishing_gamma() {
    let dir = tempfile::tempdir().unwrap();
    let text = RAW.replace("raw_u0", "host_general").replace(
        "[sim]",
        "[perturbation.gamma]\noffset = 0.5\namplitude = 0.5\nangular_frequency = 1.0\n\n[sim]",
    );
    let cfg = write_config(dir.path(), &text);
    let o = host(&["run", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("positive γ_m required"), "{}", stderr(&o));
}

#[test]
fn perturbed_builtin_reports_reconstruction() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = builtin("mhong-host-perturbed").unwrap();
    cfg.outputs.plot = vec!["control".into(), "integral".into()];
    let m = run_scenario(&cfg, dir.path()).unwrap();
    assert!(m.passed(), "{:?}", m.checks);
    assert!(m.checks.iter().any(|c| c.name == "disturbance"));
    let report = std::fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(report.contains("disturbance reconstruction"));
}

#[test]
fn calibrate_reports_constants() {
    let o = host(&[
        "calibrate",
        "--order",
        "2",
        "--variant",
        "hong",
        "--gains",
        "1,2",
        "--samples",
        "4000",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.contains("v1_sup") && s.contains("recheck on 4000 held-out samples: PASS"));
}

#[test]
fn calibrate_failure_exits_one() {
    let o = host(&[
        "calibrate",
        "--order",
        "4",
        "--variant",
        "hong",
        "--gains",
        "1,1,4,8",
        "--samples",
        "4000",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("violated at"));
}

#[test]
fn calibrate_bad_gains_exits_two() {
    let o = host(&["calibrate", "--order", "2", "--variant", "hong", "--gains", "1,-2"]);
    assert_eq!(o.status.code(), Some(2));
}
