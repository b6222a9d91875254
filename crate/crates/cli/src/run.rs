//! Scenario execution, checks and the artifact manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use host_core::{
    calibrate, check_disturbance_reconstruction, check_lyapunov_decrease, detect_convergence, simulate,
    CalibrationOptions, CalibrationResult, Controller, Trajectory,
};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::config::{Resolved, ScenarioConfig};
use crate::error::{CliError, Result};
use crate::export::{export_csv, read_csv};
use crate::plot::emit_plot;
use crate::report::calibration_report;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub scenario: String,
    pub files: Vec<PathBuf>,
    pub checks: Vec<CheckOutcome>,
    pub metrics: BTreeMap<String, f64>,
}

impl Manifest {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Outcome of the requested checks on one trajectory.
pub struct Evaluation {
    pub checks: Vec<CheckOutcome>,
    pub metrics: BTreeMap<String, f64>,
    pub calibration: Option<std::result::Result<CalibrationResult, host_core::Error>>,
}

fn tail_sup(traj: &Trajectory, from: f64, ch: &[f64]) -> f64 {
    traj.times
        .iter()
        .zip(ch)
        .filter(|(t, _)| **t >= from)
        .map(|(_, v)| v.abs())
        .fold(0.0, f64::max)
}

/// Runs every check requested by `cfg` on `traj`; shared by `run` and `verify`.
pub fn evaluate(cfg: &ScenarioConfig, res: &Resolved, traj: &Trajectory) -> Result<Evaluation> {
    let ch = &cfg.checks;
    let mut checks = vec![];
    let mut metrics = BTreeMap::new();
    let tc = detect_convergence(traj, res.sim.convergence_threshold, res.sim.settle_window);
    metrics.insert("convergence_time".into(), tc.unwrap_or(f64::NAN));
    if ch.convergence {
        checks.push(CheckOutcome {
            name: "convergence".into(),
            passed: tc.is_some(),
            detail: match tc {
                Some(t) => format!(
                    "norm ≤ {:e} from t = {t:.4} for {} s",
                    res.sim.convergence_threshold, res.sim.settle_window
                ),
                None => "state never settled inside the horizon".into(),
            },
        });
    }

    if let Some(&t_end) = traj.times.last() {
        let i_sup = tail_sup(traj, t_end - ch.integral_window, &traj.integrals);
        metrics.insert("integral_tail_sup".into(), i_sup);
        if ch.integral {
            checks.push(CheckOutcome {
                name: "integral".into(),
                passed: i_sup <= ch.integral_tolerance,
                detail: format!(
                    "sup |I| over the final {} s = {i_sup:.6e} (tolerance {:e})",
                    ch.integral_window, ch.integral_tolerance
                ),
            });
        }
    }

    if ch.disturbance || !cfg.perturbation.is_nominal() {
        let rep = check_disturbance_reconstruction(traj, &res.plant, tc, ch.disturbance_margin);
        metrics.insert("disturbance_sup".into(), rep.sup);
        if ch.disturbance {
            checks.push(CheckOutcome {
                name: "disturbance".into(),
                passed: rep.applicable && rep.sup <= ch.disturbance_tolerance,
                detail: if rep.applicable {
                    format!(
                        "sup |u + φ/γ| over [{:.4}, end] = {:.6e} at t = {:.4} (tolerance {:e})",
                        rep.window_start,
                        rep.sup,
                        rep.witness_time.unwrap_or(f64::NAN),
                        ch.disturbance_tolerance
                    )
                } else {
                    "no post-convergence window".into()
                },
            });
        }
    }

    let mut calibration = None;
    if ch.lyapunov {
        let opts = CalibrationOptions {
            k_p: cfg.controller.k_p,
            k_i: cfg.controller.k_i,
            seed: cfg.seed,
            ..Default::default()
        };
        let calib = calibrate(&res.bundle, &opts);
        let outcome = match &calib {
            Ok(c) => {
                let rep = check_lyapunov_decrease(traj, c, res.sim.convergence_threshold)?;
                metrics.insert("v0_violation_fraction".into(), rep.v0_violation_fraction);
                metrics.insert("w_max_rate".into(), rep.w_max_rate);
                if !rep.y_cuberoots.is_empty() {
                    metrics.insert(
                        "y_strictly_decreasing".into(),
                        f64::from(u8::from(rep.y_strictly_decreasing)),
                    );
                }
                CheckOutcome {
                    name: "lyapunov".into(),
                    passed: rep.v0_ok() && rep.w_ok(),
                    detail: format!(
                        "V0 violations {}/{}, max of dW^(1/3)/dt + d/6 = {:.6e}",
                        rep.v0_violations, rep.v0_pairs, rep.w_max_rate
                    ),
                }
            }
            Err(e) => CheckOutcome {
                name: "lyapunov".into(),
                passed: false,
                detail: format!("calibration failed: {e}"),
            },
        };
        checks.push(outcome);
        calibration = Some(calib);
    }
    Ok(Evaluation {
        checks,
        metrics,
        calibration,
    })
}

fn render_report(cfg: &ScenarioConfig, eval: &Evaluation) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "scenario: {}", cfg.name);
    let _ = writeln!(
        s,
        "law: {:?}, feedback: {:?}, gains: {:?}",
        cfg.controller.law, cfg.controller.feedback, cfg.controller.gains
    );
    let _ = writeln!(s, "\nchecks:");
    for c in &eval.checks {
        let _ = writeln!(
            s,
            "  {:<12} {}  {}",
            c.name,
            if c.passed { "PASS" } else { "FAIL" },
            c.detail
        );
    }
    let _ = writeln!(s, "\nmetrics:");
    for (k, v) in &eval.metrics {
        let _ = writeln!(s, "  {k:<24} {v:.6e}");
    }
    if eval.metrics.contains_key("disturbance_sup") {
        let _ = writeln!(
            s,
            "\ndisturbance reconstruction: u(t) against -φ(t)/γ(t) after convergence"
        );
        let _ = writeln!(s, "  sup error {:.6e}", eval.metrics["disturbance_sup"]);
    }
    match &eval.calibration {
        Some(Ok(c)) => {
            let _ = writeln!(s, "\n{}", calibration_report(c, None));
        }
        Some(Err(e)) => {
            let _ = writeln!(s, "\ncalibration failed: {e}");
        }
        None => {}
    }
    s
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Simulates `cfg`, runs its checks and writes the requested artifacts into `out_dir`.
pub fn run_scenario(cfg: &ScenarioConfig, out_dir: &Path) -> Result<Manifest> {
    let res = cfg.resolve()?;
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    info!("running {}", cfg.name);
    let ctrl = match &res.host {
        Some(h) => Controller::Host {
            bundle: &res.bundle,
            cfg: h,
        },
        None => Controller::RawU0(&res.bundle),
    };
    let traj = simulate(&res.plant, ctrl, &res.sim, &cfg.sim.initial_state)?;
    let eval = evaluate(cfg, &res, &traj)?;

    let mut files = vec![];
    let config_path = out_dir.join("scenario.toml");
    write(&config_path, &cfg.to_toml())?;
    files.push(config_path);
    if cfg.outputs.csv {
        let p = out_dir.join("trajectory.csv");
        export_csv(&traj, &p)?;
        files.push(p);
    }
    if !res.channels.is_empty() {
        let p = out_dir.join("plot.svg");
        emit_plot(&traj, &p, &res.channels)?;
        files.push(p);
    }
    if cfg.outputs.report {
        let p = out_dir.join("report.txt");
        write(&p, &render_report(cfg, &eval))?;
        files.push(p);
    }
    let mut manifest = Manifest {
        scenario: cfg.name.clone(),
        files,
        checks: eval.checks,
        metrics: eval.metrics,
    };
    let p = out_dir.join("manifest.json");
    manifest.files.push(p.clone());
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write(&p, &json)?;
    for c in manifest.checks.iter().filter(|c| !c.passed) {
        warn!("{}: check `{}` failed: {}", cfg.name, c.name, c.detail);
    }
    Ok(manifest)
}

/// Re-runs the checks of `cfg` on a trajectory read back from `csv`.
pub fn verify_csv(cfg: &ScenarioConfig, csv: &Path) -> Result<Vec<CheckOutcome>> {
    let res = cfg.resolve()?;
    let mut traj = read_csv(csv)?;
    if traj.order != cfg.order {
        return Err(CliError::config(
            "order",
            format!("config has order {} but the CSV has {} states", cfg.order, traj.order),
        ));
    }
    let ctrl = match &res.host {
        Some(h) => {
            traj.time_scale = h.time_scale_lambda();
            traj.k_i = h.k_i();
            Controller::Host {
                bundle: &res.bundle,
                cfg: h,
            }
        }
        None => Controller::RawU0(&res.bundle),
    };
    traj.w_coefficient = res.sim.w_coefficient;
    traj.xi = traj
        .times
        .iter()
        .zip(&traj.integrals)
        .map(|(t, i)| ctrl.xi(*t, *i, &res.plant))
        .collect();
    Ok(evaluate(cfg, &res, &traj)?.checks)
}
