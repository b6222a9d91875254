use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use host_cli::{builtin, builtin_scenarios, calibration_report, run_scenario, verify_csv, CliError, ScenarioConfig};
use host_core::{calibrate, recheck, CalibrationOptions, ControllerVariant, LyapunovBundle};
use rayon::prelude::*;

/// HOST controller scenarios, calibration and verification.
///
/// Exit status: 0 when every check passes, 1 when a check fails, 2 on
/// configuration or I/O errors. Logging is controlled by `HOST_LOG`
/// (for example `HOST_LOG=info`).
#[derive(Parser)]
#[command(name = "host", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the built-in scenarios.
    ListScenarios,
    /// Simulate scenarios and write their artifacts.
    Run {
        /// Built-in scenario name; repeatable.
        #[arg(long)]
        scenario: Vec<String>,
        /// Scenario file; repeatable.
        #[arg(long)]
        config: Vec<PathBuf>,
        /// Run every built-in scenario.
        #[arg(long)]
        all: bool,
        /// Output directory; each scenario writes into `<out>/<name>/`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Calibrate the Lyapunov constants for a controller.
    Calibrate {
        #[arg(long)]
        order: usize,
        /// `hong` or `modified_hong`.
        #[arg(long)]
        variant: ControllerVariant,
        /// Comma-separated gains l_1,…,l_r.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        gains: Vec<f64>,
        #[arg(long = "kP", default_value_t = 1.0)]
        k_p: f64,
        #[arg(long = "kI", default_value_t = 1.0)]
        k_i: f64,
        #[arg(long, default_value_t = 20_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Re-run a scenario's checks on an exported CSV.
    Verify {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        config: PathBuf,
    },
}

const CHECK_FAILED: u8 = 1;
const USAGE_ERROR: u8 = 2;

fn fail(e: CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(USAGE_ERROR)
}

fn list() -> ExitCode {
    for c in builtin_scenarios() {
        let p = &c.perturbation;
        println!(
            "{:<22} {:?} / {:?}, {}, step {:e}, horizon {} s",
            c.name,
            c.controller.law,
            c.controller.feedback,
            if p.is_nominal() { "unperturbed" } else { "perturbed" },
            c.sim.step,
            c.sim.horizon
        );
    }
    ExitCode::SUCCESS
}

fn run(scenarios: Vec<String>, configs: Vec<PathBuf>, all: bool, out: &Path) -> ExitCode {
    let mut batch: Vec<ScenarioConfig> = if all { builtin_scenarios() } else { vec![] };
    for name in scenarios {
        match builtin(&name) {
            Some(c) => batch.push(c),
            None => return fail(CliError::config("scenario", format!("no built-in scenario `{name}`"))),
        }
    }
    for path in configs {
        match ScenarioConfig::load(&path) {
            Ok(c) => batch.push(c),
            Err(e) => return fail(e),
        }
    }
    if batch.is_empty() {
        return fail(CliError::config("run", "give --scenario, --config or --all"));
    }
    let results: Vec<_> = batch
        .par_iter()
        .map(|c| (c.name.clone(), run_scenario(c, &out.join(&c.name))))
        .collect();
    let mut code = ExitCode::SUCCESS;
    for (name, r) in results {
        match r {
            Ok(m) => {
                println!("{name}: {}", if m.passed() { "PASS" } else { "FAIL" });
                for c in &m.checks {
                    println!(
                        "  {:<12} {}  {}",
                        c.name,
                        if c.passed { "PASS" } else { "FAIL" },
                        c.detail
                    );
                }
                if !m.passed() && code == ExitCode::SUCCESS {
                    code = ExitCode::from(CHECK_FAILED);
                }
            }
            Err(e) => {
                eprintln!("{name}: error: {e}");
                code = ExitCode::from(USAGE_ERROR);
            }
        }
    }
    code
}

#[allow(clippy::too_many_arguments)]
fn calibrate_cmd(
    order: usize,
    variant: ControllerVariant,
    gains: Vec<f64>,
    k_p: f64,
    k_i: f64,
    samples: usize,
    seed: u64,
) -> ExitCode {
    let bundle = match LyapunovBundle::for_order(variant, order, gains) {
        Ok(b) => b,
        Err(e) => return fail(CliError::config("gains", e.to_string())),
    };
    let opts = CalibrationOptions {
        k_p,
        k_i,
        sample_count: samples,
        seed,
        ..Default::default()
    };
    match calibrate(&bundle, &opts) {
        Ok(c) => {
            let rc = match recheck(&bundle, &c, samples, seed.wrapping_add(1)) {
                Ok(r) => r,
                Err(e) => return fail(e.into()),
            };
            print!("{}", calibration_report(&c, Some(&rc)));
            if rc.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(CHECK_FAILED)
            }
        }
        Err(e @ host_core::Error::Calibration { .. }) => {
            println!("{e}");
            ExitCode::from(CHECK_FAILED)
        }
        Err(e) => fail(e.into()),
    }
}

fn verify(csv: &Path, config: &Path) -> ExitCode {
    let checks = match ScenarioConfig::load(config).and_then(|c| verify_csv(&c, csv)) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    for c in &checks {
        println!(
            "{:<12} {}  {}",
            c.name,
            if c.passed { "PASS" } else { "FAIL" },
            c.detail
        );
    }
    if checks.iter().all(|c| c.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(CHECK_FAILED)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("HOST_LOG", "warn")).init();
    match Cli::parse().command {
        Command::ListScenarios => list(),
        Command::Run {
            scenario,
            config,
            all,
            out,
        } => run(scenario, config, all, &out),
        Command::Calibrate {
            order,
            variant,
            gains,
            k_p,
            k_i,
            samples,
            seed,
        } => calibrate_cmd(order, variant, gains, k_p, k_i, samples, seed),
        Command::Verify { csv, config } => verify(&csv, &config),
    }
}
