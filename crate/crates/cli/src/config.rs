//! Scenario files.
//!
//! A scenario is a TOML document. Every table is closed: an unknown key is an
//! error naming the offending field.
//!
//! ```toml
//! name = "hong-host-perturbed"
//! order = 4
//! seed = 0
//!
//! [controller]
//! law = "hong"                # hong | modified_hong
//! feedback = "host_pure"      # raw_u0 | host_pure | host_gamma_const | host_general | host_continuous
//! gains = [1.0, 1.0, 4.0, 8.0]
//! k_p = 1.0
//! k_i = 1.0
//! time_scale_lambda = 1.0
//!
//! [perturbation.gamma]        # offset + amplitude·sin(angular_frequency·t + phase)
//! offset = 3.0
//! amplitude = 0.5
//! angular_frequency = 0.5
//!
//! [perturbation.phi]
//! amplitude = 1.0
//! angular_frequency = 1.0
//!
//! [perturbation.bounds]
//! gamma_m = 2.5
//! gamma_max = 3.5
//! gamma_bar = 0.25
//! phi_bar = 1.0
//!
//! [sim]
//! initial_state = [-5.0, 2.0, 4.0, 4.0]
//! step = 1e-4
//! horizon = 40.0
//! method = "rk4"              # rk4 | euler
//!
//! [checks]
//! convergence = true
//! disturbance = true
//!
//! [outputs]
//! csv = true
//! plot = ["states", "control", "integral"]
//! report = true
//! ```

use std::path::Path;
use std::str::FromStr;

use host_core::{
    ControllerVariant, HostConfig, HostVariant, LyapunovBundle, Method, PerturbationBounds, PlantConfig, Signal,
    SimOptions,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::plot::Channel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Law {
    Hong,
    ModifiedHong,
}

impl From<Law> for ControllerVariant {
    fn from(l: Law) -> Self {
        match l {
            Law::Hong => ControllerVariant::Hong,
            Law::ModifiedHong => ControllerVariant::ModifiedHong,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feedback {
    RawU0,
    HostPure,
    HostGammaConst,
    HostGeneral,
    HostContinuous,
}

impl Feedback {
    pub fn host_variant(self) -> Option<HostVariant> {
        match self {
            Feedback::RawU0 => None,
            Feedback::HostPure => Some(HostVariant::Pure),
            Feedback::HostGammaConst => Some(HostVariant::GammaConst),
            Feedback::HostGeneral => Some(HostVariant::General),
            Feedback::HostContinuous => Some(HostVariant::ContinuousBoundedPhi),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    pub law: Law,
    pub feedback: Feedback,
    pub gains: Vec<f64>,
    #[serde(default = "one")]
    pub k_p: f64,
    #[serde(default = "one")]
    pub k_i: f64,
    #[serde(default = "one")]
    pub time_scale_lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SignalSection {
    pub offset: f64,
    pub amplitude: f64,
    pub angular_frequency: f64,
    pub phase: f64,
}

impl SignalSection {
    pub fn constant(offset: f64) -> Self {
        Self {
            offset,
            amplitude: 0.0,
            angular_frequency: 0.0,
            phase: 0.0,
        }
    }

    pub fn signal(&self) -> Signal {
        if self.amplitude == 0.0 {
            Signal::constant(self.offset)
        } else {
            Signal::sinusoid(self.offset, self.amplitude, self.angular_frequency, self.phase)
        }
    }
}

impl Default for SignalSection {
    fn default() -> Self {
        Self::constant(0.0)
    }
}

/// Declared bounds of the perturbation; missing entries are derived from the signals.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSection {
    pub gamma_m: Option<f64>,
    pub gamma_max: Option<f64>,
    pub gamma_bar: Option<f64>,
    pub phi_bar: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSection {
    #[serde(default = "unit_gamma")]
    pub gamma: SignalSection,
    #[serde(default)]
    pub phi: SignalSection,
    #[serde(default)]
    pub bounds: BoundsSection,
}

impl Default for PerturbationSection {
    fn default() -> Self {
        Self {
            gamma: unit_gamma(),
            phi: SignalSection::default(),
            bounds: BoundsSection::default(),
        }
    }
}

impl PerturbationSection {
    pub fn is_nominal(&self) -> bool {
        self.gamma == unit_gamma() && self.phi.offset == 0.0 && self.phi.amplitude == 0.0
    }

    pub fn resolved_bounds(&self) -> PerturbationBounds {
        let (g, phi) = (self.gamma.signal(), self.phi.signal());
        PerturbationBounds {
            phi_bar: self.bounds.phi_bar.unwrap_or(phi.derivative_bound()),
            gamma_bar: self.bounds.gamma_bar.unwrap_or(g.derivative_bound()),
            gamma_m: self.bounds.gamma_m.unwrap_or(g.lower_bound()),
            gamma_max: self.bounds.gamma_max.unwrap_or(g.upper_bound()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub initial_state: Vec<f64>,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_method")]
    pub method: String,
    #[serde(default = "default_threshold")]
    pub convergence_threshold: f64,
    #[serde(default = "default_window")]
    pub settle_window: f64,
    #[serde(default = "one")]
    pub w_coefficient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChecksSection {
    /// State settles below the threshold for the settle window.
    pub convergence: bool,
    /// `sup |u + φ/γ|` after convergence.
    pub disturbance: bool,
    pub disturbance_tolerance: f64,
    pub disturbance_margin: f64,
    /// `sup |I|` over the final `integral_window` seconds.
    pub integral: bool,
    pub integral_tolerance: f64,
    pub integral_window: f64,
    /// Calibrate `A`, `d` and test the `V_0` and `W` decrease along the run.
    pub lyapunov: bool,
}

impl Default for ChecksSection {
    fn default() -> Self {
        Self {
            convergence: true,
            disturbance: false,
            disturbance_tolerance: 0.05,
            disturbance_margin: 2.0,
            integral: false,
            integral_tolerance: 1e-3,
            integral_window: 5.0,
            lyapunov: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputsSection {
    pub csv: bool,
    pub plot: Vec<String>,
    pub report: bool,
}

impl Default for OutputsSection {
    fn default() -> Self {
        Self {
            csv: true,
            plot: vec![],
            report: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub order: usize,
    /// Seed for calibration sampling.
    #[serde(default)]
    pub seed: u64,
    pub controller: ControllerSection,
    #[serde(default)]
    pub perturbation: PerturbationSection,
    pub sim: SimSection,
    #[serde(default)]
    pub checks: ChecksSection,
    #[serde(default)]
    pub outputs: OutputsSection,
}

/// Module-level objects a scenario resolves to.
pub struct Resolved {
    pub bundle: LyapunovBundle,
    pub host: Option<HostConfig>,
    pub plant: PlantConfig,
    pub sim: SimOptions,
    pub channels: Vec<Channel>,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config {
            field: e
                .span()
                .map_or_else(|| "<document>".into(), |s| field_at(text, s.start)),
            message: e.message().to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// Checks every field and builds the module-level types.
    pub fn resolve(&self) -> Result<Resolved> {
        let cfg_err = |field: &str, e: host_core::Error| CliError::config(field, e.to_string());
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(CliError::config("name", "must be a nonempty file-name-safe identifier"));
        }
        if self.order == 0 {
            return Err(CliError::config("order", "must be at least 1"));
        }
        if self.controller.gains.len() != self.order {
            return Err(CliError::config(
                "controller.gains",
                format!("expected {} gains, got {}", self.order, self.controller.gains.len()),
            ));
        }
        if self.sim.initial_state.len() != self.order {
            return Err(CliError::config(
                "sim.initial_state",
                format!("expected {} entries, got {}", self.order, self.sim.initial_state.len()),
            ));
        }
        let bundle = LyapunovBundle::for_order(self.controller.law.into(), self.order, self.controller.gains.clone())
            .map_err(|e| cfg_err("controller.gains", e))?;
        let plant = PlantConfig::new(
            self.order,
            self.perturbation.gamma.signal(),
            self.perturbation.phi.signal(),
        )
        .map_err(|e| cfg_err("perturbation.gamma", e))?;
        let host = match self.controller.feedback.host_variant() {
            None => None,
            Some(v) => {
                let b = self.perturbation.resolved_bounds();
                if b.gamma_m.is_nan() || b.gamma_m <= 0.0 {
                    return Err(CliError::config(
                        "perturbation.bounds.gamma_m",
                        format!("positive γ_m required, got {}", b.gamma_m),
                    ));
                }
                let c = &self.controller;
                Some(
                    HostConfig::new(v, c.k_p, c.k_i, c.time_scale_lambda, b.gamma_m, b.gamma_max)
                        .map_err(|e| cfg_err("controller", e))?,
                )
            }
        };
        let method = Method::from_str(&self.sim.method).map_err(|e| CliError::config("sim.method", e))?;
        let sim = SimOptions {
            step: self.sim.step,
            horizon: self.sim.horizon,
            method,
            convergence_threshold: self.sim.convergence_threshold,
            settle_window: self.sim.settle_window,
            w_coefficient: self.sim.w_coefficient,
        };
        sim.validate().map_err(|e| cfg_err("sim", e))?;
        let channels = self
            .outputs
            .plot
            .iter()
            .map(|c| c.parse())
            .collect::<std::result::Result<Vec<Channel>, _>>()
            .map_err(|e| CliError::config("outputs.plot", e))?;
        if self.checks.lyapunov && self.controller.feedback == Feedback::RawU0 {
            return Err(CliError::config("checks.lyapunov", "needs a HOST feedback"));
        }
        Ok(Resolved {
            bundle,
            host,
            plant,
            sim,
            channels,
        })
    }
}

/// Dotted path of the table holding byte offset `pos`, plus the key on that line.
fn field_at(text: &str, pos: usize) -> String {
    let mut table = String::new();
    let mut key = String::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim();
        if trimmed.starts_with('[') {
            table = trimmed.trim_matches(|c| c == '[' || c == ']').trim().to_string();
        }
        if pos < offset + line.len() {
            if let Some((k, _)) = trimmed.split_once('=') {
                key = k.trim().to_string();
            }
            break;
        }
        offset += line.len();
    }
    match (table.is_empty(), key.is_empty()) {
        (true, true) => "<document>".into(),
        (true, false) => key,
        (false, true) => table,
        (false, false) => format!("{table}.{key}"),
    }
}

fn one() -> f64 {
    1.0
}

fn unit_gamma() -> SignalSection {
    SignalSection::constant(1.0)
}

fn default_step() -> f64 {
    1e-3
}

fn default_horizon() -> f64 {
    30.0
}

fn default_method() -> String {
    "rk4".into()
}

fn default_threshold() -> f64 {
    1e-3
}

fn default_window() -> f64 {
    2.0
}
