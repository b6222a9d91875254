//! Fixed-step simulation of `ż = J_r z + (γ(t) u + φ(t)) e_r` with the
//! controller in the loop.
//!
//! The controller integral `I` is integrated as an extra state with the same
//! stages as `z`. For the resetting HOST variant the step is split so that
//! every reset time `n/λ` is a grid point.

pub mod checks;
pub mod signal;

pub use checks::{
    check_disturbance_reconstruction, check_lyapunov_decrease, check_v0_decrease, detect_convergence,
    detect_convergence_with, pre_reset_cuberoots, state_norm, ConvergenceNorm, DisturbanceReport, LyapunovReport,
    V0Decrease,
};
pub use signal::{PlantConfig, Signal, SignalKind};

use crate::error::{check_len, Error, Result};
use crate::feedback::{host_control_unchecked, HostConfig, HostVariant};
use crate::lyapunov::LyapunovBundle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Rk4,
    Euler,
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "rk4" => Ok(Self::Rk4),
            "euler" => Ok(Self::Euler),
            other => Err(format!("unknown integration method `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOptions {
    pub step: f64,
    pub horizon: f64,
    pub method: Method,
    pub convergence_threshold: f64,
    pub settle_window: f64,
    /// Coefficient `A` used for the recorded `W` channel.
    pub w_coefficient: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            step: 1e-3,
            horizon: 30.0,
            method: Method::Rk4,
            convergence_threshold: 1e-3,
            settle_window: 2.0,
            w_coefficient: 1.0,
        }
    }
}

impl SimOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::Domain(format!("step {} must be positive", self.step)));
        }
        if !(self.horizon >= self.step) || !self.horizon.is_finite() {
            return Err(Error::Domain(format!(
                "horizon {} must be finite and at least one step",
                self.horizon
            )));
        }
        if !(self.settle_window > 0.0 && self.settle_window <= self.horizon) {
            return Err(Error::Domain(format!(
                "settle window {} must lie in (0, horizon]",
                self.settle_window
            )));
        }
        if !(self.convergence_threshold >= 0.0) {
            return Err(Error::Domain("convergence threshold must be nonnegative".into()));
        }
        if !(self.w_coefficient > 0.0) {
            return Err(Error::Domain("W coefficient must be positive".into()));
        }
        Ok(())
    }
}

/// Input law driving the plant.
#[derive(Clone, Copy)]
pub enum Controller<'a> {
    /// `u = u_0(z)` without integral action.
    RawU0(&'a LyapunovBundle),
    /// HOST feedback with its integral state.
    Host {
        bundle: &'a LyapunovBundle,
        cfg: &'a HostConfig,
    },
    /// `u = u(t)`; Lyapunov channels are recorded only if a bundle is given.
    OpenLoop {
        input: &'a (dyn Fn(f64) -> f64 + Sync),
        bundle: Option<&'a LyapunovBundle>,
    },
}

impl<'a> Controller<'a> {
    pub fn bundle(&self) -> Option<&'a LyapunovBundle> {
        match *self {
            Controller::RawU0(b) => Some(b),
            Controller::Host { bundle, .. } => Some(bundle),
            Controller::OpenLoop { bundle, .. } => bundle,
        }
    }

    pub fn host_config(&self) -> Option<&'a HostConfig> {
        match *self {
            Controller::Host { cfg, .. } => Some(cfg),
            _ => None,
        }
    }

    fn time_scale(&self) -> f64 {
        self.host_config().map_or(1.0, |c| c.time_scale_lambda())
    }

    fn k_i(&self) -> f64 {
        self.host_config().map_or(1.0, |c| c.k_i())
    }

    /// Control value at `(t, z, I)`.
    pub fn input(&self, t: f64, z: &[f64], integral: f64) -> f64 {
        match *self {
            Controller::RawU0(b) => b.u0_unchecked(z),
            Controller::Host { bundle, cfg } => host_control_unchecked(z, integral, cfg, bundle),
            Controller::OpenLoop { input, .. } => input(t),
        }
    }

    fn integral_rate(&self, z: &[f64]) -> Result<f64> {
        match *self {
            Controller::Host { bundle, cfg } => Ok(cfg.time_scale_lambda() * bundle.dr_v1(&cfg.rescale(z))?),
            _ => Ok(0.0),
        }
    }

    /// Lumped perturbation `ξ` of the rescaled loop `y_r' = k_P u_0(y) + ξ`.
    pub fn xi(&self, t: f64, integral: f64, plant: &PlantConfig) -> f64 {
        match *self {
            Controller::Host { cfg, .. } => {
                let (g, phi) = (plant.gamma.value(t), plant.phi.value(t));
                match cfg.variant() {
                    HostVariant::ContinuousBoundedPhi => -cfg.k_i() * integral + cfg.gamma_d() * phi / g,
                    _ => g / cfg.divisor() * (-cfg.k_i() * integral) + phi,
                }
            }
            _ => 0.0,
        }
    }

    fn rescale(&self, z: &[f64]) -> Vec<f64> {
        self.host_config().map_or_else(|| z.to_vec(), |c| c.rescale(z))
    }
}

/// Values recorded at a reset time `n/λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResetRecord {
    pub index: u64,
    pub time: f64,
    /// Index of the (post-reset) sample in the trajectory.
    pub sample: usize,
    /// `ξ` just before the reset; the pre-reset `W` is `Y_n`.
    pub xi_pre: f64,
    pub integral_pre: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub order: usize,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub controls: Vec<f64>,
    pub integrals: Vec<f64>,
    /// `ξ` of the rescaled loop.
    pub xi: Vec<f64>,
    /// `V_0`, `V_1` and `W`, evaluated at `y = D_λ z`.
    pub v0: Option<Vec<f64>>,
    pub v1: Option<Vec<f64>>,
    pub w: Option<Vec<f64>>,
    pub reset: Vec<bool>,
    pub resets: Vec<ResetRecord>,
    pub time_scale: f64,
    pub k_i: f64,
    pub w_coefficient: f64,
}

impl Trajectory {
    pub fn empty(order: usize) -> Self {
        Self {
            order,
            times: vec![],
            states: vec![],
            controls: vec![],
            integrals: vec![],
            xi: vec![],
            v0: None,
            v1: None,
            w: None,
            reset: vec![],
            resets: vec![],
            time_scale: 1.0,
            k_i: 1.0,
            w_coefficient: 1.0,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `z_r` of the rescaled state `y = D_λ z`.
    fn y_r(&self, k: usize) -> f64 {
        self.time_scale * self.states[k][self.order - 1]
    }

    fn w_at(&self, v1: f64, y_r: f64, xi: f64, a: f64) -> f64 {
        a * (v1 + xi * xi / (2.0 * self.k_i)).powf(1.5) - y_r * xi
    }

    /// `W` channel recomputed with coefficient `a`.
    pub fn w_with(&self, a: f64) -> Result<Vec<f64>> {
        let v1 = self.v1.as_ref().ok_or(Error::MissingChannel("V1"))?;
        Ok((0..self.len())
            .map(|k| self.w_at(v1[k], self.y_r(k), self.xi[k], a))
            .collect())
    }

    /// Pre-reset values `Y_n` for coefficient `a`.
    pub fn pre_reset_w(&self, a: f64) -> Result<Vec<f64>> {
        let v1 = self.v1.as_ref().ok_or(Error::MissingChannel("V1"))?;
        Ok(self
            .resets
            .iter()
            .map(|r| self.w_at(v1[r.sample], self.y_r(r.sample), r.xi_pre, a))
            .collect())
    }

    /// Final state.
    pub fn last_state(&self) -> Option<&[f64]> {
        self.states.last().map(|s| s.as_slice())
    }
}

struct Recorder<'a> {
    traj: Trajectory,
    plant: &'a PlantConfig,
    ctrl: Controller<'a>,
}

impl Recorder<'_> {
    fn push(&mut self, t: f64, x: &[f64], reset: bool) -> Result<()> {
        let r = self.traj.order;
        let (z, integral) = (&x[..r], x[r]);
        let xi = self.ctrl.xi(t, integral, self.plant);
        if let Some(b) = self.ctrl.bundle() {
            let y = self.ctrl.rescale(z);
            let e = b.evaluate(&y)?;
            let w = b.extended_w_given(e.v1, y[r - 1], xi, self.traj.w_coefficient, self.traj.k_i);
            self.traj.v0.get_or_insert_with(Vec::new).push(e.v0);
            self.traj.v1.get_or_insert_with(Vec::new).push(e.v1);
            self.traj.w.get_or_insert_with(Vec::new).push(w);
        }
        self.traj.times.push(t);
        self.traj.states.push(z.to_vec());
        self.traj.controls.push(self.ctrl.input(t, z, integral));
        self.traj.integrals.push(integral);
        self.traj.xi.push(xi);
        self.traj.reset.push(reset);
        Ok(())
    }
}

fn field(ctrl: &Controller, plant: &PlantConfig, t: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
    let r = x.len() - 1;
    let (z, integral) = (&x[..r], x[r]);
    let u = ctrl.input(t, z, integral);
    out[..r - 1].copy_from_slice(&z[1..]);
    out[r - 1] = plant.gamma.value(t) * u + plant.phi.value(t);
    out[r] = ctrl.integral_rate(z)?;
    Ok(())
}

fn step(ctrl: &Controller, plant: &PlantConfig, method: Method, t: f64, h: f64, x: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    let mut k1 = vec![0.0; n];
    field(ctrl, plant, t, x, &mut k1)?;
    if method == Method::Euler {
        return Ok(x.iter().zip(&k1).map(|(a, k)| a + h * k).collect());
    }
    let stage = |k: &[f64], c: f64| -> Vec<f64> { x.iter().zip(k).map(|(a, k)| a + c * k).collect() };
    let mut k2 = vec![0.0; n];
    field(ctrl, plant, t + 0.5 * h, &stage(&k1, 0.5 * h), &mut k2)?;
    let mut k3 = vec![0.0; n];
    field(ctrl, plant, t + 0.5 * h, &stage(&k2, 0.5 * h), &mut k3)?;
    let mut k4 = vec![0.0; n];
    field(ctrl, plant, t + h, &stage(&k3, h), &mut k4)?;
    Ok((0..n)
        .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// Integrates the closed loop from `z0` over `[0, horizon]`.
pub fn simulate(plant: &PlantConfig, ctrl: Controller, opts: &SimOptions, z0: &[f64]) -> Result<Trajectory> {
    opts.validate()?;
    let r = plant.order();
    check_len(r, z0.len())?;
    if let Some(b) = ctrl.bundle() {
        check_len(r, b.order())?;
    }
    let mut rec = Recorder {
        traj: Trajectory {
            time_scale: ctrl.time_scale(),
            k_i: ctrl.k_i(),
            w_coefficient: opts.w_coefficient,
            ..Trajectory::empty(r)
        },
        plant,
        ctrl,
    };

    let h = opts.step;
    let n_steps = ((opts.horizon / h) - 1e-9).ceil().max(1.0) as u64;
    let grid = |k: u64| (k as f64 * h).min(opts.horizon);
    let merge_tol = 1e-9 * h;

    let mut x: Vec<f64> = z0.iter().copied().chain(std::iter::once(0.0)).collect();
    let mut t = 0.0;
    rec.push(t, &x, false)?;
    let mut next_reset = ctrl.host_config().and_then(|c| c.next_reset_after(0.0));

    for k in 1..=n_steps {
        let target = grid(k);
        loop {
            let (end, is_reset) = match next_reset {
                Some((_, tr)) if tr <= target + merge_tol => {
                    (if (tr - target).abs() <= merge_tol { target } else { tr }, true)
                }
                _ => (target, false),
            };
            if end > t {
                let nx = step(&ctrl, plant, opts.method, t, end - t, &x)?;
                if nx.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Divergence {
                        time: t,
                        last_state: x[..r].to_vec(),
                    });
                }
                x = nx;
                t = end;
            }
            if is_reset {
                let (n, _) = next_reset.expect("reset pending");
                let integral_pre = x[r];
                let xi_pre = ctrl.xi(t, integral_pre, plant);
                x[r] = 0.0;
                rec.push(t, &x, true)?;
                rec.traj.resets.push(ResetRecord {
                    index: n,
                    time: t,
                    sample: rec.traj.len() - 1,
                    xi_pre,
                    integral_pre,
                });
                next_reset = ctrl.host_config().and_then(|c| c.next_reset_after(t));
                if end >= target {
                    break;
                }
            } else {
                rec.push(t, &x, false)?;
                break;
            }
        }
    }
    Ok(rec.traj)
}
