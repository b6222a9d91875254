//! HOST feedback laws `u = (k_P u_0(D_λ z) − k_I I) / divisor` with the
//! integral state `İ = λ ∂_r V_1(D_λ z)`.
//!
//! The `General` variant resets `I` to zero at every `t = n/λ`. The other
//! variants never reset. `Pure` runs with `λ = 1` and divisor 1.

use crate::algebra::DilationWeights;
use crate::error::{check_len, Error, Result};
use crate::lyapunov::{CalibrationResult, LyapunovBundle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HostVariant {
    Pure,
    GammaConst,
    General,
    ContinuousBoundedPhi,
}

impl HostVariant {
    pub fn name(self) -> &'static str {
        match self {
            HostVariant::Pure => "pure",
            HostVariant::GammaConst => "gamma_const",
            HostVariant::General => "general",
            HostVariant::ContinuousBoundedPhi => "continuous_bounded_phi",
        }
    }
}

impl std::str::FromStr for HostVariant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "pure" => Ok(Self::Pure),
            "gamma_const" => Ok(Self::GammaConst),
            "general" => Ok(Self::General),
            "continuous_bounded_phi" | "continuous" => Ok(Self::ContinuousBoundedPhi),
            other => Err(format!("unknown HOST variant `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HostConfig {
    variant: HostVariant,
    k_p: f64,
    k_i: f64,
    lambda: f64,
    gamma_m: f64,
    gamma_max: f64,
}

impl HostConfig {
    pub fn new(variant: HostVariant, k_p: f64, k_i: f64, lambda: f64, gamma_m: f64, gamma_max: f64) -> Result<Self> {
        if !(k_p >= 1.0) || !k_p.is_finite() {
            return Err(Error::Domain(format!("k_P = {k_p} must be at least 1")));
        }
        if !(k_i > 0.0) || !k_i.is_finite() {
            return Err(Error::Domain(format!("k_I = {k_i} must be positive")));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Domain(format!("time scale λ = {lambda} must be positive")));
        }
        if !(gamma_m > 0.0) || !(gamma_m <= gamma_max) || !gamma_max.is_finite() {
            return Err(Error::Domain(format!(
                "need 0 < γ_m ≤ γ_M, got γ_m = {gamma_m}, γ_M = {gamma_max}"
            )));
        }
        if variant == HostVariant::Pure && lambda != 1.0 {
            return Err(Error::Domain("the pure variant runs at λ = 1".into()));
        }
        Ok(Self {
            variant,
            k_p,
            k_i,
            lambda,
            gamma_m,
            gamma_max,
        })
    }

    /// Pure super-twisting feedback (`λ = 1`, divisor 1).
    pub fn pure(k_p: f64, k_i: f64) -> Result<Self> {
        Self::new(HostVariant::Pure, k_p, k_i, 1.0, 1.0, 1.0)
    }

    pub fn variant(&self) -> HostVariant {
        self.variant
    }

    pub fn k_p(&self) -> f64 {
        self.k_p
    }

    pub fn k_i(&self) -> f64 {
        self.k_i
    }

    pub fn time_scale_lambda(&self) -> f64 {
        self.lambda
    }

    pub fn gamma_m(&self) -> f64 {
        self.gamma_m
    }

    pub fn gamma_max(&self) -> f64 {
        self.gamma_max
    }

    /// `γ_d = (γ_M + γ_m)/2`.
    pub fn gamma_d(&self) -> f64 {
        0.5 * (self.gamma_max + self.gamma_m)
    }

    /// `δ_γ = 1 − γ_m/γ_M`.
    pub fn delta_gamma(&self) -> f64 {
        1.0 - self.gamma_m / self.gamma_max
    }

    /// Divisor applied to the bracket `k_P u_0 − k_I I`.
    pub fn divisor(&self) -> f64 {
        match self.variant {
            HostVariant::Pure => 1.0,
            HostVariant::GammaConst => self.gamma_m,
            HostVariant::General | HostVariant::ContinuousBoundedPhi => self.gamma_d(),
        }
    }

    pub fn resets(&self) -> bool {
        self.variant == HostVariant::General
    }

    /// First reset time strictly after `t` (general variant only).
    pub fn next_reset_after(&self, t: f64) -> Option<(u64, f64)> {
        if !self.resets() {
            return None;
        }
        let mut n = (t * self.lambda).floor().max(0.0) as u64 + 1;
        // guard against n/λ rounding to a value ≤ t
        while (n as f64) / self.lambda <= t {
            n += 1;
        }
        Some((n, n as f64 / self.lambda))
    }

    /// Number of resets in `(0, horizon]`.
    pub fn reset_count(&self, horizon: f64) -> u64 {
        if self.resets() {
            (self.lambda * horizon).floor() as u64
        } else {
            0
        }
    }

    /// `D_λ z = diag(λ^r, …, λ) z`.
    pub fn rescale(&self, z: &[f64]) -> Vec<f64> {
        if self.lambda == 1.0 {
            return z.to_vec();
        }
        DilationWeights::time_rescaling(z.len())
            .expect("nonempty state")
            .apply_unchecked(self.lambda, z)
    }
}

/// Controller-side integral state.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HostState {
    pub integral: f64,
    pub reset_index: u64,
}

/// `u_ST(z, t)` for the configured variant.
pub fn host_control(z: &[f64], state: &HostState, cfg: &HostConfig, bundle: &LyapunovBundle) -> Result<f64> {
    check_len(bundle.order(), z.len())?;
    Ok(host_control_unchecked(z, state.integral, cfg, bundle))
}

pub(crate) fn host_control_unchecked(z: &[f64], integral: f64, cfg: &HostConfig, bundle: &LyapunovBundle) -> f64 {
    let y = cfg.rescale(z);
    (cfg.k_p * bundle.u0_unchecked(&y) - cfg.k_i * integral) / cfg.divisor()
}

/// Right-hand side of the integral state, `λ ∂_r V_1(D_λ z)`.
pub fn integrator_rate(z: &[f64], cfg: &HostConfig, bundle: &LyapunovBundle) -> Result<f64> {
    check_len(bundle.order(), z.len())?;
    Ok(cfg.lambda * bundle.dr_v1(&cfg.rescale(z))?)
}

/// Advances the integral over `[t0, t0 + h]` with Simpson's rule on the
/// supplied path, splitting at every reset time inside the step.
pub fn advance_integrator<P>(
    state: HostState,
    t0: f64,
    h: f64,
    z_path: P,
    cfg: &HostConfig,
    bundle: &LyapunovBundle,
) -> Result<HostState>
where
    P: Fn(f64) -> Vec<f64>,
{
    let lambda = cfg.lambda;
    let rate = |t: f64| -> Result<f64> { Ok(lambda * bundle.dr_v1(&cfg.rescale(&z_path(t)))?) };
    advance_with_rate(state, t0, h, cfg, rate)
}

/// [`advance_integrator`] for an arbitrary integrand `t ↦ İ(t)`.
pub fn advance_with_rate<F>(mut state: HostState, t0: f64, h: f64, cfg: &HostConfig, rate: F) -> Result<HostState>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::Domain(format!("step h = {h} must be positive")));
    }
    let end = t0 + h;
    let mut a = t0;
    loop {
        let next = cfg.next_reset_after(a).filter(|(_, tr)| *tr <= end);
        let b = next.map_or(end, |(_, tr)| tr);
        if b > a {
            let m = 0.5 * (a + b);
            state.integral += (b - a) / 6.0 * (rate(a)? + 4.0 * rate(m)? + rate(b)?);
        }
        match next {
            Some((n, tr)) => {
                state.integral = 0.0;
                state.reset_index = n;
                a = tr;
                if tr >= end {
                    break;
                }
            }
            None => break,
        }
    }
    Ok(state)
}

/// A priori bounds on the matched perturbation `γ(t) u + φ(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationBounds {
    /// `sup |φ̇|`.
    pub phi_bar: f64,
    /// `sup |γ̇|`.
    pub gamma_bar: f64,
    pub gamma_m: f64,
    pub gamma_max: f64,
}

impl PerturbationBounds {
    pub fn gamma_d(&self) -> f64 {
        0.5 * (self.gamma_m + self.gamma_max)
    }

    pub fn delta_gamma(&self) -> f64 {
        1.0 - self.gamma_m / self.gamma_max
    }
}

/// `λ_0 = max(φ̄/φ_*, 1/(γ_d γ̃))`, after checking `δ_γ ≤ δ_0`.
pub fn lambda_lower_bound(bounds: &PerturbationBounds, calib: &CalibrationResult) -> Result<f64> {
    if !(bounds.gamma_m > 0.0) || bounds.gamma_m > bounds.gamma_max {
        return Err(Error::Domain("need 0 < γ_m ≤ γ_M".into()));
    }
    let dg = bounds.delta_gamma();
    if dg > calib.delta0 {
        return Err(Error::Infeasible(format!(
            "smallness condition on 1−γ_m/γ_M violated: δ_γ = {dg:.6} > δ_0 = {:.6}",
            calib.delta0
        )));
    }
    Ok(lambda_formula(
        bounds.phi_bar,
        bounds.gamma_d(),
        calib.phi_star,
        calib.gamma_tilde,
    ))
}

pub(crate) fn lambda_formula(phi_bar: f64, gamma_d: f64, phi_star: f64, gamma_tilde: f64) -> f64 {
    (phi_bar / phi_star).max(1.0 / (gamma_d * gamma_tilde))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::ControllerVariant;
    use approx::assert_relative_eq;

    fn bundle() -> LyapunovBundle {
        LyapunovBundle::for_order(ControllerVariant::Hong, 4, vec![1.0, 1.0, 4.0, 8.0]).unwrap()
    }

    fn calib(phi_star: f64, gamma_tilde: f64, delta0: f64) -> CalibrationResult {
        CalibrationResult {
            c: 1.0,
            a: 1.0,
            d: 1.0,
            v1_sup: 1.0,
            phi_star,
            gamma_tilde,
            delta0,
            lambda0: 0.0,
            jump_constant: 1.0,
            sample_count: 1000,
            safety_margin: 0.1,
            k_p: 1.0,
            k_i: 1.0,
        }
    }

    #[test]
    fn pure_at_start_is_u0() {
        let cfg = HostConfig::pure(1.0, 1.0).unwrap();
        let u = host_control(&[1.0, 0.0, 0.0, 0.0], &HostState::default(), &cfg, &bundle()).unwrap();
        assert_relative_eq!(u, -16.0, max_relative = 1e-14);
    }

    #[test]
    fn gamma_const_unit_matches_pure() {
        let b = bundle();
        let pure = HostConfig::pure(2.0, 0.5).unwrap();
        let gc = HostConfig::new(HostVariant::GammaConst, 2.0, 0.5, 1.0, 1.0, 1.0).unwrap();
        for (z, i) in [([0.3, -1.0, 2.0, 0.1], 0.7), ([-4.0, 0.0, 1.0, 9.0], -2.0)] {
            let s = HostState {
                integral: i,
                reset_index: 0,
            };
            assert_eq!(
                host_control(&z, &s, &pure, &b).unwrap(),
                host_control(&z, &s, &gc, &b).unwrap()
            );
        }
    }

    #[test]
    fn gauge_identity() {
        let b = bundle();
        let gen = HostConfig::new(HostVariant::General, 1.0, 1.0, 2.0, 2.5, 3.5).unwrap();
        let gc = HostConfig::new(HostVariant::GammaConst, 1.0, 1.0, 2.0, 2.5, 3.5).unwrap();
        let s = HostState {
            integral: 0.4,
            reset_index: 0,
        };
        let z = [0.5, 1.0, -0.2, 0.3];
        let ug = host_control(&z, &s, &gen, &b).unwrap();
        let uc = host_control(&z, &s, &gc, &b).unwrap();
        assert_relative_eq!(ug * gen.gamma_d(), uc * gc.gamma_m(), max_relative = 1e-14);
    }

    #[test]
    fn just_after_reset_only_proportional_term() {
        let b = bundle();
        let cfg = HostConfig::new(HostVariant::General, 1.5, 1.0, 2.0, 2.5, 3.5).unwrap();
        let z = [0.2, -0.1, 0.4, 1.0];
        let u = host_control(&z, &HostState::default(), &cfg, &b).unwrap();
        let want = 1.5 * b.u0(&cfg.rescale(&z)).unwrap() / 3.0;
        assert_relative_eq!(u, want, max_relative = 1e-14);
    }

    #[test]
    fn config_validation() {
        assert!(HostConfig::new(HostVariant::Pure, 0.5, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(HostConfig::new(HostVariant::Pure, 1.0, 0.0, 1.0, 1.0, 1.0).is_err());
        assert!(HostConfig::new(HostVariant::Pure, 1.0, 1.0, 2.0, 1.0, 1.0).is_err());
        assert!(HostConfig::new(HostVariant::General, 1.0, 1.0, 2.0, 0.0, 1.0).is_err());
        assert!(HostConfig::new(HostVariant::General, 1.0, 1.0, 2.0, 3.0, 1.0).is_err());
        let c = HostConfig::new(HostVariant::General, 1.0, 1.0, 2.0, 2.5, 3.5).unwrap();
        assert_eq!(c.gamma_d(), 3.0);
        assert_relative_eq!(c.delta_gamma(), 2.0 / 7.0, max_relative = 1e-15);
    }

    #[test]
    fn constant_rate_rectangle() {
        let cfg = HostConfig::pure(1.0, 1.0).unwrap();
        let s = advance_with_rate(HostState::default(), 0.0, 0.5, &cfg, |_| Ok(1.0)).unwrap();
        assert_relative_eq!(s.integral, 0.5, max_relative = 1e-15);
        assert!(advance_with_rate(HostState::default(), 0.0, 0.0, &cfg, |_| Ok(1.0)).is_err());
    }

    #[test]
    fn reset_inside_step_keeps_tail_only() {
        let cfg = HostConfig::new(HostVariant::General, 1.0, 1.0, 2.0, 1.0, 1.0).unwrap();
        let start = HostState {
            integral: 3.0,
            reset_index: 0,
        };
        let s = advance_with_rate(start, 0.4, 0.3, &cfg, |_| Ok(1.0)).unwrap();
        assert_relative_eq!(s.integral, 0.2, max_relative = 1e-12);
        assert_eq!(s.reset_index, 1);

        // a step ending exactly on a reset leaves the integral at zero
        let s = advance_with_rate(start, 0.4, 0.1, &cfg, |_| Ok(1.0)).unwrap();
        assert_eq!(s.integral, 0.0);
        assert_eq!(s.reset_index, 1);

        // several resets in one long step
        let s = advance_with_rate(start, 0.0, 1.7, &cfg, |_| Ok(1.0)).unwrap();
        assert_relative_eq!(s.integral, 0.2, max_relative = 1e-12);
        assert_eq!(s.reset_index, 3);
    }

    #[test]
    fn reset_schedule() {
        let cfg = HostConfig::new(HostVariant::General, 1.0, 1.0, 2.0, 1.0, 1.0).unwrap();
        assert_eq!(cfg.next_reset_after(0.0), Some((1, 0.5)));
        assert_eq!(cfg.next_reset_after(0.5), Some((2, 1.0)));
        assert_eq!(cfg.reset_count(10.0), 20);
        assert_eq!(HostConfig::pure(1.0, 1.0).unwrap().next_reset_after(0.0), None);
    }

    #[test]
    fn integral_path_uses_rescaled_gradient() {
        let b = bundle();
        let cfg = HostConfig::pure(1.0, 1.0).unwrap();
        let z = vec![1.0, 0.0, 0.0, 0.0];
        let s = advance_integrator(HostState::default(), 0.0, 0.25, |_| z.clone(), &cfg, &b).unwrap();
        assert_relative_eq!(s.integral, 0.25 * b.dr_v1(&z).unwrap(), max_relative = 1e-14);
    }

    #[test]
    fn lambda_bound_formula() {
        let c = calib(0.5, 0.1, 0.5);
        let none = PerturbationBounds {
            phi_bar: 0.0,
            gamma_bar: 0.0,
            gamma_m: 1.0,
            gamma_max: 1.0,
        };
        assert_relative_eq!(lambda_lower_bound(&none, &c).unwrap(), 10.0, max_relative = 1e-15);

        let c = calib(0.5, 10.0, 0.5);
        let b = PerturbationBounds {
            phi_bar: 1.0,
            gamma_bar: 0.0,
            gamma_m: 1.0,
            gamma_max: 1.0,
        };
        assert_relative_eq!(lambda_lower_bound(&b, &c).unwrap(), 2.0, max_relative = 1e-15);
    }

    #[test]
    fn lambda_bound_infeasible_gamma_spread() {
        let c = calib(1.0, 1.0, 0.1);
        let b = PerturbationBounds {
            phi_bar: 1.0,
            gamma_bar: 0.25,
            gamma_m: 2.5,
            gamma_max: 3.5,
        };
        assert!(matches!(lambda_lower_bound(&b, &c), Err(Error::Infeasible(_))));
    }
}
