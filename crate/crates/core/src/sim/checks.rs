//! Post-hoc checks on recorded trajectories.

use super::{PlantConfig, Trajectory};
use crate::error::{Error, Result};
use crate::ladder::ExponentLadder;
use crate::lyapunov::CalibrationResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ConvergenceNorm {
    /// `max_i |z_i|^{1/p_i}`.
    #[default]
    Homogeneous,
    Euclidean,
}

/// Size of `z` under `norm`; `p` are the dilation weights.
pub fn state_norm(z: &[f64], p: &[f64], norm: ConvergenceNorm) -> f64 {
    match norm {
        ConvergenceNorm::Homogeneous => z.iter().zip(p).map(|(v, w)| v.abs().powf(1.0 / w)).fold(0.0, f64::max),
        ConvergenceNorm::Euclidean => z.iter().map(|v| v * v).sum::<f64>().sqrt(),
    }
}

fn norms(traj: &Trajectory, norm: ConvergenceNorm) -> Result<Vec<f64>> {
    let ladder = ExponentLadder::new(traj.order)?;
    let p = &ladder.p()[..traj.order];
    Ok(traj.states.iter().map(|z| state_norm(z, p, norm)).collect())
}

/// Earliest sample time `T` such that the homogeneous norm stays `≤ threshold`
/// on `[T, T + window]`; `None` if no such window fits in the record.
pub fn detect_convergence(traj: &Trajectory, threshold: f64, window: f64) -> Option<f64> {
    detect_convergence_with(traj, threshold, window, ConvergenceNorm::Homogeneous)
}

pub fn detect_convergence_with(traj: &Trajectory, threshold: f64, window: f64, norm: ConvergenceNorm) -> Option<f64> {
    if traj.is_empty() {
        return None;
    }
    let n = norms(traj, norm).ok()?;
    let t = &traj.times;
    let t_end = *t.last().expect("nonempty");
    let slack = 1e-9 * window.max(1.0);
    // first index at or after k whose sample is above threshold, scanned backwards
    let mut next_bad = vec![usize::MAX; n.len() + 1];
    for k in (0..n.len()).rev() {
        next_bad[k] = if n[k] > threshold { k } else { next_bad[k + 1] };
    }
    for k in 0..n.len() {
        if t[k] + window > t_end + slack {
            return None;
        }
        let nb = next_bad[k];
        if (nb == usize::MAX || t[nb] > t[k] + window + slack) && n[k] <= threshold {
            return Some(t[k]);
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovReport {
    /// Consecutive pairs with the state above threshold.
    pub v0_pairs: usize,
    pub v0_violations: usize,
    pub v0_violation_fraction: f64,
    /// First pair `(k, k+1)` with `V_0` increasing beyond tolerance.
    pub v0_witness: Option<usize>,
    /// `max (W_{k+1}^{1/3} − W_k^{1/3})/h + d/6`; must be `≤ 0`.
    pub w_max_rate: f64,
    pub w_pairs: usize,
    pub w_witness: Option<usize>,
    /// `Y_n^{1/3}` at resets taken with the state above threshold.
    pub y_cuberoots: Vec<f64>,
    pub y_strictly_decreasing: bool,
    pub y_witness: Option<usize>,
    /// Count of differences satisfying `Y_{n+1}^{1/3} − Y_n^{1/3} ≤ −d/12`.
    pub y_contract_met: usize,
}

impl LyapunovReport {
    pub fn v0_ok(&self) -> bool {
        self.v0_violations == 0
    }

    pub fn w_ok(&self) -> bool {
        self.w_max_rate <= 0.0
    }

    pub fn passed(&self) -> bool {
        self.v0_ok() && self.w_ok() && self.y_strictly_decreasing
    }
}

/// `V_0` decrease over consecutive samples whose state norm exceeds
/// `threshold`, with tolerance `1e-9·max V_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct V0Decrease {
    pub pairs: usize,
    pub violations: usize,
    /// Index of the first offending pair.
    pub witness: Option<usize>,
}

impl V0Decrease {
    pub fn fraction(&self) -> f64 {
        if self.pairs == 0 {
            0.0
        } else {
            self.violations as f64 / self.pairs as f64
        }
    }
}

pub fn check_v0_decrease(traj: &Trajectory, threshold: f64) -> Result<V0Decrease> {
    let v0 = traj.v0.as_ref().ok_or(Error::MissingChannel("V0"))?;
    let n = norms(traj, ConvergenceNorm::Homogeneous)?;
    let tol = 1e-9 * v0.iter().copied().fold(0.0, f64::max);
    let mut out = V0Decrease {
        pairs: 0,
        violations: 0,
        witness: None,
    };
    for k in 0..traj.len().saturating_sub(1) {
        if n[k] <= threshold {
            continue;
        }
        out.pairs += 1;
        if v0[k + 1] > v0[k] + tol {
            out.violations += 1;
            out.witness.get_or_insert(k);
        }
    }
    Ok(out)
}

/// `Y_n^{1/3}` at the resets whose state norm exceeds `threshold`, `W` taken
/// with coefficient `a`.
pub fn pre_reset_cuberoots(traj: &Trajectory, a: f64, threshold: f64) -> Result<Vec<f64>> {
    let n = norms(traj, ConvergenceNorm::Homogeneous)?;
    let y = traj.pre_reset_w(a)?;
    Ok(traj
        .resets
        .iter()
        .zip(&y)
        .filter(|(r, _)| n[r.sample] > threshold)
        .map(|(_, y)| y.max(0.0).cbrt())
        .collect())
}

/// Discrete Lyapunov checks on samples whose state norm exceeds `threshold`:
/// `V_0` decrease (see [`check_v0_decrease`]), `W^{1/3}` slope against
/// `−d/6`, and strict decrease of the pre-reset values `Y_n^{1/3}`.
pub fn check_lyapunov_decrease(traj: &Trajectory, calib: &CalibrationResult, threshold: f64) -> Result<LyapunovReport> {
    let v0 = check_v0_decrease(traj, threshold)?;
    let w = traj.w_with(calib.a)?;
    let n = norms(traj, ConvergenceNorm::Homogeneous)?;

    let (mut w_pairs, mut w_max_rate, mut w_witness) = (0, f64::NEG_INFINITY, None);
    for k in 0..traj.len().saturating_sub(1) {
        if n[k] <= threshold || traj.reset[k + 1] {
            continue;
        }
        w_pairs += 1;
        let dt = traj.times[k + 1] - traj.times[k];
        let rate = (w[k + 1].max(0.0).cbrt() - w[k].max(0.0).cbrt()) / dt + calib.d / 6.0;
        if rate > w_max_rate {
            w_max_rate = rate;
            w_witness = Some(k);
        }
    }
    if w_pairs == 0 {
        w_max_rate = 0.0;
    }

    let y_cuberoots = pre_reset_cuberoots(traj, calib.a, threshold)?;
    let mut y_witness = None;
    let mut y_contract_met = 0;
    for (i, d) in y_cuberoots.windows(2).map(|p| p[1] - p[0]).enumerate() {
        if d >= 0.0 && y_witness.is_none() {
            y_witness = Some(i);
        }
        if d <= -calib.d / 12.0 {
            y_contract_met += 1;
        }
    }
    Ok(LyapunovReport {
        v0_pairs: v0.pairs,
        v0_violations: v0.violations,
        v0_violation_fraction: v0.fraction(),
        v0_witness: v0.witness,
        w_max_rate,
        w_pairs,
        w_witness,
        y_strictly_decreasing: y_witness.is_none(),
        y_cuberoots,
        y_witness,
        y_contract_met,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceReport {
    /// `false` when no convergence time is available or the window is empty.
    pub applicable: bool,
    pub window_start: f64,
    /// `sup |u + φ/γ|` over the window.
    pub sup: f64,
    pub witness_time: Option<f64>,
}

/// `sup |u(t) + φ(t)/γ(t)|` over `[tc + margin, horizon]`.
pub fn check_disturbance_reconstruction(
    traj: &Trajectory,
    plant: &PlantConfig,
    tc: Option<f64>,
    margin: f64,
) -> DisturbanceReport {
    let not_applicable = |start| DisturbanceReport {
        applicable: false,
        window_start: start,
        sup: f64::NAN,
        witness_time: None,
    };
    let Some(tc) = tc else {
        return not_applicable(f64::NAN);
    };
    let start = tc + margin;
    match traj.times.last() {
        Some(&end) if start < end => {}
        _ => return not_applicable(start),
    }
    let mut sup = 0.0;
    let mut witness = None;
    for (t, u) in traj.times.iter().zip(&traj.controls) {
        if *t < start {
            continue;
        }
        let e = (u + plant.phi.value(*t) / plant.gamma.value(*t)).abs();
        if e > sup || witness.is_none() {
            sup = e;
            witness = Some(*t);
        }
    }
    DisturbanceReport {
        applicable: true,
        window_start: start,
        sup,
        witness_time: witness,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traj_from(times: Vec<f64>, states: Vec<Vec<f64>>) -> Trajectory {
        let n = times.len();
        let r = states[0].len();
        Trajectory {
            times,
            states,
            controls: vec![0.0; n],
            integrals: vec![0.0; n],
            xi: vec![0.0; n],
            v0: Some(vec![0.0; n]),
            v1: Some(vec![0.0; n]),
            w: Some(vec![0.0; n]),
            reset: vec![false; n],
            ..Trajectory::empty(r)
        }
    }

    fn calib() -> CalibrationResult {
        CalibrationResult {
            c: 1.0,
            a: 1.0,
            d: 0.3,
            v1_sup: 1.0,
            phi_star: 1.0,
            gamma_tilde: 1.0,
            delta0: 0.5,
            lambda0: 0.0,
            jump_constant: 1.0,
            sample_count: 1000,
            safety_margin: 0.1,
            k_p: 1.0,
            k_i: 1.0,
        }
    }

    #[test]
    fn zero_trajectory_converges_immediately() {
        let t: Vec<f64> = (0..11).map(|k| k as f64 * 0.1).collect();
        let tr = traj_from(t, vec![vec![0.0; 2]; 11]);
        assert_eq!(detect_convergence(&tr, 1e-3, 0.5), Some(0.0));
        // window longer than the record
        assert_eq!(detect_convergence(&tr, 1e-3, 5.0), None);
        let rep = check_lyapunov_decrease(&tr, &calib(), 1e-3).unwrap();
        assert!(rep.passed());
        assert_eq!(rep.v0_pairs, 0);
    }

    #[test]
    fn never_converging() {
        let t: Vec<f64> = (0..11).map(|k| k as f64).collect();
        let tr = traj_from(t, vec![vec![1.0, 0.0]; 11]);
        assert_eq!(detect_convergence(&tr, 1e-3, 1.0), None);
    }

    #[test]
    fn converges_after_transient() {
        let t: Vec<f64> = (0..11).map(|k| k as f64).collect();
        let mut s = vec![vec![0.0]; 11];
        s[0][0] = 1.0;
        s[3][0] = 0.5; // relapse
        let tr = traj_from(t, s);
        assert_eq!(detect_convergence(&tr, 1e-3, 2.0), Some(4.0));
        assert_eq!(
            detect_convergence_with(&tr, 1e-3, 2.0, ConvergenceNorm::Euclidean),
            Some(4.0)
        );
    }

    #[test]
    fn homogeneous_norm_weights() {
        let p = [1.0, 0.5];
        assert_eq!(
            state_norm(&[0.1, 0.2], &p, ConvergenceNorm::Homogeneous),
            0.1f64.max(0.04)
        );
        assert!((state_norm(&[3.0, 4.0], &p, ConvergenceNorm::Euclidean) - 5.0).abs() < 1e-15);
    }

    #[test]
    fn increasing_w_is_flagged() {
        let t: Vec<f64> = (0..5).map(|k| k as f64 * 0.1).collect();
        let mut tr = traj_from(t, vec![vec![1.0]; 5]);
        tr.v1 = Some(vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        tr.v0 = Some(vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        let rep = check_lyapunov_decrease(&tr, &calib(), 1e-3).unwrap();
        assert!(!rep.w_ok());
        assert_eq!(rep.w_witness, Some(0));
        assert!(!rep.v0_ok());
        assert_eq!(rep.v0_witness, Some(0));
        assert_eq!(rep.v0_violation_fraction, 1.0);
    }

    #[test]
    fn missing_channel() {
        let mut tr = traj_from(vec![0.0, 1.0], vec![vec![1.0]; 2]);
        tr.v0 = None;
        assert!(matches!(
            check_lyapunov_decrease(&tr, &calib(), 1e-3),
            Err(Error::MissingChannel("V0"))
        ));
    }

    #[test]
    fn disturbance_window() {
        use crate::sim::Signal;
        let plant = PlantConfig::new(1, Signal::constant(2.0), Signal::constant(1.0)).unwrap();
        let mut tr = traj_from(vec![0.0, 1.0, 2.0, 3.0], vec![vec![0.0]; 4]);
        tr.controls = vec![5.0, -0.5, -0.4, -0.6];
        let rep = check_disturbance_reconstruction(&tr, &plant, Some(0.5), 0.5);
        assert!(rep.applicable);
        assert!((rep.sup - 0.1).abs() < 1e-15);
        assert!(!check_disturbance_reconstruction(&tr, &plant, None, 0.5).applicable);
        assert!(!check_disturbance_reconstruction(&tr, &plant, Some(2.9), 0.5).applicable);
    }
}
