//! Sampled calibration of the constants `c, A, d, v_1, φ_*, γ̃, δ_0, λ_0`.
//!
//! Every "large enough" or "small enough" constant is estimated by an
//! extremum over deterministic samples of a homogeneous unit sphere. The
//! inequalities involved are homogeneous of a common degree, so the sphere
//! extremum is the global one. A safety margin shrinks each estimate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::sphere::homogeneous_sphere_sample;
use super::{Evaluation, LyapunovBundle};
use crate::algebra::DilationWeights;
use crate::control::chain_field;
use crate::error::{Error, Result};
use crate::feedback::{lambda_formula, PerturbationBounds};

const A_START_EXP: i32 = -8;
const A_MAX_DOUBLINGS: i32 = 72;
const DELTA0_CAP: f64 = 0.999;
const EXTENDED_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;
const POLISH_STARTS: usize = 8;
const POLISH_ITERS: usize = 400;

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationOptions {
    pub k_p: f64,
    pub k_i: f64,
    pub sample_count: usize,
    pub margin: f64,
    pub seed: u64,
    pub bounds: Option<PerturbationBounds>,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            k_p: 1.0,
            k_i: 1.0,
            sample_count: 20_000,
            margin: 0.1,
            seed: 0,
            bounds: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    /// `V̇_1 ≤ −c V_1^{1/2}` along the pure closed loop.
    pub c: f64,
    /// Coefficient of the extended function `W`.
    pub a: f64,
    /// `Ẇ ≤ −d W^{2/3}`.
    pub d: f64,
    /// `sup |∂_r V_1|`.
    pub v1_sup: f64,
    /// Admissible bound on `|φ̇|`.
    pub phi_star: f64,
    /// Admissible bound on `|γ̇|/γ_d`.
    pub gamma_tilde: f64,
    /// Admissible bound on `1 − γ_m/γ_M`.
    pub delta0: f64,
    /// Lower bound on the time scale `λ`; `0` without perturbation bounds.
    pub lambda0: f64,
    /// Sampled constant of the reset jump estimate `|Z^{1/3} − Y^{1/3}| ≤ D̂_1 γ̃`.
    pub jump_constant: f64,
    pub sample_count: usize,
    pub safety_margin: f64,
    pub k_p: f64,
    pub k_i: f64,
}

/// Outcome of re-checking a calibration on fresh samples.
#[derive(Debug, Clone, PartialEq)]
pub struct RecheckReport {
    pub sample_count: usize,
    /// `min −V̇_1/V_1^{1/2}`, must be `≥ c`.
    pub min_decay_ratio: f64,
    /// `min W / (A V^{3/2})`, must be positive.
    pub min_w_ratio: f64,
    /// `min −Ẇ_upper / W^{2/3}`, must be `≥ d`.
    pub min_strict_ratio: f64,
    /// `max |∂_r V_1|`, must not exceed `v1_sup/(1 − margin)`.
    pub max_dr_v1: f64,
    pub decay_ok: bool,
    pub w_positive: bool,
    pub strict_ok: bool,
    pub v1_ok: bool,
}

impl RecheckReport {
    pub fn passed(&self) -> bool {
        self.decay_ok && self.w_positive && self.strict_ok && self.v1_ok
    }
}

struct StatePoint {
    z: Vec<f64>,
    decay_ratio: f64,
    dr_v1: f64,
}

struct ExtPoint {
    x: Vec<f64>,
    e: Evaluation,
    u0: f64,
    zr: f64,
    xi: f64,
}

fn validate(opts: &CalibrationOptions) -> Result<()> {
    if !(opts.k_p >= 1.0) {
        return Err(Error::Domain(format!("k_P = {} must be at least 1", opts.k_p)));
    }
    if !(opts.k_i > 0.0) {
        return Err(Error::Domain(format!("k_I = {} must be positive", opts.k_i)));
    }
    if opts.sample_count < 1000 {
        return Err(Error::Domain(format!(
            "need at least 1000 samples, got {}",
            opts.sample_count
        )));
    }
    if !(opts.margin > 0.0 && opts.margin < 1.0) {
        return Err(Error::Domain(format!("margin {} outside (0, 1)", opts.margin)));
    }
    Ok(())
}

fn state_point(bundle: &LyapunovBundle, z: Vec<f64>) -> Result<StatePoint> {
    let e = bundle.evaluate(&z)?;
    let u0 = bundle.u0_unchecked(&z);
    let zdot = chain_field(&z, u0);
    let v0_dot = bundle.v0_lie_derivative(&z, &zdot)?;
    let v1_dot = e.v0.powf(bundle.ladder().lambda_v() - 1.0) * v0_dot;
    Ok(StatePoint {
        decay_ratio: -v1_dot / e.v1.sqrt(),
        dr_v1: e.dr_v1,
        z,
    })
}

fn ext_point(bundle: &LyapunovBundle, x: Vec<f64>) -> Result<ExtPoint> {
    let r = bundle.order();
    let z = &x[..r];
    let e = bundle.evaluate(z)?;
    Ok(ExtPoint {
        u0: bundle.u0_unchecked(z),
        zr: z[r - 1],
        xi: x[r],
        e,
        x,
    })
}

fn state_points(bundle: &LyapunovBundle, n: usize, seed: u64) -> Result<Vec<StatePoint>> {
    let pts = homogeneous_sphere_sample(&bundle.ladder().state_weights(), n, seed);
    pts.into_par_iter().map(|z| state_point(bundle, z)).collect()
}

fn extended_points(bundle: &LyapunovBundle, n: usize, seed: u64) -> Result<Vec<ExtPoint>> {
    let pts = homogeneous_sphere_sample(&bundle.ladder().extended_weights(), n, seed ^ EXTENDED_SEED_SALT);
    pts.into_par_iter().map(|x| ext_point(bundle, x)).collect()
}

/// Quantities of the extended-space inequalities at one point for a given `A`.
struct ExtValues {
    v_aug: f64,
    w: f64,
    upper: f64,
}

fn ext_values(p: &ExtPoint, bundle: &LyapunovBundle, a: f64, c: f64, k_p: f64, k_i: f64) -> ExtValues {
    let ex = bundle.w_exponent();
    let v_aug = p.e.v1 + p.xi * p.xi / (2.0 * k_i);
    let w = bundle.extended_w_given(p.e.v1, p.zr, p.xi, a, k_i);
    let upper = -ex * c * a * p.e.v1 - k_p * p.u0 * p.xi + k_i * p.zr * p.e.dr_v1 - p.xi * p.xi;
    ExtValues { v_aug, w, upper }
}

fn argmin<T>(items: &[T], key: impl Fn(&T) -> f64) -> (usize, f64) {
    items
        .iter()
        .enumerate()
        .map(|(i, t)| (i, key(t)))
        .fold(
            (0, f64::INFINITY),
            |best, (i, v)| if v < best.1 || v.is_nan() { (i, v) } else { best },
        )
}

fn argmax<T>(items: &[T], key: impl Fn(&T) -> f64) -> (usize, f64) {
    let (i, v) = argmin(items, |t| -key(t));
    (i, -v)
}

/// Local random search on the sphere from the `POLISH_STARTS` lowest samples.
/// Returns the best point and value found (never worse than the samples).
fn polish<F>(weights: &DilationWeights, pts: &[Vec<f64>], values: &[f64], f: F, seed: u64) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|a, b| values[*a].total_cmp(&values[*b]));
    order.truncate(POLISH_STARTS);
    order
        .par_iter()
        .enumerate()
        .map(|(k, &i)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
            let (mut x, mut fx) = (pts[i].clone(), values[i]);
            let mut sigma = 0.05;
            for _ in 0..POLISH_ITERS {
                let trial: Vec<f64> = x
                    .iter()
                    .map(|v| v + sigma * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                let Ok(cand) = weights.project_to_sphere(&trial) else {
                    continue;
                };
                let fc = f(&cand);
                if fc < fx {
                    (x, fx) = (cand, fc);
                    sigma = (sigma * 1.5).min(0.5);
                } else {
                    sigma *= 0.9;
                }
                if sigma < 1e-9 {
                    break;
                }
            }
            (x, fx)
        })
        .reduce(
            || (Vec::new(), f64::INFINITY),
            |a, b| if b.1 < a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a },
        )
}

/// Estimates all existence constants for `bundle` under gains `k_P, k_I`.
///
/// Fails with [`Error::Calibration`] naming the violated inequality and a
/// witness point when the sampled conditions do not hold.
pub fn calibrate(bundle: &LyapunovBundle, opts: &CalibrationOptions) -> Result<CalibrationResult> {
    validate(opts)?;
    let (k_p, k_i, margin) = (opts.k_p, opts.k_i, opts.margin);
    let n = opts.sample_count;

    let sw = bundle.ladder().state_weights();
    let ew = bundle.ladder().extended_weights();
    let states = state_points(bundle, n, opts.seed)?;
    let zs: Vec<Vec<f64>> = states.iter().map(|p| p.z.clone()).collect();
    let on_state = |key: fn(&StatePoint) -> f64| {
        move |z: &[f64]| state_point(bundle, z.to_vec()).map_or(f64::INFINITY, |p| key(&p))
    };

    let decay: Vec<f64> = states.iter().map(|p| p.decay_ratio).collect();
    let (wz, min_decay) = polish(&sw, &zs, &decay, on_state(|p| p.decay_ratio), opts.seed);
    if !(min_decay > 0.0) {
        return Err(Error::Calibration {
            inequality: "V1 strictly decreasing along the closed loop (V̇1 ≤ −c·V1^{1/2})".into(),
            witness: wz,
            value: min_decay,
        });
    }
    let c = (1.0 - margin) * min_decay;
    let neg_dr: Vec<f64> = states.iter().map(|p| -p.dr_v1.abs()).collect();
    let (_, v1_sup) = polish(&sw, &zs, &neg_dr, on_state(|p| -p.dr_v1.abs()), opts.seed);
    let v1_sup = -v1_sup;
    log::debug!("calibrate: c = {c}, v1_sup = {v1_sup}");

    let ext = extended_points(bundle, n, opts.seed)?;
    let xs: Vec<Vec<f64>> = ext.iter().map(|p| p.x.clone()).collect();
    let polished = |key: &(dyn Fn(&ExtPoint) -> f64 + Sync)| {
        let vals: Vec<f64> = ext.par_iter().map(key).collect();
        let f = |x: &[f64]| ext_point(bundle, x.to_vec()).map_or(f64::INFINITY, |p| key(&p));
        polish(&ew, &xs, &vals, f, opts.seed)
    };
    let ex = bundle.w_exponent();
    let mut found = None;
    let mut last_failure = None;
    for k in 0..=A_MAX_DOUBLINGS {
        let a = 2f64.powi(A_START_EXP + k);
        let w_slack = |p: &ExtPoint| {
            let v = ext_values(p, bundle, a, c, k_p, k_i);
            (v.w - margin * a * v.v_aug.powf(ex)) / v.v_aug.powf(ex)
        };
        let u_slack = |p: &ExtPoint| {
            let v = ext_values(p, bundle, a, c, k_p, k_i);
            (-margin * v.v_aug - v.upper) / v.v_aug
        };
        // cheap sample test first, polishing only once the samples pass
        let sampled_ok = ext.par_iter().all(|p| w_slack(p) >= 0.0 && u_slack(p) >= 0.0);
        let (ww, wv) = if sampled_ok {
            polished(&w_slack)
        } else {
            (Vec::new(), -1.0)
        };
        let (uw, uv) = if sampled_ok && wv >= 0.0 {
            polished(&u_slack)
        } else {
            (Vec::new(), -1.0)
        };
        if wv >= 0.0 && uv >= 0.0 {
            found = Some(a);
            break;
        }
        last_failure = Some(if wv < 0.0 {
            ("W(z, ξ) ≥ margin·A·V^{3/2}", ww, wv)
        } else {
            ("upper bound of Ẇ ≤ −margin·V", uw, uv)
        });
    }
    let Some(a) = found else {
        let (what, witness, value) = last_failure.expect("search ran at least once");
        return Err(Error::Calibration {
            inequality: format!("{what} (no A up to 2^{})", A_START_EXP + A_MAX_DOUBLINGS),
            witness,
            value,
        });
    };
    log::debug!("calibrate: A = {a}");

    let strict = |p: &ExtPoint| {
        let v = ext_values(p, bundle, a, c, k_p, k_i);
        -v.upper / v.w.powf(2.0 / 3.0)
    };
    let neg_m1 = |p: &ExtPoint| {
        let v = ext_values(p, bundle, a, c, k_p, k_i);
        let (dr_w, _) = bundle.partials_given(&p.e, p.zr, p.xi, a, k_i);
        -k_p * (dr_w * p.u0).abs() / v.w.powf(2.0 / 3.0)
    };
    let neg_m2 = |p: &ExtPoint| {
        let v = ext_values(p, bundle, a, c, k_p, k_i);
        let (_, dxi_w) = bundle.partials_given(&p.e, p.zr, p.xi, a, k_i);
        -dxi_w.abs() / v.w.powf(2.0 / 3.0)
    };

    let (wx, min_strict) = polished(&strict);
    if !(min_strict > 0.0) {
        return Err(Error::Calibration {
            inequality: "Ẇ ≤ −d·W^{2/3}".into(),
            witness: wx,
            value: min_strict,
        });
    }
    let d = (1.0 - margin) * min_strict;
    let m1 = -polished(&neg_m1).1;
    let m2 = -polished(&neg_m2).1;
    let phi_star = 0.5 * d / m2;
    let jump_constant = 2.0 * k_i * v1_sup * m2;
    let delta0 = ((d / 6.0) / (m1 + k_i * v1_sup * m2)).min(DELTA0_CAP);
    let gamma_tilde = ((d / 6.0) / (k_i * v1_sup * m2)).min(d / (12.0 * jump_constant));
    let lambda0 = opts
        .bounds
        .map_or(0.0, |b| lambda_formula(b.phi_bar, b.gamma_d(), phi_star, gamma_tilde));

    Ok(CalibrationResult {
        c,
        a,
        d,
        v1_sup,
        phi_star,
        gamma_tilde,
        delta0,
        lambda0,
        jump_constant,
        sample_count: n,
        safety_margin: margin,
        k_p,
        k_i,
    })
}

/// Re-evaluates the certified inequalities of `calib` on `n` fresh samples.
pub fn recheck(bundle: &LyapunovBundle, calib: &CalibrationResult, n: usize, seed: u64) -> Result<RecheckReport> {
    if n == 0 {
        return Err(Error::Domain("recheck needs at least one sample".into()));
    }
    let states = state_points(bundle, n, seed)?;
    let (_, min_decay) = argmin(&states, |p| p.decay_ratio);
    let (_, max_dr) = argmax(&states, |p| p.dr_v1.abs());
    let ext = extended_points(bundle, n, seed)?;
    let vals: Vec<ExtValues> = ext
        .par_iter()
        .map(|p| ext_values(p, bundle, calib.a, calib.c, calib.k_p, calib.k_i))
        .collect();
    let ex = bundle.w_exponent();
    let (_, min_w_ratio) = argmin(&vals, |v| v.w / (calib.a * v.v_aug.powf(ex)));
    let (_, min_strict) = argmin(&vals, |v| -v.upper / v.w.powf(2.0 / 3.0));
    Ok(RecheckReport {
        sample_count: n,
        min_decay_ratio: min_decay,
        min_w_ratio,
        min_strict_ratio: min_strict,
        max_dr_v1: max_dr,
        decay_ok: min_decay >= calib.c,
        w_positive: min_w_ratio > 0.0,
        strict_ok: min_strict >= calib.d,
        v1_ok: max_dr <= calib.v1_sup / (1.0 - calib.safety_margin),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::ControllerVariant;
    use approx::assert_relative_eq;

    fn order_one() -> LyapunovBundle {
        LyapunovBundle::for_order(ControllerVariant::Hong, 1, vec![1.0]).unwrap()
    }

    #[test]
    fn order_one_closed_forms() {
        let opts = CalibrationOptions {
            sample_count: 2000,
            ..Default::default()
        };
        let cal = calibrate(&order_one(), &opts).unwrap();
        assert_relative_eq!(cal.v1_sup, 1.5f64.powf(1.0 / 3.0), max_relative = 1e-9);
        assert_relative_eq!(cal.c / (1.0 - opts.margin), 1.5f64.powf(1.0 / 6.0), max_relative = 1e-9);
        assert!(cal.a > 0.0 && cal.d > 0.0 && cal.phi_star > 0.0 && cal.gamma_tilde > 0.0);
        assert!(cal.delta0 > 0.0 && cal.delta0 < 1.0);
        assert_eq!(cal.lambda0, 0.0);
        assert!(recheck(&order_one(), &cal, 3000, 99).unwrap().passed());
    }

    #[test]
    fn deterministic_for_seed() {
        let opts = CalibrationOptions {
            sample_count: 1000,
            seed: 5,
            ..Default::default()
        };
        let b = LyapunovBundle::for_order(ControllerVariant::Hong, 2, vec![1.0, 2.0]).unwrap();
        assert_eq!(calibrate(&b, &opts).unwrap(), calibrate(&b, &opts).unwrap());
    }

    #[test]
    fn lambda0_with_bounds() {
        let bounds = PerturbationBounds {
            phi_bar: 1.0,
            gamma_bar: 0.25,
            gamma_m: 2.5,
            gamma_max: 3.5,
        };
        let opts = CalibrationOptions {
            sample_count: 1000,
            bounds: Some(bounds),
            ..Default::default()
        };
        let cal = calibrate(&order_one(), &opts).unwrap();
        let want = (1.0 / cal.phi_star).max(1.0 / (3.0 * cal.gamma_tilde));
        assert_relative_eq!(cal.lambda0, want, max_relative = 1e-15);
    }

    #[test]
    fn rejects_bad_options() {
        let b = order_one();
        for opts in [
            CalibrationOptions {
                sample_count: 10,
                ..Default::default()
            },
            CalibrationOptions {
                k_p: 0.5,
                ..Default::default()
            },
            CalibrationOptions {
                margin: 1.0,
                ..Default::default()
            },
        ] {
            assert!(matches!(calibrate(&b, &opts), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn reference_gains_fail_with_witness() {
        let b = LyapunovBundle::for_order(ControllerVariant::Hong, 4, vec![1.0, 1.0, 4.0, 8.0]).unwrap();
        let opts = CalibrationOptions {
            sample_count: 2000,
            ..Default::default()
        };
        match calibrate(&b, &opts) {
            Err(Error::Calibration { witness, value, .. }) => {
                assert_eq!(witness.len(), 4);
                assert!(value <= 0.0);
            }
            other => panic!("expected calibration failure, got {other:?}"),
        }
    }
}
