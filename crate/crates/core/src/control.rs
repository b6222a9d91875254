//! Hong and modified-Hong stabilizing feedbacks `u_0` for a pure chain.
//!
//! Both share the backstepping recursion
//!
//! ```text
//! v_0 = 0,   v_{i+1} = −l_{i+1} ⌊ ⌊z_{i+1}⌉^{β_i} − ⌊v_i⌉^{β_i} ⌉^{α_{i+1}/β_i}
//! ```
//!
//! Hong's law is `u_0 = v_r`. The modified law replaces the last step by a
//! switching term, `u_0 = −l_r (|z_r|^{β} + |v_{r−1}|^{β})^{α_r/β} sign(z_r − v_{r−1})`
//! with `β = β_{r−1}`; it is continuous at the origin but jumps across the
//! surface `z_r = v_{r−1}`.

use crate::algebra::{apow, sign, spow};
use crate::error::{check_len, Result};
use crate::ladder::{ExponentLadder, GainVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ControllerVariant {
    Hong,
    ModifiedHong,
}

impl ControllerVariant {
    pub fn name(self) -> &'static str {
        match self {
            ControllerVariant::Hong => "hong",
            ControllerVariant::ModifiedHong => "modified_hong",
        }
    }
}

impl std::str::FromStr for ControllerVariant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "hong" => Ok(Self::Hong),
            "modified_hong" | "mhong" => Ok(Self::ModifiedHong),
            other => Err(format!("unknown controller variant `{other}`")),
        }
    }
}

fn check_dims(z: &[f64], ladder: &ExponentLadder, gains: &GainVector) -> Result<()> {
    check_len(ladder.order(), z.len())?;
    check_len(ladder.order(), gains.len())
}

/// Fills `out[0..=upto]` with `v_0, …, v_upto` (Hong recursion).
pub(crate) fn recursion_into(z: &[f64], ladder: &ExponentLadder, gains: &GainVector, upto: usize, out: &mut [f64]) {
    let (alpha, beta, l) = (ladder.alpha(), ladder.beta(), gains.as_slice());
    out[0] = 0.0;
    for i in 0..upto {
        let b = beta[i];
        let inner = spow(z[i], b) - spow(out[i], b);
        out[i + 1] = -l[i] * spow(inner, alpha[i] / b);
    }
}

/// `v_0, …, v_r` of the Hong recursion.
pub fn hong_virtual_controls(z: &[f64], ladder: &ExponentLadder, gains: &GainVector) -> Result<Vec<f64>> {
    check_dims(z, ladder, gains)?;
    let mut v = vec![0.0; ladder.order() + 1];
    recursion_into(z, ladder, gains, ladder.order(), &mut v);
    Ok(v)
}

/// Hong's continuous feedback `u_0 = v_r`.
pub fn hong_control(z: &[f64], ladder: &ExponentLadder, gains: &GainVector) -> Result<f64> {
    Ok(hong_virtual_controls(z, ladder, gains)?[ladder.order()])
}

/// Last-step switching term `(|z_r|^β + |v|^β)^{α_r/β} sign(z_r − v)`.
#[inline]
pub(crate) fn modified_switch(zr: f64, v: f64, ladder: &ExponentLadder) -> f64 {
    let r = ladder.order();
    let b = ladder.beta()[r - 1];
    let mag = apow(zr, b) + apow(v, b);
    apow(mag, ladder.alpha()[r - 1] / b) * sign(zr - v)
}

/// Modified Hong feedback `u_0 = −l_r w_r`.
pub fn modified_hong_control(z: &[f64], ladder: &ExponentLadder, gains: &GainVector) -> Result<f64> {
    check_dims(z, ladder, gains)?;
    let r = ladder.order();
    let mut v = vec![0.0; r + 1];
    recursion_into(z, ladder, gains, r - 1, &mut v);
    Ok(-gains.as_slice()[r - 1] * modified_switch(z[r - 1], v[r - 1], ladder))
}

/// Evaluates `u_0` for either variant without dimension checks.
pub(crate) fn control_unchecked(
    variant: ControllerVariant,
    z: &[f64],
    ladder: &ExponentLadder,
    gains: &GainVector,
    scratch: &mut [f64],
) -> f64 {
    let r = ladder.order();
    match variant {
        ControllerVariant::Hong => {
            recursion_into(z, ladder, gains, r, scratch);
            scratch[r]
        }
        ControllerVariant::ModifiedHong => {
            recursion_into(z, ladder, gains, r - 1, scratch);
            -gains.as_slice()[r - 1] * modified_switch(z[r - 1], scratch[r - 1], ladder)
        }
    }
}

/// `u_0(z)` for the chosen variant.
pub fn control(variant: ControllerVariant, z: &[f64], ladder: &ExponentLadder, gains: &GainVector) -> Result<f64> {
    match variant {
        ControllerVariant::Hong => hong_control(z, ladder, gains),
        ControllerVariant::ModifiedHong => modified_hong_control(z, ladder, gains),
    }
}

/// Chain drift plus input: `J_r z + u e_r`.
pub fn chain_field(z: &[f64], u: f64) -> Vec<f64> {
    let r = z.len();
    let mut dz = Vec::with_capacity(r);
    dz.extend_from_slice(&z[1..]);
    dz.push(u);
    dz
}

/// Virtual controls `v_0..=v_{r−1}` together with their time derivatives
/// along a velocity `zdot`.
pub(crate) fn virtual_rates(
    z: &[f64],
    zdot: &[f64],
    ladder: &ExponentLadder,
    gains: &GainVector,
) -> (Vec<f64>, Vec<f64>) {
    let r = ladder.order();
    let (alpha, beta, l) = (ladder.alpha(), ladder.beta(), gains.as_slice());
    let mut v = vec![0.0; r];
    let mut vdot = vec![0.0; r];
    if r > 1 {
        // v_1 = −l_1 ⌊z_1⌉^{α_1}: differentiate directly to avoid 0·∞ at z_1 = 0.
        v[1] = -l[0] * spow(z[0], alpha[0]);
        vdot[1] = -l[0] * alpha[0] * apow(z[0], alpha[0] - 1.0) * zdot[0];
    }
    for i in 1..r.saturating_sub(1) {
        let b = beta[i];
        let a = alpha[i] / b;
        let inner = spow(z[i], b) - spow(v[i], b);
        let inner_dot = b * (apow(z[i], b - 1.0) * zdot[i] - apow(v[i], b - 1.0) * vdot[i]);
        v[i + 1] = -l[i] * spow(inner, a);
        vdot[i + 1] = if inner_dot == 0.0 {
            0.0
        } else {
            -l[i] * a * apow(inner, a - 1.0) * inner_dot
        };
    }
    (v, vdot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn setup() -> (ExponentLadder, GainVector) {
        (ExponentLadder::new(4).unwrap(), GainVector::reference_order4())
    }

    #[test]
    fn hong_recursion_by_hand() {
        let (l, g) = setup();
        let v = hong_virtual_controls(&[1.0, 0.0, 0.0, 0.0], &l, &g).unwrap();
        for (got, want) in v.iter().zip([0.0, -1.0, -1.0, -4.0, -16.0]) {
            assert_relative_eq!(*got, want, max_relative = 1e-14);
        }
        assert_eq!(hong_virtual_controls(&[0.0; 4], &l, &g).unwrap(), vec![0.0; 5]);
        let v = hong_virtual_controls(&[32.0, 0.0, 0.0, 0.0], &l, &g).unwrap();
        assert_relative_eq!(v[4], -32.0, max_relative = 1e-13);
    }

    #[test]
    fn hong_control_homogeneity_anchor() {
        let (l, g) = setup();
        let u1 = hong_control(&[1.0, 0.0, 0.0, 0.0], &l, &g).unwrap();
        let u32 = hong_control(&[32.0, 0.0, 0.0, 0.0], &l, &g).unwrap();
        assert_relative_eq!(u1, -16.0, max_relative = 1e-14);
        assert_relative_eq!(u32, 32f64.powf(0.2) * u1, max_relative = 1e-13);
        assert_eq!(hong_control(&[0.0; 4], &l, &g).unwrap(), 0.0);
    }

    #[test]
    fn modified_examples() {
        let (l, g) = setup();
        assert_relative_eq!(
            modified_hong_control(&[1.0, 0.0, 0.0, 0.0], &l, &g).unwrap(),
            -16.0,
            max_relative = 1e-14
        );
        assert_eq!(modified_hong_control(&[0.0; 4], &l, &g).unwrap(), 0.0);
        // on the switching surface z_4 = v_3 = −4 the sign selection gives 0
        assert_eq!(modified_hong_control(&[1.0, 0.0, 0.0, -4.0], &l, &g).unwrap(), 0.0);
    }

    #[test]
    fn modified_jumps_across_surface() {
        let (l, g) = setup();
        let above = modified_hong_control(&[1.0, 0.0, 0.0, -4.0 + 1e-9], &l, &g).unwrap();
        let below = modified_hong_control(&[1.0, 0.0, 0.0, -4.0 - 1e-9], &l, &g).unwrap();
        // magnitude 8·256^{1/7} ≈ 17.7 on either side
        assert!(above < -17.0 && below > 17.0);
    }

    #[test]
    fn dimension_mismatch() {
        let (l, g) = setup();
        assert!(hong_control(&[1.0, 2.0], &l, &g).is_err());
        assert!(modified_hong_control(&[1.0; 5], &l, &g).is_err());
        let short = GainVector::new(vec![1.0, 1.0]).unwrap();
        assert!(hong_control(&[1.0; 4], &l, &short).is_err());
    }

    #[test]
    fn order_one_is_scalar_power_law() {
        let l = ExponentLadder::new(1).unwrap();
        let g = GainVector::new(vec![2.0]).unwrap();
        assert_relative_eq!(hong_control(&[4.0], &l, &g).unwrap(), -4.0, max_relative = 1e-15);
        assert_relative_eq!(
            modified_hong_control(&[4.0], &l, &g).unwrap(),
            -4.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn virtual_rates_match_finite_differences() {
        let (l, g) = setup();
        let z = [0.7, -0.4, 1.3, 0.2];
        let zdot = [0.3, 1.1, -0.6, 2.0];
        let (v, vdot) = virtual_rates(&z, &zdot, &l, &g);
        let full = hong_virtual_controls(&z, &l, &g).unwrap();
        let h = 1e-6;
        let plus: Vec<f64> = z.iter().zip(&zdot).map(|(a, b)| a + h * b).collect();
        let minus: Vec<f64> = z.iter().zip(&zdot).map(|(a, b)| a - h * b).collect();
        let vp = hong_virtual_controls(&plus, &l, &g).unwrap();
        let vm = hong_virtual_controls(&minus, &l, &g).unwrap();
        for i in 0..4 {
            assert_relative_eq!(v[i], full[i], max_relative = 1e-15);
            let fd = (vp[i] - vm[i]) / (2.0 * h);
            assert!(
                (vdot[i] - fd).abs() <= 1e-6 * fd.abs().max(1.0),
                "i={i}: {} vs {fd}",
                vdot[i]
            );
        }
    }
}
