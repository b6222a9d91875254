//! Lyapunov functions `V_0`, `V_1 = V_0^λ/λ` and the extended strict
//! Lyapunov function `W(z, ξ) = A (V_1(z) + ξ²/2k_I)^{2−α} − z_r ξ`.
//!
//! `V_0 = Σ W_i` with `W_i = ∫_{v_{i−1}}^{z_i} w_i(z_1, …, z_{i−1}, s) ds`.
//! For Hong's law `w_i = ⌊z_i⌉^{β_{i−1}} − ⌊v_{i−1}⌉^{β_{i−1}}` and every `W_i`
//! has a closed form. For the modified law the last integrand is the
//! switching term `(|s|^β + |v_{r−1}|^β) sign(s − v_{r−1})`, `β = β_{r−1}`,
//! which is integrated numerically.

pub mod calibrate;
pub mod quadrature;
pub mod sphere;

pub use calibrate::{calibrate, recheck, CalibrationOptions, CalibrationResult, RecheckReport};
pub use sphere::homogeneous_sphere_sample;

use crate::algebra::{apow, sign, spow};
use crate::control::{self, virtual_rates, ControllerVariant};
use crate::error::{check_len, Error, Result};
use crate::ladder::{ExponentLadder, GainVector};

/// Relative tolerance of the terminal-potential quadrature (modified variant).
pub const QUADRATURE_REL_TOL: f64 = 1e-12;

/// A controller variant together with its exponents and gains; evaluates
/// `u_0`, `V_0`, `V_1`, `∂_r V_1` and `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovBundle {
    variant: ControllerVariant,
    ladder: ExponentLadder,
    gains: GainVector,
    theorem1_alpha: f64,
}

impl LyapunovBundle {
    pub fn new(variant: ControllerVariant, ladder: ExponentLadder, gains: GainVector) -> Result<Self> {
        check_len(ladder.order(), gains.len())?;
        let r = ladder.order();
        let theorem1_alpha = 1.0 + ladder.kappa() / (2.0 * ladder.p()[r]);
        Ok(Self {
            variant,
            ladder,
            gains,
            theorem1_alpha,
        })
    }

    /// Shorthand for `LyapunovBundle::new(variant, ExponentLadder::new(r)?, gains)`.
    pub fn for_order(variant: ControllerVariant, r: usize, gains: Vec<f64>) -> Result<Self> {
        Self::new(variant, ExponentLadder::new(r)?, GainVector::new(gains)?)
    }

    pub fn variant(&self) -> ControllerVariant {
        self.variant
    }

    pub fn ladder(&self) -> &ExponentLadder {
        &self.ladder
    }

    pub fn gains(&self) -> &GainVector {
        &self.gains
    }

    pub fn order(&self) -> usize {
        self.ladder.order()
    }

    /// `α = 1 + κ/(2 p_{r+1})`, always `1/2` for the canonical ladder.
    pub fn theorem1_alpha(&self) -> f64 {
        self.theorem1_alpha
    }

    /// Exponent `2 − α` of the extended function.
    pub fn w_exponent(&self) -> f64 {
        2.0 - self.theorem1_alpha
    }

    pub fn u0(&self, z: &[f64]) -> Result<f64> {
        control::control(self.variant, z, &self.ladder, &self.gains)
    }

    pub(crate) fn u0_unchecked(&self, z: &[f64]) -> f64 {
        let mut scratch = vec![0.0; self.order() + 1];
        control::control_unchecked(self.variant, z, &self.ladder, &self.gains, &mut scratch)
    }

    fn virtual_controls(&self, z: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.order() + 1];
        control::recursion_into(z, &self.ladder, &self.gains, self.order() - 1, &mut v);
        v
    }

    /// Integrand `w_i` at `s`, given `v_{i−1}` (1-based `i`).
    fn integrand(&self, i: usize, v_prev: f64, s: f64) -> f64 {
        let b = self.ladder.beta()[i - 1];
        if self.is_switching_level(i) {
            (apow(s, b) + apow(v_prev, b)) * sign(s - v_prev)
        } else {
            spow(s, b) - spow(v_prev, b)
        }
    }

    fn is_switching_level(&self, i: usize) -> bool {
        self.variant == ControllerVariant::ModifiedHong && i == self.order()
    }

    fn potential_given(&self, i: usize, zi: f64, v_prev: f64) -> Result<f64> {
        if zi == v_prev {
            return Ok(0.0);
        }
        let b = self.ladder.beta()[i - 1];
        if self.is_switching_level(i) {
            let f = |s: f64| self.integrand(i, v_prev, s);
            let w = quadrature::integrate(f, v_prev, zi, &[0.0], QUADRATURE_REL_TOL)?;
            Ok(w.max(0.0))
        } else {
            Ok(chain_potential(zi, v_prev, b))
        }
    }

    /// `W_i(z_1, …, z_i)` for 1-based `i`; `z_prefix` must hold at least `i` entries.
    pub fn potential_wi(&self, i: usize, z_prefix: &[f64]) -> Result<f64> {
        let r = self.order();
        if i == 0 || i > r {
            return Err(Error::Domain(format!("potential index {i} outside 1..={r}")));
        }
        if z_prefix.len() < i {
            return Err(Error::Shape {
                expected: i,
                got: z_prefix.len(),
            });
        }
        let mut v = vec![0.0; i];
        control::recursion_into(z_prefix, &self.ladder, &self.gains, i - 1, &mut v);
        self.potential_given(i, z_prefix[i - 1], v[i - 1])
    }

    fn v0_with(&self, z: &[f64], v: &[f64]) -> Result<f64> {
        (1..=self.order())
            .map(|i| self.potential_given(i, z[i - 1], v[i - 1]))
            .sum()
    }

    /// `V_0(z) = Σ W_i`, positive definite and homogeneous of degree `β_0 + 1`.
    pub fn v0(&self, z: &[f64]) -> Result<f64> {
        check_len(self.order(), z.len())?;
        self.v0_with(z, &self.virtual_controls(z))
    }

    /// `V_1 = V_0^λ / λ`, homogeneous of degree `2 p_{r+1}`.
    pub fn v1(&self, z: &[f64]) -> Result<f64> {
        let lam = self.ladder.lambda_v();
        Ok(self.v0(z)?.powf(lam) / lam)
    }

    /// `∂_r V_1 = V_0^{λ−1} w_r`, homogeneous of degree zero; `0` at the origin.
    pub fn dr_v1(&self, z: &[f64]) -> Result<f64> {
        check_len(self.order(), z.len())?;
        let v = self.virtual_controls(z);
        let v0 = self.v0_with(z, &v)?;
        Ok(self.dr_v1_given(z, &v, v0))
    }

    fn dr_v1_given(&self, z: &[f64], v: &[f64], v0: f64) -> f64 {
        if v0 <= 0.0 {
            return 0.0;
        }
        let r = self.order();
        let wr = self.integrand(r, v[r - 1], z[r - 1]);
        v0.powf(self.ladder.lambda_v() - 1.0) * wr
    }

    /// `V_0`, `V_1` and `∂_r V_1` from a single recursion pass.
    pub fn evaluate(&self, z: &[f64]) -> Result<Evaluation> {
        check_len(self.order(), z.len())?;
        let v = self.virtual_controls(z);
        let v0 = self.v0_with(z, &v)?;
        let lam = self.ladder.lambda_v();
        Ok(Evaluation {
            v0,
            v1: v0.powf(lam) / lam,
            dr_v1: self.dr_v1_given(z, &v, v0),
        })
    }

    /// Time derivative of `V_0` along a velocity `zdot` (chain rule through
    /// the virtual controls). Not defined on the switching surface of the
    /// modified law, where the selection `sign(0) = 0` is used.
    pub fn v0_lie_derivative(&self, z: &[f64], zdot: &[f64]) -> Result<f64> {
        let r = self.order();
        check_len(r, z.len())?;
        check_len(r, zdot.len())?;
        let (v, vdot) = virtual_rates(z, zdot, &self.ladder, &self.gains);
        let beta = self.ladder.beta();
        let mut total = 0.0;
        for i in 1..=r {
            let (zi, vp, vpd) = (z[i - 1], v[i - 1], vdot[i - 1]);
            let b = beta[i - 1];
            total += self.integrand(i, vp, zi) * zdot[i - 1];
            if i == 1 {
                continue;
            }
            let dw_dv = if self.is_switching_level(i) {
                -2.0 * sign(zi - vp) * apow(vp, b) + b * apow(vp, b - 1.0) * sign(vp) * (zi - vp).abs()
            } else {
                -b * apow(vp, b - 1.0) * (zi - vp)
            };
            if vpd != 0.0 {
                total += dw_dv * vpd;
            }
        }
        Ok(total)
    }

    /// Time derivative of `V_1` along the pure closed loop `ż = J_r z + u_0(z) e_r`.
    pub fn v1_decay_rate(&self, z: &[f64]) -> Result<f64> {
        let u0 = self.u0(z)?;
        let zdot = control::chain_field(z, u0);
        let v0 = self.v0(z)?;
        if v0 <= 0.0 {
            return Ok(0.0);
        }
        Ok(v0.powf(self.ladder.lambda_v() - 1.0) * self.v0_lie_derivative(z, &zdot)?)
    }

    /// `V(z, ξ) = V_1(z) + ξ²/(2 k_I)`.
    pub fn augmented_v(&self, z: &[f64], xi: f64, k_i: f64) -> Result<f64> {
        Ok(self.v1(z)? + xi * xi / (2.0 * k_i))
    }

    /// Extended strict Lyapunov function `W(z, ξ)`.
    pub fn extended_w(&self, z: &[f64], xi: f64, a: f64, k_i: f64) -> Result<f64> {
        check_positive("A", a)?;
        check_positive("k_I", k_i)?;
        let v1 = self.v1(z)?;
        Ok(self.extended_w_given(v1, z[self.order() - 1], xi, a, k_i))
    }

    pub(crate) fn extended_w_given(&self, v1: f64, zr: f64, xi: f64, a: f64, k_i: f64) -> f64 {
        a * (v1 + xi * xi / (2.0 * k_i)).powf(self.w_exponent()) - zr * xi
    }

    /// `(∂_r W, ∂_ξ W)` in closed form.
    pub fn extended_w_partials(&self, z: &[f64], xi: f64, a: f64, k_i: f64) -> Result<(f64, f64)> {
        check_positive("A", a)?;
        check_positive("k_I", k_i)?;
        let e = self.evaluate(z)?;
        Ok(self.partials_given(&e, z[self.order() - 1], xi, a, k_i))
    }

    pub(crate) fn partials_given(&self, e: &Evaluation, zr: f64, xi: f64, a: f64, k_i: f64) -> (f64, f64) {
        let ex = self.w_exponent();
        let v = e.v1 + xi * xi / (2.0 * k_i);
        let outer = a * ex * v.powf(ex - 1.0);
        (outer * e.dr_v1 - xi, outer * xi / k_i - zr)
    }
}

/// `∫_v^z (⌊s⌉^β − ⌊v⌉^β) ds ≥ 0`.
///
/// When `z` and `v` share a sign the integral equals `|v|^{β+1} F(τ)` with
/// `τ = (z − v)/v` and `F(τ) = ((1+τ)^{β+1} − 1)/(β+1) − τ`; `F` is summed as
/// a binomial series for small `τ`, which avoids the cancellation of the
/// textbook antiderivative near `z = v`.
pub(crate) fn chain_potential(z: f64, v: f64, b: f64) -> f64 {
    if v == 0.0 || z == 0.0 || (z > 0.0) != (v > 0.0) {
        let w = (apow(z, b + 1.0) - apow(v, b + 1.0)) / (b + 1.0) - spow(v, b) * (z - v);
        return w.max(0.0);
    }
    let tau = (z - v) / v;
    let f = if tau.abs() < 0.1 {
        // Σ_{k≥2} C(β, k−1) τ^k / k
        let (mut coef, mut pow, mut sum) = (b, tau * tau, 0.0);
        for j in 1..40 {
            let term = coef * pow / (j + 1) as f64;
            sum += term;
            if term.abs() <= 1e-18 * sum.abs() {
                break;
            }
            coef *= (b - j as f64) / (j + 1) as f64;
            pow *= tau;
        }
        sum
    } else {
        ((b + 1.0) * tau.ln_1p()).exp_m1() / (b + 1.0) - tau
    };
    (v.abs().powf(b + 1.0) * f).max(0.0)
}

/// `V_0`, `V_1` and `∂_r V_1` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub v0: f64,
    pub v1: f64,
    pub dr_v1: f64,
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} = {x} must be positive")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn hong4() -> LyapunovBundle {
        LyapunovBundle::for_order(ControllerVariant::Hong, 4, vec![1.0, 1.0, 4.0, 8.0]).unwrap()
    }

    fn mhong4() -> LyapunovBundle {
        LyapunovBundle::for_order(ControllerVariant::ModifiedHong, 4, vec![1.0, 1.0, 4.0, 8.0]).unwrap()
    }

    /// Closed form of the switching-level potential `∫_{lo}^{hi} (|s|^β + |v|^β) ds`.
    fn switching_potential_closed(z: f64, v: f64, b: f64) -> f64 {
        let g = |s: f64| spow(s, b + 1.0) / (b + 1.0);
        (g(z) - g(v)).abs() + apow(v, b) * (z - v).abs()
    }

    #[test]
    fn potential_examples() {
        let b = hong4();
        assert_relative_eq!(b.potential_wi(1, &[1.0]).unwrap(), 5.0 / 9.0, max_relative = 1e-14);
        assert_relative_eq!(
            b.potential_wi(4, &[1.0, 0.0, 0.0, 0.0]).unwrap(),
            3584.0 / 9.0,
            max_relative = 1e-13
        );
        // z_2 = v_1 = −1 at z_1 = 1
        assert_eq!(b.potential_wi(2, &[1.0, -1.0]).unwrap(), 0.0);
        assert!(b.potential_wi(0, &[1.0]).is_err());
        assert!(b.potential_wi(3, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn chain_potential_near_diagonal() {
        // reference from the textbook antiderivative in well-conditioned cases
        let naive = |z: f64, v: f64, b: f64| (apow(z, b + 1.0) - apow(v, b + 1.0)) / (b + 1.0) - spow(v, b) * (z - v);
        for (z, v, b) in [(2.0, 1.0, 1.25), (-3.0, -0.5, 2.0), (0.7, 1.9, 3.5), (1.05, 1.0, 0.8)] {
            assert_relative_eq!(chain_potential(z, v, b), naive(z, v, b), max_relative = 1e-12);
        }
        // integer β has a polynomial closed form: β = 2 gives (z−v)²(z+2v)/3
        for (z, v) in [(1.0 + 1e-7, 1.0), (-5.0, -5.0 - 1e-9), (3.0, 2.9)] {
            let exact = (z - v) * (z - v) * (z + 2.0 * v) / 3.0;
            assert_relative_eq!(chain_potential(z, v, 2.0), exact.abs(), max_relative = 1e-12);
        }
        assert_eq!(chain_potential(1.0, 1.0, 1.5), 0.0);
    }

    #[test]
    fn v0_v1_anchors() {
        let b = hong4();
        assert_eq!(b.v0(&[0.0; 4]).unwrap(), 0.0);
        assert_relative_eq!(b.v0(&[1.0, 0.0, 0.0, 0.0]).unwrap(), 400.0, max_relative = 1e-13);
        assert_relative_eq!(b.v0(&[32.0, 0.0, 0.0, 0.0]).unwrap(), 204800.0, max_relative = 1e-12);

        let v1 = 4.5 * 400f64.powf(2.0 / 9.0);
        assert_relative_eq!(b.v1(&[1.0, 0.0, 0.0, 0.0]).unwrap(), v1, max_relative = 1e-13);
        assert_relative_eq!(b.v1(&[32.0, 0.0, 0.0, 0.0]).unwrap(), 4.0 * v1, max_relative = 1e-12);
        assert!((v1 - 17.04).abs() < 0.01);
    }

    #[test]
    fn dr_v1_anchors() {
        let b = hong4();
        let want = 128.0 / 400f64.powf(7.0 / 9.0);
        assert_relative_eq!(b.dr_v1(&[1.0, 0.0, 0.0, 0.0]).unwrap(), want, max_relative = 1e-13);
        assert_relative_eq!(b.dr_v1(&[32.0, 0.0, 0.0, 0.0]).unwrap(), want, max_relative = 1e-12);
        assert!((want - 1.212).abs() < 1e-3);
        assert_eq!(b.dr_v1(&[0.0; 4]).unwrap(), 0.0);
    }

    #[test]
    fn extended_w_anchors() {
        let b = hong4();
        assert_eq!(b.extended_w(&[0.0; 4], 0.0, 1.0, 1.0).unwrap(), 0.0);
        let v1 = b.v1(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_relative_eq!(
            b.extended_w(&[1.0, 0.0, 0.0, 0.0], 0.0, 1.0, 1.0).unwrap(),
            v1.powf(1.5),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            b.extended_w(&[0.0; 4], 1.0, 1.0, 1.0).unwrap(),
            0.5f64.powf(1.5),
            max_relative = 1e-14
        );
        assert!(b.extended_w(&[0.0; 4], 1.0, 0.0, 1.0).is_err());
        assert!(b.extended_w(&[0.0; 4], 1.0, 1.0, -1.0).is_err());
        assert_relative_eq!(b.theorem1_alpha(), 0.5, max_relative = 1e-15);
        assert_relative_eq!(b.w_exponent(), 1.5, max_relative = 1e-15);
    }

    #[test]
    fn switching_potential_matches_closed_form() {
        let b = mhong4();
        let beta = b.ladder().beta()[3];
        for z in [[1.0, 0.0, 0.0, 0.0], [0.3, -2.0, 1.1, 0.7], [-1.5, 0.4, 2.2, -3.0]] {
            let v = hong_virtual(&b, &z);
            let quad = b.potential_wi(4, &z).unwrap();
            let exact = switching_potential_closed(z[3], v[3], beta);
            assert_relative_eq!(quad, exact, max_relative = 1e-10);
        }
    }

    fn hong_virtual(b: &LyapunovBundle, z: &[f64]) -> Vec<f64> {
        control::hong_virtual_controls(z, b.ladder(), b.gains()).unwrap()
    }

    #[test]
    fn hong_closed_form_matches_quadrature() {
        let b = hong4();
        for z in [[0.4, -1.0, 2.0, 0.5], [-2.0, 0.1, -0.3, 3.0]] {
            let v = hong_virtual(&b, &z);
            for i in 1..=4 {
                let beta = b.ladder().beta()[i - 1];
                let f = |s: f64| spow(s, beta) - spow(v[i - 1], beta);
                let q = quadrature::integrate(f, v[i - 1], z[i - 1], &[0.0], 1e-13).unwrap();
                assert_relative_eq!(b.potential_wi(i, &z).unwrap(), q, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn lie_derivative_matches_finite_differences() {
        for b in [hong4(), mhong4()] {
            let z = [0.6, -0.9, 1.4, 0.8];
            let zdot = [-0.2, 0.5, 1.0, -1.7];
            let analytic = b.v0_lie_derivative(&z, &zdot).unwrap();
            let h = 1e-6;
            let p: Vec<f64> = z.iter().zip(&zdot).map(|(a, d)| a + h * d).collect();
            let m: Vec<f64> = z.iter().zip(&zdot).map(|(a, d)| a - h * d).collect();
            let fd = (b.v0(&p).unwrap() - b.v0(&m).unwrap()) / (2.0 * h);
            assert_relative_eq!(analytic, fd, max_relative = 1e-6);
        }
    }

    #[test]
    fn partials_match_finite_differences() {
        let b = hong4();
        let z = [0.6, -0.9, 1.4, 0.8];
        let (xi, a, ki) = (0.7, 3.0, 1.5);
        let (dr, dxi) = b.extended_w_partials(&z, xi, a, ki).unwrap();
        let h = 1e-6;
        let w = |z: &[f64], xi: f64| b.extended_w(z, xi, a, ki).unwrap();
        let fd_xi = (w(&z, xi + h) - w(&z, xi - h)) / (2.0 * h);
        let mut zp = z;
        let mut zm = z;
        zp[3] += h;
        zm[3] -= h;
        let fd_r = (w(&zp, xi) - w(&zm, xi)) / (2.0 * h);
        assert_relative_eq!(dxi, fd_xi, max_relative = 1e-7);
        assert_relative_eq!(dr, fd_r, max_relative = 1e-7);
    }

    #[test]
    fn order_one_closed_forms() {
        let b = LyapunovBundle::for_order(ControllerVariant::Hong, 1, vec![1.0]).unwrap();
        for z in [0.3, -2.0, 7.5] {
            assert_relative_eq!(b.v0(&[z]).unwrap(), z.abs().powf(1.5) / 1.5, max_relative = 1e-14);
            assert_relative_eq!(
                b.dr_v1(&[z]).unwrap(),
                1.5f64.powf(1.0 / 3.0) * z.signum(),
                max_relative = 1e-13
            );
            assert_relative_eq!(
                b.v1_decay_rate(&[z]).unwrap(),
                -(1.5f64.powf(1.0 / 3.0)) * z.abs().sqrt(),
                max_relative = 1e-13
            );
        }
    }
}
