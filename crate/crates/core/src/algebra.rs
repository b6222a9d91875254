//! Signed fractional powers and weighted dilations.
//!
//! Everything homogeneous in this crate is built on two primitives: the
//! signed power `⌊x⌉^a = |x|^a sign(x)` with the single-valued selection
//! `sign(0) = 0`, and the dilation `x_i ↦ ε^{w_i} x_i` for a weight vector `w`.

use crate::error::{check_len, Error, Result};

/// Magnitudes below this are treated as exact zeros by [`signed_power`].
pub const ZERO_GUARD: f64 = 1e-300;

/// `|x|^a · sign(x)` with `sign(0) = 0`.
pub fn signed_power(x: f64, a: f64) -> Result<f64> {
    if x.is_nan() || a.is_nan() {
        return Err(Error::Domain("signed_power of NaN".into()));
    }
    if a < 0.0 {
        return Err(Error::Domain(format!("signed_power exponent {a} < 0")));
    }
    Ok(spow(x, a))
}

/// Unchecked [`signed_power`] for hot paths where `a ≥ 0` is a structural guarantee.
#[inline]
pub(crate) fn spow(x: f64, a: f64) -> f64 {
    let m = x.abs();
    if m < ZERO_GUARD {
        return 0.0;
    }
    if a == 1.0 {
        return x;
    }
    let mag = if a == 0.0 { 1.0 } else { m.powf(a) };
    mag.copysign(x)
}

/// `|x|^a` with `0^a = 0` for every `a ≠ 0`. For negative `a` this is a
/// selection at a singular point, used only inside derivative formulas.
#[inline]
pub(crate) fn apow(x: f64, a: f64) -> f64 {
    let m = x.abs();
    if m < ZERO_GUARD {
        if a == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        m.powf(a)
    }
}

/// `sign(x)` with the selection `sign(0) = 0`.
#[inline]
pub fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Positive weights of a dilation family `δ_ε(x)_i = ε^{w_i} x_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct DilationWeights {
    weights: Vec<f64>,
}

impl DilationWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Domain("dilation needs at least one weight".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(Error::Domain(format!("dilation weight {w} is not positive")));
        }
        Ok(Self { weights })
    }

    /// Integer weights `(r, r-1, …, 1)`: applying this family with `ε = λ`
    /// gives the time-rescaling matrix `D_λ = diag(λ^r, …, λ)`.
    pub fn time_rescaling(r: usize) -> Result<Self> {
        Self::new((1..=r).rev().map(|k| k as f64).collect())
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `δ_ε(x)`.
    pub fn apply(&self, eps: f64, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.len(), x.len())?;
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::Domain(format!("dilation parameter {eps} must be positive")));
        }
        Ok(self.apply_unchecked(eps, x))
    }

    pub(crate) fn apply_unchecked(&self, eps: f64, x: &[f64]) -> Vec<f64> {
        if eps == 1.0 {
            return x.to_vec();
        }
        let ln = eps.ln();
        self.weights.iter().zip(x).map(|(w, xi)| (w * ln).exp() * xi).collect()
    }

    /// Homogeneous norm `(Σ |x_i|^{2/w_i})^{1/2}`, of degree one for this family.
    pub fn homogeneous_norm(&self, x: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(x)
            .map(|(w, xi)| apow(*xi, 2.0 / w))
            .sum::<f64>()
            .sqrt()
    }

    /// Moves `x ≠ 0` along its dilation orbit onto the unit homogeneous sphere.
    pub fn project_to_sphere(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.len(), x.len())?;
        let n = self.homogeneous_norm(x);
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Domain("cannot project the origin onto the sphere".into()));
        }
        Ok(self.apply_unchecked(1.0 / n, x))
    }
}

/// Relative homogeneity defect `|f(δ_ε x) − ε^m f(x)| / (|ε^m f(x)| + floor)`.
pub fn homogeneity_residual<F>(f: F, weights: &DilationWeights, degree: f64, x: &[f64], eps: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    if x.iter().all(|v| *v == 0.0) {
        return Err(Error::Domain("homogeneity residual needs x ≠ 0".into()));
    }
    let scaled = weights.apply(eps, x)?;
    let lhs = f(&scaled)?;
    let rhs = eps.powf(degree) * f(x)?;
    Ok((lhs - rhs).abs() / (rhs.abs() + f64::MIN_POSITIVE))
}
