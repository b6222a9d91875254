//! Homogeneity exponents of an integrator chain of order `r`.
//!
//! With the normalization `p = 1` and `κ = −1/(r+1)` the weights are
//! `p_i = 1 + (i−1)κ` (so `p_{r+1} = 1/(r+1)`), the ratios are
//! `α_i = p_{i+1}/p_i`, and the Lyapunov exponents satisfy `β_0 = p_2`,
//! `(β_i + 1) p_{i+1} = β_0 + 1`.

use crate::algebra::DilationWeights;
use crate::error::{Error, Result};

/// All exponents used by the controllers and Lyapunov functions for order `r`.
///
/// Vectors are stored zero-based: `p[0]` is `p_1`, `beta[0]` is `β_0`,
/// `alpha[0]` is `α_1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentLadder {
    r: usize,
    kappa: f64,
    p: Vec<f64>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    lambda_v: f64,
}

impl ExponentLadder {
    pub fn new(r: usize) -> Result<Self> {
        if r == 0 {
            return Err(Error::Domain("chain order must be at least 1".into()));
        }
        let kappa = -1.0 / (r as f64 + 1.0);
        let p: Vec<f64> = (0..=r).map(|i| 1.0 + i as f64 * kappa).collect();
        let alpha = (0..r).map(|i| p[i + 1] / p[i]).collect();
        let beta0 = p[1];
        let beta: Vec<f64> = std::iter::once(beta0)
            .chain((1..r).map(|i| (beta0 + 1.0) / p[i] - 1.0))
            .collect();
        let lambda_v = 1.0 / (1.0 + beta[r - 1]);
        Ok(Self {
            r,
            kappa,
            p,
            alpha,
            beta,
            lambda_v,
        })
    }

    pub fn order(&self) -> usize {
        self.r
    }

    /// Homogeneity degree `κ` of the closed-loop vector field.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Weights `p_1, …, p_{r+1}`.
    pub fn p(&self) -> &[f64] {
        &self.p
    }

    /// `α_1, …, α_r`.
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// `β_0, …, β_{r−1}`.
    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// Exponent `λ` in `V_1 = V_0^λ / λ`; equals `2/(2r+1)`.
    pub fn lambda_v(&self) -> f64 {
        self.lambda_v
    }

    /// Degree of the stabilizing feedback `u_0`, namely `p_{r+1}`.
    pub fn control_degree(&self) -> f64 {
        self.p[self.r]
    }

    /// Degree of `V_0`, namely `β_0 + 1`.
    pub fn v0_degree(&self) -> f64 {
        self.beta[0] + 1.0
    }

    /// Degree of `V_1`, namely `2 p_{r+1}`.
    pub fn v1_degree(&self) -> f64 {
        2.0 * self.p[self.r]
    }

    /// Degree of the extended function `W(z, ξ)` under `ψ_ε`, namely `3 p_{r+1}`.
    pub fn w_degree(&self) -> f64 {
        3.0 * self.p[self.r]
    }

    /// Dilation `δ_ε` on the state `z ∈ ℝ^r`.
    pub fn state_weights(&self) -> DilationWeights {
        DilationWeights::new(self.p[..self.r].to_vec()).expect("ladder weights are positive")
    }

    /// Dilation `ψ_ε` on the extended state `(z, ξ) ∈ ℝ^{r+1}`.
    pub fn extended_weights(&self) -> DilationWeights {
        DilationWeights::new(self.p.clone()).expect("ladder weights are positive")
    }
}

/// Positive controller gains `l_1, …, l_r`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainVector(Vec<f64>);

impl GainVector {
    pub fn new(l: Vec<f64>) -> Result<Self> {
        if l.is_empty() {
            return Err(Error::Domain("gain vector is empty".into()));
        }
        if let Some(g) = l.iter().find(|g| !(**g > 0.0) || !g.is_finite()) {
            return Err(Error::Domain(format!("gain {g} is not positive")));
        }
        Ok(Self(l))
    }

    /// Gains `(1, 1, 4, 8)` used for the order-four reproduction runs.
    pub fn reference_order4() -> Self {
        Self(vec![1.0, 1.0, 4.0, 8.0])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}
