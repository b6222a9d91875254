//! Time signals and the perturbed-chain plant description.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SignalKind {
    Constant,
    Sinusoid,
}

/// `offset + amplitude · sin(angular_frequency · t + phase)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Signal {
    pub kind: SignalKind,
    pub offset: f64,
    pub amplitude: f64,
    pub angular_frequency: f64,
    pub phase: f64,
}

impl Signal {
    pub fn constant(value: f64) -> Self {
        Self {
            kind: SignalKind::Constant,
            offset: value,
            amplitude: 0.0,
            angular_frequency: 0.0,
            phase: 0.0,
        }
    }

    pub fn sinusoid(offset: f64, amplitude: f64, angular_frequency: f64, phase: f64) -> Self {
        Self {
            kind: SignalKind::Sinusoid,
            offset,
            amplitude,
            angular_frequency,
            phase,
        }
    }

    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        match self.kind {
            SignalKind::Constant => self.offset,
            SignalKind::Sinusoid => self.offset + self.amplitude * (self.angular_frequency * t + self.phase).sin(),
        }
    }

    fn swing(&self) -> f64 {
        match self.kind {
            SignalKind::Constant => 0.0,
            SignalKind::Sinusoid => self.amplitude.abs(),
        }
    }

    pub fn lower_bound(&self) -> f64 {
        self.offset - self.swing()
    }

    pub fn upper_bound(&self) -> f64 {
        self.offset + self.swing()
    }

    /// `sup |value|`.
    pub fn magnitude_bound(&self) -> f64 {
        self.offset.abs() + self.swing()
    }

    /// `sup |d/dt value|`.
    pub fn derivative_bound(&self) -> f64 {
        match self.kind {
            SignalKind::Constant => 0.0,
            SignalKind::Sinusoid => (self.amplitude * self.angular_frequency).abs(),
        }
    }
}

/// `ż = J_r z + (γ(t) u + φ(t)) e_r`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantConfig {
    r: usize,
    pub gamma: Signal,
    pub phi: Signal,
}

impl PlantConfig {
    pub fn new(r: usize, gamma: Signal, phi: Signal) -> Result<Self> {
        if r == 0 {
            return Err(Error::Domain("plant order must be at least 1".into()));
        }
        if !(gamma.lower_bound() > 0.0) {
            return Err(Error::Domain(format!(
                "positive γ_m required, γ(t) ranges down to {}",
                gamma.lower_bound()
            )));
        }
        Ok(Self { r, gamma, phi })
    }

    /// Unperturbed chain: `γ ≡ 1`, `φ ≡ 0`.
    pub fn nominal(r: usize) -> Result<Self> {
        Self::new(r, Signal::constant(1.0), Signal::constant(0.0))
    }

    pub fn order(&self) -> usize {
        self.r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinusoid_metadata() {
        let g = Signal::sinusoid(3.0, 0.5, 0.5, 0.0);
        assert_eq!(g.lower_bound(), 2.5);
        assert_eq!(g.upper_bound(), 3.5);
        assert_eq!(g.derivative_bound(), 0.25);
        let phi = Signal::sinusoid(0.0, 1.0, 1.0, 0.0);
        assert_eq!(phi.derivative_bound(), 1.0);
        assert_eq!(phi.magnitude_bound(), 1.0);
        assert_eq!(phi.value(std::f64::consts::FRAC_PI_2), 1.0);
    }

    #[test]
    fn constant_signal() {
        let c = Signal::constant(-2.0);
        assert_eq!(c.value(17.0), -2.0);
        assert_eq!(c.derivative_bound(), 0.0);
        assert_eq!(c.magnitude_bound(), 2.0);
    }

    #[test]
    fn plant_rejects_nonpositive_gamma() {
        assert!(PlantConfig::new(4, Signal::constant(0.0), Signal::constant(0.0)).is_err());
        assert!(PlantConfig::new(4, Signal::sinusoid(1.0, 1.0, 1.0, 0.0), Signal::constant(0.0)).is_err());
        assert!(PlantConfig::new(0, Signal::constant(1.0), Signal::constant(0.0)).is_err());
        assert_eq!(PlantConfig::nominal(3).unwrap().order(), 3);
    }
}
