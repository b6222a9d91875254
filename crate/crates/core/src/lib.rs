//! Higher-order super-twisting (HOST) feedback for chains of integrators.
//!
//! The crate builds Hong and modified-Hong homogeneous controllers, their
//! Lyapunov functions, the HOST integral-action laws, and a fixed-step
//! simulator with checks on the recorded trajectories.
//!
//! ```
//! use host_core::{ControllerVariant, LyapunovBundle};
//!
//! let b = LyapunovBundle::for_order(ControllerVariant::Hong, 4, vec![1.0, 1.0, 4.0, 8.0]).unwrap();
//! assert!((b.u0(&[1.0, 0.0, 0.0, 0.0]).unwrap() + 16.0).abs() < 1e-12);
//! assert!((b.v0(&[1.0, 0.0, 0.0, 0.0]).unwrap() - 400.0).abs() < 1e-10);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)] // negated comparisons reject NaN

pub mod algebra;
pub mod control;
pub mod error;
pub mod feedback;
pub mod ladder;
pub mod lyapunov;
pub mod sim;

pub use algebra::{homogeneity_residual, sign, signed_power, DilationWeights};
pub use control::{
    chain_field, control, hong_control, hong_virtual_controls, modified_hong_control, ControllerVariant,
};
pub use error::{Error, Result};
pub use feedback::{
    advance_integrator, advance_with_rate, host_control, integrator_rate, lambda_lower_bound, HostConfig, HostState,
    HostVariant, PerturbationBounds,
};
pub use ladder::{ExponentLadder, GainVector};
pub use lyapunov::{
    calibrate, homogeneous_sphere_sample, recheck, CalibrationOptions, CalibrationResult, Evaluation, LyapunovBundle,
    RecheckReport,
};
pub use sim::{
    check_disturbance_reconstruction, check_lyapunov_decrease, check_v0_decrease, detect_convergence,
    detect_convergence_with, pre_reset_cuberoots, simulate, state_norm, Controller, ConvergenceNorm, DisturbanceReport,
    LyapunovReport, Method, PlantConfig, ResetRecord, Signal, SignalKind, SimOptions, Trajectory, V0Decrease,
};
