//! Fixtures shared by the benchmarks.

use host_core::{homogeneous_sphere_sample, ControllerVariant, LyapunovBundle};

pub const Z0: [f64; 4] = [-5.0, 2.0, 4.0, 4.0];

pub fn reference_bundle(variant: ControllerVariant) -> LyapunovBundle {
    LyapunovBundle::for_order(variant, 4, vec![1.0, 1.0, 4.0, 8.0]).expect("valid gains")
}

/// Points on the unit homogeneous sphere of the order-4 ladder.
pub fn sphere_points(bundle: &LyapunovBundle, n: usize) -> Vec<Vec<f64>> {
    homogeneous_sphere_sample(&bundle.ladder().state_weights(), n, 7)
}
