//! Deterministic samples on the unit sphere of a homogeneous norm.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::algebra::DilationWeights;

/// `n` points with `‖x‖_w = 1`, where `‖·‖_w` is [`DilationWeights::homogeneous_norm`].
///
/// Each point is a Gaussian direction pushed along its dilation orbit onto
/// the sphere, so every orbit of `δ_ε` is hit exactly once per direction.
pub fn homogeneous_sphere_sample(weights: &DilationWeights, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = weights.len();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let dir: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        if let Ok(x) = weights.project_to_sphere(&dir) {
            out.push(x);
        }
    }
    out
}
