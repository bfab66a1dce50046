//! Synthetic models and inputs for tests, benches and the fixture
//! generator binary.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::accel::Hierarchy;
use crate::exec::EngineSettings;
use crate::net::{Activation, Layer, LayerSpec, Network};
use crate::redy::{HistogramMode, PrecisionThresholds};
use crate::tensor::Tensor;
use crate::xbar::CrossbarConfig;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random kernel stack with roughly unit-variance outputs
/// (uniform weights scaled by fan-in).
pub fn random_weights(r: usize, s: usize, c: usize, k: usize, seed: u64) -> Tensor {
    let mut rng = rng(seed);
    let bound = (3.0 / (r * s * c) as f64).sqrt() as f32;
    let data: Vec<f32> = (0..r * s * c * k)
        .map(|_| rng.random_range(-bound..bound))
        .collect();
    Tensor::new(vec![r as u32, s as u32, c as u32, k as u32], data).unwrap()
}

/// Uniform random feature map over [-1, 1).
pub fn random_input(dims: (usize, usize, usize), seed: u64) -> Tensor {
    let (w, h, c) = dims;
    let mut rng = rng(seed);
    let data: Vec<f32> = (0..w * h * c).map(|_| rng.random_range(-1.0..1.0)).collect();
    Tensor::fmap(w, h, c, data).unwrap()
}

/// Two conv layers and a classifier head; the default workload for tests
/// and benches. Input 8x8x8, output 10 classes.
pub fn synthetic_net(seed: u64) -> Network {
    let l0 = LayerSpec::conv(3, 3, 8, 8, 1, 0, Activation::Relu);
    let l1 = LayerSpec::conv(3, 3, 8, 8, 1, 0, Activation::Relu);
    let l2 = LayerSpec::fc(4 * 4 * 8, 10, Activation::None);
    Network::new(
        (8, 8, 8),
        vec![
            Layer { spec: l0, weights: Some(random_weights(3, 3, 8, 8, seed)) },
            Layer { spec: l1, weights: Some(random_weights(3, 3, 8, 8, seed ^ 0xa5a5)) },
            Layer { spec: l2, weights: Some(random_weights(1, 1, 128, 10, seed ^ 0x5a5a)) },
        ],
    )
    .unwrap()
}

/// Smaller two-layer net for cheap unit tests. Input 6x6x8.
pub fn small_net(seed: u64) -> Network {
    let l0 = LayerSpec::conv(3, 3, 8, 4, 1, 0, Activation::Relu);
    let l1 = LayerSpec::fc(4 * 4 * 4, 4, Activation::None);
    Network::new(
        (6, 6, 8),
        vec![
            Layer { spec: l0, weights: Some(random_weights(3, 3, 8, 4, seed)) },
            Layer { spec: l1, weights: Some(random_weights(1, 1, 64, 4, seed ^ 0x77)) },
        ],
    )
    .unwrap()
}

/// A net whose first layer has fewer input channels than the histogram bin
/// count (an RGB-style stem), exercising the exclusion path.
pub fn rgb_stem_net(seed: u64) -> Network {
    let l0 = LayerSpec::conv(3, 3, 3, 8, 1, 0, Activation::Relu);
    let l1 = LayerSpec::conv(3, 3, 8, 8, 1, 0, Activation::Relu);
    Network::new(
        (8, 8, 3),
        vec![
            Layer { spec: l0, weights: Some(random_weights(3, 3, 3, 8, seed)) },
            Layer { spec: l1, weights: Some(random_weights(3, 3, 8, 8, seed ^ 0x33)) },
        ],
    )
    .unwrap()
}

/// Default engine settings matching the shipped configuration.
pub fn default_settings() -> EngineSettings {
    EngineSettings {
        crossbar: CrossbarConfig::default(),
        hierarchy: Hierarchy::default(),
        bins: 8,
        subsample_ratio: 1.0,
        thresholds: PrecisionThresholds::default_grid_center(),
        histogram_mode: HistogramMode::Exact,
        seed: 0,
    }
}

/// Half-normal values concentrated near zero: the congested-distribution
/// archetype.
pub fn congested_group(n: usize, sigma: f32, seed: u64) -> Vec<f32> {
    let mut rng = rng(seed);
    (0..n)
        .map(|_| {
            // Box-Muller, folded to a half-normal.
            let u1: f64 = rng.random_range(1e-12..1.0);
            let u2: f64 = rng.random_range(0.0..1.0);
            let z = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
            (z.abs() as f32) * sigma
        })
        .collect()
}

/// Values spread evenly over [0, hi): the near-uniform archetype.
pub fn flat_group(n: usize, hi: f32, seed: u64) -> Vec<f32> {
    let mut rng = rng(seed);
    (0..n).map(|_| rng.random_range(0.0..hi)).collect()
}
