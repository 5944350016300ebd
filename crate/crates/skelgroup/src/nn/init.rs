//! Weight initialization.

use rand_distr::{Distribution, Normal};

use crate::nn::Tensor;
use crate::DetRng;

/// He-style normal initialization: samples each element from
/// `N(0, sqrt(2 / fan_in)^2)`. Suits layers followed by ReLU.
pub fn he_normal(rng: &mut DetRng, shape: &[usize], fan_in: usize) -> Tensor {
    assert!(fan_in > 0, "fan_in must be positive");
    let std = (2.0 / fan_in as f64).sqrt();
    let normal = Normal::new(0.0, std).expect("std is finite and positive");
    let data = (0..shape.iter().product::<usize>())
        .map(|_| normal.sample(rng))
        .collect();
    Tensor::from_vec(shape, data).expect("length matches shape by construction")
}
