#![allow(dead_code)]

use mdlasso_core::distributions::ErrorDistribution;
use mdlasso_core::Dataset;
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((n, p), || rng.sample(StandardNormal))
}

/// `y = X beta + noise` with `sparsity` leading coefficients in `(1, 3)`.
pub fn sparse_instance(
    seed: u64,
    n: usize,
    p: usize,
    sparsity: usize,
    noise: &ErrorDistribution,
) -> (Dataset, Array1<f64>) {
    let mut rng = rng(seed);
    let x = gaussian_matrix(&mut rng, n, p);
    let beta = Array1::from_shape_fn(p, |j| {
        if j < sparsity {
            rng.random_range(1.0..3.0)
        } else {
            0.0
        }
    });
    let eta = Array1::from(noise.sample_n(&mut rng, n));
    let y = x.dot(&beta) + eta;
    (Dataset::new(x, y).unwrap(), beta)
}

/// Five-point central difference of `f` along `direction`.
pub fn directional_derivative(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    (-f(2.0 * h) + 8.0 * f(h) - 8.0 * f(-h) + f(-2.0 * h)) / (12.0 * h)
}

pub fn norm(v: &Array1<f64>) -> f64 {
    v.dot(v).sqrt()
}

pub fn max_abs(v: &Array1<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
