use ndarray::Array1;
use rand::seq::index::sample;
use rand::Rng;
use serde::Serialize;

use super::design::Covariance;
use crate::error::{MdLassoError, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimTruth {
    pub beta_star: Array1<f64>,
    /// Sorted support indices.
    pub support: Vec<usize>,
    pub sparsity: usize,
    pub covariance: Covariance,
}

/// Sparse coefficients: `s` uniform on `{3, ..., 10}`, a uniform random
/// support of that size and values uniform on `(1, 3)`.
pub fn generate_truth<R: Rng + ?Sized>(
    p: usize,
    covariance: Covariance,
    rng: &mut R,
) -> Result<SimTruth> {
    if p < 10 {
        return Err(MdLassoError::invalid(
            "p",
            format!("must be >= 10, got {p}"),
        ));
    }
    covariance.check_dim(p)?;
    let sparsity = rng.random_range(3..=10);
    let mut support = sample(rng, p, sparsity).into_vec();
    support.sort_unstable();
    let mut beta_star = Array1::zeros(p);
    for &j in &support {
        let mut v = 1.0;
        while v == 1.0 {
            v = rng.random_range(1.0..3.0);
        }
        beta_star[j] = v;
    }
    Ok(SimTruth {
        beta_star,
        support,
        sparsity,
        covariance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{substream, StreamTag};

    #[test]
    fn truth_ranges() {
        let mut sizes = std::collections::BTreeSet::new();
        for rep in 0..200 {
            let mut rng = substream(11, rep, StreamTag::Truth);
            let t = generate_truth(40, Covariance::Toeplitz { rho: 0.5 }, &mut rng).unwrap();
            assert!((3..=10).contains(&t.sparsity));
            assert_eq!(t.support.len(), t.sparsity);
            assert!(t.support.windows(2).all(|w| w[0] < w[1]));
            for (j, &b) in t.beta_star.iter().enumerate() {
                if t.support.contains(&j) {
                    assert!(b > 1.0 && b < 3.0);
                } else {
                    assert_eq!(b, 0.0);
                }
            }
            sizes.insert(t.sparsity);
        }
        assert_eq!(sizes.len(), 8);
    }

    #[test]
    fn truth_is_deterministic() {
        let draw = || {
            generate_truth(
                50,
                Covariance::Toeplitz { rho: 0.5 },
                &mut substream(3, 1, StreamTag::Truth),
            )
            .unwrap()
        };
        assert_eq!(draw(), draw());
        assert!(generate_truth(
            9,
            Covariance::Toeplitz { rho: 0.5 },
            &mut substream(3, 1, StreamTag::Truth)
        )
        .is_err());
    }
}
