use ndarray::{Array2, ArrayView1, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, MdLassoError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum DesignModel {
    /// Gaussian rows with covariance `rho^{|i-j|}`.
    Toeplitz { rho: f64 },
    /// `X = phi F^T + eps` with two standard normal factors, loadings
    /// `F` (p x 2) drawn once per design and unit idiosyncratic noise.
    TwoFactor,
}

impl Default for DesignModel {
    fn default() -> Self {
        DesignModel::Toeplitz { rho: 0.5 }
    }
}

impl DesignModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DesignModel::Toeplitz { rho } if !(rho > 0.0 && rho < 1.0) => Err(
                MdLassoError::invalid("rho", format!("must lie in (0, 1), got {rho}")),
            ),
            _ => Ok(()),
        }
    }
}

/// Population covariance of a generated design.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum Covariance {
    Toeplitz {
        rho: f64,
    },
    /// `F F^T + I` for the realized loadings.
    LowRankPlusIdentity {
        loadings: Array2<f64>,
    },
}

impl Covariance {
    /// `d^T Sigma d`, in O(p) for Toeplitz and O(p k) for low rank.
    pub fn quadratic_form(&self, d: ArrayView1<'_, f64>) -> f64 {
        match self {
            Covariance::Toeplitz { rho } => {
                // h_i = sum_{j<i} rho^{i-j} d_j satisfies h_i = rho (h_{i-1} + d_{i-1}).
                let mut h = 0.0;
                let mut prev = 0.0;
                let mut total = 0.0;
                for &di in d {
                    h = rho * (h + prev);
                    total += di * di + 2.0 * di * h;
                    prev = di;
                }
                total.max(0.0)
            }
            Covariance::LowRankPlusIdentity { loadings } => {
                let proj = loadings.t().dot(&d);
                d.dot(&d) + proj.dot(&proj)
            }
        }
    }

    /// The p x p matrix.
    pub fn dense(&self, p: usize) -> Array2<f64> {
        match self {
            Covariance::Toeplitz { rho } => {
                Array2::from_shape_fn((p, p), |(i, j)| rho.powi((i as i32 - j as i32).abs()))
            }
            Covariance::LowRankPlusIdentity { loadings } => {
                let mut m = loadings.dot(&loadings.t());
                m.diag_mut().mapv_inplace(|v| v + 1.0);
                m
            }
        }
    }

    pub(crate) fn check_dim(&self, p: usize) -> Result<()> {
        match self {
            Covariance::Toeplitz { .. } => Ok(()),
            Covariance::LowRankPlusIdentity { loadings } => {
                check_len("covariance dimension", loadings.nrows(), p)
            }
        }
    }
}

/// An `n x p` design and its population covariance.
pub fn generate_design<R: Rng + ?Sized>(
    model: DesignModel,
    n: usize,
    p: usize,
    rng: &mut R,
) -> Result<(Array2<f64>, Covariance)> {
    model.validate()?;
    if n == 0 || p == 0 {
        return Err(MdLassoError::invalid("n, p", "must be >= 1"));
    }
    let normal = |shape: (usize, usize), rng: &mut R| {
        Array2::from_shape_simple_fn(shape, || rng.sample(StandardNormal))
    };
    match model {
        DesignModel::Toeplitz { rho } => {
            // Each row is a stationary AR(1) path, which has exactly this covariance.
            let innovation = (1.0 - rho * rho).sqrt();
            let z: Array2<f64> = normal((n, p), rng);
            let mut x = z;
            for mut row in x.axis_iter_mut(Axis(0)) {
                for j in 1..p {
                    row[j] = rho * row[j - 1] + innovation * row[j];
                }
            }
            Ok((x, Covariance::Toeplitz { rho }))
        }
        DesignModel::TwoFactor => {
            let loadings = normal((p, 2), rng);
            let factors = normal((n, 2), rng);
            let noise = normal((n, p), rng);
            let x = factors.dot(&loadings.t()) + noise;
            Ok((x, Covariance::LowRankPlusIdentity { loadings }))
        }
    }
}

/// Sample covariance of the columns, dividing by `n`.
#[cfg(test)]
pub(crate) fn sample_covariance(x: &Array2<f64>) -> Array2<f64> {
    let n = x.nrows() as f64;
    let mean: ndarray::Array1<f64> = x.mean_axis(Axis(0)).expect("non-empty");
    let centred = x - &mean;
    centred.t().dot(&centred) / n
}
