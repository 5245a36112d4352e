//! Symmetric noise laws used by the simulation harness and the bound
//! calculators: exact tail probabilities, densities, selected moments and
//! samplers.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use libm::erfc;
use rand::Rng;
use rand_distr::{Distribution, Open01, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use statrs::function::gamma::ln_gamma;

use crate::error::{MdLassoError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ErrorDistribution {
    Normal {
        sigma: f64,
    },
    Laplace {
        scale: f64,
    },
    /// `(h N(0, sd_small^2) + (1 - h) N(0, sd_large^2)) / normalizer` with
    /// `h ~ Bernoulli(prob_small)`; the normalizer gives unit variance.
    GaussMixture {
        prob_small: f64,
        sd_small: f64,
        sd_large: f64,
    },
    StudentT {
        df: f64,
    },
    Cauchy {
        scale: f64,
    },
}

impl ErrorDistribution {
    pub fn standard_normal() -> Self {
        ErrorDistribution::Normal { sigma: 1.0 }
    }

    pub fn standard_laplace() -> Self {
        ErrorDistribution::Laplace { scale: 1.0 }
    }

    /// 90% N(0,1), 10% N(0,15^2), rescaled by sqrt(23.4).
    pub fn default_mixture() -> Self {
        ErrorDistribution::GaussMixture {
            prob_small: 0.9,
            sd_small: 1.0,
            sd_large: 15.0,
        }
    }

    pub fn student_t4() -> Self {
        ErrorDistribution::StudentT { df: 4.0 }
    }

    pub fn standard_cauchy() -> Self {
        ErrorDistribution::Cauchy { scale: 1.0 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ErrorDistribution::Normal { .. } => "normal",
            ErrorDistribution::Laplace { .. } => "laplace",
            ErrorDistribution::GaussMixture { .. } => "gauss_mixture",
            ErrorDistribution::StudentT { .. } => "student_t",
            ErrorDistribution::Cauchy { .. } => "cauchy",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(MdLassoError::invalid(
                    name,
                    format!("must be finite and > 0, got {v}"),
                ))
            }
        };
        match *self {
            ErrorDistribution::Normal { sigma } => positive("sigma", sigma),
            ErrorDistribution::Laplace { scale } | ErrorDistribution::Cauchy { scale } => {
                positive("scale", scale)
            }
            ErrorDistribution::StudentT { df } => positive("df", df),
            ErrorDistribution::GaussMixture {
                prob_small,
                sd_small,
                sd_large,
            } => {
                positive("sd_small", sd_small)?;
                positive("sd_large", sd_large)?;
                if (0.0..=1.0).contains(&prob_small) {
                    Ok(())
                } else {
                    Err(MdLassoError::invalid("prob_small", "must lie in [0, 1]"))
                }
            }
        }
    }

    /// `sqrt(p sd_small^2 + (1 - p) sd_large^2)`, which is sqrt(23.4) for the default mixture.
    pub fn mixture_normalizer(prob_small: f64, sd_small: f64, sd_large: f64) -> f64 {
        (prob_small * sd_small * sd_small + (1.0 - prob_small) * sd_large * sd_large).sqrt()
    }

    /// Mixture components as (probability, standard deviation) after normalization.
    pub(crate) fn mixture_components(
        prob_small: f64,
        sd_small: f64,
        sd_large: f64,
    ) -> [(f64, f64); 2] {
        let k = Self::mixture_normalizer(prob_small, sd_small, sd_large);
        [(prob_small, sd_small / k), (1.0 - prob_small, sd_large / k)]
    }

    /// `Var(eta)`, or `None` when it is infinite or undefined.
    pub fn variance(&self) -> Option<f64> {
        match *self {
            ErrorDistribution::Normal { sigma } => Some(sigma * sigma),
            ErrorDistribution::Laplace { scale } => Some(2.0 * scale * scale),
            ErrorDistribution::GaussMixture { .. } => Some(1.0),
            ErrorDistribution::StudentT { df } if df > 2.0 => Some(df / (df - 2.0)),
            ErrorDistribution::StudentT { .. } | ErrorDistribution::Cauchy { .. } => None,
        }
    }

    /// `P(|eta| >= gamma)`.
    pub fn tail_prob(&self, gamma: f64) -> Result<f64> {
        if !(gamma >= 0.0) {
            return Err(MdLassoError::invalid(
                "gamma",
                format!("must be >= 0, got {gamma}"),
            ));
        }
        self.validate()?;
        let tail = match *self {
            ErrorDistribution::Normal { sigma } => erfc(gamma / (sigma * SQRT_2)),
            ErrorDistribution::Laplace { scale } => (-gamma / scale).exp(),
            ErrorDistribution::Cauchy { scale } => 1.0 - 2.0 * (gamma / scale).atan() / PI,
            ErrorDistribution::StudentT { df } => {
                if gamma == 0.0 {
                    1.0
                } else if gamma.is_infinite() {
                    0.0
                } else {
                    beta_reg(0.5 * df, 0.5, df / (df + gamma * gamma))
                }
            }
            ErrorDistribution::GaussMixture {
                prob_small,
                sd_small,
                sd_large,
            } => Self::mixture_components(prob_small, sd_small, sd_large)
                .iter()
                .map(|&(w, sd)| w * erfc(gamma / (sd * SQRT_2)))
                .sum(),
        };
        Ok(tail.clamp(0.0, 1.0))
    }

    /// Probability density at `x`.
    pub fn density(&self, x: f64) -> f64 {
        let normal = |x: f64, sd: f64| (-0.5 * (x / sd).powi(2)).exp() / (sd * (2.0 * PI).sqrt());
        match *self {
            ErrorDistribution::Normal { sigma } => normal(x, sigma),
            ErrorDistribution::Laplace { scale } => (-x.abs() / scale).exp() / (2.0 * scale),
            ErrorDistribution::Cauchy { scale } => 1.0 / (PI * scale * (1.0 + (x / scale).powi(2))),
            ErrorDistribution::StudentT { df } => {
                let log_norm =
                    ln_gamma(0.5 * (df + 1.0)) - ln_gamma(0.5 * df) - 0.5 * (df * PI).ln();
                (log_norm - 0.5 * (df + 1.0) * (x * x / df).ln_1p()).exp()
            }
            ErrorDistribution::GaussMixture {
                prob_small,
                sd_small,
                sd_large,
            } => Self::mixture_components(prob_small, sd_small, sd_large)
                .iter()
                .map(|&(w, sd)| w * normal(x, sd))
                .sum(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ErrorDistribution::Normal { sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                sigma * z
            }
            ErrorDistribution::Laplace { scale } => {
                // Inverse CDF of the symmetric exponential.
                let u: f64 = Open01.sample(rng);
                let centred = u - 0.5;
                -scale * centred.signum() * (1.0 - 2.0 * centred.abs()).ln()
            }
            ErrorDistribution::Cauchy { scale } => {
                let u: f64 = Open01.sample(rng);
                scale * (PI * (u - 0.5)).tan()
            }
            ErrorDistribution::StudentT { df } => {
                StudentT::new(df).expect("validated df").sample(rng)
            }
            ErrorDistribution::GaussMixture {
                prob_small,
                sd_small,
                sd_large,
            } => {
                let k = Self::mixture_normalizer(prob_small, sd_small, sd_large);
                let sd = if rng.random_bool(prob_small) {
                    sd_small
                } else {
                    sd_large
                };
                let z: f64 = StandardNormal.sample(rng);
                sd * z / k
            }
        }
    }

    pub fn sample_n<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.sample(rng)).collect()
    }
}

impl fmt::Display for ErrorDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ErrorDistribution {
    type Err = MdLassoError;

    /// Accepts the family names with their default parameters, plus
    /// `student_t:<df>` and `normal:<sigma>`-style overrides.
    fn from_str(s: &str) -> Result<Self> {
        let (family, param) = match s.split_once(':') {
            Some((f, p)) => {
                let v: f64 = p.parse().map_err(|_| {
                    MdLassoError::invalid("distribution", format!("bad parameter in `{s}`"))
                })?;
                (f, Some(v))
            }
            None => (s, None),
        };
        let dist = match family.to_ascii_lowercase().replace('-', "_").as_str() {
            "normal" | "gaussian" => ErrorDistribution::Normal {
                sigma: param.unwrap_or(1.0),
            },
            "laplace" => ErrorDistribution::Laplace {
                scale: param.unwrap_or(1.0),
            },
            "cauchy" => ErrorDistribution::Cauchy {
                scale: param.unwrap_or(1.0),
            },
            "student_t" | "t" | "student" => ErrorDistribution::StudentT {
                df: param.unwrap_or(4.0),
            },
            "gauss_mixture" | "mixture" if param.is_none() => ErrorDistribution::default_mixture(),
            _ => {
                return Err(MdLassoError::invalid(
                    "distribution",
                    format!("unknown distribution `{s}`"),
                ))
            }
        };
        dist.validate()?;
        Ok(dist)
    }
}
