//! Computable constants of the statistical error bounds: gradient-norm
//! constants, restricted strong convexity constants, rate factors, scaling
//! curves and the smallest scaling parameter meeting the tail condition.

pub mod quadrature;

use libm::erfc;
use ndarray::{Array1, ArrayView1, ArrayView2};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::distributions::ErrorDistribution;
use crate::error::{MdLassoError, Result};
use crate::loss::{md_weights, MdLossParams};
use crate::model::{residuals, Coefficients, Dataset};

/// `2 e^{-3/2}`, the most negative value of `(1 - z) e^{-z/2}`.
fn clip_floor() -> f64 {
    2.0 * (-1.5f64).exp()
}

/// Largest tail mass `P(|eta| >= sqrt(c)/2)` for which the curvature
/// constant stays positive: `(1 + (64/21) e^{-3/2})^{-1}`.
pub fn rsc_tail_threshold() -> f64 {
    1.0 / (1.0 + 64.0 / 21.0 * (-1.5f64).exp())
}

/// `21/32 + 2 e^{-3/2}`.
pub fn rsc_constant() -> f64 {
    21.0 / 32.0 + clip_floor()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundInputs {
    /// Bound on the absolute predictor entries.
    pub predictor_bound: f64,
    /// `P(|eta| >= 1)`.
    pub kappa1: f64,
    /// Restricted eigenvalue of the design.
    pub kappa_re: f64,
    pub sparsity: usize,
    pub p: usize,
    pub n: usize,
    pub c: f64,
    /// Truncation level of the gradient-tail bound, in `[0, sqrt(c)]`.
    pub gamma: f64,
}

impl BoundInputs {
    /// Inputs with `kappa1` taken from `dist` and `gamma = sqrt(c)`.
    pub fn for_distribution(
        dist: &ErrorDistribution,
        predictor_bound: f64,
        kappa_re: f64,
        sparsity: usize,
        p: usize,
        n: usize,
        c: f64,
    ) -> Result<Self> {
        let inputs = BoundInputs {
            predictor_bound,
            kappa1: dist.tail_prob(1.0)?,
            kappa_re,
            sparsity,
            p,
            n,
            c,
            gamma: c.sqrt(),
        };
        inputs.validate()?;
        Ok(inputs)
    }

    /// Same inputs at another `c`, with `gamma = sqrt(c)`.
    pub fn at_scale(&self, c: f64) -> Self {
        BoundInputs {
            c,
            gamma: c.sqrt(),
            ..*self
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
        positive("predictor_bound", self.predictor_bound)?;
        positive("kappa_re", self.kappa_re)?;
        positive("c", self.c)?;
        if !(self.kappa1 > 0.0 && self.kappa1 <= 1.0) {
            return Err(MdLassoError::invalid(
                "kappa1",
                format!("must lie in (0, 1], got {}", self.kappa1),
            ));
        }
        if self.sparsity == 0 || self.p == 0 || self.n == 0 {
            return Err(MdLassoError::invalid("sparsity, p, n", "must all be >= 1"));
        }
        if !(self.gamma >= 0.0 && self.gamma <= self.c.sqrt()) {
            return Err(MdLassoError::invalid(
                "gamma",
                format!(
                    "must lie in [0, sqrt(c)] = [0, {}], got {}",
                    self.c.sqrt(),
                    self.gamma
                ),
            ));
        }
        Ok(())
    }

    /// `sqrt(s ln p / n)`.
    pub fn rate(&self) -> f64 {
        (self.sparsity as f64 * (self.p as f64).ln() / self.n as f64).sqrt()
    }
}

/// Which bound on the score `||grad L(beta*)||_inf` drives the rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientBound {
    /// Truncation at `gamma`; valid for any noise distribution.
    Truncated,
    /// Second moment of the down-weighted noise; needs no tail parameter.
    SecondMoment,
}

impl GradientBound {
    /// `SecondMoment` when the noise has finite variance, else `Truncated`.
    pub fn for_distribution(dist: &ErrorDistribution) -> Self {
        if dist.variance().is_some() {
            GradientBound::SecondMoment
        } else {
            GradientBound::Truncated
        }
    }
}

/// `xi` with `xi^2 = M^2 kappa1^{-2} [(1 - 2 k) g^2 e^{-g^2/c} + 2 c k / e] e^{1/c}`
/// and `k = P(|eta| >= g)`.
pub fn xi_bound(inputs: &BoundInputs, dist: &ErrorDistribution) -> Result<f64> {
    inputs.validate()?;
    let BoundInputs {
        predictor_bound: m,
        kappa1,
        c,
        gamma,
        ..
    } = *inputs;
    let kappa = dist.tail_prob(gamma)?;
    let bracket = (1.0 - 2.0 * kappa) * gamma * gamma * (-gamma * gamma / c).exp()
        + 2.0 * c * kappa * (-1.0f64).exp();
    Ok(m / kappa1 * (bracket * (1.0 / c).exp()).max(0.0).sqrt())
}

/// `E[eta^2 e^{-eta^2/c}]` for `eta ~ N(0, sd^2)`: `(c / (2 sd^2 + c))^{3/2} sd^2`.
fn gaussian_moment(sd: f64, c: f64) -> f64 {
    (c / (2.0 * sd * sd + c)).powf(1.5) * sd * sd
}

/// `E[eta^2 e^{-eta^2/c}]` for Laplace noise with scale `b`.
fn laplace_moment(b: f64, c: f64) -> f64 {
    let z = c.sqrt() / (2.0 * b);
    let z2 = z * z;
    if z < 10.0 {
        // erfcx(z) = e^{z^2} erfc(z) is well scaled for z < 10.
        let erfcx = z2.exp() * erfc(z);
        2.0 * b * b * z2 * (-2.0 * z2 + (1.0 + 2.0 * z2) * std::f64::consts::PI.sqrt() * z * erfcx)
    } else {
        // Asymptotic series in t = 1/(2 z^2):
        // sum_{k>=1} (-1)^{k+1} 2k (2k-1)!! t^k.
        let t = 0.5 / z2;
        let mut term = 2.0 * t;
        let mut sum = 0.0;
        let mut k = 1.0;
        loop {
            sum += term;
            let next = -term * (k + 1.0) / k * (2.0 * k + 1.0) * t;
            if next.abs() >= term.abs() || next.abs() < 1e-17 * sum.abs() {
                break;
            }
            term = next;
            k += 1.0;
        }
        2.0 * b * b * z2 * sum
    }
}

/// `E[eta^2 e^{-eta^2/c}]` by adaptive quadrature of the even integrand.
pub fn weighted_second_moment_quadrature(dist: &ErrorDistribution, c: f64) -> Result<f64> {
    dist.validate()?;
    if !(c.is_finite() && c > 0.0) {
        return Err(MdLassoError::invalid(
            "c",
            format!("must be finite and > 0, got {c}"),
        ));
    }
    let (half, _) = quadrature::integrate_half_line(
        |x| x * x * (-x * x / c).exp() * dist.density(x),
        1e-12,
        1e-10,
    )?;
    Ok(2.0 * half)
}

/// `E[eta^2 e^{-eta^2/c}]`, in closed form for Gaussian, mixture and Laplace
/// noise and by quadrature otherwise.
pub fn weighted_second_moment(dist: &ErrorDistribution, c: f64) -> Result<f64> {
    dist.validate()?;
    if !(c.is_finite() && c > 0.0) {
        return Err(MdLassoError::invalid(
            "c",
            format!("must be finite and > 0, got {c}"),
        ));
    }
    match *dist {
        ErrorDistribution::Normal { sigma } => Ok(gaussian_moment(sigma, c)),
        ErrorDistribution::GaussMixture {
            prob_small,
            sd_small,
            sd_large,
        } => Ok(
            ErrorDistribution::mixture_components(prob_small, sd_small, sd_large)
                .iter()
                .map(|&(w, sd)| w * gaussian_moment(sd, c))
                .sum(),
        ),
        ErrorDistribution::Laplace { scale } => Ok(laplace_moment(scale, c)),
        ErrorDistribution::StudentT { .. } | ErrorDistribution::Cauchy { .. } => {
            weighted_second_moment_quadrature(dist, c)
        }
    }
}

/// `zeta` with `zeta^2 = 4 M^2 kappa1^{-2} E[eta^2 e^{-eta^2/c}] e^{1/c}`.
pub fn zeta_bound(inputs: &BoundInputs, dist: &ErrorDistribution) -> Result<f64> {
    inputs.validate()?;
    let moment = weighted_second_moment(dist, inputs.c)?;
    Ok(2.0 * inputs.predictor_bound / inputs.kappa1 * (moment * (1.0 / inputs.c).exp()).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RscConstants {
    /// Curvature constant; not positive when the tail condition fails.
    pub kappa1_rsc: f64,
    /// Tolerance constant.
    pub kappa2_rsc: f64,
    pub condition_ok: bool,
}

/// Restricted strong convexity constants for tail mass `kappa_lambda_mu`
/// at the curvature radius.
pub fn rsc_constants(inputs: &BoundInputs, kappa_lambda_mu: f64) -> RscConstants {
    let big_c = rsc_constant();
    RscConstants {
        kappa1_rsc: 0.25 * inputs.kappa_re * (big_c * (1.0 - kappa_lambda_mu) - clip_floor()),
        kappa2_rsc: 97.0 * big_c * inputs.predictor_bound.powi(2) * (inputs.sparsity as f64).sqrt(),
        condition_ok: kappa_lambda_mu < rsc_tail_threshold(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateBound {
    /// Multiplier of `sqrt(s ln p / n)`.
    pub factor: f64,
    /// `factor * sqrt(s ln p / n)`, the bound on `||beta_hat - beta*||_2`.
    pub value: f64,
    /// `xi` or `zeta`.
    pub gradient_constant: f64,
    /// `C (1 - kappa_{sqrt(c)/2}) - 2 e^{-3/2}`.
    pub rsc_denominator: f64,
}

/// `4 G / ((C (1 - kappa_{sqrt(c)/2}) - 2 e^{-3/2}) kappa_RE) * sqrt(s ln p / n)`,
/// with `G` from `which`.
pub fn rate_bound(
    inputs: &BoundInputs,
    dist: &ErrorDistribution,
    which: GradientBound,
) -> Result<RateBound> {
    inputs.validate()?;
    let kappa = dist.tail_prob(inputs.c.sqrt() / 2.0)?;
    let threshold = rsc_tail_threshold();
    if kappa >= threshold {
        return Err(MdLassoError::TailCondition { kappa, threshold });
    }
    let gradient_constant = match which {
        GradientBound::Truncated => xi_bound(inputs, dist)?,
        GradientBound::SecondMoment => zeta_bound(inputs, dist)?,
    };
    let rsc_denominator = rsc_constant() * (1.0 - kappa) - clip_floor();
    let factor = 4.0 * gradient_constant / (rsc_denominator * inputs.kappa_re);
    Ok(RateBound {
        factor,
        value: factor * inputs.rate(),
        gradient_constant,
        rsc_denominator,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub c: f64,
    pub factor: f64,
}

/// Rate factor as a function of `c`. Uses the second-moment bound for
/// finite-variance noise and the truncated bound at `gamma = sqrt(c)` otherwise.
pub fn scaling_curve(
    dist: &ErrorDistribution,
    c_grid: &[f64],
    inputs: &BoundInputs,
) -> Result<Vec<CurvePoint>> {
    let which = GradientBound::for_distribution(dist);
    c_grid
        .iter()
        .map(|&c| {
            let bound = rate_bound(&inputs.at_scale(c), dist, which)?;
            Ok(CurvePoint {
                c,
                factor: bound.factor,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinimalScale {
    pub c: f64,
    /// `sqrt(c)/2 - c^{1/4}` at `c`.
    pub lambda_mu: f64,
}

fn lambda_mu(c: f64) -> f64 {
    0.5 * c.sqrt() - c.powf(0.25)
}

const SCALE_SEARCH_MAX: f64 = 1e6;

/// Smallest `c` (to within 1e-6) with `sqrt(c)/2 - c^{1/4} > 0` and
/// `P(|eta| >= sqrt(c)/2 - c^{1/4}) <= kappa_threshold`.
pub fn min_c_for_rsc(dist: &ErrorDistribution, kappa_threshold: f64) -> Result<MinimalScale> {
    if !(kappa_threshold > 0.0 && kappa_threshold <= 1.0) {
        return Err(MdLassoError::invalid(
            "kappa_threshold",
            format!("must lie in (0, 1], got {kappa_threshold}"),
        ));
    }
    // lambda_mu is positive and increasing for c > 16, so the tail is
    // non-increasing there and the feasible set is an interval.
    let feasible = |c: f64| -> Result<bool> {
        Ok(lambda_mu(c) > 0.0 && dist.tail_prob(lambda_mu(c))? <= kappa_threshold)
    };
    let mut lo = 16.0;
    let mut hi = SCALE_SEARCH_MAX;
    if !feasible(hi)? {
        return Err(MdLassoError::NoFeasibleScale { lo, hi });
    }
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(MinimalScale {
        c: hi,
        lambda_mu: lambda_mu(hi),
    })
}

/// `(M (||beta*||_1 + lambda_bar))^2`: for `c` at least this large every
/// local minimum in the feasible region is global.
pub fn global_solution_radius(beta_star_l1: f64, lambda_bar: f64, predictor_bound: f64) -> f64 {
    (predictor_bound * (beta_star_l1 + lambda_bar)).powi(2)
}

/// Largest absolute predictor entry.
pub fn estimate_m(data: &Dataset) -> f64 {
    data.x().iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Step lower bound for `(1 - z) e^{-z/2}`: `(1 - a^2)(1 - a^2/2)` for
/// `z <= a^2`, else `-2 e^{-3/2}`.
pub fn psi_clip(z: f64, a: f64) -> f64 {
    if z <= a * a {
        (1.0 - a * a) * (1.0 - 0.5 * a * a)
    } else {
        -clip_floor()
    }
}

/// Lower bound on the Hessian quadratic form along `direction`:
/// `sum_i psi(r_i^2/c) s_i^2 / sum_j e^{-r_j^2/(2c)}` with `s = X direction`.
pub fn psi_hessian_lower_bound(
    data: &Dataset,
    coef: &Coefficients,
    params: MdLossParams,
    direction: ArrayView1<'_, f64>,
    a: f64,
) -> Result<f64> {
    if !(a > 0.0 && a < 1.0) {
        return Err(MdLassoError::invalid(
            "a",
            format!("must lie in (0, 1), got {a}"),
        ));
    }
    crate::error::check_len("direction length", data.p(), direction.len())?;
    let r = residuals(data, coef)?;
    // Validates residuals and c.
    md_weights(r.view(), params)?;
    let c = params.c();
    let s = data.x().dot(&direction);
    let mass: f64 = r.iter().map(|ri| (-0.5 * ri * ri / c).exp()).sum();
    let numer: f64 = r
        .iter()
        .zip(s.iter())
        .map(|(ri, si)| psi_clip(ri * ri / c, a) * si * si)
        .sum();
    Ok(numer / mass)
}

/// Monte Carlo estimate of the restricted eigenvalue: the smallest
/// `||X d||^2 / (n ||d||^2)` over `draws` random directions in the cone
/// `||d_{S^c}||_1 <= 3 ||d_S||_1`, `|S| = sparsity`. Being a minimum over a
/// sample, it overestimates the true constant.
pub fn estimate_kappa_re(
    x: ArrayView2<'_, f64>,
    sparsity: usize,
    draws: usize,
    seed: u64,
) -> Result<f64> {
    let (n, p) = x.dim();
    if sparsity == 0 || sparsity > p {
        return Err(MdLassoError::invalid(
            "sparsity",
            format!("must lie in [1, {p}], got {sparsity}"),
        ));
    }
    if draws == 0 {
        return Err(MdLassoError::invalid("draws", "must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::INFINITY;
    for _ in 0..draws {
        let support = sample(&mut rng, p, sparsity);
        let mut inside = vec![false; p];
        let mut d = Array1::<f64>::zeros(p);
        for j in support.iter() {
            inside[j] = true;
            d[j] = StandardNormal.sample(&mut rng);
        }
        let budget =
            3.0 * d.iter().map(|v| v.abs()).sum::<f64>() * rand::Rng::random::<f64>(&mut rng);
        let outside: Vec<usize> = (0..p).filter(|&j| !inside[j]).collect();
        if !outside.is_empty() {
            let raw: Vec<f64> = outside
                .iter()
                .map(|_| StandardNormal.sample(&mut rng))
                .collect();
            let norm: f64 = raw.iter().map(|v: &f64| v.abs()).sum();
            if norm > 0.0 {
                for (&j, v) in outside.iter().zip(raw) {
                    d[j] = v * budget / norm;
                }
            }
        }
        let sq = d.dot(&d);
        if sq == 0.0 {
            continue;
        }
        let xd = x.dot(&d);
        best = best.min(xd.dot(&xd) / (n as f64 * sq));
    }
    Ok(best)
}
