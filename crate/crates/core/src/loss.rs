//! The minimum distance loss `L(beta) = -c log sum_i exp(-r_i^2 / (2c))`,
//! its observation weights, gradient and Hessian quadratic form, the
//! Gaussian empirical distance criterion it is derived from, and the
//! single-observation influence function.
//!
//! All reductions over observations use max-shift stabilization so that
//! residuals of order 1e150 (Cauchy noise) neither overflow nor underflow.

use ndarray::{Array1, ArrayView1, ArrayView2};

use crate::error::{check_len, MdLassoError, Result};
use crate::model::{residuals, Coefficients, Dataset};

/// Scaling parameter `c`, in units of squared residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MdLossParams {
    c: f64,
}

impl MdLossParams {
    pub fn new(c: f64) -> Result<Self> {
        if c.is_finite() && c > 0.0 {
            Ok(MdLossParams { c })
        } else {
            Err(MdLassoError::invalid(
                "c",
                format!("must be finite and > 0, got {c}"),
            ))
        }
    }

    pub fn c(&self) -> f64 {
        self.c
    }
}

/// Softmax weights over observations; non-negative and summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Array1<f64>);

impl WeightVector {
    pub fn as_array(&self) -> &Array1<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Array1<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn check_finite(r: ArrayView1<'_, f64>) -> Result<()> {
    if r.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(MdLassoError::NonFinite { what: "residuals" })
    }
}

fn exponents(r: ArrayView1<'_, f64>, c: f64) -> (Array1<f64>, f64) {
    let a = r.mapv(|ri| -(ri * ri) / (2.0 * c));
    let max = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (a, max)
}

/// `L + c log n`, i.e. `-c log mean_i exp(-r_i^2/(2c))`.
///
/// Non-negative, zero at a perfect fit, and accurate for very large `c`
/// where the plain form is dominated by the `-c log n` constant.
pub(crate) fn shifted_loss(r: ArrayView1<'_, f64>, c: f64) -> f64 {
    let (a, max) = exponents(r, c);
    let n = a.len() as f64;
    let mean_expm1 = a.iter().map(|ai| (ai - max).exp_m1()).sum::<f64>() / n;
    -c * (max + mean_expm1.ln_1p())
}

pub(crate) fn weights_unchecked(r: ArrayView1<'_, f64>, c: f64) -> Array1<f64> {
    let (a, max) = exponents(r, c);
    let e = a.mapv(|ai| (ai - max).exp());
    let total = e.sum();
    e / total
}

/// `-X^T (w ⊙ r)`.
pub(crate) fn weighted_gradient(
    x: ArrayView2<'_, f64>,
    r: ArrayView1<'_, f64>,
    w: ArrayView1<'_, f64>,
) -> Array1<f64> {
    let generalized = &w * &r;
    -x.t().dot(&generalized)
}

/// MD loss from a residual vector.
pub fn md_loss_from_residuals(r: ArrayView1<'_, f64>, params: MdLossParams) -> Result<f64> {
    check_finite(r)?;
    if r.is_empty() {
        return Err(MdLassoError::TooFewObservations {
            needed: 1,
            found: 0,
        });
    }
    let c = params.c();
    let value = shifted_loss(r, c) - c * (r.len() as f64).ln();
    if value.is_finite() {
        Ok(value)
    } else {
        Err(MdLassoError::NonFinite { what: "md loss" })
    }
}

pub fn md_loss(data: &Dataset, coef: &Coefficients, params: MdLossParams) -> Result<f64> {
    let r = residuals(data, coef)?;
    md_loss_from_residuals(r.view(), params)
}

/// `w_i = exp(-r_i^2/(2c)) / sum_j exp(-r_j^2/(2c))`.
pub fn md_weights(residuals: ArrayView1<'_, f64>, params: MdLossParams) -> Result<WeightVector> {
    check_finite(residuals)?;
    if residuals.is_empty() {
        return Err(MdLassoError::TooFewObservations {
            needed: 1,
            found: 0,
        });
    }
    Ok(WeightVector(weights_unchecked(residuals, params.c())))
}

/// Gradient `-sum_i w_i r_i x_i`.
pub fn md_gradient(
    data: &Dataset,
    coef: &Coefficients,
    params: MdLossParams,
) -> Result<Array1<f64>> {
    let r = residuals(data, coef)?;
    let w = md_weights(r.view(), params)?;
    Ok(weighted_gradient(data.x(), r.view(), w.as_array().view()))
}

/// Second directional derivative `D^2 L(beta)[d, d]`:
/// `sum_i w_i (1 - r_i^2/c) s_i^2 + (1/c) (sum_i w_i r_i s_i)^2` with `s = X d`.
pub fn md_hessian_quadratic_form(
    data: &Dataset,
    coef: &Coefficients,
    params: MdLossParams,
    direction: ArrayView1<'_, f64>,
) -> Result<f64> {
    check_len("direction length", data.p(), direction.len())?;
    let r = residuals(data, coef)?;
    let w = md_weights(r.view(), params)?;
    let s = data.x().dot(&direction);
    let c = params.c();
    let mut curvature = 0.0;
    let mut cross = 0.0;
    for ((&wi, &ri), &si) in w.as_array().iter().zip(r.iter()).zip(s.iter()) {
        curvature += wi * (1.0 - ri * ri / c) * si * si;
        cross += wi * ri * si;
    }
    Ok(curvature + cross * cross / c)
}

/// Empirical Gaussian minimum distance criterion
/// `d_n = -(2/n) sum_i N(r_i; 0, sigma^2)`, constants included.
pub fn empirical_md_criterion(data: &Dataset, coef: &Coefficients, sigma: f64) -> Result<f64> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(MdLassoError::invalid(
            "sigma",
            format!("must be > 0, got {sigma}"),
        ));
    }
    let r = residuals(data, coef)?;
    check_finite(r.view())?;
    let n = r.len() as f64;
    let norm = 1.0 / (2.0 * std::f64::consts::PI * sigma * sigma).sqrt();
    let total: f64 = r
        .iter()
        .map(|ri| norm * (-(ri * ri) / (2.0 * sigma * sigma)).exp())
        .sum();
    Ok(-2.0 / n * total)
}

/// Influence of one residual when the other observations contribute mass
/// `other_mass`: `r / (1 + d exp(r^2/(2c)))`. Odd and redescending.
pub fn influence(residual: f64, other_mass: f64, params: MdLossParams) -> Result<f64> {
    if !(other_mass.is_finite() && other_mass > 0.0) {
        return Err(MdLassoError::invalid(
            "other_mass",
            format!("must be > 0, got {other_mass}"),
        ));
    }
    let damp = (residual * residual / (2.0 * params.c())).exp();
    Ok(residual / (1.0 + other_mass * damp))
}
