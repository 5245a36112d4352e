//! Datasets, coefficient vectors, standardization and the fit-result record
//! shared by every estimator.
//!
//! The numerical modules assume centred, unit-scale predictors and a centred
//! response, so no intercept appears in their objectives. [`standardize`]
//! produces such data and [`destandardize_coefficients`] maps a fit back to
//! the raw scale.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::Serialize;

use crate::error::{check_len, MdLassoError, Result};

/// Predictor matrix (n × p) paired row-wise with a response vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Array2<f64>,
    y: Array1<f64>,
}

impl Dataset {
    pub fn new(x: Array2<f64>, y: Array1<f64>) -> Result<Self> {
        let (n, p) = x.dim();
        if n == 0 {
            return Err(MdLassoError::TooFewObservations {
                needed: 1,
                found: 0,
            });
        }
        if p == 0 {
            return Err(MdLassoError::invalid(
                "x",
                "at least one predictor is required",
            ));
        }
        check_len("response length", n, y.len())?;
        if !x.iter().all(|v| v.is_finite()) {
            return Err(MdLassoError::NonFinite { what: "predictors" });
        }
        if !y.iter().all(|v| v.is_finite()) {
            return Err(MdLassoError::NonFinite { what: "response" });
        }
        Ok(Dataset { x, y })
    }

    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn y(&self) -> ArrayView1<'_, f64> {
        self.y.view()
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// New dataset made of the given rows, in the given order. Indices may repeat.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Dataset> {
        if let Some(&bad) = rows.iter().find(|&&i| i >= self.n()) {
            return Err(MdLassoError::invalid(
                "rows",
                format!("row index {bad} out of range for {} observations", self.n()),
            ));
        }
        Dataset::new(self.x.select(Axis(0), rows), self.y.select(Axis(0), rows))
    }

    pub fn with_response(&self, y: Array1<f64>) -> Result<Dataset> {
        Dataset::new(self.x.clone(), y)
    }

    pub fn into_parts(self) -> (Array2<f64>, Array1<f64>) {
        (self.x, self.y)
    }
}

/// Regression coefficients. Exact zeros mark unselected predictors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coefficients {
    pub beta: Array1<f64>,
    pub intercept: f64,
}

impl Coefficients {
    pub fn new(beta: Array1<f64>) -> Self {
        Coefficients {
            beta,
            intercept: 0.0,
        }
    }

    pub fn zeros(p: usize) -> Self {
        Coefficients::new(Array1::zeros(p))
    }

    pub fn len(&self) -> usize {
        self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta.is_empty()
    }

    /// Indices with `|beta_j| > 0`.
    pub fn support(&self) -> Vec<usize> {
        self.beta
            .iter()
            .enumerate()
            .filter(|(_, b)| b.abs() > 0.0)
            .map(|(j, _)| j)
            .collect()
    }

    pub fn l1_norm(&self) -> f64 {
        self.beta.iter().map(|b| b.abs()).sum()
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        check_len("coefficient length", x.ncols(), self.beta.len())?;
        Ok(x.dot(&self.beta) + self.intercept)
    }
}

/// Output of every estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub estimator: String,
    pub coefficients: Coefficients,
    pub lambda: f64,
    /// Scaling parameter; `None` for estimators that do not use one.
    pub c: Option<f64>,
    pub objective_value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Simplex weights over observations, when the estimator has them.
    pub observation_weights: Option<Array1<f64>>,
    pub objective_trace: Vec<f64>,
    /// Largest violation of the first-order optimality conditions of the
    /// estimator's own objective.
    pub kkt_residual: f64,
    /// Whether the l1 safety radius ever constrained an iterate.
    pub radius_active: bool,
    /// Estimated corruption vector (extended Lasso only).
    pub corruption: Option<Array1<f64>>,
}

impl FitResult {
    pub(crate) fn basic(estimator: &str, coefficients: Coefficients, lambda: f64) -> Self {
        FitResult {
            estimator: estimator.to_string(),
            coefficients,
            lambda,
            c: None,
            objective_value: f64::NAN,
            iterations: 0,
            converged: false,
            observation_weights: None,
            objective_trace: Vec::new(),
            kkt_residual: f64::NAN,
            radius_active: false,
            corruption: None,
        }
    }
}

/// `r_i = y_i - <x_i, beta> - intercept`.
pub fn residuals(data: &Dataset, coef: &Coefficients) -> Result<Array1<f64>> {
    check_len("coefficient length", data.p(), coef.beta.len())?;
    Ok(raw_residuals(data.x(), data.y(), coef.beta.view()) - coef.intercept)
}

pub(crate) fn raw_residuals(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    beta: ArrayView1<'_, f64>,
) -> Array1<f64> {
    &y - &x.dot(&beta)
}

/// Column centring and scaling (population standard deviation, 1/n) plus
/// response centring.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Standardizer {
    pub column_means: Array1<f64>,
    pub column_scales: Array1<f64>,
    pub response_mean: f64,
}

impl Standardizer {
    pub fn identity(p: usize) -> Self {
        Standardizer {
            column_means: Array1::zeros(p),
            column_scales: Array1::ones(p),
            response_mean: 0.0,
        }
    }

    pub fn apply(&self, data: &Dataset) -> Result<Dataset> {
        check_len("standardizer width", self.column_means.len(), data.p())?;
        let x = (&data.x() - &self.column_means) / &self.column_scales;
        let y = &data.y() - self.response_mean;
        Dataset::new(x, y)
    }

    pub fn invert(&self, data: &Dataset) -> Result<Dataset> {
        check_len("standardizer width", self.column_means.len(), data.p())?;
        let x = &data.x() * &self.column_scales + &self.column_means;
        let y = &data.y() + self.response_mean;
        Dataset::new(x, y)
    }
}

pub fn standardize(data: &Dataset) -> Result<(Dataset, Standardizer)> {
    let n = data.n();
    if n < 2 {
        return Err(MdLassoError::TooFewObservations {
            needed: 2,
            found: n,
        });
    }
    let x = data.x();
    let mut means = Array1::zeros(data.p());
    let mut scales = Array1::zeros(data.p());
    for (j, col) in x.axis_iter(Axis(1)).enumerate() {
        let first = col[0];
        if col.iter().all(|&v| v == first) {
            return Err(MdLassoError::ConstantColumn { index: j });
        }
        let mean = col.sum() / n as f64;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        means[j] = mean;
        scales[j] = var.sqrt();
    }
    let std = Standardizer {
        column_means: means,
        column_scales: scales,
        response_mean: data.y().sum() / n as f64,
    };
    Ok((std.apply(data)?, std))
}

/// Map coefficients fitted on standardized data back to the raw scale, so
/// that raw predictions equal standardized predictions plus the response mean.
pub fn destandardize_coefficients(coef: &Coefficients, std: &Standardizer) -> Result<Coefficients> {
    check_len(
        "standardizer width",
        std.column_scales.len(),
        coef.beta.len(),
    )?;
    let beta = &coef.beta / &std.column_scales;
    let intercept = std.response_mean + coef.intercept - beta.dot(&std.column_means);
    Ok(Coefficients { beta, intercept })
}
