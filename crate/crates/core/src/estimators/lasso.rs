use ndarray::{Array1, ArrayView1};

use super::cd::{weighted_lasso, ColumnMajor};
use super::{check_initial, half_mean_square, Estimator, EstimatorSpec, LASSO};
use crate::error::Result;
use crate::model::{Coefficients, Dataset, FitResult};
use crate::prox::l1;

/// Stationarity tolerance for the least-squares Lasso.
pub(crate) const LASSO_KKT_TOL: f64 = 1e-8;
const MAX_SWEEPS: usize = 1_000_000;

/// Least-squares Lasso `(1/2n)||y - X b||^2 + lambda ||b||_1`.
pub struct Lasso;

pub(crate) fn lasso_core(
    data: &Dataset,
    lambda: f64,
    init: Option<Array1<f64>>,
    tol: f64,
) -> FitResult {
    let design = ColumnMajor::new(data.x());
    lasso_on(
        &design,
        data.y(),
        lambda,
        init.unwrap_or_else(|| Array1::zeros(data.p())),
        tol,
    )
}

pub(crate) fn lasso_on(
    design: &ColumnMajor,
    y: ArrayView1<'_, f64>,
    lambda: f64,
    init: Array1<f64>,
    tol: f64,
) -> FitResult {
    let n = y.len();
    let w = Array1::from_elem(n, 1.0 / n as f64);
    let out = weighted_lasso(design, y, w.view(), lambda, init, tol, MAX_SWEEPS);
    let objective = half_mean_square(out.residuals.view()) + lambda * l1(out.beta.view());
    let mut fit = FitResult::basic(LASSO, Coefficients::new(out.beta), lambda);
    fit.objective_value = objective;
    fit.objective_trace = vec![objective];
    fit.iterations = out.sweeps;
    fit.converged = out.converged;
    fit.kkt_residual = out.kkt;
    fit
}

impl Estimator for Lasso {
    fn name(&self) -> &'static str {
        LASSO
    }

    fn validate(&self, spec: &EstimatorSpec) -> Result<()> {
        spec.check_fields(false, false, false)
    }

    fn fit(&self, data: &Dataset, spec: &EstimatorSpec) -> Result<FitResult> {
        let init = check_initial(data, spec)?;
        Ok(lasso_core(data, spec.lambda, init, LASSO_KKT_TOL))
    }

    fn lambda_max(&self, data: &Dataset, _spec: &EstimatorSpec) -> Result<f64> {
        let z = data.x().t().dot(&data.y()) / data.n() as f64;
        Ok(z.iter().fold(0.0f64, |m, v| m.max(v.abs())))
    }

    fn validation_loss(
        &self,
        residuals: ArrayView1<'_, f64>,
        _spec: &EstimatorSpec,
    ) -> Result<f64> {
        Ok(half_mean_square(residuals))
    }
}
