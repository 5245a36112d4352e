use ndarray::ArrayView1;

use super::{Estimator, EstimatorSpec, MD_LASSO};
use crate::error::Result;
use crate::loss::{shifted_loss, weights_unchecked, MdLossParams};
use crate::model::{Dataset, FitResult};
use crate::prox::solve;

/// MD-Lasso via the composite gradient solver.
pub struct MdLasso;

/// `||X^T (w ⊙ y)||_inf` with `w` the weights at `beta = 0`.
pub(crate) fn md_lambda_max(data: &Dataset, c: f64) -> f64 {
    let y = data.y();
    let w = weights_unchecked(y, c);
    let g = data.x().t().dot(&(&w * &y));
    g.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

impl Estimator for MdLasso {
    fn name(&self) -> &'static str {
        MD_LASSO
    }

    fn uses_scale(&self) -> bool {
        true
    }

    fn validate(&self, spec: &EstimatorSpec) -> Result<()> {
        spec.check_fields(true, false, false)
    }

    fn fit(&self, data: &Dataset, spec: &EstimatorSpec) -> Result<FitResult> {
        let params = MdLossParams::new(spec.require_c()?)?;
        let (fit, _) = solve(data, params, &spec.solver.optimizer_config(spec.lambda))?;
        Ok(fit)
    }

    fn lambda_max(&self, data: &Dataset, spec: &EstimatorSpec) -> Result<f64> {
        Ok(md_lambda_max(data, spec.require_c()?))
    }

    /// `-c log mean_i exp(-r_i^2/(2c))`.
    fn validation_loss(&self, residuals: ArrayView1<'_, f64>, spec: &EstimatorSpec) -> Result<f64> {
        let params = MdLossParams::new(spec.require_c()?)?;
        crate::loss::md_loss_from_residuals(residuals, params)?;
        Ok(shifted_loss(residuals, params.c()))
    }
}
