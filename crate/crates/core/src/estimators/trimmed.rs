use ndarray::{Array1, ArrayView1};

use super::lasso::{lasso_core, Lasso, LASSO_KKT_TOL};
use super::{
    check_initial, half_mean_square, Estimator, EstimatorSpec, DEFAULT_TRIM_FRACTION, TRIMMED_LASSO,
};
use crate::error::{MdLassoError, Result};
use crate::model::{residuals, Dataset, FitResult};

/// Lasso refit after dropping the `ceil(trim_fraction * n)` observations with
/// the largest absolute pilot residuals. Ties at the cut keep the lower index.
pub struct TrimmedLasso;

/// Indices dropped by trimming, ordered by decreasing residual.
pub(crate) fn trimmed_rows(r: ArrayView1<'_, f64>, drop: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..r.len()).collect();
    order.sort_by(|&a, &b| r[b].abs().total_cmp(&r[a].abs()).then(b.cmp(&a)));
    order.truncate(drop);
    order
}

pub(crate) fn drop_count(n: usize, fraction: f64) -> usize {
    // Guard against products like 0.1 * 30 landing just above an integer.
    ((fraction * n as f64) - 1e-9).ceil().max(0.0) as usize
}

impl Estimator for TrimmedLasso {
    fn name(&self) -> &'static str {
        TRIMMED_LASSO
    }

    fn validate(&self, spec: &EstimatorSpec) -> Result<()> {
        spec.check_fields(false, true, false)
    }

    fn fit(&self, data: &Dataset, spec: &EstimatorSpec) -> Result<FitResult> {
        let fraction = spec.trim_fraction.unwrap_or(DEFAULT_TRIM_FRACTION);
        let n = data.n();
        let drop = drop_count(n, fraction);
        if n - drop.min(n) < 2 {
            return Err(MdLassoError::TrimmingTooSevere {
                remaining: n - drop.min(n),
            });
        }
        let init = check_initial(data, spec)?;
        let pilot = lasso_core(data, spec.lambda, init, LASSO_KKT_TOL);
        let r = residuals(data, &pilot.coefficients)?;
        let dropped = trimmed_rows(r.view(), drop);
        let mut keep_mask = vec![true; n];
        for &i in &dropped {
            keep_mask[i] = false;
        }
        let kept: Vec<usize> = (0..n).filter(|&i| keep_mask[i]).collect();
        let subset = data.select_rows(&kept)?;
        let refit = lasso_core(
            &subset,
            spec.lambda,
            Some(pilot.coefficients.beta.clone()),
            LASSO_KKT_TOL,
        );

        let share = 1.0 / kept.len() as f64;
        let weights = Array1::from_shape_fn(n, |i| if keep_mask[i] { share } else { 0.0 });
        let mut fit = FitResult::basic(TRIMMED_LASSO, refit.coefficients, spec.lambda);
        fit.objective_value = refit.objective_value;
        fit.objective_trace = vec![pilot.objective_value, refit.objective_value];
        fit.iterations = pilot.iterations + refit.iterations;
        fit.converged = pilot.converged && refit.converged;
        fit.kkt_residual = refit.kkt_residual;
        fit.observation_weights = Some(weights);
        Ok(fit)
    }

    fn lambda_max(&self, data: &Dataset, spec: &EstimatorSpec) -> Result<f64> {
        Lasso.lambda_max(data, spec)
    }

    fn validation_loss(
        &self,
        residuals: ArrayView1<'_, f64>,
        _spec: &EstimatorSpec,
    ) -> Result<f64> {
        Ok(half_mean_square(residuals))
    }
}
