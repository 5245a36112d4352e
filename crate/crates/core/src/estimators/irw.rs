use ndarray::ArrayView1;

use super::cd::{weighted_lasso, ColumnMajor};
use super::md_lasso::md_lambda_max;
use super::{check_initial, Estimator, EstimatorSpec, IRW_MD_LASSO};
use crate::error::Result;
use crate::linalg::ridge_pilot;
use crate::loss::{shifted_loss, weighted_gradient, weights_unchecked, MdLossParams};
use crate::model::{raw_residuals, Coefficients, Dataset, FitResult};
use crate::prox::{kkt_residual, l1};

pub const IRW_MAX_OUTER: usize = 100;
/// Stop once the squared step between outer iterates is at most this.
pub const IRW_STEP_TOL: f64 = 1e-8;
const INNER_KKT_TOL: f64 = 1e-10;
const INNER_MAX_SWEEPS: usize = 1_000_000;

/// MD-Lasso as a sequence of weighted Lasso problems.
///
/// With weights `w` frozen at the current residuals, `(1/2) sum w_i r_i^2`
/// majorizes the MD loss up to a constant (the log-sum-exp is convex), so
/// each inner solve decreases the MD objective and fixed points are MD
/// stationary points.
pub struct IrwMdLasso;

impl Estimator for IrwMdLasso {
    fn name(&self) -> &'static str {
        IRW_MD_LASSO
    }

    fn uses_scale(&self) -> bool {
        true
    }

    fn validate(&self, spec: &EstimatorSpec) -> Result<()> {
        spec.check_fields(true, false, false)
    }

    fn fit(&self, data: &Dataset, spec: &EstimatorSpec) -> Result<FitResult> {
        let c = MdLossParams::new(spec.require_c()?)?.c();
        let lambda = spec.lambda;
        let (x, y) = (data.x(), data.y());
        let offset = c * (data.n() as f64).ln();
        let mut beta = match check_initial(data, spec)? {
            Some(b) => b,
            None => ridge_pilot(x, y)?,
        };
        let design = ColumnMajor::new(x);
        let objective = |r: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>| {
            shifted_loss(r, c) - offset + lambda * l1(b)
        };
        let mut r = raw_residuals(x, y, beta.view());
        let mut trace = vec![objective(r.view(), beta.view())];
        let mut converged = false;
        let mut outer = 0;
        let mut inner_ok = true;
        while outer < IRW_MAX_OUTER {
            let w = weights_unchecked(r.view(), c);
            let out = weighted_lasso(
                &design,
                y,
                w.view(),
                lambda,
                beta.clone(),
                INNER_KKT_TOL,
                INNER_MAX_SWEEPS,
            );
            inner_ok &= out.converged;
            let step = &out.beta - &beta;
            beta = out.beta;
            r = out.residuals;
            outer += 1;
            trace.push(objective(r.view(), beta.view()));
            if step.dot(&step) <= IRW_STEP_TOL {
                converged = true;
                break;
            }
        }
        let weights = weights_unchecked(r.view(), c);
        let grad = weighted_gradient(x, r.view(), weights.view());
        let mut fit = FitResult::basic(IRW_MD_LASSO, Coefficients::new(beta), lambda);
        fit.kkt_residual = kkt_residual(fit.coefficients.beta.view(), grad.view(), lambda);
        fit.c = Some(c);
        fit.objective_value = *trace.last().expect("trace starts non-empty");
        fit.objective_trace = trace;
        fit.iterations = outer;
        fit.converged = converged && inner_ok;
        fit.observation_weights = Some(weights);
        Ok(fit)
    }

    fn lambda_max(&self, data: &Dataset, spec: &EstimatorSpec) -> Result<f64> {
        Ok(md_lambda_max(data, spec.require_c()?))
    }

    fn validation_loss(&self, residuals: ArrayView1<'_, f64>, spec: &EstimatorSpec) -> Result<f64> {
        let params = MdLossParams::new(spec.require_c()?)?;
        crate::loss::md_loss_from_residuals(residuals, params)?;
        Ok(shifted_loss(residuals, params.c()))
    }
}
