//! Composite gradient solver for `L(beta) + lambda ||beta||_1` subject to the
//! safety constraint `||beta||_1 <= R`.
//!
//! Each iteration minimizes the local quadratic model
//! `<grad, b - beta> + (rho/2)||b - beta||^2 + lambda ||b||_1` over the ball,
//! which is a soft-threshold followed, only when needed, by a projection onto
//! the l1 ball. `rho` starts at `rho_init` and is multiplied by
//! `backtrack_factor` until the model majorizes the loss at the candidate; it
//! never decreases within a run.

use ndarray::{Array1, ArrayView1, Zip};

use crate::error::{check_len, MdLassoError, Result};
use crate::linalg::ridge_pilot;
use crate::loss::{shifted_loss, weighted_gradient, weights_unchecked, MdLossParams};
use crate::model::{raw_residuals, Coefficients, Dataset, FitResult};

/// Backtracking gives up after this many consecutive increases of `rho`.
const MAX_BACKTRACKS: usize = 200;
const STOP_KKT_TOL: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub lambda: f64,
    pub rho_init: f64,
    pub backtrack_factor: f64,
    pub max_iterations: usize,
    pub rel_tolerance: f64,
    /// l1 radius of the feasible ball; defaults to twice the l1 norm of a
    /// ridge pilot fit.
    pub safety_radius: Option<f64>,
    /// Starting point; defaults to zero.
    pub initial_point: Option<Coefficients>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            lambda: 0.0,
            rho_init: 1.0,
            backtrack_factor: 2.0,
            max_iterations: 10_000,
            rel_tolerance: 1e-8,
            safety_radius: None,
            initial_point: None,
        }
    }
}

impl OptimizerConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        OptimizerConfig {
            lambda,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(MdLassoError::invalid(
                "lambda",
                format!("must be >= 0, got {}", self.lambda),
            ));
        }
        if !(self.rho_init.is_finite() && self.rho_init > 0.0) {
            return Err(MdLassoError::invalid("rho_init", "must be finite and > 0"));
        }
        if !(self.backtrack_factor.is_finite() && self.backtrack_factor > 1.0) {
            return Err(MdLassoError::invalid(
                "backtrack_factor",
                "must be finite and > 1",
            ));
        }
        if self.max_iterations == 0 {
            return Err(MdLassoError::invalid("max_iterations", "must be >= 1"));
        }
        if !(self.rel_tolerance > 0.0 && self.rel_tolerance < 1.0) {
            return Err(MdLassoError::invalid("rel_tolerance", "must lie in (0, 1)"));
        }
        if let Some(r) = self.safety_radius {
            if !(r.is_finite() && r > 0.0) {
                return Err(MdLassoError::invalid(
                    "safety_radius",
                    "must be finite and > 0",
                ));
            }
        }
        if let Some(init) = &self.initial_point {
            if !init.beta.iter().all(|v| v.is_finite()) {
                return Err(MdLassoError::NonFinite {
                    what: "initial point",
                });
            }
        }
        Ok(())
    }
}

/// Per-iteration diagnostics of [`solve`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveTrace {
    /// Penalized objective, starting with the initial point.
    pub objective_trace: Vec<f64>,
    pub step_norm_trace: Vec<f64>,
    pub backtrack_counts: Vec<usize>,
}

/// `sign(u) * max(|u| - threshold, 0)`; ties at the threshold go to zero.
pub fn soft_threshold(u: ArrayView1<'_, f64>, threshold: f64) -> Result<Array1<f64>> {
    if !(threshold >= 0.0) {
        return Err(MdLassoError::invalid(
            "threshold",
            format!("must be >= 0, got {threshold}"),
        ));
    }
    Ok(u.mapv(|v| shrink(v, threshold)))
}

#[inline]
pub(crate) fn shrink(v: f64, threshold: f64) -> f64 {
    if v > threshold {
        v - threshold
    } else if v < -threshold {
        v + threshold
    } else {
        0.0
    }
}

/// Euclidean projection onto `{x : ||x||_1 <= radius}` by sorting.
pub fn project_l1_ball(u: ArrayView1<'_, f64>, radius: f64) -> Result<Array1<f64>> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(MdLassoError::invalid(
            "radius",
            format!("must be > 0, got {radius}"),
        ));
    }
    let norm: f64 = u.iter().map(|v| v.abs()).sum();
    if norm <= radius {
        return Ok(u.to_owned());
    }
    let mut mags: Vec<f64> = u.iter().map(|v| v.abs()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut shift = 0.0;
    for (k, &m) in mags.iter().enumerate() {
        cumulative += m;
        let candidate = (cumulative - radius) / (k + 1) as f64;
        if m > candidate {
            shift = candidate;
        } else {
            break;
        }
    }
    Ok(u.mapv(|v| shrink(v, shift)))
}

pub(crate) fn l1(v: ArrayView1<'_, f64>) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

/// Largest violation of the l1 stationarity conditions for gradient `grad`.
pub(crate) fn kkt_residual(
    beta: ArrayView1<'_, f64>,
    grad: ArrayView1<'_, f64>,
    lambda: f64,
) -> f64 {
    let mut worst: f64 = 0.0;
    Zip::from(beta).and(grad).for_each(|&b, &g| {
        let v = if b > 0.0 {
            (g + lambda).abs()
        } else if b < 0.0 {
            (g - lambda).abs()
        } else {
            (g.abs() - lambda).max(0.0)
        };
        worst = worst.max(v);
    });
    worst
}

/// Minimizer of the linearized subproblem at `beta` given its gradient.
/// Returns the candidate and whether the ball projection was applied.
fn prox_point(
    beta: ArrayView1<'_, f64>,
    grad: ArrayView1<'_, f64>,
    lambda: f64,
    rho: f64,
    radius: Option<f64>,
) -> Result<(Array1<f64>, bool)> {
    let threshold = lambda / rho;
    let mut out = Array1::zeros(beta.len());
    Zip::from(&mut out)
        .and(beta)
        .and(grad)
        .for_each(|o, &b, &g| *o = shrink(b - g / rho, threshold));
    if let Some(r) = radius {
        if l1(out.view()) > r {
            return Ok((project_l1_ball(out.view(), r)?, true));
        }
    }
    Ok((out, false))
}

/// One composite gradient update at inverse step size `rho`.
pub fn composite_gradient_step(
    data: &Dataset,
    current: &Coefficients,
    params: MdLossParams,
    config: &OptimizerConfig,
    rho: f64,
) -> Result<Coefficients> {
    config.validate()?;
    if !(rho.is_finite() && rho > 0.0) {
        return Err(MdLassoError::invalid(
            "rho",
            format!("must be > 0, got {rho}"),
        ));
    }
    let grad = crate::loss::md_gradient(data, current, params)?;
    let (beta, _) = prox_point(
        current.beta.view(),
        grad.view(),
        config.lambda,
        rho,
        config.safety_radius,
    )?;
    Ok(Coefficients::new(beta))
}

/// Default safety radius: twice the l1 norm of the ridge pilot fit.
pub fn default_safety_radius(data: &Dataset) -> Result<f64> {
    let pilot = ridge_pilot(data.x(), data.y())?;
    let r = 2.0 * l1(pilot.view());
    Ok(if r > 0.0 { r } else { 1.0 })
}

/// Run the composite gradient method to convergence.
pub fn solve(
    data: &Dataset,
    params: MdLossParams,
    config: &OptimizerConfig,
) -> Result<(FitResult, SolveTrace)> {
    config.validate()?;
    let (x, y) = (data.x(), data.y());
    let c = params.c();
    let lambda = config.lambda;
    let radius = match config.safety_radius {
        Some(r) => r,
        None => default_safety_radius(data)?,
    };
    let mut radius_active = false;
    let mut beta = match &config.initial_point {
        Some(init) => {
            check_len("initial point length", data.p(), init.beta.len())?;
            if l1(init.beta.view()) > radius {
                radius_active = true;
                project_l1_ball(init.beta.view(), radius)?
            } else {
                init.beta.clone()
            }
        }
        None => Array1::zeros(data.p()),
    };
    // The solver works with L + c log n, which is non-negative and keeps full
    // relative precision even when c is huge; reported values subtract it.
    let offset = c * (data.n() as f64).ln();

    let mut r = raw_residuals(x, y, beta.view());
    if !r.iter().all(|v| v.is_finite()) {
        return Err(MdLassoError::NonFinite { what: "residuals" });
    }
    let mut loss = shifted_loss(r.view(), c);
    let mut weights = weights_unchecked(r.view(), c);
    let mut grad = weighted_gradient(x, r.view(), weights.view());
    let mut objective = loss + lambda * l1(beta.view());

    let mut trace = SolveTrace::default();
    trace.objective_trace.push(objective - offset);
    let mut rho = config.rho_init;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < config.max_iterations {
        let mut backtracks = 0;
        let accepted = loop {
            let (candidate, projected) =
                prox_point(beta.view(), grad.view(), lambda, rho, Some(radius))?;
            let step = &candidate - &beta;
            let r_new = raw_residuals(x, y, candidate.view());
            let loss_new = shifted_loss(r_new.view(), c);
            let model = loss + grad.dot(&step) + 0.5 * rho * step.dot(&step);
            if loss_new <= model + 1e-14 * (1.0 + loss.abs()) {
                break Some((candidate, step, r_new, loss_new, projected));
            }
            if backtracks == MAX_BACKTRACKS {
                break None;
            }
            rho *= config.backtrack_factor;
            backtracks += 1;
        };
        let Some((candidate, step, r_new, loss_new, projected)) = accepted else {
            break;
        };
        let objective_new = loss_new + lambda * l1(candidate.view());
        if objective_new > objective {
            // Only rounding can undo the majorization descent; the iterate is
            // already optimal to working precision.
            converged = true;
            break;
        }
        iterations += 1;
        radius_active |= projected;
        let change = objective - objective_new;
        beta = candidate;
        r = r_new;
        loss = loss_new;
        weights = weights_unchecked(r.view(), c);
        grad = weighted_gradient(x, r.view(), weights.view());
        trace.objective_trace.push(objective_new - offset);
        trace.step_norm_trace.push(step.dot(&step).sqrt());
        trace.backtrack_counts.push(backtracks);
        let previous = objective;
        objective = objective_new;
        let small_change = change <= config.rel_tolerance * previous.abs();
        // A slow stretch can pass the relative-change test well away from the
        // optimum, so off the safety boundary the stop also needs a KKT
        // certificate.
        if change == 0.0
            || (small_change
                && (projected || kkt_residual(beta.view(), grad.view(), lambda) <= STOP_KKT_TOL))
        {
            converged = true;
            break;
        }
    }

    let kkt = kkt_residual(beta.view(), grad.view(), lambda);
    let mut fit = FitResult::basic("md_lasso", Coefficients::new(beta), lambda);
    fit.c = Some(c);
    fit.objective_value = objective - offset;
    fit.iterations = iterations;
    fit.converged = converged;
    fit.observation_weights = Some(weights);
    fit.objective_trace = trace.objective_trace.clone();
    fit.kkt_residual = kkt;
    fit.radius_active = radius_active;
    Ok((fit, trace))
}
