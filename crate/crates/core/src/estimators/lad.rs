use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};

use super::{check_initial, mean_abs, Estimator, EstimatorSpec, LAD_LASSO};
use crate::error::Result;
use crate::linalg::{cholesky_factor, cholesky_solve_factored};
use crate::model::{raw_residuals, Coefficients, Dataset, FitResult};
use crate::prox::{kkt_residual, l1};

const IP_TOL: f64 = 1e-10;
const IP_MAX_ITERATIONS: usize = 200;
const STEP_FRACTION: f64 = 0.99995;
/// Penalty floor keeping the split coefficients bounded when `lambda = 0`.
const LAMBDA_FLOOR: f64 = 1e-10;

/// LAD-Lasso `(1/n) sum_i |r_i| + lambda ||b||_1`.
///
/// Solved as the linear program
/// `min lambda 1'(b+ + b-) + (1/n) 1'(u+ + u-)` subject to
/// `X (b+ - b-) + u+ - u- = y` and nonnegativity, by a Mehrotra
/// predictor-corrector interior point method whose normal equations are
/// `n x n`. A coordinate is reported as exactly zero when its primal
/// values are below their dual slacks at the final iterate.
pub struct LadLasso;

/// Linear program in standard form with variables stacked as
/// `(b+, b-, u+, u-)`.
struct LadProgram<'a> {
    x: ArrayView2<'a, f64>,
    y: ArrayView1<'a, f64>,
    cost: Array1<f64>,
    n: usize,
    p: usize,
}

impl LadProgram<'_> {
    fn apply(&self, v: &Array1<f64>) -> Array1<f64> {
        let (n, p) = (self.n, self.p);
        let b = &v.slice(s![..p]) - &v.slice(s![p..2 * p]);
        self.x.dot(&b) + &v.slice(s![2 * p..2 * p + n]) - &v.slice(s![2 * p + n..])
    }

    fn apply_t(&self, w: &Array1<f64>) -> Array1<f64> {
        let xt = self.x.t().dot(w);
        let mut out = Array1::zeros(2 * self.p + 2 * self.n);
        out.slice_mut(s![..self.p]).assign(&xt);
        out.slice_mut(s![self.p..2 * self.p]).assign(&-&xt);
        out.slice_mut(s![2 * self.p..2 * self.p + self.n]).assign(w);
        out.slice_mut(s![2 * self.p + self.n..]).assign(&-w);
        out
    }

    /// Cholesky factor of `A diag(d) A^T = X diag(d_b+ + d_b-) X^T + diag(d_u+ + d_u-)`.
    fn normal_factor(&self, d: &Array1<f64>) -> Array2<f64> {
        let (n, p) = (self.n, self.p);
        let db = (&d.slice(s![..p]) + &d.slice(s![p..2 * p])).mapv(f64::sqrt);
        let scaled = &self.x * &db.view().insert_axis(Axis(0));
        let mut m = scaled.dot(&scaled.t());
        let du = &d.slice(s![2 * p..2 * p + n]) + &d.slice(s![2 * p + n..]);
        let mut bump = 0.0;
        loop {
            let mut trial = m.clone();
            for i in 0..n {
                trial[[i, i]] += du[i] + bump;
            }
            match cholesky_factor(trial) {
                Ok(l) => return l,
                Err(_) => {
                    let scale = (0..n)
                        .map(|i| m[[i, i]] + du[i])
                        .fold(0.0, f64::max)
                        .max(1e-300);
                    bump = if bump == 0.0 {
                        1e-14 * scale
                    } else {
                        bump * 100.0
                    };
                    if bump > scale {
                        // Give up on accuracy rather than loop forever.
                        for i in 0..n {
                            m[[i, i]] += bump;
                        }
                    }
                }
            }
        }
    }
}

struct Iterate {
    primal: Array1<f64>,
    dual: Array1<f64>,
    slack: Array1<f64>,
}

/// Largest step in `(0, 1]` keeping `v + t dv` nonnegative, shortened by
/// [`STEP_FRACTION`].
fn max_step(v: &Array1<f64>, dv: &Array1<f64>, fraction: f64) -> f64 {
    let mut t: f64 = 1.0;
    Zip::from(v).and(dv).for_each(|&a, &da| {
        if da < 0.0 {
            t = t.min(-fraction * a / da);
        }
    });
    t
}

struct LpOutcome {
    iterate: Iterate,
    iterations: usize,
    converged: bool,
    trace: Vec<f64>,
}

fn solve_lp(program: &LadProgram<'_>) -> LpOutcome {
    let (n, p) = (program.n, program.p);
    let total = 2 * p + 2 * n;
    let y = program.y;
    let mut primal = Array1::ones(total);
    for i in 0..n {
        primal[2 * p + i] = y[i].max(0.0) + 1.0;
        primal[2 * p + n + i] = (-y[i]).max(0.0) + 1.0;
    }
    let shift = 1.0 / n as f64;
    let mut it = Iterate {
        primal,
        dual: Array1::zeros(n),
        slack: program.cost.mapv(|c| c + shift),
    };
    let y_norm = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let c_norm = program.cost.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut trace = Vec::new();
    for iteration in 1..=IP_MAX_ITERATIONS {
        let r_p = &y - &program.apply(&it.primal);
        let r_d = &program.cost - &program.apply_t(&it.dual) - &it.slack;
        let primal_obj = program.cost.dot(&it.primal);
        let dual_obj = y.dot(&it.dual);
        trace.push(primal_obj);
        let gap = (primal_obj - dual_obj).abs() / (1.0 + primal_obj.abs());
        let p_inf = r_p.iter().fold(0.0f64, |m, v| m.max(v.abs())) / (1.0 + y_norm);
        let d_inf = r_d.iter().fold(0.0f64, |m, v| m.max(v.abs())) / (1.0 + c_norm);
        if gap <= IP_TOL && p_inf <= IP_TOL && d_inf <= IP_TOL {
            return LpOutcome {
                iterate: it,
                iterations: iteration - 1,
                converged: true,
                trace,
            };
        }
        let d = &it.primal / &it.slack;
        let factor = program.normal_factor(&d);
        let direction = |r_c: &Array1<f64>| {
            let rhs = &r_p - &program.apply(&(r_c / &it.slack)) + program.apply(&(&d * &r_d));
            let dy = cholesky_solve_factored(&factor, rhs.view());
            let ds = &r_d - &program.apply_t(&dy);
            let dx = r_c / &it.slack - &d * &ds;
            (dx, dy, ds)
        };
        let mu = it.primal.dot(&it.slack) / total as f64;
        let xs = &it.primal * &it.slack;
        let (dx_aff, _, ds_aff) = direction(&-&xs);
        let ap = max_step(&it.primal, &dx_aff, 1.0);
        let ad = max_step(&it.slack, &ds_aff, 1.0);
        let mu_aff =
            (&it.primal + &(&dx_aff * ap)).dot(&(&it.slack + &(&ds_aff * ad))) / total as f64;
        let sigma = (mu_aff / mu).powi(3).min(1.0);
        let r_c = (sigma * mu) - &xs - &dx_aff * &ds_aff;
        let (dx, dy, ds) = direction(&r_c);
        let ap = max_step(&it.primal, &dx, STEP_FRACTION);
        let ad = max_step(&it.slack, &ds, STEP_FRACTION);
        if !(ap > 0.0 && ad > 0.0) || dx.iter().chain(ds.iter()).any(|v| !v.is_finite()) {
            return LpOutcome {
                iterate: it,
                iterations: iteration,
                converged: false,
                trace,
            };
        }
        it.primal.scaled_add(ap, &dx);
        it.dual.scaled_add(ad, &dy);
        it.slack.scaled_add(ad, &ds);
    }
    LpOutcome {
        iterate: it,
        iterations: IP_MAX_ITERATIONS,
        converged: false,
        trace,
    }
}

impl Estimator for LadLasso {
    fn name(&self) -> &'static str {
        LAD_LASSO
    }

    fn validate(&self, spec: &EstimatorSpec) -> Result<()> {
        spec.check_fields(false, false, false)
    }

    fn fit(&self, data: &Dataset, spec: &EstimatorSpec) -> Result<FitResult> {
        check_initial(data, spec)?;
        let (x, y) = (data.x(), data.y());
        let (n, p) = (data.n(), data.p());
        let lambda = spec.lambda;
        let penalty = lambda.max(LAMBDA_FLOOR);
        let mut cost = Array1::from_elem(2 * p + 2 * n, 1.0 / n as f64);
        cost.slice_mut(s![..2 * p]).fill(penalty);
        let program = LadProgram { x, y, cost, n, p };
        let out = solve_lp(&program);
        let it = &out.iterate;
        let beta = Array1::from_shape_fn(p, |j| {
            let (plus, minus) = (it.primal[j], it.primal[p + j]);
            if plus > it.slack[j] || minus > it.slack[p + j] {
                plus - minus
            } else {
                0.0
            }
        });
        let r = raw_residuals(x, y, beta.view());
        // Scaled dual vector is a subgradient of the absolute loss.
        let v = it.dual.mapv(|d| (d * n as f64).clamp(-1.0, 1.0));
        let grad = -x.t().dot(&v) / n as f64;
        let mut fit = FitResult::basic(LAD_LASSO, Coefficients::new(beta), lambda);
        fit.kkt_residual = kkt_residual(fit.coefficients.beta.view(), grad.view(), lambda);
        fit.objective_value = mean_abs(r.view()) + lambda * l1(fit.coefficients.beta.view());
        fit.objective_trace = out.trace;
        fit.iterations = out.iterations;
        fit.converged = out.converged;
        Ok(fit)
    }

    fn lambda_max(&self, data: &Dataset, _spec: &EstimatorSpec) -> Result<f64> {
        let signs = data.y().mapv(f64::signum);
        let g = data.x().t().dot(&signs) / data.n() as f64;
        Ok(g.iter().fold(0.0f64, |m, v| m.max(v.abs())))
    }

    fn validation_loss(
        &self,
        residuals: ArrayView1<'_, f64>,
        _spec: &EstimatorSpec,
    ) -> Result<f64> {
        Ok(mean_abs(residuals))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::fit_lad_lasso;
    use ndarray::{array, Array2};

    #[test]
    fn intercept_only_is_the_median() {
        let y = array![3.0, -1.0, 10.0, 2.5, 0.0, 7.0, 1.0];
        let data = Dataset::new(Array2::ones((7, 1)), y).unwrap();
        let fit = fit_lad_lasso(&data, &EstimatorSpec::lad_lasso(0.0)).unwrap();
        assert!((fit.coefficients.beta[0] - 2.5).abs() < 1e-5);
    }

    #[test]
    fn flipping_response_flips_solution() {
        let x = array![
            [1.0, 0.5],
            [0.3, -1.0],
            [2.0, 0.1],
            [-0.4, 0.8],
            [1.1, 1.2],
            [0.0, -0.6]
        ];
        let y = array![1.0, -2.0, 3.0, 0.5, 2.2, -0.1];
        let spec = EstimatorSpec::lad_lasso(0.05);
        let a = fit_lad_lasso(&Dataset::new(x.clone(), y.clone()).unwrap(), &spec).unwrap();
        let b = fit_lad_lasso(&Dataset::new(x, -y).unwrap(), &spec).unwrap();
        for (u, v) in a.coefficients.beta.iter().zip(b.coefficients.beta.iter()) {
            assert!((u + v).abs() < 1e-5);
        }
    }

    #[test]
    fn huge_penalty_gives_zero() {
        let x = array![[1.0, 0.5], [0.3, -1.0], [2.0, 0.1], [-0.4, 0.8]];
        let data = Dataset::new(x, array![1.0, -2.0, 3.0, 0.5]).unwrap();
        let fit = fit_lad_lasso(&data, &EstimatorSpec::lad_lasso(100.0)).unwrap();
        assert!(fit.converged);
        assert!(fit.coefficients.beta.iter().all(|&b| b == 0.0));
    }
}
