mod common;

use common::*;
use mdlasso_core::distributions::ErrorDistribution;
use mdlasso_core::estimators::{
    fit, fit_extended_lasso, fit_irw_md_lasso, fit_lad_lasso, fit_md_lasso, fit_trimmed_lasso,
    EstimatorSpec,
};
use mdlasso_core::Dataset;
use ndarray::{Array1, Array2};
use rand::Rng;

fn lad_objective(data: &Dataset, beta: &Array1<f64>, lambda: f64) -> f64 {
    let r = &data.y() - &data.x().dot(beta);
    r.iter().map(|v| v.abs()).sum::<f64>() / data.n() as f64
        + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
}

/// Solve a 3 x 3 system by Gaussian elimination with partial pivoting.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        x[i] = (b[i] - (i + 1..3).map(|k| a[i][k] * x[k]).sum::<f64>()) / a[i][i];
    }
    Some(x)
}

/// LAD-Lasso is LAD on the rows of `X` plus `n lambda I` (response 0), and
/// some optimum interpolates 3 of those rows.
fn lp_vertex_optimum(data: &Dataset, lambda: f64) -> f64 {
    let n = data.n();
    let mut rows: Vec<([f64; 3], f64)> = (0..n)
        .map(|i| {
            (
                [data.x()[[i, 0]], data.x()[[i, 1]], data.x()[[i, 2]]],
                data.y()[i],
            )
        })
        .collect();
    for j in 0..3 {
        let mut e = [0.0; 3];
        e[j] = n as f64 * lambda;
        rows.push((e, 0.0));
    }
    let mut best = f64::INFINITY;
    for a in 0..rows.len() {
        for b in a + 1..rows.len() {
            for c in b + 1..rows.len() {
                let m = [rows[a].0, rows[b].0, rows[c].0];
                if let Some(beta) = solve3(m, [rows[a].1, rows[b].1, rows[c].1]) {
                    best = best.min(lad_objective(data, &Array1::from(beta.to_vec()), lambda));
                }
            }
        }
    }
    best
}

#[test]
fn lad_matches_lp_vertex_enumeration() {
    for seed in 0..6 {
        let (data, _) = sparse_instance(seed, 10, 3, 2, &ErrorDistribution::standard_laplace());
        for lambda in [0.0, 0.05, 0.3, 2.0] {
            let fit = fit_lad_lasso(&data, &EstimatorSpec::lad_lasso(lambda)).unwrap();
            let oracle = lp_vertex_optimum(&data, lambda);
            assert!(fit.converged);
            assert!(
                (fit.objective_value - oracle).abs() <= 1e-5 * oracle.abs().max(1e-12),
                "seed {seed} lambda {lambda}: {} vs {oracle}",
                fit.objective_value
            );
            assert!(fit.kkt_residual <= 1e-4, "kkt {}", fit.kkt_residual);
        }
    }
}

/// FISTA on the joint variable `(beta, e)`.
fn extended_oracle(data: &Dataset, lambda: f64, lambda_error: f64) -> f64 {
    let (n, p) = (data.n(), data.p());
    let mut joint = Array2::zeros((n, p + n));
    joint.slice_mut(ndarray::s![.., ..p]).assign(&data.x());
    for i in 0..n {
        joint[[i, p + i]] = 1.0;
    }
    let gram = joint.t().dot(&joint) / n as f64;
    let mut v = Array1::from_elem(p + n, 1.0);
    for _ in 0..500 {
        let w = gram.dot(&v);
        v = &w / norm(&w);
    }
    let lipschitz = v.dot(&gram.dot(&v)) * 1.01;
    let thresholds = Array1::from_shape_fn(
        p + n,
        |k| if k < p { lambda } else { lambda_error } / lipschitz,
    );
    let objective = |z: &Array1<f64>| {
        let r = &data.y() - &joint.dot(z);
        0.5 * r.dot(&r) / n as f64
            + z.iter()
                .enumerate()
                .map(|(k, v)| v.abs() * if k < p { lambda } else { lambda_error })
                .sum::<f64>()
    };
    let mut z = Array1::zeros(p + n);
    let mut extra = z.clone();
    let mut t: f64 = 1.0;
    for _ in 0..200_000 {
        let grad = -joint.t().dot(&(&data.y() - &joint.dot(&extra))) / n as f64;
        let step = &extra - &(grad / lipschitz);
        let next = Array1::from_shape_fn(p + n, |k| {
            let u: f64 = step[k];
            u.signum() * (u.abs() - thresholds[k]).max(0.0)
        });
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        extra = &next + &((&next - &z) * ((t - 1.0) / t_next));
        z = next;
        t = t_next;
    }
    objective(&z)
}

#[test]
fn extended_lasso_matches_joint_proximal_oracle() {
    let (mut data, _) = sparse_instance(3, 20, 5, 2, &ErrorDistribution::standard_normal());
    let mut y = data.y().to_owned();
    y[2] += 12.0;
    y[11] -= 9.0;
    data = data.with_response(y).unwrap();
    let (lambda, lambda_error) = (0.05, 0.1);
    let fit =
        fit_extended_lasso(&data, &EstimatorSpec::extended_lasso(lambda, lambda_error)).unwrap();
    assert!(fit.objective_trace.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    let oracle = extended_oracle(&data, lambda, lambda_error);
    assert!(
        (fit.objective_value - oracle).abs() <= 1e-8,
        "{} vs {oracle}",
        fit.objective_value
    );
}

#[test]
fn reweighted_and_composite_solvers_agree() {
    for seed in 0..4 {
        let (data, _) = sparse_instance(40 + seed, 100, 30, 5, &ErrorDistribution::student_t4());
        let md = fit_md_lasso(&data, &EstimatorSpec::md_lasso(0.05, 5.0)).unwrap();
        let irw = fit_irw_md_lasso(&data, &EstimatorSpec::irw_md_lasso(0.05, 5.0)).unwrap();
        let gap = norm(&(&md.coefficients.beta - &irw.coefficients.beta));
        assert!(gap <= 1e-3, "seed {seed}: gap {gap}");
    }
}

#[test]
fn trimmed_lasso_drops_gross_outlier() {
    let (data, _) = sparse_instance(8, 50, 6, 2, &ErrorDistribution::standard_normal());
    let mut y = data.y().to_owned();
    y[17] += 300.0;
    let data = data.with_response(y).unwrap();
    let fit = fit_trimmed_lasso(&data, &EstimatorSpec::trimmed_lasso(0.05, 0.1)).unwrap();
    assert_eq!(fit.observation_weights.unwrap()[17], 0.0);
}

#[test]
fn every_converged_fit_certifies_kkt() {
    let (data, _) = sparse_instance(12, 60, 12, 3, &ErrorDistribution::default_mixture());
    let specs = [
        EstimatorSpec::md_lasso(0.05, 5.0),
        EstimatorSpec::irw_md_lasso(0.05, 5.0),
        EstimatorSpec::lasso(0.05),
        EstimatorSpec::lad_lasso(0.05),
        EstimatorSpec::trimmed_lasso(0.05, 0.1),
        EstimatorSpec::extended_lasso(0.05, 0.2),
    ];
    for spec in &specs {
        let f = fit(&data, spec).unwrap();
        assert!(f.converged, "{}", spec.kind);
        if !f.radius_active {
            assert!(
                f.kkt_residual <= 1e-4,
                "{}: kkt {}",
                spec.kind,
                f.kkt_residual
            );
        }
    }
}

#[test]
fn lasso_l1_norm_shrinks_along_the_path() {
    let (data, _) = sparse_instance(4, 40, 10, 3, &ErrorDistribution::standard_normal());
    let mut rng = rng(5);
    let mut lambdas: Vec<f64> = (0..12).map(|_| rng.random_range(0.001..2.0)).collect();
    lambdas.sort_by(f64::total_cmp);
    let norms: Vec<f64> = lambdas
        .iter()
        .map(|&l| {
            fit(&data, &EstimatorSpec::lasso(l))
                .unwrap()
                .coefficients
                .l1_norm()
        })
        .collect();
    assert!(norms.windows(2).all(|w| w[1] <= w[0] + 1e-9));
}
