//! Grid search over `lambda` (and `c` for md variants) on seeded holdout or
//! K-fold splits.

use ndarray::Array1;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{mean_abs, registry, EstimatorRegistry, EstimatorSpec};
use crate::error::{MdLassoError, Result};
use crate::model::{residuals, Dataset};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMethod {
    /// Hold out this fraction of the rows for validation.
    Holdout {
        fraction: f64,
    },
    KFold {
        folds: usize,
    },
}

/// Loss applied to validation residuals.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationLoss {
    /// The estimator's own per-observation loss.
    #[default]
    Own,
    /// Mean absolute error, comparable across estimators.
    Absolute,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneOptions {
    pub method: SplitMethod,
    pub seed: u64,
    pub validation: ValidationLoss,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridScore {
    pub spec: EstimatorSpec,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuningResult {
    pub chosen: EstimatorSpec,
    /// Every grid point in input order (`c` outer, `lambda` inner).
    pub grid: Vec<GridScore>,
    pub method: SplitMethod,
}

/// `count` log-spaced values from `lambda_max` down to `min_ratio * lambda_max`.
pub fn lambda_grid(lambda_max: f64, count: usize, min_ratio: f64) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lambda_max],
        _ => (0..count)
            .map(|k| lambda_max * min_ratio.powf(k as f64 / (count - 1) as f64))
            .collect(),
    }
}

/// Training and validation rows of a seeded holdout split, as used by
/// [`tune`] with the same fraction and seed.
pub fn holdout_split(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    Ok(splits(n, SplitMethod::Holdout { fraction }, seed)?.remove(0))
}

/// Training and validation row sets, each sorted.
fn splits(n: usize, method: SplitMethod, seed: u64) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let sorted = |mut v: Vec<usize>| {
        v.sort_unstable();
        v
    };
    match method {
        SplitMethod::Holdout { fraction } => {
            if !(fraction > 0.0 && fraction < 1.0) {
                return Err(MdLassoError::DegenerateSplit(format!(
                    "holdout fraction must lie in (0, 1), got {fraction}"
                )));
            }
            let m = (fraction * n as f64).round() as usize;
            if m < 1 || n - m.min(n) < 2 {
                return Err(MdLassoError::DegenerateSplit(format!(
                    "holdout of {m} rows out of {n} leaves an empty side"
                )));
            }
            Ok(vec![(
                sorted(perm[m..].to_vec()),
                sorted(perm[..m].to_vec()),
            )])
        }
        SplitMethod::KFold { folds } => {
            if folds < 2 || folds > n || n - n.div_ceil(folds) < 2 {
                return Err(MdLassoError::DegenerateSplit(format!(
                    "{folds} folds cannot split {n} rows"
                )));
            }
            Ok((0..folds)
                .map(|f| {
                    let lo = f * n / folds;
                    let hi = (f + 1) * n / folds;
                    let valid = perm[lo..hi].to_vec();
                    let train = perm[..lo].iter().chain(&perm[hi..]).copied().collect();
                    (sorted(train), sorted(valid))
                })
                .collect())
        }
    }
}

pub fn tune(
    data: &Dataset,
    base: &EstimatorSpec,
    lambda_grid: &[f64],
    c_grid: Option<&[f64]>,
    method: SplitMethod,
    seed: u64,
) -> Result<TuningResult> {
    let options = TuneOptions {
        method,
        seed,
        validation: ValidationLoss::Own,
    };
    tune_with(registry(), data, base, lambda_grid, c_grid, &options)
}

/// Grid search. Each `c` is fitted along the `lambda` grid in decreasing
/// order with warm starts. Failed fits score `+inf`. Ties prefer the larger
/// `lambda`, then the larger `c`.
pub fn tune_with(
    registry: &EstimatorRegistry,
    data: &Dataset,
    base: &EstimatorSpec,
    lambda_grid: &[f64],
    c_grid: Option<&[f64]>,
    options: &TuneOptions,
) -> Result<TuningResult> {
    let estimator = registry.get(&base.kind)?;
    if lambda_grid.is_empty() {
        return Err(MdLassoError::invalid("lambda_grid", "must not be empty"));
    }
    let cs: Vec<Option<f64>> = match c_grid {
        Some([]) => return Err(MdLassoError::invalid("c_grid", "must not be empty")),
        Some(grid) if estimator.uses_scale() => grid.iter().map(|&c| Some(c)).collect(),
        Some(_) => {
            return Err(MdLassoError::invalid(
                "c_grid",
                format!("`{}` has no scaling parameter", base.kind),
            ))
        }
        None => vec![base.c],
    };
    let candidate = |lambda: f64, c: Option<f64>| {
        let mut spec = base.clone();
        spec.lambda = lambda;
        spec.c = c;
        spec.solver.initial_point = None;
        spec
    };
    for &c in &cs {
        for &lambda in lambda_grid {
            estimator.validate(&candidate(lambda, c))?;
        }
    }
    let folds = splits(data.n(), options.method, options.seed)?;

    let mut path_order: Vec<usize> = (0..lambda_grid.len()).collect();
    path_order.sort_by(|&a, &b| lambda_grid[b].total_cmp(&lambda_grid[a]).then(a.cmp(&b)));

    let mut scores = vec![vec![0.0; lambda_grid.len()]; cs.len()];
    for (train_rows, valid_rows) in &folds {
        let train = data.select_rows(train_rows)?;
        let valid = data.select_rows(valid_rows)?;
        for (ci, &c) in cs.iter().enumerate() {
            let mut warm: Option<Array1<f64>> = None;
            for &li in &path_order {
                let mut spec = candidate(lambda_grid[li], c);
                spec.solver.initial_point = warm.clone();
                let score = match estimator.fit(&train, &spec) {
                    Ok(fit) => {
                        let r = residuals(&valid, &fit.coefficients)?;
                        warm = Some(fit.coefficients.beta);
                        match options.validation {
                            ValidationLoss::Own => estimator.validation_loss(r.view(), &spec)?,
                            ValidationLoss::Absolute => mean_abs(r.view()),
                        }
                    }
                    Err(_) => f64::INFINITY,
                };
                scores[ci][li] += score / folds.len() as f64;
            }
        }
    }

    let mut grid = Vec::with_capacity(cs.len() * lambda_grid.len());
    for (ci, &c) in cs.iter().enumerate() {
        for (li, &lambda) in lambda_grid.iter().enumerate() {
            let score = scores[ci][li];
            grid.push(GridScore {
                spec: candidate(lambda, c),
                score: if score.is_nan() { f64::INFINITY } else { score },
            });
        }
    }
    let best = grid
        .iter()
        .min_by(|a, b| {
            a.score
                .total_cmp(&b.score)
                .then(b.spec.lambda.total_cmp(&a.spec.lambda))
                .then(b.spec.c.unwrap_or(0.0).total_cmp(&a.spec.c.unwrap_or(0.0)))
        })
        .expect("grid is non-empty");
    if best.score == f64::INFINITY {
        return Err(MdLassoError::DegenerateSplit(
            "every grid point failed to fit".into(),
        ));
    }
    let mut chosen = best.spec.clone();
    chosen.solver.initial_point = base.solver.initial_point.clone();
    Ok(TuningResult {
        chosen,
        grid,
        method: options.method,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::Rng;

    fn sample(seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_fn((40, 6), |_| rng.random_range(-1.0..1.0));
        let y = x.column(0).to_owned() * 2.0 - x.column(3).to_owned()
            + Array1::from_shape_fn(40, |_| rng.random_range(-0.5..0.5));
        Dataset::new(x, y).unwrap()
    }

    #[test]
    fn single_point_grid() {
        let data = sample(1);
        let out = tune(
            &data,
            &EstimatorSpec::lasso(0.0),
            &[0.1],
            None,
            SplitMethod::Holdout { fraction: 0.25 },
            3,
        )
        .unwrap();
        assert_eq!(out.chosen.lambda, 0.1);
        assert_eq!(out.grid.len(), 1);
    }

    #[test]
    fn duplicates_break_toward_larger_parameters() {
        let data = sample(2);
        // All lambdas above lambda_max give the same zero fit and the same score.
        let out = tune(
            &data,
            &EstimatorSpec::md_lasso(0.0, 5.0),
            &[50.0, 100.0, 70.0],
            Some(&[5.0, 5.0, 5.0]),
            SplitMethod::KFold { folds: 4 },
            9,
        )
        .unwrap();
        assert_eq!(out.chosen.lambda, 100.0);
        assert_eq!(out.grid.len(), 9);
        let lasso = tune(
            &data,
            &EstimatorSpec::lasso(0.0),
            &[10.0, 30.0, 20.0],
            None,
            SplitMethod::KFold { folds: 5 },
            9,
        )
        .unwrap();
        assert_eq!(lasso.chosen.lambda, 30.0);
    }

    #[test]
    fn ties_in_c_prefer_larger_c() {
        let data = sample(3);
        let out = tune(
            &data,
            &EstimatorSpec::md_lasso(0.0, 5.0),
            &[1e3],
            Some(&[2.0, 8.0, 4.0]),
            SplitMethod::Holdout { fraction: 0.3 },
            1,
        )
        .unwrap();
        // A zero fit leaves validation residuals equal to y; scores differ by c,
        // so only check that the chosen score is the minimum.
        let min = out
            .grid
            .iter()
            .map(|g| g.score)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(
            out.grid
                .iter()
                .find(|g| g.spec == out.chosen)
                .unwrap()
                .score,
            min
        );
    }

    #[test]
    fn same_seed_same_scores() {
        let data = sample(4);
        let grid = lambda_grid(0.8, 6, 0.01);
        let run = || {
            tune(
                &data,
                &EstimatorSpec::md_lasso(0.0, 5.0),
                &grid,
                None,
                SplitMethod::KFold { folds: 3 },
                77,
            )
            .unwrap()
        };
        let (a, b) = (run(), run());
        let bits = |r: &TuningResult| r.grid.iter().map(|g| g.score.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        assert_eq!(a.chosen, b.chosen);
    }

    #[test]
    fn degenerate_splits_rejected() {
        let data = sample(5).select_rows(&[0, 1]).unwrap();
        let spec = EstimatorSpec::lasso(0.0);
        assert!(tune(
            &data,
            &spec,
            &[0.1],
            None,
            SplitMethod::Holdout { fraction: 0.5 },
            0
        )
        .is_err());
        assert!(tune(
            &data,
            &spec,
            &[0.1],
            None,
            SplitMethod::KFold { folds: 3 },
            0
        )
        .is_err());
        assert!(tune(
            &sample(5),
            &spec,
            &[],
            None,
            SplitMethod::KFold { folds: 3 },
            0
        )
        .is_err());
    }

    #[test]
    fn kfold_partitions_rows() {
        let parts = splits(23, SplitMethod::KFold { folds: 5 }, 4).unwrap();
        let mut all: Vec<usize> = parts.iter().flat_map(|(_, v)| v.clone()).collect();
        all.sort_unstable();
        assert_eq!(all, (0..23).collect::<Vec<_>>());
        for (train, valid) in &parts {
            assert_eq!(train.len() + valid.len(), 23);
        }
    }

    #[test]
    fn grid_is_log_spaced_and_descending() {
        let g = lambda_grid(2.0, 3, 0.01);
        assert_eq!(g[0], 2.0);
        assert!((g[1] - 0.2).abs() < 1e-15);
        assert!((g[2] - 0.02).abs() < 1e-15);
    }
}
