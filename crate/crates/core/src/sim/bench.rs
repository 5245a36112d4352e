use std::io::Write;
use std::time::Instant;

use ndarray::Array1;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::design::{generate_design, DesignModel};
use super::metrics::{f1_score, model_error};
use super::truth::{generate_truth, SimTruth};
use super::{substream, StreamTag};
use crate::distributions::ErrorDistribution;
use crate::error::{MdLassoError, Result};
use crate::estimators::{
    holdout_split, lambda_grid, registry, tune_with, EstimatorSpec, SplitMethod, TuneOptions,
    ValidationLoss,
};
use crate::io::format_float;
use crate::model::Dataset;

/// `n` independent draws of the noise.
pub fn generate_errors<R: Rng + ?Sized>(
    dist: &ErrorDistribution,
    n: usize,
    rng: &mut R,
) -> Array1<f64> {
    Array1::from(dist.sample_n(rng, n))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuningGrid {
    pub lambda_count: usize,
    /// Smallest grid value as a fraction of the estimator's `lambda_max`.
    pub lambda_min_ratio: f64,
    pub holdout_fraction: f64,
    pub validation: ValidationLoss,
}

impl Default for TuningGrid {
    fn default() -> Self {
        TuningGrid {
            lambda_count: 15,
            lambda_min_ratio: 0.01,
            holdout_fraction: 0.25,
            validation: ValidationLoss::Own,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub n: usize,
    pub p: usize,
    #[serde(default)]
    pub design: DesignModel,
    pub error: ErrorDistribution,
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    /// Estimators to compare; their `lambda` is tuned and otherwise ignored.
    pub estimators: Vec<EstimatorSpec>,
    #[serde(default)]
    pub tuning: TuningGrid,
    /// Record wall-clock time per fit. Off by default so that reports are
    /// reproducible bit for bit.
    #[serde(default)]
    pub record_timing: bool,
}

impl SimConfig {
    pub fn new(
        n: usize,
        p: usize,
        error: ErrorDistribution,
        replications: usize,
        estimators: Vec<EstimatorSpec>,
    ) -> Self {
        SimConfig {
            n,
            p,
            design: DesignModel::default(),
            error,
            replications,
            seed: 0,
            estimators,
            tuning: TuningGrid::default(),
            record_timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 4 {
            return Err(MdLassoError::invalid(
                "n",
                format!("must be >= 4, got {}", self.n),
            ));
        }
        if self.p < 10 {
            return Err(MdLassoError::invalid(
                "p",
                format!("must be >= 10, got {}", self.p),
            ));
        }
        if self.replications == 0 {
            return Err(MdLassoError::invalid("replications", "must be >= 1"));
        }
        if self.estimators.is_empty() {
            return Err(MdLassoError::invalid("estimators", "must not be empty"));
        }
        if self.tuning.lambda_count == 0
            || !(self.tuning.lambda_min_ratio > 0.0 && self.tuning.lambda_min_ratio <= 1.0)
        {
            return Err(MdLassoError::invalid(
                "tuning",
                "lambda_count must be >= 1 and lambda_min_ratio in (0, 1]",
            ));
        }
        self.design.validate()?;
        self.error.validate()?;
        let reg = registry();
        for spec in &self.estimators {
            reg.get(&spec.kind)?.validate(spec)?;
        }
        Ok(())
    }
}

/// Display name of a spec: the kind followed by its non-default
/// parameters, e.g. `md_lasso:c=5`.
pub fn spec_label(spec: &EstimatorSpec) -> String {
    let mut label = spec.kind.clone();
    if let Some(c) = spec.c {
        label.push_str(&format!(":c={c}"));
    }
    if let Some(f) = spec.trim_fraction {
        label.push_str(&format!(":trim_fraction={f}"));
    }
    if let Some(l) = spec.lambda_error {
        label.push_str(&format!(":lambda_error={l}"));
    }
    label
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRecord {
    pub replication: usize,
    pub estimator: String,
    pub lambda: f64,
    pub model_error: f64,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub selected: usize,
    pub runtime_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailureRecord {
    pub replication: usize,
    pub estimator: String,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quantiles {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Quantiles {
    /// Linear-interpolation quantiles; `None` for an empty sample.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let at = |q: f64| {
            let pos = q * (v.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
        };
        Some(Quantiles {
            min: v[0],
            q1: at(0.25),
            median: at(0.5),
            q3: at(0.75),
            max: v[v.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorSummary {
    pub estimator: String,
    pub successes: usize,
    pub failures: usize,
    pub model_error: Option<Quantiles>,
    pub f1: Option<Quantiles>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    /// Ordered by replication, then by estimator position in the config.
    pub records: Vec<MetricRecord>,
    pub failures: Vec<FailureRecord>,
    pub summaries: Vec<EstimatorSummary>,
}

impl MetricReport {
    pub fn summary(&self, estimator: &str) -> Option<&EstimatorSummary> {
        self.summaries.iter().find(|s| s.estimator == estimator)
    }

    /// One CSV row per successful (replication, estimator) fit.
    pub fn write_records_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let timed = self.records.iter().any(|r| r.runtime_seconds.is_some());
        let mut header = vec![
            "replication",
            "estimator",
            "lambda",
            "model_error",
            "f1",
            "precision",
            "recall",
            "selected",
        ];
        if timed {
            header.push("runtime_seconds");
        }
        w.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![
                r.replication.to_string(),
                r.estimator.clone(),
                format_float(r.lambda),
                format_float(r.model_error),
                format_float(r.f1),
                format_float(r.precision),
                format_float(r.recall),
                r.selected.to_string(),
            ];
            if timed {
                row.push(r.runtime_seconds.map(format_float).unwrap_or_default());
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

enum Outcome {
    Fit(MetricRecord),
    Failed(FailureRecord),
}

fn replicate(config: &SimConfig, rep: usize) -> Result<(Dataset, SimTruth)> {
    let idx = rep as u64;
    let (x, covariance) = generate_design(
        config.design,
        config.n,
        config.p,
        &mut substream(config.seed, idx, StreamTag::Design),
    )?;
    let truth = generate_truth(
        config.p,
        covariance,
        &mut substream(config.seed, idx, StreamTag::Truth),
    )?;
    let noise = generate_errors(
        &config.error,
        config.n,
        &mut substream(config.seed, idx, StreamTag::Errors),
    );
    let y = x.dot(&truth.beta_star) + noise;
    Ok((Dataset::new(x, y)?, truth))
}

/// Holdout-validated estimate: `lambda` minimizes the validation loss of
/// fits on the training rows, and the training-row fit at that `lambda` is
/// scored against the truth.
fn evaluate(
    config: &SimConfig,
    data: &Dataset,
    truth: &SimTruth,
    spec: &EstimatorSpec,
    split_seed: u64,
    rep: usize,
) -> Result<MetricRecord> {
    let reg = registry();
    let estimator = reg.get(&spec.kind)?;
    let start = Instant::now();
    let lambda_max = estimator.lambda_max(data, spec)?;
    let grid = lambda_grid(
        lambda_max,
        config.tuning.lambda_count,
        config.tuning.lambda_min_ratio,
    );
    let options = TuneOptions {
        method: SplitMethod::Holdout {
            fraction: config.tuning.holdout_fraction,
        },
        seed: split_seed,
        validation: config.tuning.validation,
    };
    let tuned = tune_with(reg, data, spec, &grid, None, &options)?;
    let (train_rows, _) = holdout_split(data.n(), config.tuning.holdout_fraction, split_seed)?;
    let fit = estimator.fit(&data.select_rows(&train_rows)?, &tuned.chosen)?;
    let elapsed = start.elapsed().as_secs_f64();
    let selected = fit.coefficients.support();
    let score = f1_score(&selected, &truth.support)?;
    Ok(MetricRecord {
        replication: rep,
        estimator: spec_label(spec),
        lambda: tuned.chosen.lambda,
        model_error: model_error(&fit.coefficients, truth)?,
        f1: score.f1,
        precision: score.precision,
        recall: score.recall,
        selected: selected.len(),
        runtime_seconds: config.record_timing.then_some(elapsed),
    })
}

/// Run every replication on the current rayon pool. Output depends only on
/// the config, not on scheduling.
pub fn run_benchmark(config: &SimConfig) -> Result<MetricReport> {
    config.validate()?;
    let per_rep: Vec<Vec<Outcome>> = (0..config.replications)
        .into_par_iter()
        .map(|rep| -> Result<Vec<Outcome>> {
            let (data, truth) = replicate(config, rep)?;
            let split_seed: u64 = substream(config.seed, rep as u64, StreamTag::Split).random();
            Ok(config
                .estimators
                .iter()
                .map(
                    |spec| match evaluate(config, &data, &truth, spec, split_seed, rep) {
                        Ok(record) => Outcome::Fit(record),
                        Err(e) => Outcome::Failed(FailureRecord {
                            replication: rep,
                            estimator: spec_label(spec),
                            message: e.to_string(),
                        }),
                    },
                )
                .collect())
        })
        .collect::<Result<_>>()?;

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for outcome in per_rep.into_iter().flatten() {
        match outcome {
            Outcome::Fit(r) => records.push(r),
            Outcome::Failed(f) => failures.push(f),
        }
    }
    let mut summaries: Vec<EstimatorSummary> = Vec::new();
    for spec in &config.estimators {
        let label = spec_label(spec);
        if summaries.iter().any(|s| s.estimator == label) {
            continue;
        }
        let mine: Vec<&MetricRecord> = records.iter().filter(|r| r.estimator == label).collect();
        let errors: Vec<f64> = mine.iter().map(|r| r.model_error).collect();
        let f1s: Vec<f64> = mine.iter().map(|r| r.f1).collect();
        summaries.push(EstimatorSummary {
            successes: mine.len(),
            failures: failures.iter().filter(|f| f.estimator == label).count(),
            model_error: Quantiles::of(&errors),
            f1: Quantiles::of(&f1s),
            estimator: label,
        });
    }
    Ok(MetricReport {
        records,
        failures,
        summaries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64, replications: usize) -> SimConfig {
        let mut config = SimConfig::new(
            40,
            20,
            ErrorDistribution::standard_normal(),
            replications,
            vec![EstimatorSpec::md_lasso(0.0, 5.0), EstimatorSpec::lasso(0.0)],
        );
        config.seed = seed;
        config.tuning.lambda_count = 5;
        config
    }

    #[test]
    fn one_replication_one_record_per_estimator() {
        let mut config = small(1, 1);
        config.estimators.truncate(1);
        let report = run_benchmark(&config).unwrap();
        assert_eq!(report.records.len(), 1);
        assert_eq!(report.records[0].estimator, "md_lasso:c=5");
        assert!(report.records[0].runtime_seconds.is_none());
        let r = &report.records[0];
        assert!(r.model_error >= 0.0 && (0.0..=1.0).contains(&r.f1));
    }

    #[test]
    fn reports_are_reproducible_and_pool_independent() {
        let config = small(7, 3);
        let a = run_benchmark(&config).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap();
        let b = pool.install(|| run_benchmark(&config)).unwrap();
        let csv = |r: &MetricReport| {
            let mut buf = Vec::new();
            r.write_records_csv(&mut buf).unwrap();
            buf
        };
        assert_eq!(csv(&a), csv(&b));
        assert_eq!(a, b);
        assert_eq!(
            a.records.iter().map(|r| r.replication).collect::<Vec<_>>(),
            vec![0, 0, 1, 1, 2, 2]
        );
    }

    #[test]
    fn failures_are_recorded() {
        let mut config = small(2, 2);
        // A holdout this small leaves no validation rows.
        config.tuning.holdout_fraction = 0.001;
        let report = run_benchmark(&config).unwrap();
        assert!(report.records.is_empty());
        assert_eq!(report.failures.len(), 4);
        assert_eq!(report.summaries[0].failures, 2);
        assert!(report.summaries[0].f1.is_none());
    }

    #[test]
    fn quantiles_interpolate() {
        let q = Quantiles::of(&[4.0, 1.0, 3.0, 2.0, 5.0]).unwrap();
        assert_eq!(
            (q.min, q.q1, q.median, q.q3, q.max),
            (1.0, 2.0, 3.0, 4.0, 5.0)
        );
        assert_eq!(Quantiles::of(&[1.0, 2.0]).unwrap().median, 1.5);
        assert!(Quantiles::of(&[]).is_none());
    }

    #[test]
    fn labels() {
        assert_eq!(
            spec_label(&EstimatorSpec::md_lasso(1.0, 5.0)),
            "md_lasso:c=5"
        );
        assert_eq!(spec_label(&EstimatorSpec::lasso(1.0)), "lasso");
        assert_eq!(
            spec_label(&EstimatorSpec::extended_lasso(1.0, 0.25)),
            "extended_lasso:lambda_error=0.25"
        );
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut config = small(0, 0);
        assert!(run_benchmark(&config).is_err());
        config.replications = 1;
        config.n = 3;
        assert!(run_benchmark(&config).is_err());
    }
}
