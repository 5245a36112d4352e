//! Subcommands that work on a user dataset: fit, tune, stability, qqdata.

use std::path::Path;

use mdlasso_core::estimators::{
    lambda_grid, registry, tune, EstimatorSpec, SplitMethod, TuningResult, DEFAULT_TRIM_FRACTION,
    MD_LASSO, TRIMMED_LASSO,
};
use mdlasso_core::io::{format_float, load_csv, LabeledDataset, ResponseColumn};
use mdlasso_core::model::{destandardize_coefficients, standardize, Standardizer};
use mdlasso_core::sim::bootstrap_stability;
use mdlasso_core::{Dataset, FitResult};
use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::args::{DataOpts, EstimatorOpts, FitArgs, QqArgs, StabilityArgs, TuneArgs, TuningOpts};
use crate::config::layered;
use crate::output::{emit, json_bytes, normal_quantile, plotting_positions};
use crate::{CliError, CliResult, Console, EXIT_OK, EXIT_SOLVER};

const DEFAULT_C: f64 = 5.0;
const DEFAULT_RESPONSE: &str = "y";
const DEFAULT_TOP_K: usize = 10;
const DEFAULT_BOOTSTRAP: usize = 100;

/// Fitted model as written by `fit` and read back by `qqdata`.
/// Coefficients and intercept are on the scale of the input columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub estimator: String,
    pub response: String,
    pub feature_names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub lambda: f64,
    /// Whether `lambda` was chosen by holdout validation.
    pub lambda_tuned: bool,
    pub c: Option<f64>,
    pub standardized: bool,
    /// Objective value on the scale the estimator was fitted on.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub kkt_residual: f64,
    pub observation_weights: Option<Vec<f64>>,
    pub top_predictors: Vec<TopPredictor>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopPredictor {
    pub name: String,
    pub index: usize,
    pub coefficient: f64,
}

/// The part of a model document `qqdata` needs.
#[derive(Deserialize)]
struct LinearModel {
    response: String,
    feature_names: Vec<String>,
    coefficients: Vec<f64>,
    intercept: f64,
}

fn default_spec(kind: &str) -> CliResult<EstimatorSpec> {
    let estimator = registry().get(kind)?;
    let mut spec = EstimatorSpec::new(kind, 0.0);
    if estimator.uses_scale() {
        spec.c = Some(DEFAULT_C);
    }
    if kind == TRIMMED_LASSO {
        spec.trim_fraction = Some(DEFAULT_TRIM_FRACTION);
    }
    Ok(spec)
}

/// Parse `kind[:key=value]...` items separated by commas, e.g.
/// `md_lasso:c=5,lasso,extended_lasso:lambda_error=0.2`. The md variants
/// default to `c = 5` and trimmed_lasso to a 10% trim.
pub fn parse_estimator_list(text: &str) -> CliResult<Vec<EstimatorSpec>> {
    let mut specs = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let mut parts = item.split(':');
        let kind = parts.next().unwrap_or_default();
        let mut spec = default_spec(kind)?;
        for param in parts {
            let (key, value) = param.split_once('=').ok_or_else(|| {
                CliError::input(format!(
                    "estimator `{item}`: expected key=value, got `{param}`"
                ))
            })?;
            let value: f64 = value.parse().map_err(|_| {
                CliError::input(format!("estimator `{item}`: `{value}` is not a number"))
            })?;
            match key {
                "c" => spec.c = Some(value),
                "trim_fraction" => spec.trim_fraction = Some(value),
                "lambda_error" => spec.lambda_error = Some(value),
                _ => {
                    return Err(CliError::input(format!(
                        "estimator `{item}`: unknown parameter `{key}`"
                    )))
                }
            }
        }
        registry().get(kind)?.validate(&spec)?;
        specs.push(spec);
    }
    if specs.is_empty() {
        return Err(CliError::input("no estimators given"));
    }
    Ok(specs)
}

fn build_spec(opts: &EstimatorOpts, lambda: f64) -> CliResult<EstimatorSpec> {
    let kind = opts.estimator.as_deref().unwrap_or(MD_LASSO);
    let mut spec = default_spec(kind)?;
    spec.lambda = lambda;
    spec.c = opts.c.or(spec.c);
    spec.trim_fraction = opts.trim_fraction.or(spec.trim_fraction);
    spec.lambda_error = opts.lambda_error;
    if let Some(m) = opts.max_iterations {
        spec.solver.max_iterations = m;
    }
    if let Some(t) = opts.rel_tolerance {
        spec.solver.rel_tolerance = t;
    }
    registry().get(kind)?.validate(&spec)?;
    Ok(spec)
}

struct Prepared {
    labeled: LabeledDataset,
    /// Data the estimator sees: standardized unless disabled.
    working: Dataset,
    standardizer: Standardizer,
    standardized: bool,
}

fn required<'a, T>(value: &'a Option<T>, flag: &str) -> CliResult<&'a T> {
    value
        .as_ref()
        .ok_or_else(|| CliError::input(format!("--{flag} is required")))
}

fn load(path: &Path, response: &str) -> CliResult<LabeledDataset> {
    load_csv(path, &ResponseColumn::parse(response))
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn prepare(opts: &DataOpts) -> CliResult<Prepared> {
    let path = required(&opts.input, "input")?;
    let labeled = load(path, opts.response.as_deref().unwrap_or(DEFAULT_RESPONSE))?;
    let (working, standardizer) = if opts.no_standardize {
        (
            labeled.data.clone(),
            Standardizer::identity(labeled.data.p()),
        )
    } else {
        standardize(&labeled.data)?
    };
    Ok(Prepared {
        labeled,
        working,
        standardizer,
        standardized: !opts.no_standardize,
    })
}

fn holdout(tuning: &TuningOpts) -> SplitMethod {
    SplitMethod::Holdout {
        fraction: tuning.holdout_fraction.unwrap_or(0.25),
    }
}

/// Lambda grid from the estimator's `lambda_max` (the largest over `cs`
/// when several scales are searched).
fn grid_for(
    data: &Dataset,
    spec: &EstimatorSpec,
    cs: Option<&[f64]>,
    tuning: &TuningOpts,
) -> CliResult<Vec<f64>> {
    let estimator = registry().get(&spec.kind)?;
    let lambda_max = match cs {
        Some(cs) => cs.iter().try_fold(0.0f64, |acc, &c| {
            let mut s = spec.clone();
            s.c = Some(c);
            estimator.lambda_max(data, &s).map(|v| acc.max(v))
        })?,
        None => estimator.lambda_max(data, spec)?,
    };
    Ok(lambda_grid(
        lambda_max,
        tuning.lambda_count.unwrap_or(15),
        tuning.lambda_min_ratio.unwrap_or(0.01),
    ))
}

/// `spec` with `lambda` if given, else the holdout-validated choice.
fn resolve_lambda(
    data: &Dataset,
    spec: EstimatorSpec,
    lambda: Option<f64>,
    tuning: &TuningOpts,
    console: &mut Console<'_>,
) -> CliResult<(EstimatorSpec, bool)> {
    if let Some(lambda) = lambda {
        let spec = EstimatorSpec { lambda, ..spec };
        registry().get(&spec.kind)?.validate(&spec)?;
        return Ok((spec, false));
    }
    let grid = grid_for(data, &spec, None, tuning)?;
    let tuned = tune(
        data,
        &spec,
        &grid,
        None,
        holdout(tuning),
        tuning.seed.unwrap_or(0),
    )?;
    console.note(format!("tuned lambda = {}", tuned.chosen.lambda));
    let mut chosen = tuned.chosen;
    chosen.solver.initial_point = None;
    Ok((chosen, true))
}

fn top_predictors(names: &[String], beta: &Array1<f64>, k: usize) -> Vec<TopPredictor> {
    let mut order: Vec<usize> = (0..beta.len()).filter(|&j| beta[j] != 0.0).collect();
    order.sort_by(|&a, &b| beta[b].abs().total_cmp(&beta[a].abs()).then(a.cmp(&b)));
    order
        .into_iter()
        .take(k)
        .map(|j| TopPredictor {
            name: names[j].clone(),
            index: j,
            coefficient: beta[j],
        })
        .collect()
}

fn document(
    prepared: &Prepared,
    fit: &FitResult,
    tuned: bool,
    top_k: usize,
) -> CliResult<ModelDocument> {
    let coef = destandardize_coefficients(&fit.coefficients, &prepared.standardizer)?;
    Ok(ModelDocument {
        estimator: fit.estimator.clone(),
        response: prepared.labeled.response_name.clone(),
        feature_names: prepared.labeled.feature_names.clone(),
        coefficients: coef.beta.to_vec(),
        intercept: coef.intercept,
        lambda: fit.lambda,
        lambda_tuned: tuned,
        c: fit.c,
        standardized: prepared.standardized,
        objective: fit.objective_value,
        iterations: fit.iterations,
        converged: fit.converged,
        kkt_residual: fit.kkt_residual,
        observation_weights: fit.observation_weights.as_ref().map(|w| w.to_vec()),
        top_predictors: top_predictors(&prepared.labeled.feature_names, &coef.beta, top_k),
    })
}

pub(crate) fn cmd_fit(args: FitArgs, strict: bool, console: &mut Console<'_>) -> CliResult<i32> {
    let args = layered(args.config.clone().as_deref(), args)?;
    let prepared = prepare(&args.data)?;
    let spec = build_spec(&args.estimator, args.lambda.unwrap_or(0.0))?;
    let (spec, tuned) =
        resolve_lambda(&prepared.working, spec, args.lambda, &args.tuning, console)?;
    let fit = registry().fit(&prepared.working, &spec)?;
    let doc = document(&prepared, &fit, tuned, args.top_k.unwrap_or(DEFAULT_TOP_K))?;
    emit(args.output.as_deref(), &json_bytes(&doc)?, console)?;
    if !fit.converged {
        console.warn(format!(
            "{} did not converge in {} iterations",
            fit.estimator, fit.iterations
        ));
        if strict {
            return Ok(EXIT_SOLVER);
        }
    }
    Ok(EXIT_OK)
}

pub(crate) fn cmd_tune(args: TuneArgs, _strict: bool, console: &mut Console<'_>) -> CliResult<i32> {
    let args = layered(args.config.clone().as_deref(), args)?;
    let prepared = prepare(&args.data)?;
    let spec = build_spec(&args.estimator, 0.0)?;
    let cs = args.c_grid.as_deref();
    let grid = grid_for(&prepared.working, &spec, cs, &args.tuning)?;
    let method = match args.folds {
        Some(folds) => SplitMethod::KFold { folds },
        None => holdout(&args.tuning),
    };
    let result: TuningResult = tune(
        &prepared.working,
        &spec,
        &grid,
        cs,
        method,
        args.tuning.seed.unwrap_or(0),
    )?;
    console.note(format!(
        "chosen lambda = {}, c = {:?}",
        result.chosen.lambda, result.chosen.c
    ));
    emit(args.output.as_deref(), &json_bytes(&result)?, console)?;
    Ok(EXIT_OK)
}

pub(crate) fn cmd_stability(
    args: StabilityArgs,
    _strict: bool,
    console: &mut Console<'_>,
) -> CliResult<i32> {
    let args = layered(args.config.clone().as_deref(), args)?;
    let prepared = prepare(&args.data)?;
    let spec = build_spec(&args.estimator, args.lambda.unwrap_or(0.0))?;
    let (spec, _) = resolve_lambda(&prepared.working, spec, args.lambda, &args.tuning, console)?;
    let draws = args.bootstrap.unwrap_or(DEFAULT_BOOTSTRAP);
    let counts = bootstrap_stability(
        &prepared.working,
        &spec,
        draws,
        args.tuning.seed.unwrap_or(0),
    )?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::input(e.to_string());
    w.write_record(["predictor", "index", "count", "frequency"])
        .map_err(csv_err)?;
    for (&j, &count) in &counts {
        w.write_record([
            prepared.labeled.feature_names[j].clone(),
            j.to_string(),
            count.to_string(),
            format_float(count as f64 / draws as f64),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::input(e.to_string()))?;
    emit(args.output.as_deref(), &bytes, console)?;
    Ok(EXIT_OK)
}

pub(crate) fn cmd_qqdata(args: QqArgs, console: &mut Console<'_>) -> CliResult<i32> {
    let args = layered(args.config.clone().as_deref(), args)?;
    let model_path = required(&args.model, "model")?;
    let text = std::fs::read_to_string(model_path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", model_path.display())))?;
    let model: LinearModel = serde_json::from_str(&text)
        .map_err(|e| CliError::input(format!("{}: {e}", model_path.display())))?;
    let response = args.response.as_deref().unwrap_or(&model.response);
    let labeled = load(required(&args.input, "input")?, response)?;
    if model.coefficients.len() != model.feature_names.len() {
        return Err(CliError::input(format!(
            "model has {} coefficients but {} feature names",
            model.coefficients.len(),
            model.feature_names.len()
        )));
    }
    if labeled.feature_names != model.feature_names {
        return Err(CliError::input(format!(
            "data predictors [{}] do not match the model's [{}]",
            labeled.feature_names.join(", "),
            model.feature_names.join(", ")
        )));
    }
    let beta = Array1::from(model.coefficients);
    let fitted = labeled.data.x().dot(&beta) + model.intercept;
    let mut residuals = (&labeled.data.y() - &fitted).to_vec();
    residuals.sort_by(f64::total_cmp);
    let mut text = String::from("theoretical,residual\n");
    for (prob, r) in plotting_positions(residuals.len()).zip(&residuals) {
        text.push_str(&format!(
            "{},{}\n",
            format_float(normal_quantile(prob)),
            format_float(*r)
        ));
    }
    emit(args.output.as_deref(), text.as_bytes(), console)?;
    Ok(EXIT_OK)
}
