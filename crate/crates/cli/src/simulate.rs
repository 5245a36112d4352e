//! The `simulate` subcommand: replicated benchmark runs written as a
//! per-replication CSV and a JSON summary.

use mdlasso_core::distributions::ErrorDistribution;
use mdlasso_core::estimators::ValidationLoss;
use mdlasso_core::sim::{
    generate_errors, run_benchmark, substream, DesignModel, EstimatorSummary, FailureRecord,
    MetricReport, SimConfig, StreamTag,
};
use serde::Serialize;

use crate::args::SimulateArgs;
use crate::config::layered;
use crate::data::parse_estimator_list;
use crate::output::{json_bytes, write_atomic};
use crate::{CliError, CliResult, Console, EXIT_OK};

pub const RECORDS_FILE: &str = "records.csv";
pub const SUMMARY_FILE: &str = "summary.json";

const DEFAULT_ESTIMATORS: &str = "md_lasso:c=5,lasso";
const VARIANCE_CHECK_DRAWS: usize = 100_000;

#[derive(Serialize)]
struct Summary<'a> {
    config: &'a SimConfig,
    summaries: &'a [EstimatorSummary],
    failures: &'a [FailureRecord],
}

fn sim_config(args: &SimulateArgs) -> CliResult<SimConfig> {
    let error: ErrorDistribution = args.error.as_deref().unwrap_or("normal").parse()?;
    let design = match args.design.as_deref().unwrap_or("toeplitz") {
        "toeplitz" => DesignModel::Toeplitz {
            rho: args.rho.unwrap_or(0.5),
        },
        "two_factor" if args.rho.is_none() => DesignModel::TwoFactor,
        "two_factor" => return Err(CliError::input("--rho applies only to the toeplitz design")),
        other => {
            return Err(CliError::input(format!(
                "unknown design `{other}`; expected toeplitz or two_factor"
            )))
        }
    };
    let validation = match args.validation.as_deref().unwrap_or("own") {
        "own" => ValidationLoss::Own,
        "absolute" => ValidationLoss::Absolute,
        other => {
            return Err(CliError::input(format!(
                "unknown validation loss `{other}`; expected own or absolute"
            )))
        }
    };
    let estimators =
        parse_estimator_list(args.estimators.as_deref().unwrap_or(DEFAULT_ESTIMATORS))?;
    let mut config = SimConfig::new(
        args.n.unwrap_or(200),
        args.p.unwrap_or(500),
        error,
        args.replications.unwrap_or(20),
        estimators,
    );
    config.design = design;
    config.seed = args.seed.unwrap_or(0);
    config.record_timing = args.record_timing;
    let tuning = &mut config.tuning;
    tuning.validation = validation;
    if let Some(v) = args.lambda_count {
        tuning.lambda_count = v;
    }
    if let Some(v) = args.lambda_min_ratio {
        tuning.lambda_min_ratio = v;
    }
    if let Some(v) = args.holdout_fraction {
        tuning.holdout_fraction = v;
    }
    config.validate()?;
    Ok(config)
}

/// Compare the sample variance of a fresh batch of errors with the law's
/// variance. Uses a stream no replication reads.
fn variance_check(config: &SimConfig, console: &mut Console<'_>) {
    let Some(expected) = config.error.variance() else {
        console.note(format!(
            "{} errors have no finite variance; skipping variance check",
            config.error.name()
        ));
        return;
    };
    let mut rng = substream(config.seed, config.replications as u64, StreamTag::Errors);
    let draws = generate_errors(&config.error, VARIANCE_CHECK_DRAWS, &mut rng);
    let mean = draws.sum() / draws.len() as f64;
    let var = draws.mapv(|v| (v - mean) * (v - mean)).sum() / draws.len() as f64;
    let verdict = if (var - expected).abs() <= 0.05 * expected {
        "ok"
    } else {
        "MISMATCH"
    };
    console.note(format!(
        "error variance check ({} draws): sample {var:.4}, expected {expected:.4}: {verdict}",
        VARIANCE_CHECK_DRAWS
    ));
}

fn print_table(report: &MetricReport, console: &mut Console<'_>) -> CliResult<()> {
    let width = report
        .summaries
        .iter()
        .map(|s| s.estimator.len())
        .max()
        .unwrap_or(9)
        .max(9);
    writeln!(
        console.out,
        "{:<width$}  {:>9}  {:>8}  {:>10}  {:>9}",
        "estimator", "successes", "failures", "median_me", "median_f1"
    )?;
    for s in &report.summaries {
        let me = s
            .model_error
            .map(|q| format!("{:.4}", q.median))
            .unwrap_or_else(|| "-".into());
        let f1 =
            s.f1.map(|q| format!("{:.4}", q.median))
                .unwrap_or_else(|| "-".into());
        writeln!(
            console.out,
            "{:<width$}  {:>9}  {:>8}  {:>10}  {:>9}",
            s.estimator, s.successes, s.failures, me, f1
        )?;
    }
    Ok(())
}

pub(crate) fn cmd_simulate(args: SimulateArgs, console: &mut Console<'_>) -> CliResult<i32> {
    let args = layered(args.config.clone().as_deref(), args)?;
    let out_dir = args
        .out_dir
        .clone()
        .ok_or_else(|| CliError::input("--out-dir is required"))?;
    let config = sim_config(&args)?;
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::input(format!("cannot create {}: {e}", out_dir.display())))?;
    variance_check(&config, console);
    let report = run_benchmark(&config)?;
    for f in &report.failures {
        console.warn(format!(
            "replication {} {}: {}",
            f.replication, f.estimator, f.message
        ));
    }
    let mut records = Vec::new();
    report.write_records_csv(&mut records)?;
    write_atomic(&out_dir.join(RECORDS_FILE), &records)?;
    let summary = Summary {
        config: &config,
        summaries: &report.summaries,
        failures: &report.failures,
    };
    write_atomic(&out_dir.join(SUMMARY_FILE), &json_bytes(&summary)?)?;
    print_table(&report, console)?;
    Ok(EXIT_OK)
}
