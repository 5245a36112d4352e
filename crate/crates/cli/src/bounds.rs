//! The `bounds` and `curve` subcommands.

use std::io::Write;

use mdlasso_core::distributions::ErrorDistribution;
use mdlasso_core::io::format_float;
use mdlasso_core::theory::{
    rate_bound, rsc_constants, rsc_tail_threshold, scaling_curve, xi_bound, zeta_bound,
    BoundInputs, CurvePoint, GradientBound, RateBound, RscConstants,
};
use serde::Serialize;

use crate::args::BoundsArgs;
use crate::config::layered;
use crate::output::{emit, json_bytes};
use crate::{CliError, CliResult, Console, EXIT_OK, EXIT_THEORY};

#[derive(Debug, Serialize)]
struct BoundsReport {
    distribution: ErrorDistribution,
    inputs: BoundInputs,
    /// `P(|eta| >= sqrt(c)/2)`.
    tail_mass: f64,
    tail_threshold: f64,
    tail_condition_ok: bool,
    xi: f64,
    zeta: f64,
    rsc: RscConstants,
    gradient_bound: GradientBound,
    /// Absent when the tail condition fails.
    rate: Option<RateBound>,
}

fn which_bound(args: &BoundsArgs, dist: &ErrorDistribution) -> CliResult<GradientBound> {
    match args.which.as_deref() {
        None => Ok(GradientBound::for_distribution(dist)),
        Some("lemma1") => Ok(GradientBound::Truncated),
        Some("lemma2") => Ok(GradientBound::SecondMoment),
        Some(other) => Err(CliError::input(format!(
            "unknown --which `{other}`; expected lemma1 or lemma2"
        ))),
    }
}

fn inputs_at(args: &BoundsArgs, dist: &ErrorDistribution, c: f64) -> CliResult<BoundInputs> {
    let mut inputs = BoundInputs::for_distribution(
        dist,
        args.predictor_bound.unwrap_or(1.0),
        args.kappa_re.unwrap_or(1.0),
        args.s.unwrap_or(5),
        args.p.unwrap_or(1000),
        args.n.unwrap_or(200),
        c,
    )?;
    if let Some(gamma) = args.gamma {
        inputs.gamma = gamma;
        inputs.validate()?;
    }
    Ok(inputs)
}

fn distribution(args: &BoundsArgs) -> CliResult<ErrorDistribution> {
    let name = args
        .dist
        .as_deref()
        .ok_or_else(|| CliError::input("--dist is required"))?;
    let dist: ErrorDistribution = name.parse()?;
    dist.validate()?;
    Ok(dist)
}

fn print_report(r: &BoundsReport, console: &mut Console<'_>) -> CliResult<()> {
    let out = &mut console.out;
    writeln!(out, "distribution: {}", r.distribution.name())?;
    writeln!(out, "c: {}", r.inputs.c)?;
    writeln!(out, "gamma: {}", r.inputs.gamma)?;
    writeln!(out, "kappa_1: {}", r.inputs.kappa1)?;
    writeln!(out, "kappa at sqrt(c)/2: {}", r.tail_mass)?;
    writeln!(out, "tail threshold: {}", r.tail_threshold)?;
    writeln!(
        out,
        "tail condition: {}",
        if r.tail_condition_ok {
            "satisfied"
        } else {
            "violated"
        }
    )?;
    writeln!(out, "xi: {}", r.xi)?;
    writeln!(out, "zeta: {}", r.zeta)?;
    writeln!(out, "rsc kappa_1: {}", r.rsc.kappa1_rsc)?;
    writeln!(out, "rsc kappa_2: {}", r.rsc.kappa2_rsc)?;
    if let Some(rate) = &r.rate {
        writeln!(
            out,
            "gradient bound: {}",
            serde_json::to_value(r.gradient_bound)?
                .as_str()
                .unwrap_or_default()
        )?;
        writeln!(out, "rate factor: {}", rate.factor)?;
        writeln!(out, "rate value: {}", rate.value)?;
    }
    Ok(())
}

pub(crate) fn cmd_bounds(args: BoundsArgs, console: &mut Console<'_>) -> CliResult<i32> {
    let args = layered(args.config.clone().as_deref(), args)?;
    if args.curve {
        return write_curve(&args, console);
    }
    let dist = distribution(&args)?;
    let c = args.c.ok_or_else(|| CliError::input("--c is required"))?;
    let inputs = inputs_at(&args, &dist, c)?;
    let which = which_bound(&args, &dist)?;
    let tail_mass = dist.tail_prob(c.sqrt() / 2.0)?;
    let rsc = rsc_constants(&inputs, tail_mass);
    let rate = if rsc.condition_ok {
        Some(rate_bound(&inputs, &dist, which)?)
    } else {
        None
    };
    let report = BoundsReport {
        distribution: dist,
        inputs,
        tail_mass,
        tail_threshold: rsc_tail_threshold(),
        tail_condition_ok: rsc.condition_ok,
        xi: xi_bound(&inputs, &dist)?,
        zeta: zeta_bound(&inputs, &dist)?,
        rsc,
        gradient_bound: which,
        rate,
    };
    print_report(&report, console)?;
    if let Some(path) = &args.output {
        emit(Some(path), &json_bytes(&report)?, console)?;
    }
    if !report.tail_condition_ok {
        writeln!(
            console.err,
            "error: tail condition violated: kappa at sqrt(c)/2 = {} is not below the threshold {}",
            report.tail_mass, report.tail_threshold
        )?;
        return Ok(EXIT_THEORY);
    }
    Ok(EXIT_OK)
}

pub(crate) fn cmd_curve(mut args: BoundsArgs, console: &mut Console<'_>) -> CliResult<i32> {
    args.curve = true;
    cmd_bounds(args, console)
}

fn default_grid() -> Vec<f64> {
    (1..=40).map(|k| 5.0 * k as f64).collect()
}

fn write_curve(args: &BoundsArgs, console: &mut Console<'_>) -> CliResult<i32> {
    let dist = distribution(args)?;
    let grid = args.c_grid.clone().unwrap_or_else(default_grid);
    let first = *grid
        .first()
        .ok_or_else(|| CliError::input("--c-grid must not be empty"))?;
    if args.gamma.is_some() {
        return Err(CliError::input("--gamma is fixed to sqrt(c) along a curve"));
    }
    let inputs = inputs_at(args, &dist, first)?;
    let points: Vec<CurvePoint> = match args.which {
        None => scaling_curve(&dist, &grid, &inputs)?,
        Some(_) => {
            let which = which_bound(args, &dist)?;
            grid.iter()
                .map(|&c| {
                    let bound = rate_bound(&inputs.at_scale(c), &dist, which)?;
                    Ok(CurvePoint {
                        c,
                        factor: bound.factor,
                    })
                })
                .collect::<mdlasso_core::Result<_>>()?
        }
    };
    let mut text = String::from("c,factor\n");
    for p in &points {
        text.push_str(&format!(
            "{},{}\n",
            format_float(p.c),
            format_float(p.factor)
        ));
    }
    emit(args.output.as_deref(), text.as_bytes(), console)?;
    Ok(EXIT_OK)
}
