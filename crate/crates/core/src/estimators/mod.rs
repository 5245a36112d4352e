//! Estimator front-ends behind a common trait, selected by name.
//!
//! The default registry holds:
//!
//! * `md_lasso`: composite gradient solver on the MD loss,
//! * `irw_md_lasso`: iteratively reweighted Lasso fixed point of the same objective,
//! * `lasso`: `(1/2n)||y - X b||^2 + lambda ||b||_1` by coordinate descent,
//! * `lad_lasso`: `(1/n)||y - X b||_1 + lambda ||b||_1` by Huber smoothing homotopy,
//! * `trimmed_lasso`: Lasso refit after dropping the largest absolute residuals,
//! * `extended_lasso`: Lasso with an additional sparse corruption vector.

mod cd;
mod extended;
mod irw;
mod lad;
mod lasso;
mod md_lasso;
mod trimmed;
mod tune;

use std::collections::BTreeMap;
use std::sync::OnceLock;

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{MdLassoError, Result};
use crate::model::{Dataset, FitResult};
use crate::prox::OptimizerConfig;

pub use extended::ExtendedLasso;
pub use irw::IrwMdLasso;
pub use lad::LadLasso;
pub use lasso::Lasso;
pub use md_lasso::MdLasso;
pub use trimmed::TrimmedLasso;
pub use tune::{
    holdout_split, lambda_grid, tune, tune_with, GridScore, SplitMethod, TuneOptions, TuningResult,
    ValidationLoss,
};

pub const MD_LASSO: &str = "md_lasso";
pub const IRW_MD_LASSO: &str = "irw_md_lasso";
pub const LASSO: &str = "lasso";
pub const LAD_LASSO: &str = "lad_lasso";
pub const TRIMMED_LASSO: &str = "trimmed_lasso";
pub const EXTENDED_LASSO: &str = "extended_lasso";

pub const DEFAULT_TRIM_FRACTION: f64 = 0.10;

/// Solver settings shared by the iterative estimators. Fields other than
/// the tolerances only apply to the composite gradient solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverControls {
    pub rho_init: f64,
    pub backtrack_factor: f64,
    pub max_iterations: usize,
    pub rel_tolerance: f64,
    pub safety_radius: Option<f64>,
    #[serde(skip)]
    pub initial_point: Option<Array1<f64>>,
}

impl Default for SolverControls {
    fn default() -> Self {
        let base = OptimizerConfig::default();
        SolverControls {
            rho_init: base.rho_init,
            backtrack_factor: base.backtrack_factor,
            max_iterations: base.max_iterations,
            rel_tolerance: base.rel_tolerance,
            safety_radius: None,
            initial_point: None,
        }
    }
}

impl SolverControls {
    pub fn optimizer_config(&self, lambda: f64) -> OptimizerConfig {
        OptimizerConfig {
            lambda,
            rho_init: self.rho_init,
            backtrack_factor: self.backtrack_factor,
            max_iterations: self.max_iterations,
            rel_tolerance: self.rel_tolerance,
            safety_radius: self.safety_radius,
            initial_point: self
                .initial_point
                .clone()
                .map(crate::model::Coefficients::new),
        }
    }
}

/// What to fit and with which tuning parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSpec {
    pub kind: String,
    pub lambda: f64,
    /// Scaling parameter; md variants only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    /// Fraction of observations dropped; trimmed Lasso only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trim_fraction: Option<f64>,
    /// Penalty on the corruption vector; extended Lasso only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_error: Option<f64>,
    #[serde(default)]
    pub solver: SolverControls,
}

impl EstimatorSpec {
    pub fn new(kind: &str, lambda: f64) -> Self {
        EstimatorSpec {
            kind: kind.to_string(),
            lambda,
            c: None,
            trim_fraction: None,
            lambda_error: None,
            solver: SolverControls::default(),
        }
    }

    pub fn md_lasso(lambda: f64, c: f64) -> Self {
        EstimatorSpec {
            c: Some(c),
            ..Self::new(MD_LASSO, lambda)
        }
    }

    pub fn irw_md_lasso(lambda: f64, c: f64) -> Self {
        EstimatorSpec {
            c: Some(c),
            ..Self::new(IRW_MD_LASSO, lambda)
        }
    }

    pub fn lasso(lambda: f64) -> Self {
        Self::new(LASSO, lambda)
    }

    pub fn lad_lasso(lambda: f64) -> Self {
        Self::new(LAD_LASSO, lambda)
    }

    pub fn trimmed_lasso(lambda: f64, trim_fraction: f64) -> Self {
        EstimatorSpec {
            trim_fraction: Some(trim_fraction),
            ..Self::new(TRIMMED_LASSO, lambda)
        }
    }

    pub fn extended_lasso(lambda: f64, lambda_error: f64) -> Self {
        EstimatorSpec {
            lambda_error: Some(lambda_error),
            ..Self::new(EXTENDED_LASSO, lambda)
        }
    }

    pub fn with_solver(mut self, solver: SolverControls) -> Self {
        self.solver = solver;
        self
    }

    /// `c` for md variants, or an error naming the kind.
    pub(crate) fn require_c(&self) -> Result<f64> {
        self.c
            .ok_or_else(|| MdLassoError::invalid("c", format!("required by `{}`", self.kind)))
    }

    fn check_common(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(MdLassoError::invalid(
                "lambda",
                format!("must be >= 0, got {}", self.lambda),
            ));
        }
        self.solver.optimizer_config(self.lambda).validate()
    }

    /// Reject tuning fields the estimator does not use and require those it does.
    pub(crate) fn check_fields(
        &self,
        uses_c: bool,
        uses_trim: bool,
        uses_lambda_error: bool,
    ) -> Result<()> {
        self.check_common()?;
        let field = |name: &'static str, present: bool, used: bool| -> Result<()> {
            if present && !used {
                Err(MdLassoError::invalid(
                    name,
                    format!("not used by `{}`", self.kind),
                ))
            } else {
                Ok(())
            }
        };
        field("c", self.c.is_some(), uses_c)?;
        field("trim_fraction", self.trim_fraction.is_some(), uses_trim)?;
        field(
            "lambda_error",
            self.lambda_error.is_some(),
            uses_lambda_error,
        )?;
        if uses_c {
            let c = self.require_c()?;
            crate::loss::MdLossParams::new(c)?;
        }
        if let Some(t) = self.trim_fraction {
            if !(0.0..1.0).contains(&t) {
                return Err(MdLassoError::invalid(
                    "trim_fraction",
                    format!("must lie in [0, 1), got {t}"),
                ));
            }
        }
        if uses_lambda_error {
            match self.lambda_error {
                Some(v) if v.is_finite() && v >= 0.0 => {}
                Some(v) => {
                    return Err(MdLassoError::invalid(
                        "lambda_error",
                        format!("must be >= 0, got {v}"),
                    ))
                }
                None => {
                    return Err(MdLassoError::invalid(
                        "lambda_error",
                        format!("required by `{}`", self.kind),
                    ))
                }
            }
        }
        Ok(())
    }
}

/// A regression estimator selectable by name.
pub trait Estimator: Send + Sync {
    fn name(&self) -> &'static str;

    /// Whether the estimator takes the scaling parameter `c`.
    fn uses_scale(&self) -> bool {
        false
    }

    fn validate(&self, spec: &EstimatorSpec) -> Result<()>;

    fn fit(&self, data: &Dataset, spec: &EstimatorSpec) -> Result<FitResult>;

    /// Smallest penalty at which zero is a stationary point.
    fn lambda_max(&self, data: &Dataset, spec: &EstimatorSpec) -> Result<f64>;

    /// Per-observation loss of held-out residuals under the estimator's own
    /// criterion.
    fn validation_loss(&self, residuals: ArrayView1<'_, f64>, spec: &EstimatorSpec) -> Result<f64>;
}

/// Name-keyed collection of estimators.
pub struct EstimatorRegistry {
    entries: BTreeMap<&'static str, Box<dyn Estimator>>,
}

impl EstimatorRegistry {
    pub fn empty() -> Self {
        EstimatorRegistry {
            entries: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, estimator: Box<dyn Estimator>) {
        self.entries.insert(estimator.name(), estimator);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Estimator> {
        self.entries
            .get(name)
            .map(|e| e.as_ref())
            .ok_or_else(|| MdLassoError::UnknownEstimator(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }

    pub fn fit(&self, data: &Dataset, spec: &EstimatorSpec) -> Result<FitResult> {
        let estimator = self.get(&spec.kind)?;
        estimator.validate(spec)?;
        estimator.fit(data, spec)
    }
}

impl Default for EstimatorRegistry {
    fn default() -> Self {
        let mut registry = EstimatorRegistry::empty();
        registry.register(Box::new(MdLasso));
        registry.register(Box::new(IrwMdLasso));
        registry.register(Box::new(Lasso));
        registry.register(Box::new(LadLasso));
        registry.register(Box::new(TrimmedLasso));
        registry.register(Box::new(ExtendedLasso));
        registry
    }
}

/// Shared registry with every built-in estimator.
pub fn registry() -> &'static EstimatorRegistry {
    static REGISTRY: OnceLock<EstimatorRegistry> = OnceLock::new();
    REGISTRY.get_or_init(EstimatorRegistry::default)
}

/// Fit `spec` with the built-in estimator of that name.
pub fn fit(data: &Dataset, spec: &EstimatorSpec) -> Result<FitResult> {
    registry().fit(data, spec)
}

pub fn fit_md_lasso(data: &Dataset, spec: &EstimatorSpec) -> Result<FitResult> {
    checked(&MdLasso, data, spec)
}

pub fn fit_irw_md_lasso(data: &Dataset, spec: &EstimatorSpec) -> Result<FitResult> {
    checked(&IrwMdLasso, data, spec)
}

pub fn fit_lasso(data: &Dataset, spec: &EstimatorSpec) -> Result<FitResult> {
    checked(&Lasso, data, spec)
}

pub fn fit_lad_lasso(data: &Dataset, spec: &EstimatorSpec) -> Result<FitResult> {
    checked(&LadLasso, data, spec)
}

pub fn fit_trimmed_lasso(data: &Dataset, spec: &EstimatorSpec) -> Result<FitResult> {
    checked(&TrimmedLasso, data, spec)
}

pub fn fit_extended_lasso(data: &Dataset, spec: &EstimatorSpec) -> Result<FitResult> {
    checked(&ExtendedLasso, data, spec)
}

fn checked(estimator: &dyn Estimator, data: &Dataset, spec: &EstimatorSpec) -> Result<FitResult> {
    if spec.kind != estimator.name() {
        return Err(MdLassoError::invalid(
            "kind",
            format!("expected `{}`, got `{}`", estimator.name(), spec.kind),
        ));
    }
    estimator.validate(spec)?;
    estimator.fit(data, spec)
}

pub(crate) fn check_initial(data: &Dataset, spec: &EstimatorSpec) -> Result<Option<Array1<f64>>> {
    match &spec.solver.initial_point {
        Some(b) => {
            crate::error::check_len("initial point length", data.p(), b.len())?;
            Ok(Some(b.clone()))
        }
        None => Ok(None),
    }
}

pub(crate) fn half_mean_square(r: ArrayView1<'_, f64>) -> f64 {
    0.5 * r.dot(&r) / r.len() as f64
}

pub(crate) fn mean_abs(r: ArrayView1<'_, f64>) -> f64 {
    r.iter().map(|v| v.abs()).sum::<f64>() / r.len() as f64
}
