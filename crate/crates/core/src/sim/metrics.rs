use std::collections::BTreeSet;

use serde::Serialize;

use super::truth::SimTruth;
use crate::error::{check_len, MdLassoError, Result};
use crate::model::Coefficients;

/// `(beta_hat - beta*)^T Sigma (beta_hat - beta*)`.
pub fn model_error(estimate: &Coefficients, truth: &SimTruth) -> Result<f64> {
    check_len(
        "coefficient length",
        truth.beta_star.len(),
        estimate.beta.len(),
    )?;
    truth.covariance.check_dim(truth.beta_star.len())?;
    let delta = &estimate.beta - &truth.beta_star;
    Ok(truth.covariance.quadratic_form(delta.view()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelectionScore {
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Support recovery scores. Precision is 0 when nothing is selected and F1
/// is 0 when precision and recall are both 0.
pub fn f1_score(selected: &[usize], true_support: &[usize]) -> Result<SelectionScore> {
    let truth: BTreeSet<usize> = true_support.iter().copied().collect();
    if truth.is_empty() {
        return Err(MdLassoError::invalid("true_support", "must not be empty"));
    }
    let chosen: BTreeSet<usize> = selected.iter().copied().collect();
    let hits = chosen.intersection(&truth).count() as f64;
    let precision = if chosen.is_empty() {
        0.0
    } else {
        hits / chosen.len() as f64
    };
    let recall = hits / truth.len() as f64;
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(SelectionScore {
        f1,
        precision,
        recall,
    })
}
