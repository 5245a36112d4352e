use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;

use super::{substream, StreamTag};
use crate::error::{MdLassoError, Result};
use crate::estimators::{registry, EstimatorSpec};
use crate::model::Dataset;

/// For each predictor selected on the full data, the number of bootstrap
/// resamples (rows drawn with replacement, same size) on which it is
/// selected again. A resample whose fit fails selects nothing.
pub fn bootstrap_stability(
    data: &Dataset,
    spec: &EstimatorSpec,
    num_bootstrap: usize,
    seed: u64,
) -> Result<BTreeMap<usize, usize>> {
    if num_bootstrap == 0 {
        return Err(MdLassoError::invalid("num_bootstrap", "must be >= 1"));
    }
    let estimator = registry().get(&spec.kind)?;
    let original = estimator.fit(data, spec)?.coefficients.support();
    if original.is_empty() {
        return Ok(BTreeMap::new());
    }
    let n = data.n();
    let hits: Vec<Vec<bool>> = (0..num_bootstrap)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(seed, b as u64, StreamTag::Bootstrap);
            let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let fit = data
                .select_rows(&rows)
                .and_then(|resample| estimator.fit(&resample, spec));
            match fit {
                Ok(fit) => original
                    .iter()
                    .map(|&j| fit.coefficients.beta[j] != 0.0)
                    .collect(),
                Err(_) => vec![false; original.len()],
            }
        })
        .collect();
    Ok(original
        .iter()
        .enumerate()
        .map(|(k, &j)| (j, hits.iter().filter(|h| h[k]).count()))
        .collect())
}
