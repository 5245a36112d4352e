//! Simulation protocol: correlated and factor designs, sparse ground truth,
//! support-recovery and model-error metrics, the replication harness and
//! bootstrap selection stability.

mod bench;
mod bootstrap;
mod design;
mod metrics;
mod truth;

pub use bench::{
    generate_errors, run_benchmark, spec_label, EstimatorSummary, FailureRecord, MetricRecord,
    MetricReport, Quantiles, SimConfig, TuningGrid,
};
pub use bootstrap::bootstrap_stability;
pub use design::{generate_design, Covariance, DesignModel};
pub use metrics::{f1_score, model_error, SelectionScore};
pub use truth::{generate_truth, SimTruth};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purposes of the independent random streams drawn for each replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamTag {
    Design = 1,
    Truth = 2,
    Errors = 3,
    Split = 4,
    Bootstrap = 5,
}

/// Generator for `(seed, index, tag)`. Streams for different indices or
/// tags do not overlap, so work can be done in any order.
pub fn substream(seed: u64, index: u64, tag: StreamTag) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((index << 8) | tag as u64);
    rng
}
