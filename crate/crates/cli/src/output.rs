//! Atomic file output and shared formatting.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::{CliError, CliResult, Console};

/// Write `bytes` to `path` via a temporary file in the same directory and a
/// rename, so readers never see a partial file.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let fail = |e: std::io::Error| CliError::input(format!("cannot write {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(bytes).map_err(fail)?;
    tmp.as_file().sync_all().map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

/// Write to `path` when given, else to the console.
pub(crate) fn emit(path: Option<&Path>, bytes: &[u8], console: &mut Console<'_>) -> CliResult<()> {
    match path {
        Some(p) => write_atomic(p, bytes),
        None => Ok(console.out.write_all(bytes)?),
    }
}

pub(crate) fn json_bytes<T: Serialize>(value: &T) -> CliResult<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// `Phi^{-1}(prob)`.
pub fn normal_quantile(prob: f64) -> f64 {
    Normal::standard().inverse_cdf(prob)
}

/// Plotting positions `(i - 0.5)/n`, `i = 1..n`.
pub(crate) fn plotting_positions(n: usize) -> impl Iterator<Item = f64> {
    (1..=n).map(move |i| (i as f64 - 0.5) / n as f64)
}
