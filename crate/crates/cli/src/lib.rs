//! Config-driven experiment runner, report emitter and oracle ledger.

pub mod config;
pub mod error;
pub mod experiments;
pub mod plot;
pub mod report;
pub mod verify;

use std::fs;
use std::path::Path;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
pub use experiments::{run, run_with, RunOutput};

/// Worker-count variable read by [`thread_pool`].
pub const THREADS_ENV: &str = "NOISYTD_THREADS";

/// Rayon pool sized by `NOISYTD_THREADS`, or rayon's default when unset.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| HarnessError::Config(format!("{THREADS_ENV} = `{v}`")))?;
        b = b.num_threads(n);
    }
    b.build()
        .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))
}

/// Writes `report.csv`, `summary.json`, plots, and extra files under `dir`.
pub fn write_outputs(out: &RunOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.csv"), report::to_csv(&out.rows))?;
    fs::write(dir.join("summary.json"), out.summary.to_json())?;
    if !out.rows.is_empty() {
        plot::emit_plots(&out.rows, &dir.join("plots"))?;
    }
    for (rel, body) in &out.files {
        let path = dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, body)?;
    }
    Ok(())
}

/// Error for the first failed invariant of a run, if any.
pub fn check_invariants(out: &RunOutput) -> Result<()> {
    match out.summary.failures().first() {
        None => Ok(()),
        Some(r) => Err(HarnessError::Invariant(format!(
            "{} ({}); {} failing",
            r.name,
            r.detail,
            out.summary.failures().len()
        ))),
    }
}
