//! Files, configuration and the commands behind the `wishmix` binary.
//!
//! Every format is documented in `FORMATS.md` at the repository root.

mod commands;
mod config;
mod dataset;
mod pipeline;
mod trace;

pub use commands::*;
pub use config::{
    parse_toml, read_toml, BalanceName, FitConfig, InitName, ModelName, Preset, ScanName,
    SettingName, SimulateConfig, SimulationPlan, APPLICATION_NU_REF,
};
pub use dataset::{DatasetBundle, DATASET_FORMAT, DATASET_VERSION};
pub use pipeline::{read_series_table, run_pipeline, series_to_correlation, ChannelSelector, PipelineOptions};
pub use trace::{read_trace, trace_from_text, trace_to_text, write_trace, TRACE_MAGIC};

use crate::error::{Error, Result};

/// Environment variable holding the default worker-thread count.
pub const THREADS_ENV: &str = "WISHMIX_THREADS";

/// `requested`, else `WISHMIX_THREADS`, else the number of available cores.
pub fn thread_count(requested: Option<usize>) -> Result<usize> {
    if let Some(t) = requested {
        return if t == 0 { Err(Error::config("threads", "must be at least 1")) } else { Ok(t) };
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(t) if t > 0 => Ok(t),
            _ => Err(Error::config(THREADS_ENV, format!("expected a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Runs `f` inside a rayon pool of `threads` workers.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::config("threads", e.to_string()))?;
    Ok(pool.install(f))
}
