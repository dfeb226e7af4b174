//! Scenario runner, channel meshes, convergence studies and output writers
//! for the `crossflux` command.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod convergence;
pub mod error;
pub mod run;
pub mod scenario;
pub mod vtk;

pub use error::CliError;

/// Caps the global thread pool at `CROSSFLUX_THREADS` when it is set.
pub fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("CROSSFLUX_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("CROSSFLUX_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}
