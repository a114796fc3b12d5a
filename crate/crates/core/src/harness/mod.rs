//! Experiment plumbing: phantoms, binary files, configs, runs and reports.

pub mod config;
pub mod experiment;
pub mod io;
pub mod phantom;
pub mod report;

pub use config::{load_ini, parse_ini, IniDocument, MaskSettings, RunConfig};
pub use experiment::{run_experiment, ExperimentOutputs, ExperimentSpec, InputSource, MaskSource, Method};
pub use io::{read_image, read_kspace, read_mask, write_image, write_kspace, write_magnitude_png, write_mask};
pub use phantom::shepp_logan;
pub use report::{aggregate_reports, collect_reports, write_report_csv, ReportTable};
/// Size the global rayon pool from `CSMRI_THREADS` when it is set.
/// Returns the thread count that was applied, if any.
pub fn configure_threads_from_env() -> crate::Result<Option<usize>> {
    let Ok(raw) = std::env::var("CSMRI_THREADS") else {
        return Ok(None);
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| crate::Error::Config(format!("CSMRI_THREADS must be a positive integer, got {raw:?}")))?;
    if n == 0 {
        return Err(crate::Error::Config("CSMRI_THREADS must be at least 1".into()));
    }
    // a pool that was already built keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(Some(n))
}
