//! Full harness round: phantom and mask files, several methods through
//! `run_experiment`, then a method × R table from the metrics files.
//!
//! ```text
//! cargo run --release --example experiment_report -- /tmp/csmri-report
//! ```

use std::path::PathBuf;

use csmri::harness::{
    aggregate_reports, collect_reports, run_experiment, write_report_csv, ExperimentSpec, InputSource,
    MaskSource, Method, RunConfig,
};
use csmri::Result;

fn main() -> Result<()> {
    let root = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("csmri-report"));
    for reduction in [2.0, 3.0] {
        for method in [Method::Zf, Method::Ista, Method::Damp, Method::Ss] {
            let mut config = RunConfig::for_method(method);
            config.mask.reduction = reduction;
            config.mask.acs_size = 12;
            config.recon.acs_size = 12;
            config.recon.ss_epochs = 60;
            config.arch.channels = 8;
            config.damp_iters = 8;
            config.ista_iters = 8;
            let spec = ExperimentSpec {
                input: InputSource::Phantom { height: 64, width: 64 },
                reference: None,
                mask: MaskSource::Generate,
                method,
                config,
                output_dir: root.join(format!("r{reduction}-{method}")),
            };
            let out = run_experiment(&spec)?;
            let report = out.report.expect("phantom runs carry a reference");
            println!("R = {reduction} {method:>5}: {:.2} dB", report.psnr());
        }
    }
    let table = aggregate_reports(&collect_reports(&root)?);
    write_report_csv(&table, std::io::stdout().lock())?;
    Ok(())
}
