use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use csmri::fourier::fft2c;
use csmri::harness::{
    aggregate_reports, collect_reports, configure_threads_from_env, load_ini, read_image, run_experiment,
    shepp_logan, write_image, write_kspace, write_magnitude_png, write_mask, write_report_csv, ExperimentSpec,
    InputSource, MaskSettings, MaskSource, Method, RunConfig,
};
use csmri::quality::MetricReport;
use csmri::sampling::generate_cartesian_mask;
use csmri::{Error, Result};

#[derive(Parser)]
#[command(name = "csmri", version, about = "Compressed-sensing MRI reconstruction experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sampling mask tools.
    Mask {
        #[command(subcommand)]
        action: MaskCommand,
    },
    /// Write a Shepp-Logan phantom image (and optionally its k-space).
    Phantom {
        #[arg(long, default_value_t = 128)]
        height: usize,
        #[arg(long, default_value_t = 128)]
        width: usize,
        #[arg(short, long)]
        output: PathBuf,
        /// Also write the fully sampled k-space here.
        #[arg(long)]
        kspace: Option<PathBuf>,
        /// Also write a PNG of the magnitude here.
        #[arg(long)]
        png: Option<PathBuf>,
    },
    /// Reconstruct with one method and write artifacts to a directory.
    Recon(ReconArgs),
    /// Compare a reconstruction against a reference image.
    Metrics {
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long, default_value = "unknown")]
        method: String,
        #[arg(long, default_value_t = 1.0)]
        reduction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the JSON here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Aggregate metrics JSON files into a method × R table (CSV).
    Report {
        /// Metrics files or directories searched recursively.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum MaskCommand {
    /// Generate a 1D Cartesian variable-density mask.
    Gen {
        #[arg(long, default_value_t = 128)]
        height: usize,
        #[arg(long, default_value_t = 128)]
        width: usize,
        #[arg(short = 'r', long, default_value_t = 4.0)]
        reduction: f64,
        #[arg(long, default_value_t = 20)]
        acs: usize,
        #[arg(long, default_value_t = 1.0)]
        density_decay: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Args)]
struct ReconArgs {
    /// zf, ista, damp, ss, ss-bm3d or ss-damp.
    #[arg(short, long)]
    method: String,
    /// Use a generated phantom of this size, e.g. 128x128.
    #[arg(long, conflicts_with_all = ["image", "kspace"])]
    phantom: Option<String>,
    /// Ground-truth image; measurements are simulated from it.
    #[arg(long, conflicts_with = "kspace")]
    image: Option<PathBuf>,
    /// Measured k-space.
    #[arg(long)]
    kspace: Option<PathBuf>,
    /// Reference image for metrics when the input is k-space.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Mask file; generated from the [mask] settings otherwise.
    #[arg(long)]
    mask: Option<PathBuf>,
    /// INI configuration file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Extra `section.key=value` overrides, applied after the file.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    sets: Vec<String>,
    #[arg(long)]
    reduction: Option<f64>,
    /// Seed for the mask and the reconstruction.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    cs_iters: Option<usize>,
    #[arg(long)]
    cs_interval: Option<usize>,
    #[arg(long)]
    cnn_cascades: Option<usize>,
    #[arg(long)]
    ss_epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// Run the denoiser job inline instead of on a worker thread.
    #[arg(long)]
    sequential: bool,
    #[arg(short, long)]
    output: PathBuf,
}

fn parse_size(text: &str) -> Result<(usize, usize)> {
    let bad = || Error::Usage(format!("expected HEIGHTxWIDTH, got {text:?}"));
    let (h, w) = text.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((h.trim().parse().map_err(|_| bad())?, w.trim().parse().map_err(|_| bad())?))
}

fn recon_spec(args: ReconArgs) -> Result<ExperimentSpec> {
    let method: Method = args.method.parse()?;
    let mut config = RunConfig::for_method(method);
    if let Some(path) = &args.config {
        config.apply_ini(&load_ini(path)?)?;
    }
    for s in &args.sets {
        config.set_dotted(s)?;
    }
    let flags: [(&str, &str, Option<String>); 9] = [
        ("mask", "reduction", args.reduction.map(|v| v.to_string())),
        ("red", "lambda", args.lambda.map(|v| v.to_string())),
        ("red", "mu", args.mu.map(|v| v.to_string())),
        ("red", "eta", args.eta.map(|v| v.to_string())),
        ("red", "cs_iters", args.cs_iters.map(|v| v.to_string())),
        ("red", "cs_interval", args.cs_interval.map(|v| v.to_string())),
        ("train", "cnn_cascades", args.cnn_cascades.map(|v| v.to_string())),
        ("train", "ss_epochs", args.ss_epochs.map(|v| v.to_string())),
        ("train", "lr", args.lr.map(|v| v.to_string())),
    ];
    for (section, key, value) in flags {
        if let Some(v) = value {
            config.set(section, key, &v)?;
        }
    }
    if let Some(seed) = args.seed {
        config.mask.seed = seed;
        config.recon.seed = seed;
    }
    if args.sequential {
        config.recon.concurrent = false;
    }
    let input = match (args.phantom, args.image, args.kspace) {
        (Some(size), None, None) => {
            let (height, width) = parse_size(&size)?;
            InputSource::Phantom { height, width }
        }
        (None, Some(path), None) => InputSource::Image(path),
        (None, None, Some(path)) => InputSource::KSpace(path),
        _ => return Err(Error::Usage("give exactly one of --phantom, --image or --kspace".into())),
    };
    Ok(ExperimentSpec {
        input,
        reference: args.reference,
        mask: args.mask.map_or(MaskSource::Generate, MaskSource::File),
        method,
        config,
        output_dir: args.output,
    })
}

fn run(cli: Cli) -> Result<()> {
    configure_threads_from_env()?;
    match cli.command {
        Command::Mask {
            action: MaskCommand::Gen { height, width, reduction, acs, density_decay, seed, output },
        } => {
            let settings = MaskSettings { reduction, acs_size: acs, density_decay, seed };
            let mask = generate_cartesian_mask(&settings.spec(height, width))?;
            write_mask(&output, &mask)?;
            println!("{} of {} points sampled", mask.count(), height * width);
        }
        Command::Phantom { height, width, output, kspace, png } => {
            let x = shepp_logan(height, width)?;
            write_image(&output, &x)?;
            if let Some(path) = kspace {
                write_kspace(path, &fft2c(&x)?)?;
            }
            if let Some(path) = png {
                write_magnitude_png(path, &x)?;
            }
        }
        Command::Recon(args) => {
            let spec = recon_spec(args)?;
            let out = run_experiment(&spec)?;
            match out.report {
                Some(r) => println!("{}", serde_json::to_string(&r)?),
                None => println!("wrote {}", out.recon_path.display()),
            }
        }
        Command::Metrics { reference, test, method, reduction, seed, output } => {
            let r = MetricReport::measure(&method, reduction, seed, &read_image(reference)?, &read_image(test)?, 0.0)?;
            let json = serde_json::to_string_pretty(&r)? + "\n";
            match output {
                Some(path) => std::fs::write(path, json)?,
                None => print!("{json}"),
            }
        }
        Command::Report { inputs, output } => {
            let mut reports = Vec::new();
            for path in inputs {
                if path.is_dir() {
                    reports.extend(collect_reports(&path)?);
                } else {
                    let text = std::fs::read_to_string(&path)?;
                    reports.push(serde_json::from_str(&text)?);
                }
            }
            let table = aggregate_reports(&reports);
            match output {
                Some(path) => write_report_csv(&table, std::fs::File::create(path)?)?,
                None => write_report_csv(&table, std::io::stdout().lock())?,
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Usage(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
