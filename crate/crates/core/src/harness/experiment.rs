//! One reconstruction run from input data to artifacts on disk.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use crate::damp::{damp_reconstruct_with, geometric_schedule, ista_reconstruct, DampOptions, DampTrace};
use crate::error::{Error, Result};
use crate::fourier::{adjoint_masked, apply_mask, forward_masked};
use crate::grid::{AcsRegion, ComplexImage, KSpaceGrid, SamplingMask};
use crate::quality::{error_map, MetricReport};
use crate::sampling::generate_cartesian_mask;
use crate::selfsup::{train_ss, train_ss_red, RedSolver, TrainHistory};

use super::config::RunConfig;
use super::io::{read_image, read_kspace, read_mask, write_gray_png, write_image, write_magnitude_png};
use super::phantom::shepp_logan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Zf,
    Ista,
    Damp,
    Ss,
    SsBm3d,
    SsDamp,
}

impl Method {
    pub const ALL: [Method; 6] = [Method::Zf, Method::Ista, Method::Damp, Method::Ss, Method::SsBm3d, Method::SsDamp];

    pub fn name(self) -> &'static str {
        match self {
            Method::Zf => "zf",
            Method::Ista => "ista",
            Method::Damp => "damp",
            Method::Ss => "ss",
            Method::SsBm3d => "ss-bm3d",
            Method::SsDamp => "ss-damp",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| {
                Error::Usage(format!(
                    "unknown method {s:?}; expected one of zf, ista, damp, ss, ss-bm3d, ss-damp"
                ))
            })
    }
}

/// Where the measurements come from.
#[derive(Debug, Clone, PartialEq)]
pub enum InputSource {
    /// Synthetic phantom; doubles as the reference.
    Phantom { height: usize, width: usize },
    /// Ground-truth image file; measurements are simulated and it is the reference.
    Image(PathBuf),
    /// Measured k-space; the mask is applied to it.
    KSpace(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum MaskSource {
    /// Generate from `RunConfig::mask` at the input size.
    Generate,
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub input: InputSource,
    /// Reference image for k-space inputs.
    pub reference: Option<PathBuf>,
    pub mask: MaskSource,
    pub method: Method,
    pub config: RunConfig,
    pub output_dir: PathBuf,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        let recon = &self.config.recon;
        match self.method {
            Method::SsBm3d => {
                if recon.sigma_fixed.is_none() {
                    return Err(Error::Config("ss-bm3d requires red.sigma_fixed".into()));
                }
                if !matches!(recon.solver, RedSolver::Denoiser(_)) {
                    return Err(Error::Config("ss-bm3d needs a fixed-σ denoiser as g".into()));
                }
            }
            Method::SsDamp => {
                if !matches!(recon.solver, RedSolver::Damp(_)) {
                    return Err(Error::Config("ss-damp needs D-AMP as g".into()));
                }
                if recon.lambda <= 0.0 {
                    return Err(Error::Config("ss-damp needs red.lambda > 0".into()));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Paths written by a run and the metrics, when a reference was available.
#[derive(Debug, Clone)]
pub struct ExperimentOutputs {
    pub report: Option<MetricReport>,
    pub reconstruction: ComplexImage,
    pub recon_path: PathBuf,
    pub png_path: PathBuf,
    pub error_png_path: Option<PathBuf>,
    pub history_path: Option<PathBuf>,
    pub metrics_path: Option<PathBuf>,
}

struct Problem {
    y: KSpaceGrid,
    mask: SamplingMask,
    reference: Option<ComplexImage>,
}

fn load_problem(spec: &ExperimentSpec) -> Result<Problem> {
    let (truth, kspace) = match &spec.input {
        InputSource::Phantom { height, width } => (Some(shepp_logan(*height, *width)?), None),
        InputSource::Image(path) => (Some(read_image(path)?), None),
        InputSource::KSpace(path) => (None, Some(read_kspace(path)?)),
    };
    let (h, w) = truth
        .as_ref()
        .map(|t| t.shape())
        .or_else(|| kspace.as_ref().map(|k| k.shape()))
        .expect("one input is present");
    let acs = AcsRegion::square(spec.config.mask.acs_size);
    let mask = match &spec.mask {
        MaskSource::Generate => generate_cartesian_mask(&spec.config.mask.spec(h, w))?,
        MaskSource::File(path) => read_mask(path, acs)?,
    };
    mask.ensure_shape((h, w))?;
    let y = match (&truth, kspace) {
        (Some(t), _) => forward_masked(t, &mask)?,
        (None, Some(k)) => apply_mask(&k, &mask)?,
        (None, None) => unreachable!(),
    };
    let reference = match (truth, &spec.reference) {
        (Some(t), _) => Some(t),
        (None, Some(path)) => Some(read_image(path)?),
        (None, None) => None,
    };
    if let Some(r) = &reference {
        r.ensure_shape((h, w))?;
    }
    Ok(Problem { y, mask, reference })
}

/// Scale so the zero-filled image peaks at 1.
fn normalisation(y: &KSpaceGrid, mask: &SamplingMask) -> Result<f64> {
    let peak = adjoint_masked(y, mask)?.max_abs();
    if peak == 0.0 {
        return Err(Error::InvalidInput("measurements are all zero".into()));
    }
    Ok(1.0 / peak)
}

enum History {
    Damp(DampTrace),
    Training(TrainHistory),
}

fn write_damp_trace(trace: &DampTrace, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "iteration,sigma_hat,residual_norm,divergence,onsager_clamped,psnr")?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.9e}")).unwrap_or_default();
    for r in &trace.records {
        writeln!(
            out,
            "{},{:.9e},{:.9e},{},{},{}",
            r.iteration,
            r.sigma_hat,
            r.residual_norm,
            opt(r.divergence),
            r.onsager_clamped,
            opt(r.psnr)
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Reconstruct with `spec.method`, returning the image and any history.
fn reconstruct(spec: &ExperimentSpec, p: &Problem) -> Result<(ComplexImage, Option<History>)> {
    let cfg = &spec.config;
    match spec.method {
        Method::Zf => Ok((adjoint_masked(&p.y, &p.mask)?, None)),
        Method::Ista => {
            let s = normalisation(&p.y, &p.mask)?;
            let schedule = geometric_schedule(cfg.ista_sigma.0, cfg.ista_sigma.1, cfg.ista_iters);
            let (x, trace) = ista_reconstruct(&p.y.scaled(s), &p.mask, &cfg.denoiser, &schedule, cfg.ista_iters)?;
            Ok((x.scaled(1.0 / s), Some(History::Damp(trace))))
        }
        Method::Damp => {
            let s = normalisation(&p.y, &p.mask)?;
            let reference = p.reference.as_ref().map(|r| r.scaled(s));
            let opts = DampOptions {
                probes: cfg.recon.damp_probes,
                reference: reference.as_ref(),
                ..DampOptions::new(cfg.damp_iters, cfg.recon.seed)
            };
            let (x, trace) = damp_reconstruct_with(&p.y.scaled(s), &p.mask, &cfg.denoiser, &opts)?;
            Ok((x.scaled(1.0 / s), Some(History::Damp(trace))))
        }
        Method::Ss => {
            let out = train_ss(&p.y, &p.mask, cfg.arch, &cfg.recon, p.reference.as_ref())?;
            Ok((out.image, Some(History::Training(out.history))))
        }
        Method::SsBm3d | Method::SsDamp => {
            let out = train_ss_red(&p.y, &p.mask, cfg.arch, &cfg.recon, p.reference.as_ref())?;
            for (epoch, reason) in &out.history.failed_jobs {
                eprintln!("warning: denoiser job launched at epoch {epoch} failed ({reason}); continued with SS loss only");
            }
            Ok((out.image, Some(History::Training(out.history))))
        }
    }
}

/// Run one experiment and write its artifacts into `spec.output_dir`:
/// `recon.csim`, `recon.png`, and when available `error.png`, `history.csv`
/// and `metrics.json`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutputs> {
    spec.validate()?;
    let problem = load_problem(spec)?;
    fs::create_dir_all(&spec.output_dir)?;

    let started = Instant::now();
    let (recon, history) = reconstruct(spec, &problem)?;
    let wall = started.elapsed().as_secs_f64();

    let dir = &spec.output_dir;
    let recon_path = dir.join("recon.csim");
    let png_path = dir.join("recon.png");
    write_image(&recon_path, &recon)?;
    write_magnitude_png(&png_path, &recon)?;

    let history_path = match history {
        Some(History::Damp(trace)) => {
            let path = dir.join("history.csv");
            write_damp_trace(&trace, &path)?;
            Some(path)
        }
        Some(History::Training(h)) => {
            let path = dir.join("history.csv");
            let mut out = BufWriter::new(File::create(&path)?);
            h.write_csv(&mut out)?;
            out.flush()?;
            Some(path)
        }
        None => None,
    };

    let (report, error_png_path, metrics_path) = match &problem.reference {
        Some(reference) => {
            let report = MetricReport::measure(
                spec.method.name(),
                spec.config.mask.reduction,
                spec.config.recon.seed,
                reference,
                &recon,
                wall,
            )?;
            let err_path = dir.join("error.png");
            let err = error_map(reference, &recon)?;
            write_gray_png(&err_path, recon.height(), recon.width(), &err, reference.max_abs())?;
            let metrics_path = dir.join("metrics.json");
            fs::write(&metrics_path, serde_json::to_string_pretty(&report)? + "\n")?;
            (Some(report), Some(err_path), Some(metrics_path))
        }
        None => (None, None, None),
    };

    Ok(ExperimentOutputs {
        report,
        reconstruction: recon,
        recon_path,
        png_path,
        error_png_path,
        history_path,
        metrics_path,
    })
}
