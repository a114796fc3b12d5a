//! INI run configuration.
//!
//! ```ini
//! [mask]
//! reduction = 4
//! acs = 20
//! seed = 0
//!
//! [train]
//! ss_epochs = 500
//! lr = 0.001
//! cnn_cascades = 3
//!
//! [red]
//! lambda = 3
//! mu = 1
//! eta = 0.001
//! cs_iters = 10
//! cs_interval = 150
//! ```
//!
//! Keys are matched case-insensitively. Unknown sections or keys are errors so
//! that typos do not silently fall back to defaults.

use std::path::Path;

use ini::Ini;

use crate::dccnn::NetworkArch;
use crate::denoisers::{DenoiserKind, DenoiserVariant};
use crate::error::{Error, Result};
use crate::sampling::{MaskSpec, SplitMode};
use crate::selfsup::{Anatomy, DcSource, ReconConfig, RedSolver};

use super::experiment::Method;

/// Mask generation settings; the grid size comes from the input.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskSettings {
    pub reduction: f64,
    pub acs_size: usize,
    pub density_decay: f64,
    pub seed: u64,
}

impl Default for MaskSettings {
    fn default() -> Self {
        Self {
            reduction: 4.0,
            acs_size: 20,
            density_decay: 1.0,
            seed: 0,
        }
    }
}

impl MaskSettings {
    pub fn spec(&self, height: usize, width: usize) -> MaskSpec {
        MaskSpec::new(height, width, self.reduction, self.seed)
            .with_acs(self.acs_size)
            .with_density_decay(self.density_decay)
    }
}

/// Everything a reconstruction run needs besides its input data.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mask: MaskSettings,
    pub arch: NetworkArch,
    pub recon: ReconConfig,
    /// Denoiser of the standalone ISTA / D-AMP baselines.
    pub denoiser: DenoiserKind,
    pub damp_iters: usize,
    pub ista_iters: usize,
    /// Geometric σ schedule of ISTA, first and last value.
    pub ista_sigma: (f64, f64),
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mask: MaskSettings::default(),
            arch: NetworkArch::default(),
            recon: ReconConfig::ss(Anatomy::Brain),
            denoiser: DenoiserKind::block_match_3d_ht(),
            damp_iters: 30,
            ista_iters: 30,
            ista_sigma: (0.05, 0.005),
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse {key} = {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(Error::Config(format!("cannot parse {key} = {value:?} as a boolean"))),
    }
}

impl RunConfig {
    /// Defaults for a method: the brain-anatomy presets for the SS variants.
    pub fn for_method(method: Method) -> Self {
        let recon = match method {
            Method::SsBm3d => ReconConfig::ss_bm3d(Anatomy::Brain),
            Method::SsDamp => ReconConfig::ss_damp(Anatomy::Brain),
            _ => ReconConfig::ss(Anatomy::Brain),
        };
        Self { recon, ..Self::default() }
    }

    /// Set one value. `section` is `mask`, `train` or `red`.
    pub fn set(&mut self, section: &str, key: &str, value: &str) -> Result<()> {
        let section = section.trim().to_ascii_lowercase();
        let key = key.trim().to_ascii_lowercase();
        let k = format!("{section}.{key}");
        let r = &mut self.recon;
        match (section.as_str(), key.as_str()) {
            ("mask", "reduction" | "r") => self.mask.reduction = parse(&k, value)?,
            ("mask", "acs" | "acs_size") => {
                self.mask.acs_size = parse(&k, value)?;
                r.acs_size = self.mask.acs_size;
            }
            ("mask", "density_decay") => self.mask.density_decay = parse(&k, value)?,
            ("mask", "seed") => self.mask.seed = parse(&k, value)?,

            ("train", "ss_epochs" | "epochs") => r.ss_epochs = parse(&k, value)?,
            ("train", "lr" | "learning_rate") => r.learning_rate = parse(&k, value)?,
            ("train", "cnn_cascades" | "cascades") => self.arch.cascades = parse(&k, value)?,
            ("train", "conv_layers") => self.arch.conv_layers = parse(&k, value)?,
            ("train", "channels") => self.arch.channels = parse(&k, value)?,
            ("train", "kernel") => self.arch.kernel = parse(&k, value)?,
            ("train", "residual") => self.arch.residual = parse_bool(&k, value)?,
            ("train", "seed") => r.seed = parse(&k, value)?,
            ("train", "split_fraction") => r.split_fraction = parse(&k, value)?,
            ("train", "split_mode") => {
                r.split_mode = match value.trim() {
                    "pointwise" => SplitMode::Pointwise,
                    "linewise" => SplitMode::Linewise,
                    other => return Err(Error::Config(format!("unknown split mode {other:?}"))),
                }
            }
            ("train", "dc_source") => {
                r.dc_source = match value.trim() {
                    "subset" | "lambda" => DcSource::Subset,
                    "full" | "omega" => DcSource::Full,
                    other => return Err(Error::Config(format!("unknown dc source {other:?}"))),
                }
            }
            ("train", "eval_every") => r.eval_every = parse(&k, value)?,

            ("red", "lambda") => r.lambda = parse(&k, value)?,
            ("red", "mu") => r.mu = parse(&k, value)?,
            ("red", "eta") => r.eta = parse(&k, value)?,
            ("red", "cs_iters") => r.cs_iters = parse(&k, value)?,
            ("red", "cs_interval") => r.cs_interval = parse(&k, value)?,
            ("red", "launch_epoch" | "denoiser_launch_epoch") => r.denoiser_launch_epoch = parse(&k, value)?,
            ("red", "sigma_fixed") => r.sigma_fixed = Some(parse(&k, value)?),
            ("red", "concurrent") => r.concurrent = parse_bool(&k, value)?,
            ("red", "probes") => r.damp_probes = parse(&k, value)?,
            ("red", "denoiser") => {
                let variant: DenoiserVariant = value.trim().parse()?;
                self.denoiser = DenoiserKind::of(variant);
                r.solver = match r.solver {
                    RedSolver::Damp(_) => RedSolver::Damp(self.denoiser.clone()),
                    RedSolver::Denoiser(_) => RedSolver::Denoiser(self.denoiser.clone()),
                };
            }
            ("red", "damp_iters") => self.damp_iters = parse(&k, value)?,
            ("red", "ista_iters") => self.ista_iters = parse(&k, value)?,
            ("red", "ista_sigma_start") => self.ista_sigma.0 = parse(&k, value)?,
            ("red", "ista_sigma_end") => self.ista_sigma.1 = parse(&k, value)?,
            _ => return Err(Error::Config(format!("unknown configuration key [{section}] {key}"))),
        }
        Ok(())
    }

    /// Apply `section.key=value`.
    pub fn set_dotted(&mut self, assignment: &str) -> Result<()> {
        let (lhs, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected section.key=value, got {assignment:?}")))?;
        let (section, key) = lhs
            .split_once('.')
            .ok_or_else(|| Error::Config(format!("expected section.key=value, got {assignment:?}")))?;
        self.set(section, key, value)
    }

    /// Apply every value of an INI document on top of `self`.
    pub fn apply_ini(&mut self, doc: &IniDocument) -> Result<()> {
        for (section, key, value) in &doc.entries {
            self.set(section, key, value)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.arch.validate()?;
        self.recon.validate()?;
        if self.damp_iters == 0 || self.ista_iters == 0 {
            return Err(Error::Config("damp_iters and ista_iters must be at least 1".into()));
        }
        Ok(())
    }
}

/// Parsed INI content in file order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IniDocument {
    pub entries: Vec<(String, String, String)>,
}

pub fn parse_ini(text: &str) -> Result<IniDocument> {
    let ini = Ini::load_from_str(text).map_err(|e| Error::Config(format!("malformed config: {e}")))?;
    let mut entries = Vec::new();
    for (section, props) in ini.iter() {
        let Some(section) = section else {
            if let Some((k, _)) = props.iter().next() {
                return Err(Error::Config(format!("key {k:?} appears before any section")));
            }
            continue;
        };
        for (k, v) in props.iter() {
            entries.push((section.to_string(), k.to_string(), v.to_string()));
        }
    }
    Ok(IniDocument { entries })
}

pub fn load_ini(path: impl AsRef<Path>) -> Result<IniDocument> {
    parse_ini(&std::fs::read_to_string(path)?)
}
