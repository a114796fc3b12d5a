//! Gaussian denoisers `D_σ` and the Monte-Carlo divergence estimate used by
//! the Onsager correction.
//!
//! Noise levels follow the complex convention used throughout the crate:
//! `σ` is the standard deviation of complex noise, `E|n|² = σ²`. Real and
//! imaginary channels are filtered independently, each at `σ/√2`.

mod bm3d;
mod dct;
mod transform;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::grid::ComplexImage;

/// Anything usable as `D_σ(·)`.
pub trait Denoiser: Sync {
    fn denoise(&self, img: &ComplexImage, sigma: f64) -> Result<ComplexImage>;
}

/// Plain functions and closures act as denoisers; handy for linear stubs.
impl<F> Denoiser for F
where
    F: Fn(&ComplexImage, f64) -> ComplexImage + Sync,
{
    fn denoise(&self, img: &ComplexImage, sigma: f64) -> Result<ComplexImage> {
        Ok(self(img, sigma))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DenoiserVariant {
    /// Sliding-block DCT hard thresholding with uniform aggregation.
    DctHardThreshold,
    /// Block matching + 3D transform hard thresholding (BM3D first stage).
    BlockMatch3dHt,
}

impl std::str::FromStr for DenoiserVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dct" | "dct_hard_threshold" => Ok(Self::DctHardThreshold),
            "bm3d" | "block_match_3d_ht" => Ok(Self::BlockMatch3dHt),
            other => Err(Error::Config(format!("unknown denoiser '{other}'"))),
        }
    }
}

/// A configured reference denoiser.
#[derive(Debug, Clone, PartialEq)]
pub struct DenoiserKind {
    pub variant: DenoiserVariant,
    pub block_size: usize,
    pub search_window: usize,
    pub max_matched: usize,
    /// Hard threshold in units of the per-channel noise std.
    pub threshold: f64,
    /// Stride between BM3D reference blocks.
    pub step: usize,
    /// Maximum normalised block distance for a match (intensity² units).
    pub match_tau: f64,
}

impl DenoiserKind {
    pub fn dct_hard_threshold() -> Self {
        Self {
            variant: DenoiserVariant::DctHardThreshold,
            ..Self::block_match_3d_ht()
        }
    }

    pub fn block_match_3d_ht() -> Self {
        Self {
            variant: DenoiserVariant::BlockMatch3dHt,
            block_size: 8,
            search_window: 24,
            max_matched: 16,
            threshold: 2.7,
            step: 3,
            match_tau: 0.0385,
        }
    }

    pub fn of(variant: DenoiserVariant) -> Self {
        match variant {
            DenoiserVariant::DctHardThreshold => Self::dct_hard_threshold(),
            DenoiserVariant::BlockMatch3dHt => Self::block_match_3d_ht(),
        }
    }

    pub fn validate(&self, height: usize, width: usize) -> Result<()> {
        let side = height.min(width);
        if self.block_size == 0 || self.block_size > self.search_window || self.search_window > side {
            return Err(Error::InvalidParameter(format!(
                "need 0 < block size ({}) <= search window ({}) <= image side ({side})",
                self.block_size, self.search_window
            )));
        }
        if self.max_matched == 0 || self.step == 0 {
            return Err(Error::InvalidParameter(
                "max matched blocks and step must be positive".into(),
            ));
        }
        if !(self.threshold >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "threshold multiplier must be non-negative, got {}",
                self.threshold
            )));
        }
        Ok(())
    }

    fn denoise_channel(&self, channel: &[f64], h: usize, w: usize, sigma: f64) -> Vec<f64> {
        match self.variant {
            DenoiserVariant::DctHardThreshold => {
                dct::dct_hard_threshold(channel, h, w, self.block_size, self.threshold * sigma)
            }
            DenoiserVariant::BlockMatch3dHt => bm3d::bm3d_hard_threshold(
                channel,
                h,
                w,
                sigma,
                &bm3d::Bm3dSettings {
                    block: self.block_size,
                    window: self.search_window,
                    max_matched: self.max_matched,
                    step: self.step,
                    threshold: self.threshold,
                    match_tau: self.match_tau,
                },
            ),
        }
    }
}

impl Default for DenoiserKind {
    fn default() -> Self {
        Self::block_match_3d_ht()
    }
}

impl Denoiser for DenoiserKind {
    fn denoise(&self, img: &ComplexImage, sigma: f64) -> Result<ComplexImage> {
        denoise(img, sigma, self)
    }
}

/// Denoise the real and imaginary channels of `img` independently at noise
/// level `sigma` (complex std). `sigma = 0` returns the input.
pub fn denoise(img: &ComplexImage, sigma: f64, kind: &DenoiserKind) -> Result<ComplexImage> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "noise level must be finite and non-negative, got {sigma}"
        )));
    }
    img.ensure_finite("denoiser input")?;
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let (h, w) = img.shape();
    kind.validate(h, w)?;
    let channel_sigma = sigma / std::f64::consts::SQRT_2;
    let (re, im) = rayon::join(
        || kind.denoise_channel(&img.real_part(), h, w, channel_sigma),
        || kind.denoise_channel(&img.imag_part(), h, w, channel_sigma),
    );
    ComplexImage::from_parts(h, w, &re, &im)
}

/// Default finite-difference step for [`mc_divergence`]: `max(‖r‖∞, 1)·1e-3`.
pub fn default_epsilon(r: &ComplexImage) -> f64 {
    r.max_abs().max(1.0) * 1e-3
}

/// Monte-Carlo estimate of `div D_σ(r)`:
/// `(1/P) Σ_i Re⟨b_i, D(r + ε b_i) − D(r)⟩ / ε`, with `b_i` i.i.d. standard
/// complex Gaussian probes (`E|b_ij|² = 1`).
pub fn mc_divergence<D: Denoiser + ?Sized>(
    denoiser: &D,
    r: &ComplexImage,
    sigma: f64,
    epsilon: f64,
    probes: usize,
    seed: u64,
) -> Result<f64> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "divergence step must be positive, got {epsilon}"
        )));
    }
    if probes == 0 {
        return Err(Error::InvalidParameter("at least one probe is required".into()));
    }
    let base = denoiser.denoise(r, sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).expect("valid std");
    let (h, w) = r.shape();
    let mut total = 0.0;
    for _ in 0..probes {
        let probe = ComplexImage::from_fn(h, w, |_, _| {
            Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng))
        });
        let mut shifted = r.clone();
        shifted.axpy(epsilon, &probe);
        let diff = denoiser.denoise(&shifted, sigma)?.sub(&base);
        total += probe.inner(&diff).re / epsilon;
    }
    Ok(total / probes as f64)
}
