//! PSNR, SSIM and error maps on magnitude images.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ComplexImage;

fn check_shapes(reference: &ComplexImage, test: &ComplexImage) -> Result<()> {
    test.ensure_shape(reference.shape())
}

/// PSNR in dB between magnitude images, with the reference's peak magnitude
/// as the signal level. Identical magnitudes give `f64::INFINITY`.
const IDENTICAL_ULPS: f64 = 4.0;

pub fn psnr(reference: &ComplexImage, test: &ComplexImage) -> Result<f64> {
    check_shapes(reference, test)?;
    let peak = reference.max_abs();
    let mse = reference
        .data()
        .iter()
        .zip(test.data())
        .map(|(a, b)| (a.norm() - b.norm()).powi(2))
        .sum::<f64>()
        / reference.len() as f64;
    // differences at the level of rounding noise count as identical
    if mse <= (IDENTICAL_ULPS * f64::EPSILON * peak).powi(2) {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

/// Mean squared error of the complex samples (phase included).
pub fn complex_mse(reference: &ComplexImage, test: &ComplexImage) -> Result<f64> {
    check_shapes(reference, test)?;
    Ok(reference.sub(test).norm_sqr() / reference.len() as f64)
}

/// `|ref| − |test|` in absolute value, row-major.
pub fn error_map(reference: &ComplexImage, test: &ComplexImage) -> Result<Vec<f64>> {
    check_shapes(reference, test)?;
    Ok(reference
        .data()
        .iter()
        .zip(test.data())
        .map(|(a, b)| (a.norm() - b.norm()).abs())
        .collect())
}

/// SSIM window and stabilising constants.
#[derive(Debug, Clone, Copy)]
pub struct SsimParams {
    pub window: usize,
    pub gaussian_sigma: f64,
    pub k1: f64,
    pub k2: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            window: 11,
            gaussian_sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
        }
    }
}

/// Normalised 1D Gaussian taps; the 2D window is their outer product.
pub fn gaussian_taps(size: usize, sigma: f64) -> Vec<f64> {
    let c = (size as f64 - 1.0) / 2.0;
    let taps: Vec<f64> = (0..size)
        .map(|i| (-((i as f64 - c).powi(2)) / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / s).collect()
}

/// Valid-mode separable filtering with the same taps on both axes.
fn filter_valid(img: &[f64], h: usize, w: usize, taps: &[f64]) -> (Vec<f64>, usize, usize) {
    let n = taps.len();
    let ow = w - n + 1;
    let oh = h - n + 1;
    let mut rows = vec![0.0; h * ow];
    for r in 0..h {
        for c in 0..ow {
            rows[r * ow + c] = (0..n).map(|k| taps[k] * img[r * w + c + k]).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for r in 0..oh {
        for c in 0..ow {
            out[r * ow + c] = (0..n).map(|k| taps[k] * rows[(r + k) * ow + c]).sum();
        }
    }
    (out, oh, ow)
}

/// Mean SSIM over every fully contained window, using the reference's peak
/// magnitude as dynamic range.
pub fn ssim(reference: &ComplexImage, test: &ComplexImage) -> Result<f64> {
    let range = reference.max_abs();
    ssim_with(reference, test, range, &SsimParams::default())
}

pub fn ssim_with(
    reference: &ComplexImage,
    test: &ComplexImage,
    dynamic_range: f64,
    params: &SsimParams,
) -> Result<f64> {
    check_shapes(reference, test)?;
    let (h, w) = reference.shape();
    let win = params.window.min(h).min(w);
    if win == 0 {
        return Err(Error::InvalidInput("SSIM window is empty".into()));
    }
    let range = if dynamic_range > 0.0 { dynamic_range } else { 1.0 };
    let c1 = (params.k1 * range).powi(2);
    let c2 = (params.k2 * range).powi(2);
    let x = reference.magnitudes();
    let y = test.magnitudes();
    let taps = gaussian_taps(win, params.gaussian_sigma);

    let prod = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).collect::<Vec<f64>>();
    let (mx, oh, ow) = filter_valid(&x, h, w, &taps);
    let (my, _, _) = filter_valid(&y, h, w, &taps);
    let (mxx, _, _) = filter_valid(&prod(&x, &x), h, w, &taps);
    let (myy, _, _) = filter_valid(&prod(&y, &y), h, w, &taps);
    let (mxy, _, _) = filter_valid(&prod(&x, &y), h, w, &taps);

    let mut total = 0.0;
    for i in 0..oh * ow {
        let vx = mxx[i] - mx[i] * mx[i];
        let vy = myy[i] - my[i] * my[i];
        let cov = mxy[i] - mx[i] * my[i];
        total += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2))
            / ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
    }
    Ok(total / (oh * ow) as f64)
}

/// One row of a results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub method: String,
    pub reduction: f64,
    pub seed: u64,
    /// `None` when the reconstruction is exact (infinite PSNR).
    pub psnr_db: Option<f64>,
    pub psnr_infinite: bool,
    pub ssim: f64,
    pub wall_seconds: f64,
}

impl MetricReport {
    pub fn measure(
        method: &str,
        reduction: f64,
        seed: u64,
        reference: &ComplexImage,
        test: &ComplexImage,
        wall_seconds: f64,
    ) -> Result<Self> {
        let p = psnr(reference, test)?;
        Ok(Self {
            method: method.to_string(),
            reduction,
            seed,
            psnr_db: p.is_finite().then_some(p),
            psnr_infinite: p.is_infinite(),
            ssim: ssim(reference, test)?,
            wall_seconds,
        })
    }

    pub fn psnr(&self) -> f64 {
        self.psnr_db.unwrap_or(f64::INFINITY)
    }
}
