//! Both plug-in denoisers on a noisy phantom, plus a Monte-Carlo divergence.
//!
//! ```text
//! cargo run --release --example denoise_phantom -- 0.05
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use csmri::denoisers::{default_epsilon, denoise, mc_divergence, DenoiserKind};
use csmri::harness::shepp_logan;
use csmri::quality::{psnr, ssim};
use csmri::{Complex64, ComplexImage, Result};

fn main() -> Result<()> {
    let sigma: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.05);
    let x = shepp_logan(128, 128)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let normal = Normal::new(0.0, sigma / 2f64.sqrt()).expect("valid std");
    let noise = ComplexImage::from_fn(128, 128, |_, _| Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng)));
    let noisy = x.add(&noise);
    println!("noisy: {:.2} dB, SSIM {:.3}", psnr(&x, &noisy)?, ssim(&x, &noisy)?);

    for kind in [DenoiserKind::dct_hard_threshold(), DenoiserKind::block_match_3d_ht()] {
        let out = denoise(&noisy, sigma, &kind)?;
        let div = mc_divergence(&kind, &noisy, sigma, default_epsilon(&noisy), 2, 0)?;
        println!(
            "{:?}: {:.2} dB, SSIM {:.3}, divergence/N {:.3}",
            kind.variant,
            psnr(&x, &out)?,
            ssim(&x, &out)?,
            div / x.len() as f64
        );
    }
    Ok(())
}
