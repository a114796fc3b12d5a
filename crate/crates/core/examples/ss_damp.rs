//! Self-supervised training coupled to D-AMP through the RED/ADMM updates,
//! with D-AMP running on a worker thread while training continues.
//!
//! ```text
//! cargo run --release --example ss_damp -- 300
//! ```

use csmri::dccnn::NetworkArch;
use csmri::fourier::forward_masked;
use csmri::harness::shepp_logan;
use csmri::quality::psnr;
use csmri::sampling::{generate_cartesian_mask, MaskSpec};
use csmri::selfsup::{train_ss, train_ss_red, Anatomy, ReconConfig};
use csmri::Result;

fn main() -> Result<()> {
    let epochs: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(300);
    let x = shepp_logan(64, 64)?;
    let mask = generate_cartesian_mask(&MaskSpec::new(64, 64, 3.0, 0).with_acs(12))?;
    let y = forward_masked(&x, &mask)?;
    let arch = NetworkArch { cascades: 3, conv_layers: 5, channels: 16, kernel: 3, residual: true };

    let ss = ReconConfig { ss_epochs: epochs, acs_size: 12, ..ReconConfig::ss(Anatomy::Brain) };
    let coupled = ReconConfig {
        ss_epochs: epochs,
        acs_size: 12,
        denoiser_launch_epoch: epochs / 5,
        cs_interval: epochs / 4,
        cs_iters: 10,
        eval_every: 10,
        ..ReconConfig::ss_damp(Anatomy::Brain)
    };
    println!(
        "D-AMP jobs launch at {:?}",
        coupled.launch_epochs().collect::<Vec<_>>()
    );

    let plain = train_ss(&y, &mask, arch, &ss, None)?;
    let red = train_ss_red(&y, &mask, arch, &coupled, Some(&x))?;
    for r in red.history.records.iter().filter(|r| r.incorporated) {
        println!("epoch {}: D-AMP result folded in, final σ̂ = {:.4}", r.epoch, r.sigma_hat.unwrap_or(f64::NAN));
    }
    let mut csv = Vec::new();
    red.history.write_csv(&mut csv)?;
    println!("history: {} CSV lines", csv.split(|&b| b == b'\n').count() - 1);
    println!("SS {:.2} dB, SS-D-AMP {:.2} dB", psnr(&x, &plain.image)?, psnr(&x, &red.image)?);
    Ok(())
}
