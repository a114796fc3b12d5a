//! ISTA and D-AMP baselines on an undersampled phantom, printing the D-AMP
//! σ̂ trace.
//!
//! ```text
//! cargo run --release --example damp_reconstruction -- 4 15
//! ```

use csmri::damp::{damp_reconstruct_with, geometric_schedule, ista_reconstruct, DampOptions};
use csmri::denoisers::DenoiserKind;
use csmri::fourier::{adjoint_masked, forward_masked};
use csmri::harness::shepp_logan;
use csmri::quality::psnr;
use csmri::sampling::{generate_cartesian_mask, MaskSpec};
use csmri::Result;

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let reduction: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(4.0);
    let iters: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(15);

    let x = shepp_logan(128, 128)?;
    let mask = generate_cartesian_mask(&MaskSpec::new(128, 128, reduction, 0))?;
    let y = forward_masked(&x, &mask)?;
    let kind = DenoiserKind::block_match_3d_ht();
    println!("zero-filled: {:.2} dB", psnr(&x, &adjoint_masked(&y, &mask)?)?);

    let (ista, _) = ista_reconstruct(&y, &mask, &kind, &geometric_schedule(0.05, 0.005, iters), iters)?;
    println!("ISTA, {iters} iterations: {:.2} dB", psnr(&x, &ista)?);

    let opts = DampOptions { reference: Some(&x), ..DampOptions::new(iters, 0) };
    let (damp, trace) = damp_reconstruct_with(&y, &mask, &kind, &opts)?;
    for r in &trace.records {
        println!(
            "  t = {:2}  σ̂ = {:.4}  onsager clamped: {:5}  PSNR {:.2} dB",
            r.iteration,
            r.sigma_hat,
            r.onsager_clamped,
            r.psnr.unwrap_or(f64::NAN)
        );
    }
    println!("D-AMP, {iters} iterations: {:.2} dB", psnr(&x, &damp)?);
    Ok(())
}
