//! Plain self-supervised training of the cascade on one undersampled phantom,
//! followed by a checkpoint round trip.
//!
//! ```text
//! cargo run --release --example self_supervised -- 200
//! ```

use csmri::dccnn::{cascade_forward, load_checkpoint, save_checkpoint, NetworkArch};
use csmri::fourier::{adjoint_masked, forward_masked};
use csmri::harness::shepp_logan;
use csmri::quality::psnr;
use csmri::sampling::{generate_cartesian_mask, MaskSpec};
use csmri::selfsup::{train_ss, Anatomy, ReconConfig};
use csmri::Result;

fn main() -> Result<()> {
    let epochs: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    let x = shepp_logan(64, 64)?;
    let mask = generate_cartesian_mask(&MaskSpec::new(64, 64, 3.0, 0).with_acs(12))?;
    let y = forward_masked(&x, &mask)?;
    let arch = NetworkArch { cascades: 3, conv_layers: 5, channels: 16, kernel: 3, residual: true };
    let cfg = ReconConfig { ss_epochs: epochs, acs_size: 12, eval_every: 20, ..ReconConfig::ss(Anatomy::Brain) };

    let out = train_ss(&y, &mask, arch, &cfg, Some(&x))?;
    for r in out.history.records.iter().filter(|r| r.psnr.is_some()) {
        println!("epoch {:4}  L_kdc {:.4e}  PSNR {:.2} dB", r.epoch, r.l_kdc, r.psnr.unwrap());
    }
    println!(
        "zero-filled {:.2} dB -> SS {:.2} dB",
        psnr(&x, &adjoint_masked(&y, &mask)?)?,
        psnr(&x, &out.image)?
    );

    let path = std::env::temp_dir().join("csmri-example.ckpt");
    save_checkpoint(&out.params, &path)?;
    let restored = load_checkpoint(&path, true)?;
    // the network runs on the zero-filled image scaled to unit peak
    let zf = adjoint_masked(&y, &mask)?;
    let s = 1.0 / zf.max_abs();
    let again = cascade_forward(&zf.scaled(s), &y.scaled(s), &mask, &restored)?.scaled(1.0 / s);
    println!("after an f32 checkpoint round trip: {:.2} dB", psnr(&x, &again)?);
    Ok(())
}
