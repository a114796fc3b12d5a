//! Centered unitary FFT, masked operators and data consistency on a phantom.
//!
//! ```text
//! cargo run --release --example fourier_operators
//! ```

use csmri::fourier::{adjoint_masked, data_consistency, fft2c, forward_masked, ifft2c, project_unsampled};
use csmri::harness::shepp_logan;
use csmri::sampling::{generate_cartesian_mask, MaskSpec};
use csmri::Result;

fn main() -> Result<()> {
    let x = shepp_logan(64, 64)?;
    let k = fft2c(&x)?;
    println!("‖x‖ = {:.6}, ‖F x‖ = {:.6}", x.norm(), k.norm());
    println!("DC coefficient at (32, 32): {:.4}", k.get(32, 32));
    println!("round trip error: {:.2e}", ifft2c(&k)?.sub(&x).max_abs());

    let mask = generate_cartesian_mask(&MaskSpec::new(64, 64, 3.0, 1).with_acs(12))?;
    let y = forward_masked(&x, &mask)?;
    let zf = adjoint_masked(&y, &mask)?;
    println!(
        "{} of {} coefficients kept; zero-filled error {:.4}",
        mask.count(),
        64 * 64,
        zf.sub(&x).norm() / x.norm()
    );

    // replacing the sampled coefficients of any estimate with y keeps the rest
    let guess = zf.scaled(0.5);
    let fixed = data_consistency(&guess, &y, &mask)?;
    let drift = forward_masked(&fixed, &mask)?.sub(&y).max_abs();
    println!("after data consistency, max deviation on Ω: {drift:.2e}");

    let moved = project_unsampled(&x, &mask)?;
    println!("energy of x outside Ω: {:.4}", moved.norm_sqr() / x.norm_sqr());
    Ok(())
}
