//! Centered, unitary 2D Fourier operators and the masked maps built on them.
//!
//! `fft2c` is `fftshift ∘ FFT2 ∘ ifftshift` scaled by `1/√(HW)`, so it is an
//! orthonormal map and `ifft2c` is simultaneously its inverse and its adjoint.
//! With that convention `F_Ω^H` is the true adjoint of `F_Ω` and
//! `F_Ω F_Ω^H` is the identity on Ω.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::Result;
use crate::grid::{ComplexImage, Grid, KSpaceGrid, SamplingMask};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft(len, direction))
}

fn transpose(src: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut dst = vec![Complex64::new(0.0, 0.0); src.len()];
    for r in 0..rows {
        for c in 0..cols {
            dst[c * rows + r] = src[r * cols + c];
        }
    }
    dst
}

/// Roll a row-major grid by `(dr, dc)`: `out[(r + dr) % h][(c + dc) % w] = in[r][c]`.
fn roll(src: &[Complex64], h: usize, w: usize, dr: usize, dc: usize) -> Vec<Complex64> {
    let mut dst = vec![Complex64::new(0.0, 0.0); src.len()];
    for r in 0..h {
        let rr = (r + dr) % h;
        for c in 0..w {
            dst[rr * w + (c + dc) % w] = src[r * w + c];
        }
    }
    dst
}

fn centered_transform(
    data: &[Complex64],
    h: usize,
    w: usize,
    direction: FftDirection,
) -> Vec<Complex64> {
    // ifftshift: move the centre sample to index 0.
    let mut buf = roll(data, h, w, h - h / 2, w - w / 2);

    let row_fft = plan(w, direction);
    row_fft.process(&mut buf);
    let mut cols = transpose(&buf, h, w);
    let col_fft = plan(h, direction);
    col_fft.process(&mut cols);
    let buf = transpose(&cols, w, h);

    // fftshift: move index 0 back to the centre.
    let mut out = roll(&buf, h, w, h / 2, w / 2);
    let scale = 1.0 / ((h * w) as f64).sqrt();
    for z in &mut out {
        *z *= scale;
    }
    out
}

/// Unitary centered forward 2D DFT.
pub fn fft2c(img: &ComplexImage) -> Result<KSpaceGrid> {
    img.ensure_finite("fft2c input")?;
    let (h, w) = img.shape();
    let data = centered_transform(img.data(), h, w, FftDirection::Forward);
    Grid::from_vec(h, w, data)
}

/// Unitary centered inverse 2D DFT; the exact inverse and adjoint of [`fft2c`].
pub fn ifft2c(k: &KSpaceGrid) -> Result<ComplexImage> {
    k.ensure_finite("ifft2c input")?;
    let (h, w) = k.shape();
    let data = centered_transform(k.data(), h, w, FftDirection::Inverse);
    Grid::from_vec(h, w, data)
}

/// Zero every coefficient outside Ω.
pub fn apply_mask(k: &KSpaceGrid, mask: &SamplingMask) -> Result<KSpaceGrid> {
    mask.ensure_shape(k.shape())?;
    let mut out = k.clone();
    for (z, &s) in out.data_mut().iter_mut().zip(mask.sampled()) {
        if !s {
            *z = Complex64::new(0.0, 0.0);
        }
    }
    Ok(out)
}

/// `F_Ω x`: the forward model, zero outside Ω.
pub fn forward_masked(img: &ComplexImage, mask: &SamplingMask) -> Result<KSpaceGrid> {
    mask.ensure_shape(img.shape())?;
    apply_mask(&fft2c(img)?, mask)
}

/// `F_Ω^H y`: the zero-filled reconstruction of `y`.
pub fn adjoint_masked(k: &KSpaceGrid, mask: &SamplingMask) -> Result<ComplexImage> {
    mask.ensure_shape(k.shape())?;
    ifft2c(&apply_mask(k, mask)?)
}

/// Replace the k-space of `x` on Ω with `y`, keep it elsewhere, return to the
/// image domain.
pub fn data_consistency(
    x: &ComplexImage,
    y: &KSpaceGrid,
    mask: &SamplingMask,
) -> Result<ComplexImage> {
    y.ensure_shape(x.shape())?;
    mask.ensure_shape(x.shape())?;
    let mut k = fft2c(x)?;
    for ((z, &yv), &s) in k.data_mut().iter_mut().zip(y.data()).zip(mask.sampled()) {
        if s {
            *z = yv;
        }
    }
    ifft2c(&k)
}

/// Orthogonal projector onto the unsampled coefficients, `F^H P_{∖Ω} F`.
/// This is the Jacobian of [`data_consistency`] with respect to `x`, and
/// (being self-adjoint) also its transpose.
pub fn project_unsampled(v: &ComplexImage, mask: &SamplingMask) -> Result<ComplexImage> {
    mask.ensure_shape(v.shape())?;
    let mut k = fft2c(v)?;
    for (z, &s) in k.data_mut().iter_mut().zip(mask.sampled()) {
        if s {
            *z = Complex64::new(0.0, 0.0);
        }
    }
    ifft2c(&k)
}
