//! ISTA and D-AMP for the masked Fourier model `y = F_Ω x`.
//!
//! D-AMP per iteration:
//!
//! ```text
//! z_t     = y − F_Ω x̂_t + z_{t−1} · div D(r_{t−1}) / m
//! r_t     = x̂_t + F_Ω^H z_t
//! σ̂_t     = ‖z_t‖₂ / √m
//! x̂_{t+1} = D_{σ̂_t}(r_t)
//! ```
//!
//! The Onsager scale `div / m` is clamped to `[−1, 1]`; clamping is recorded
//! in the trace.

use serde::Serialize;

use crate::denoisers::{default_epsilon, mc_divergence, Denoiser};
use crate::error::{Error, Result};
use crate::fourier::{adjoint_masked, apply_mask, forward_masked};
use crate::grid::{ComplexImage, KSpaceGrid, SamplingMask};
use crate::quality::psnr;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DampRecord {
    pub iteration: usize,
    pub sigma_hat: f64,
    /// ‖z_t‖₂ (for ISTA, the plain data residual).
    pub residual_norm: f64,
    /// Divergence estimate at `r_t`; absent when it was not needed.
    pub divergence: Option<f64>,
    pub onsager_clamped: bool,
    pub psnr: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DampTrace {
    pub records: Vec<DampRecord>,
}

impl DampTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn sigma_hats(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.sigma_hat).collect()
    }
}

/// Knobs for [`damp_reconstruct_with`].
#[derive(Debug, Clone)]
pub struct DampOptions<'a> {
    pub iters: usize,
    pub warm_start: Option<&'a ComplexImage>,
    pub seed: u64,
    /// Monte-Carlo probes per divergence estimate.
    pub probes: usize,
    /// Ground truth for per-iteration PSNR in the trace.
    pub reference: Option<&'a ComplexImage>,
}

impl<'a> DampOptions<'a> {
    pub fn new(iters: usize, seed: u64) -> Self {
        Self {
            iters,
            warm_start: None,
            seed,
            probes: 1,
            reference: None,
        }
    }
}

fn check_problem(y: &KSpaceGrid, mask: &SamplingMask) -> Result<()> {
    mask.ensure_shape(y.shape())?;
    y.ensure_finite("measurements")?;
    if mask.count() == 0 {
        return Err(Error::InvalidInput("sampling mask is empty".into()));
    }
    Ok(())
}

fn trace_psnr(reference: Option<&ComplexImage>, x: &ComplexImage) -> Result<Option<f64>> {
    reference.map(|r| psnr(r, x)).transpose()
}

/// Geometric noise-level schedule from `start` to `end` over `iters` steps.
pub fn geometric_schedule(start: f64, end: f64, iters: usize) -> Vec<f64> {
    if iters <= 1 {
        return vec![start; iters];
    }
    let ratio = (end / start).powf(1.0 / (iters - 1) as f64);
    (0..iters).map(|t| start * ratio.powi(t as i32)).collect()
}

/// Plain ISTA with a plug-in denoiser as the proximal step.
/// `sigma_schedule` has one entry per iteration or a single broadcast entry.
pub fn ista_reconstruct<D: Denoiser + ?Sized>(
    y: &KSpaceGrid,
    mask: &SamplingMask,
    denoiser: &D,
    sigma_schedule: &[f64],
    iters: usize,
) -> Result<(ComplexImage, DampTrace)> {
    check_problem(y, mask)?;
    if sigma_schedule.is_empty() || (sigma_schedule.len() != 1 && sigma_schedule.len() < iters) {
        return Err(Error::Config(format!(
            "sigma schedule has {} entries for {iters} iterations",
            sigma_schedule.len()
        )));
    }
    let y = apply_mask(y, mask)?;
    let m = mask.count() as f64;
    let mut x = adjoint_masked(&y, mask)?;
    let mut trace = DampTrace::default();
    for t in 0..iters {
        let sigma = sigma_schedule[if sigma_schedule.len() == 1 { 0 } else { t }];
        let resid = y.sub(&forward_masked(&x, mask)?);
        let r = x.add(&adjoint_masked(&resid, mask)?);
        x = denoiser.denoise(&r, sigma)?;
        if !x.is_finite() {
            return Err(Error::SolverDiverged {
                iteration: t,
                reason: "non-finite estimate".into(),
                trace: Box::new(trace),
            });
        }
        trace.records.push(DampRecord {
            iteration: t,
            sigma_hat: resid.norm() / m.sqrt(),
            residual_norm: resid.norm(),
            divergence: None,
            onsager_clamped: false,
            psnr: None,
        });
    }
    Ok((x, trace))
}

/// D-AMP with a single Monte-Carlo probe per divergence estimate.
pub fn damp_reconstruct<D: Denoiser + ?Sized>(
    y: &KSpaceGrid,
    mask: &SamplingMask,
    denoiser: &D,
    iters: usize,
    warm_start: Option<&ComplexImage>,
    seed: u64,
) -> Result<(ComplexImage, DampTrace)> {
    let opts = DampOptions {
        warm_start,
        ..DampOptions::new(iters, seed)
    };
    damp_reconstruct_with(y, mask, denoiser, &opts)
}

pub fn damp_reconstruct_with<D: Denoiser + ?Sized>(
    y: &KSpaceGrid,
    mask: &SamplingMask,
    denoiser: &D,
    opts: &DampOptions<'_>,
) -> Result<(ComplexImage, DampTrace)> {
    check_problem(y, mask)?;
    if opts.iters == 0 {
        return Err(Error::Config("D-AMP needs at least one iteration".into()));
    }
    let y = apply_mask(y, mask)?;
    let m = mask.count() as f64;
    let mut x = match opts.warm_start {
        Some(w) => {
            w.ensure_shape(y.shape())?;
            w.ensure_finite("warm start")?;
            w.clone()
        }
        // a zero start makes the first denoiser input the zero-filled image
        None => ComplexImage::zeros(y.height(), y.width()),
    };

    let mut trace = DampTrace::default();
    let mut z_prev: Option<KSpaceGrid> = None;
    let mut onsager = 0.0;
    let diverged = |t: usize, reason: &str, trace: DampTrace| Error::SolverDiverged {
        iteration: t,
        reason: reason.into(),
        trace: Box::new(trace),
    };

    for t in 0..opts.iters {
        let mut z = y.sub(&forward_masked(&x, mask)?);
        if let Some(prev) = &z_prev {
            z.axpy(onsager, prev);
        }
        if !z.is_finite() {
            return Err(diverged(t, "non-finite residual", trace));
        }
        let r = x.add(&adjoint_masked(&z, mask)?);
        let sigma_hat = z.norm() / m.sqrt();
        x = denoiser.denoise(&r, sigma_hat)?;
        if !x.is_finite() {
            return Err(diverged(t, "non-finite denoiser output", trace));
        }

        let mut divergence = None;
        let mut clamped = false;
        if t + 1 < opts.iters {
            let div = mc_divergence(
                denoiser,
                &r,
                sigma_hat,
                default_epsilon(&r),
                opts.probes,
                opts.seed.wrapping_add(t as u64),
            )?;
            if !div.is_finite() {
                return Err(diverged(t, "non-finite divergence estimate", trace));
            }
            let raw = div / m;
            onsager = raw.clamp(-1.0, 1.0);
            clamped = onsager != raw;
            divergence = Some(div);
        }
        trace.records.push(DampRecord {
            iteration: t,
            sigma_hat,
            residual_norm: z.norm(),
            divergence,
            onsager_clamped: clamped,
            psnr: trace_psnr(opts.reference, &x)?,
        });
        z_prev = Some(z);
    }
    Ok((x, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::fft2c;
    use crate::sampling::{generate_cartesian_mask, MaskSpec};
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(h: usize, w: usize, seed: u64) -> ComplexImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ComplexImage::from_fn(h, w, |_, _| {
            Complex64::new(rng.random_range(0.0..1.0), rng.random_range(-0.1..0.1))
        })
    }

    fn identity(x: &ComplexImage, _: f64) -> ComplexImage {
        x.clone()
    }

    #[test]
    fn ista_full_mask_is_exact_after_one_step() {
        let x = random_image(32, 32, 1);
        let mask = SamplingMask::full(32, 32);
        let y = fft2c(&x).unwrap();
        let (out, trace) = ista_reconstruct(&y, &mask, &identity, &[0.0], 1).unwrap();
        assert!(out.sub(&x).max_abs() < 1e-12);
        assert_eq!(trace.len(), 1);
    }

    #[test]
    fn ista_zero_iterations_is_zero_filled() {
        let x = random_image(32, 32, 2);
        let mask = generate_cartesian_mask(&MaskSpec::new(32, 32, 2.0, 0).with_acs(8)).unwrap();
        let y = forward_masked(&x, &mask).unwrap();
        let (out, trace) = ista_reconstruct(&y, &mask, &identity, &[0.1], 0).unwrap();
        assert_eq!(out, adjoint_masked(&y, &mask).unwrap());
        assert!(trace.is_empty());
    }

    #[test]
    fn ista_schedule_validation() {
        let mask = SamplingMask::full(16, 16);
        let y = KSpaceGrid::zeros(16, 16);
        assert!(matches!(
            ista_reconstruct(&y, &mask, &identity, &[0.1, 0.2], 5),
            Err(Error::Config(_))
        ));
        assert!(ista_reconstruct(&y, &mask, &identity, &[], 1).is_err());
    }

    #[test]
    fn geometric_schedule_endpoints() {
        let s = geometric_schedule(0.1, 0.001, 3);
        assert!((s[0] - 0.1).abs() < 1e-15);
        assert!((s[1] - 0.01).abs() < 1e-12);
        assert!((s[2] - 0.001).abs() < 1e-12);
    }

    #[test]
    fn damp_full_mask_identity_recovers_truth() {
        let x = random_image(32, 32, 3);
        let mask = SamplingMask::full(32, 32);
        let y = fft2c(&x).unwrap();
        let (out, trace) = damp_reconstruct(&y, &mask, &identity, 1, None, 0).unwrap();
        assert!(out.sub(&x).max_abs() < 1e-12);
        // cold start: z_0 = y, so σ̂_0 = ‖x‖/√N on a full mask
        let expect = x.norm() / 32.0;
        assert!((trace.records[0].sigma_hat - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn damp_warm_start_at_truth_is_fixed_point_up_to_denoiser() {
        let x = random_image(32, 32, 4);
        let mask = generate_cartesian_mask(&MaskSpec::new(32, 32, 2.0, 1).with_acs(8)).unwrap();
        let y = forward_masked(&x, &mask).unwrap();
        let shrink = |v: &ComplexImage, s: f64| v.scaled(1.0 / (1.0 + s));
        let (out, trace) = damp_reconstruct(&y, &mask, &shrink, 1, Some(&x), 0).unwrap();
        let sigma0 = trace.records[0].sigma_hat;
        assert!(sigma0 < 1e-12);
        let bound = shrink(&x, sigma0).sub(&x).norm() + 1e-10;
        assert!(out.sub(&x).norm() <= bound);
    }

    #[test]
    fn damp_identity_stub_stays_bounded() {
        let x = random_image(32, 32, 5);
        let mask = generate_cartesian_mask(&MaskSpec::new(32, 32, 2.0, 2).with_acs(8)).unwrap();
        let y = forward_masked(&x, &mask).unwrap();
        let start = random_image(32, 32, 6);
        let opts = DampOptions {
            warm_start: Some(&start),
            ..DampOptions::new(12, 3)
        };
        let (out, trace) = damp_reconstruct_with(&y, &mask, &identity, &opts).unwrap();
        // the identity's divergence is N > m, so the Onsager scale saturates
        assert!(trace.records.iter().filter(|r| r.divergence.is_some()).all(|r| r.onsager_clamped));
        let first = trace.records[0].residual_norm;
        assert!(trace.records.iter().all(|r| r.residual_norm <= 2.0 * first + 1e-9));
        assert!(out.norm() < 10.0 * (x.norm() + start.norm()));
    }

    #[test]
    fn damp_rejects_bad_input() {
        let mask = SamplingMask::full(16, 16);
        let y = KSpaceGrid::zeros(16, 16);
        assert!(damp_reconstruct(&y, &mask, &identity, 0, None, 0).is_err());
        assert!(damp_reconstruct(&y, &SamplingMask::full(8, 8), &identity, 1, None, 0).is_err());
        let nan = |v: &ComplexImage, _: f64| v.map(|_| Complex64::new(f64::NAN, 0.0));
        assert!(matches!(
            damp_reconstruct(&y, &mask, &nan, 2, None, 0),
            Err(Error::SolverDiverged { iteration: 0, .. })
        ));
    }
}
