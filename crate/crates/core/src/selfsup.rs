//! Single-image self-supervised training.
//!
//! [`train_ss`] trains the cascade on random Λ/Υ splits of the acquired
//! samples, drawing a fresh split every epoch. [`train_ss_red`] adds the ADMM
//! coupling to a hand-crafted reconstruction `g(·)`: every so often the
//! current network output is handed to `g` (D-AMP or a plain denoiser), the
//! result updates the RED estimate `x_k` and the multipliers `q_k`, and the
//! network trains on `½ L_kdc + (μ/2)‖x_k − x̂_Λ − q_k‖²` from then on.
//!
//! All images are normalised so that the zero-filled magnitude peaks at 1
//! before training; noise levels such as `sigma_fixed` refer to that scale.

use std::io::Write;
use std::sync::mpsc;
use std::sync::Arc;
use std::thread;
use std::time::Instant;

use crate::dccnn::{
    cascade_forward, cascade_forward_pre_dc, evaluate, init_params, loss_terms, train_step, Adam, AdamConfig, NetworkArch,
    NetworkParams, RedTerm, TrainingPair,
};
use crate::denoisers::{denoise, DenoiserKind};
use crate::error::{Error, Result};
use crate::fourier::{adjoint_masked, apply_mask};
use crate::grid::{ComplexImage, KSpaceGrid, SamplingMask};
use crate::quality::psnr;
use crate::sampling::{split_subsets_with_mode, SplitMode};

/// The hand-crafted reconstruction `g(x̂_Ω, y_Ω)` used in the RED step.
#[derive(Debug, Clone, PartialEq)]
pub enum RedSolver {
    /// D-AMP warm-started from the network output, `cs_iters` iterations.
    Damp(DenoiserKind),
    /// `cs_iters` applications of a denoiser at `sigma_fixed`.
    Denoiser(DenoiserKind),
}

/// Which data the data-consistency layers see during training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DcSource {
    /// `(y_Λ, Λ)`: the network is a function of the Λ data only.
    #[default]
    Subset,
    /// `(y_Ω, Ω)`.
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconConfig {
    pub lambda: f64,
    pub mu: f64,
    pub eta: f64,
    pub cs_iters: usize,
    /// Epochs between incorporations of `g(·)`.
    pub cs_interval: usize,
    pub ss_epochs: usize,
    pub learning_rate: f64,
    /// Epoch at which the first `g(·)` job is launched.
    pub denoiser_launch_epoch: usize,
    pub solver: RedSolver,
    pub sigma_fixed: Option<f64>,
    pub seed: u64,
    /// Share of the non-ACS samples that go to Λ.
    pub split_fraction: f64,
    pub acs_size: usize,
    pub split_mode: SplitMode,
    pub dc_source: DcSource,
    /// Run `g(·)` on a worker thread (true) or inline at launch (false).
    pub concurrent: bool,
    /// Evaluate PSNR / shadow loss every this many epochs; 0 disables.
    pub eval_every: usize,
    /// Monte-Carlo probes for the D-AMP divergence.
    pub damp_probes: usize,
}

impl Default for ReconConfig {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            mu: 0.0,
            eta: 0.0,
            cs_iters: 25,
            cs_interval: 1000,
            ss_epochs: 4000,
            learning_rate: 1e-3,
            denoiser_launch_epoch: 1100,
            solver: RedSolver::Damp(DenoiserKind::block_match_3d_ht()),
            sigma_fixed: None,
            seed: 0,
            split_fraction: 0.5,
            acs_size: 20,
            split_mode: SplitMode::Pointwise,
            dc_source: DcSource::Subset,
            concurrent: true,
            eval_every: 0,
            damp_probes: 1,
        }
    }
}

/// Anatomy presets for the published hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Anatomy {
    Brain,
    Knee,
}

impl ReconConfig {
    /// Plain SS: only `L_kdc`.
    pub fn ss(anatomy: Anatomy) -> Self {
        Self {
            ss_epochs: match anatomy {
                Anatomy::Brain => 4000,
                Anatomy::Knee => 3000,
            },
            ..Self::default()
        }
    }

    /// SS with a fixed-σ denoiser as `g(·)`, σ = 0.012.
    pub fn ss_bm3d(anatomy: Anatomy) -> Self {
        let (lambda, mu, eta) = match anatomy {
            Anatomy::Brain => (0.125, 0.25, 0.001),
            Anatomy::Knee => (0.5, 1.0, 1.0),
        };
        Self {
            lambda,
            mu,
            eta,
            cs_iters: 1,
            cs_interval: 30,
            solver: RedSolver::Denoiser(DenoiserKind::block_match_3d_ht()),
            sigma_fixed: Some(0.012),
            ..Self::ss(anatomy)
        }
    }

    /// SS with D-AMP as `g(·)`.
    pub fn ss_damp(anatomy: Anatomy) -> Self {
        let (lambda, mu) = match anatomy {
            Anatomy::Brain => (3.0, 1.0),
            Anatomy::Knee => (1.5, 0.5),
        };
        Self {
            lambda,
            mu,
            eta: 0.001,
            cs_iters: 25,
            cs_interval: 1000,
            solver: RedSolver::Damp(DenoiserKind::block_match_3d_ht()),
            ..Self::ss(anatomy)
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda", self.lambda),
            ("mu", self.mu),
            ("eta", self.eta),
            ("learning rate", self.learning_rate),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        if self.learning_rate == 0.0 {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if self.cs_interval == 0 || self.cs_iters == 0 {
            return Err(Error::Config("cs_interval and cs_iters must be at least 1".into()));
        }
        if self.ss_epochs == 0 {
            return Err(Error::Config("ss_epochs must be at least 1".into()));
        }
        if let RedSolver::Denoiser(_) = self.solver {
            if self.lambda > 0.0 && self.sigma_fixed.is_none() {
                return Err(Error::Config("a fixed-σ denoiser needs sigma_fixed".into()));
            }
        }
        if let Some(s) = self.sigma_fixed {
            if !(s >= 0.0) {
                return Err(Error::Config(format!("sigma_fixed must be non-negative, got {s}")));
            }
        }
        Ok(())
    }

    /// Epochs at which `g(·)` jobs are launched. Jobs that could only finish
    /// after the last epoch are not started.
    pub fn launch_epochs(&self) -> impl Iterator<Item = usize> + '_ {
        (self.denoiser_launch_epoch..self.ss_epochs)
            .step_by(self.cs_interval)
            .filter(|&e| self.incorporation_epoch(e) < self.ss_epochs)
    }

    /// Epoch at which a job launched at `launch` is folded in.
    pub fn incorporation_epoch(&self, launch: usize) -> usize {
        match self.solver {
            RedSolver::Damp(_) => launch + self.cs_interval,
            RedSolver::Denoiser(_) => launch,
        }
    }
}

/// Per-epoch seed for the Λ/Υ split.
pub fn epoch_seed(seed: u64, epoch: usize) -> u64 {
    // splitmix64 finaliser over the pair
    let mut z = seed ^ (epoch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `x_{k+1} = (λ g + μ (x̂_Ω + q_k)) / (λ + μ)`.
pub fn red_update(
    x_hat_omega: &ComplexImage,
    g_out: &ComplexImage,
    q_k: &ComplexImage,
    lambda: f64,
    mu: f64,
) -> Result<ComplexImage> {
    if !(lambda + mu > 0.0) {
        return Err(Error::Config(format!(
            "RED update needs lambda + mu > 0 (lambda = {lambda}, mu = {mu})"
        )));
    }
    g_out.ensure_shape(x_hat_omega.shape())?;
    q_k.ensure_shape(x_hat_omega.shape())?;
    let scale = 1.0 / (lambda + mu);
    let mut out = g_out.scaled(lambda * scale);
    out.axpy(mu * scale, &x_hat_omega.add(q_k));
    Ok(out)
}

/// `q_{k+1} = q_k + η (x̂_Ω − x_k)`.
pub fn multiplier_update(
    q_k: &ComplexImage,
    x_hat_omega: &ComplexImage,
    x_k: &ComplexImage,
    eta: f64,
) -> Result<ComplexImage> {
    x_hat_omega.ensure_shape(q_k.shape())?;
    x_k.ensure_shape(q_k.shape())?;
    let mut q = q_k.clone();
    q.axpy(eta, &x_hat_omega.sub(x_k));
    Ok(q)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// `L_kdc` on this epoch's split (normalised scale).
    pub l_kdc: f64,
    /// `(μ/2)‖x_k − x̂_Λ − q_k‖²`; zero before the first incorporation.
    pub l_cs: f64,
    /// Final σ̂ of the D-AMP job folded in at this epoch.
    pub sigma_hat: Option<f64>,
    /// PSNR of the full-data output against the supplied reference.
    pub psnr: Option<f64>,
    /// `L_kdc` on a fixed held-out split, when no reference is available.
    pub shadow_kdc: Option<f64>,
    pub incorporated: bool,
    /// FNV-1a digest of the parameter bits after this epoch's update.
    pub param_digest: u64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
    /// Jobs of `g(·)` that failed; training fell back to plain SS for them.
    pub failed_jobs: Vec<(usize, String)>,
}

impl TrainHistory {
    pub fn incorporation_epochs(&self) -> Vec<usize> {
        self.records.iter().filter(|r| r.incorporated).map(|r| r.epoch).collect()
    }

    pub fn param_digests(&self) -> Vec<u64> {
        self.records.iter().map(|r| r.param_digest).collect()
    }

    /// `epoch,L_kdc,L_CS,sigma_hat,psnr,wall_ms,shadow_kdc`
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "epoch,L_kdc,L_CS,sigma_hat,psnr,wall_ms,shadow_kdc")?;
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.9e}")).unwrap_or_default();
        for r in &self.records {
            writeln!(
                out,
                "{},{:.9e},{:.9e},{},{},{:.3},{}",
                r.epoch,
                r.l_kdc,
                r.l_cs,
                opt(r.sigma_hat),
                opt(r.psnr),
                r.wall_ms,
                opt(r.shadow_kdc)
            )?;
        }
        Ok(())
    }
}

/// Result of a training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Final reconstruction `x̂_Ω`, in the units of the input k-space.
    pub image: ComplexImage,
    pub history: TrainHistory,
    pub params: NetworkParams,
}

fn digest(values: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in values {
        for b in v.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

/// Immutable inputs of one `g(·)` job.
struct JobInput {
    x_hat: ComplexImage,
    y: Arc<KSpaceGrid>,
    omega: Arc<SamplingMask>,
    solver: RedSolver,
    cs_iters: usize,
    sigma: f64,
    probes: usize,
    seed: u64,
}

struct JobOutput {
    g: ComplexImage,
    sigma_hat: Option<f64>,
}

fn run_job(job: &JobInput) -> Result<JobOutput> {
    match &job.solver {
        RedSolver::Damp(kind) => {
            let opts = crate::damp::DampOptions {
                warm_start: Some(&job.x_hat),
                probes: job.probes,
                ..crate::damp::DampOptions::new(job.cs_iters, job.seed)
            };
            let (g, trace) = crate::damp::damp_reconstruct_with(&job.y, &job.omega, kind, &opts)?;
            Ok(JobOutput {
                g,
                sigma_hat: trace.records.last().map(|r| r.sigma_hat),
            })
        }
        RedSolver::Denoiser(kind) => {
            let mut g = job.x_hat.clone();
            for _ in 0..job.cs_iters {
                g = denoise(&g, job.sigma, kind)?;
            }
            Ok(JobOutput { g, sigma_hat: None })
        }
    }
}

enum PendingJob {
    Ready(Result<JobOutput>),
    Running(mpsc::Receiver<Result<JobOutput>>, thread::JoinHandle<()>),
}

struct Pending {
    launched: usize,
    due: usize,
    x_hat: ComplexImage,
    job: PendingJob,
}

impl Pending {
    fn wait(self) -> (usize, ComplexImage, Result<JobOutput>) {
        let result = match self.job {
            PendingJob::Ready(r) => r,
            PendingJob::Running(rx, handle) => {
                let r = rx
                    .recv()
                    .unwrap_or_else(|_| Err(Error::InvalidInput("denoiser job panicked".into())));
                let _ = handle.join();
                r
            }
        };
        (self.launched, self.x_hat, result)
    }
}

/// Training loop state.
struct Trainer<'a> {
    cfg: &'a ReconConfig,
    y: Arc<KSpaceGrid>,
    omega: Arc<SamplingMask>,
    zf_full: ComplexImage,
    params: NetworkParams,
    adam: Adam,
    /// RED estimate and multipliers, present after the first incorporation.
    red: Option<(ComplexImage, ComplexImage)>,
    q: ComplexImage,
    scale: f64,
    reference: Option<&'a ComplexImage>,
    shadow: Option<(ComplexImage, KSpaceGrid, SamplingMask, KSpaceGrid, SamplingMask)>,
}

impl<'a> Trainer<'a> {
    fn new(
        y: &KSpaceGrid,
        omega: &SamplingMask,
        arch: NetworkArch,
        cfg: &'a ReconConfig,
        reference: Option<&'a ComplexImage>,
    ) -> Result<Self> {
        cfg.validate()?;
        omega.ensure_shape(y.shape())?;
        if let Some(r) = reference {
            r.ensure_shape(y.shape())?;
        }
        let y = apply_mask(y, omega)?;
        let zf = adjoint_masked(&y, omega)?;
        let peak = zf.max_abs();
        if peak == 0.0 {
            return Err(Error::InvalidInput("measurements are all zero".into()));
        }
        let scale = 1.0 / peak;
        let y = y.scaled(scale);
        let zf_full = zf.scaled(scale);
        let params = init_params(arch, cfg.seed)?;
        let adam = Adam::new(
            AdamConfig {
                learning_rate: cfg.learning_rate,
                ..AdamConfig::default()
            },
            params.len(),
        );
        let mut t = Self {
            cfg,
            q: ComplexImage::zeros(y.height(), y.width()),
            y: Arc::new(y),
            omega: Arc::new(omega.clone()),
            zf_full,
            params,
            adam,
            red: None,
            scale,
            reference,
            shadow: None,
        };
        if reference.is_none() && cfg.eval_every > 0 {
            let pair = t.split(u64::MAX)?;
            let y_l = apply_mask(&t.y, &pair.lambda)?;
            let y_u = apply_mask(&t.y, &pair.upsilon)?;
            let zf = adjoint_masked(&y_l, &pair.lambda)?;
            t.shadow = Some((zf, y_l, pair.lambda, y_u, pair.upsilon));
        }
        Ok(t)
    }

    fn split(&self, seed: u64) -> Result<crate::sampling::SubsetPair> {
        split_subsets_with_mode(
            &self.omega,
            self.cfg.split_fraction,
            self.cfg.acs_size,
            seed,
            self.cfg.split_mode,
        )
    }

    /// `x̂_Ω = f(F_Ω^H y_Ω | Θ)` on the normalised scale.
    fn full_output(&self) -> Result<ComplexImage> {
        cascade_forward(&self.zf_full, &self.y, &self.omega, &self.params)
    }

    /// One Step-1 update; returns `(L_kdc, L_CS)`.
    fn train_epoch(&mut self, epoch: usize) -> Result<(f64, f64)> {
        let pair = self.split(epoch_seed(self.cfg.seed, epoch))?;
        let y_l = apply_mask(&self.y, &pair.lambda)?;
        let y_u = apply_mask(&self.y, &pair.upsilon)?;
        let zf = adjoint_masked(&y_l, &pair.lambda)?;
        let (y_in, mask_in) = match self.cfg.dc_source {
            DcSource::Subset => (&y_l, &pair.lambda),
            DcSource::Full => (&*self.y, &*self.omega),
        };
        let training = TrainingPair {
            zf: &zf,
            y_in,
            mask_in,
            y_target: &y_u,
            mask_target: &pair.upsilon,
        };
        let red = match &self.red {
            Some((x_k, q_k)) if self.cfg.mu > 0.0 => Some(RedTerm { x_k, q_k, mu: self.cfg.mu }),
            _ => None,
        };
        let eval = evaluate(&self.params, &training, red).map_err(|e| match e {
            Error::InvalidInput(reason) => Error::TrainingDiverged { epoch, reason },
            other => other,
        })?;
        if !eval.loss.kdc.is_finite() || !eval.loss.cs.is_finite() {
            return Err(Error::TrainingDiverged {
                epoch,
                reason: "non-finite loss".into(),
            });
        }
        train_step(&mut self.params, &mut self.adam, &eval.grad, epoch)?;
        Ok((eval.loss.kdc, eval.loss.cs))
    }

    fn launch(&self, epoch: usize) -> Result<Pending> {
        // D-AMP starts from the last block's output before data consistency,
        // so its first residual is the correction that step applies.
        let (x_hat, pre_dc) = cascade_forward_pre_dc(&self.zf_full, &self.y, &self.omega, &self.params)?;
        let start = match self.cfg.solver {
            RedSolver::Damp(_) => pre_dc,
            RedSolver::Denoiser(_) => x_hat.clone(),
        };
        let job = JobInput {
            x_hat: start,
            y: Arc::clone(&self.y),
            omega: Arc::clone(&self.omega),
            solver: self.cfg.solver.clone(),
            cs_iters: self.cfg.cs_iters,
            sigma: self.cfg.sigma_fixed.unwrap_or(0.0),
            probes: self.cfg.damp_probes,
            seed: epoch_seed(self.cfg.seed ^ 0xD1A9_0000, epoch),
        };
        let due = self.cfg.incorporation_epoch(epoch);
        let state = if self.cfg.concurrent && due > epoch {
            let (tx, rx) = mpsc::sync_channel(1);
            let handle = thread::spawn(move || {
                let _ = tx.send(run_job(&job));
            });
            PendingJob::Running(rx, handle)
        } else {
            PendingJob::Ready(run_job(&job))
        };
        Ok(Pending {
            launched: epoch,
            due,
            x_hat,
            job: state,
        })
    }

    /// Step 2: fold a finished job into `x_k` and `q_k`.
    fn incorporate(&mut self, x_hat: &ComplexImage, g: &ComplexImage) -> Result<()> {
        let x_next = red_update(x_hat, g, &self.q, self.cfg.lambda, self.cfg.mu)?;
        self.q = multiplier_update(&self.q, x_hat, &x_next, self.cfg.eta)?;
        self.red = Some((x_next, self.q.clone()));
        Ok(())
    }

    fn monitor(&self, record: &mut EpochRecord) -> Result<()> {
        if let Some(reference) = self.reference {
            let out = self.full_output()?.scaled(1.0 / self.scale);
            record.psnr = Some(psnr(reference, &out)?);
        } else if let Some((zf, y_l, lambda, y_u, upsilon)) = &self.shadow {
            let out = cascade_forward(zf, y_l, lambda, &self.params)?;
            record.shadow_kdc = Some(loss_terms(&out, y_u, upsilon, None)?.kdc);
        }
        Ok(())
    }

    fn run(mut self, with_red: bool) -> Result<TrainOutcome> {
        let cfg = self.cfg;
        let mut history = TrainHistory::default();
        let mut pending: Option<Pending> = None;
        let launches: Vec<usize> = if with_red && cfg.lambda > 0.0 {
            cfg.launch_epochs().collect()
        } else {
            Vec::new()
        };

        for epoch in 0..cfg.ss_epochs {
            let started = Instant::now();
            let mut incorporated = false;
            let mut sigma_hat = None;

            let mut fold = |this: &mut Self, p: Pending, history: &mut TrainHistory| -> Result<()> {
                let (launched, x_hat, result) = p.wait();
                match result {
                    Ok(out) => {
                        this.incorporate(&x_hat, &out.g)?;
                        incorporated = true;
                        sigma_hat = out.sigma_hat;
                    }
                    Err(e) => history.failed_jobs.push((launched, e.to_string())),
                }
                Ok(())
            };

            if pending.as_ref().is_some_and(|p| p.due == epoch) {
                let p = pending.take().expect("checked above");
                fold(&mut self, p, &mut history)?;
            }
            if launches.contains(&epoch) {
                let p = self.launch(epoch)?;
                if p.due == epoch {
                    fold(&mut self, p, &mut history)?;
                } else {
                    pending = Some(p);
                }
            }

            let (l_kdc, l_cs) = self.train_epoch(epoch)?;
            let mut record = EpochRecord {
                epoch,
                l_kdc,
                l_cs,
                sigma_hat,
                psnr: None,
                shadow_kdc: None,
                incorporated,
                param_digest: digest(self.params.values()),
                wall_ms: 0.0,
            };
            if cfg.eval_every > 0 && (epoch % cfg.eval_every == 0 || epoch + 1 == cfg.ss_epochs) {
                self.monitor(&mut record)?;
            }
            record.wall_ms = started.elapsed().as_secs_f64() * 1e3;
            history.records.push(record);
        }
        if let Some(p) = pending {
            // never due: drain the worker so no thread outlives the run
            let _ = p.wait();
        }
        let image = self.full_output()?.scaled(1.0 / self.scale);
        Ok(TrainOutcome {
            image,
            history,
            params: self.params,
        })
    }
}

/// Plain self-supervised training on `½ L_kdc` with a fresh split per epoch.
pub fn train_ss(
    y: &KSpaceGrid,
    omega: &SamplingMask,
    arch: NetworkArch,
    cfg: &ReconConfig,
    reference: Option<&ComplexImage>,
) -> Result<TrainOutcome> {
    Trainer::new(y, omega, arch, cfg, reference)?.run(false)
}

/// Self-supervised training coupled to `g(·)` through the RED/ADMM updates.
pub fn train_ss_red(
    y: &KSpaceGrid,
    omega: &SamplingMask,
    arch: NetworkArch,
    cfg: &ReconConfig,
    reference: Option<&ComplexImage>,
) -> Result<TrainOutcome> {
    Trainer::new(y, omega, arch, cfg, reference)?.run(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn image(h: usize, w: usize, seed: u64) -> ComplexImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ComplexImage::from_fn(h, w, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    #[test]
    fn red_update_fixtures() {
        let (x, g, q) = (image(8, 8, 1), image(8, 8, 2), image(8, 8, 3));
        assert_eq!(red_update(&x, &g, &q, 2.0, 0.0).unwrap(), g);
        assert!(red_update(&x, &g, &q, 0.0, 1.5).unwrap().sub(&x.add(&q)).max_abs() < 1e-15);
        let zero = ComplexImage::zeros(8, 8);
        let half = red_update(&x, &zero, &zero, 1.0, 1.0).unwrap();
        assert!(half.sub(&x.scaled(0.5)).max_abs() < 1e-15);
        assert!(matches!(red_update(&x, &g, &q, 0.0, 0.0), Err(Error::Config(_))));
    }

    #[test]
    fn red_update_zeroes_objective_gradient() {
        let (x, g, q) = (image(8, 8, 4), image(8, 8, 5), image(8, 8, 6));
        let (lambda, mu) = (3.0, 1.0);
        let next = red_update(&x, &g, &q, lambda, mu).unwrap();
        let grad = next.sub(&g).scaled(lambda).add(&next.sub(&x).sub(&q).scaled(mu));
        assert!(grad.max_abs() < 1e-12);
    }

    #[test]
    fn multiplier_update_fixtures() {
        let (q, x, xk) = (image(8, 8, 7), image(8, 8, 8), image(8, 8, 9));
        assert_eq!(multiplier_update(&q, &x, &xk, 0.0).unwrap(), q);
        let zero = ComplexImage::zeros(8, 8);
        let out = multiplier_update(&zero, &x, &xk, 0.001).unwrap();
        assert!(out.sub(&x.sub(&xk).scaled(0.001)).max_abs() < 1e-15);
    }

    #[test]
    fn published_schedule() {
        let cfg = ReconConfig::ss_damp(Anatomy::Brain);
        assert_eq!((cfg.lambda, cfg.mu, cfg.eta), (3.0, 1.0, 0.001));
        assert_eq!((cfg.cs_iters, cfg.cs_interval, cfg.ss_epochs), (25, 1000, 4000));
        let launches: Vec<usize> = cfg.launch_epochs().collect();
        assert_eq!(launches, vec![1100, 2100]);
        assert_eq!(cfg.incorporation_epoch(1100), 2100);

        let knee = ReconConfig::ss_damp(Anatomy::Knee);
        assert_eq!((knee.lambda, knee.mu, knee.ss_epochs), (1.5, 0.5, 3000));
        let bm3d = ReconConfig::ss_bm3d(Anatomy::Brain);
        assert_eq!(bm3d.sigma_fixed, Some(0.012));
        assert_eq!(bm3d.incorporation_epoch(1100), 1100);
        assert!(bm3d.validate().is_ok());
    }

    #[test]
    fn config_validation() {
        let bad = ReconConfig { cs_interval: 0, ..ReconConfig::default() };
        assert!(bad.validate().is_err());
        let bad = ReconConfig { mu: -1.0, ..ReconConfig::default() };
        assert!(bad.validate().is_err());
        let bad = ReconConfig { sigma_fixed: None, ..ReconConfig::ss_bm3d(Anatomy::Knee) };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn epoch_seeds_differ() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|e| epoch_seed(7, e)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_eq!(epoch_seed(7, 3), epoch_seed(7, 3));
    }
}
