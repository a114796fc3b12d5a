//! Unrolled reconstruction network: `n` convolutional denoising blocks, each
//! followed by a data-consistency projection.
//!
//! ```text
//! x̂_1     = F_Ω^H y_Ω
//! x_t     = block_t(x̂_t)                       (2 real channels in and out)
//! x̂_{t+1} = F^H (F_{∖Ω} x_t ∪ y_Ω)
//! ```
//!
//! Gradients are computed by hand-written reverse-mode differentiation. The
//! data-consistency step is affine in `x_t` with Jacobian `F^H P_{∖Ω} F`,
//! which is self-adjoint, so its backward pass is the same projection applied
//! to the incoming cotangent.
//!
//! Complex gradients use the real-pair convention: for a real loss `L`,
//! `∇L = ∂L/∂Re + i·∂L/∂Im`, so that `dL = Re⟨∇L, dx⟩`.

mod adam;
mod checkpoint;
mod conv;

pub use adam::{train_step, Adam, AdamConfig};
pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_MAGIC};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::fourier::{data_consistency, fft2c, ifft2c, project_unsampled};
use crate::grid::{ComplexImage, KSpaceGrid, SamplingMask};

/// Shape of the cascade.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetworkArch {
    pub cascades: usize,
    pub conv_layers: usize,
    pub channels: usize,
    pub kernel: usize,
    pub residual: bool,
}

impl Default for NetworkArch {
    fn default() -> Self {
        Self {
            cascades: 7,
            conv_layers: 5,
            channels: 64,
            kernel: 3,
            residual: true,
        }
    }
}

impl NetworkArch {
    pub fn validate(&self) -> Result<()> {
        if self.cascades == 0 || self.conv_layers == 0 || self.channels == 0 {
            return Err(Error::Config(
                "cascades, conv layers and channels must be positive".into(),
            ));
        }
        if self.kernel % 2 == 0 {
            return Err(Error::Config(format!(
                "kernel size must be odd, got {}",
                self.kernel
            )));
        }
        Ok(())
    }

    /// `(cin, cout)` of every layer in one block.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        (0..self.conv_layers)
            .map(|l| {
                let cin = if l == 0 { 2 } else { self.channels };
                let cout = if l + 1 == self.conv_layers { 2 } else { self.channels };
                (cin, cout)
            })
            .collect()
    }

    pub fn parameter_count(&self) -> usize {
        let per_block: usize = self
            .layer_shapes()
            .iter()
            .map(|&(cin, cout)| cout * cin * self.kernel * self.kernel + cout)
            .sum();
        per_block * self.cascades
    }
}

/// Location of one convolution's weights and bias inside the flat vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSlot {
    pub cin: usize,
    pub cout: usize,
    pub weight: usize,
    pub bias: usize,
}

impl LayerSlot {
    fn weight_len(&self, k: usize) -> usize {
        self.cout * self.cin * k * k
    }
}

fn layout(arch: &NetworkArch) -> Vec<Vec<LayerSlot>> {
    let mut offset = 0;
    (0..arch.cascades)
        .map(|_| {
            arch.layer_shapes()
                .into_iter()
                .map(|(cin, cout)| {
                    let weight = offset;
                    offset += cout * cin * arch.kernel * arch.kernel;
                    let bias = offset;
                    offset += cout;
                    LayerSlot { cin, cout, weight, bias }
                })
                .collect()
        })
        .collect()
}

/// All network weights Θ = {θ_t}, stored as one flat vector ordered by
/// cascade, then layer, weight before bias. Weights are `(cout, cin, k, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    arch: NetworkArch,
    slots: Vec<Vec<LayerSlot>>,
    values: Vec<f64>,
}

impl NetworkParams {
    pub fn zeros(arch: NetworkArch) -> Result<Self> {
        arch.validate()?;
        Ok(Self {
            slots: layout(&arch),
            values: vec![0.0; arch.parameter_count()],
            arch,
        })
    }

    pub fn from_values(arch: NetworkArch, values: Vec<f64>) -> Result<Self> {
        let mut p = Self::zeros(arch)?;
        if values.len() != p.values.len() {
            return Err(Error::InvalidInput(format!(
                "architecture needs {} parameters, got {}",
                p.values.len(),
                values.len()
            )));
        }
        p.values = values;
        Ok(p)
    }

    pub fn arch(&self) -> &NetworkArch {
        &self.arch
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn slots(&self, cascade: usize) -> &[LayerSlot] {
        &self.slots[cascade]
    }

    pub fn weight(&self, cascade: usize, layer: usize) -> &[f64] {
        let s = self.slots[cascade][layer];
        &self.values[s.weight..s.weight + s.weight_len(self.arch.kernel)]
    }

    pub fn bias(&self, cascade: usize, layer: usize) -> &[f64] {
        let s = self.slots[cascade][layer];
        &self.values[s.bias..s.bias + s.cout]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// He-scaled normal initialisation for every layer but the last of each
/// block, which starts at zero so that (with residual blocks) every block
/// is initially the identity.
pub fn init_params(arch: NetworkArch, seed: u64) -> Result<NetworkParams> {
    let mut p = NetworkParams::zeros(arch)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k2 = (arch.kernel * arch.kernel) as f64;
    for t in 0..arch.cascades {
        for l in 0..arch.conv_layers.saturating_sub(1) {
            let s = p.slots[t][l];
            let normal = Normal::new(0.0, (2.0 / (s.cin as f64 * k2)).sqrt()).expect("positive std");
            for v in &mut p.values[s.weight..s.weight + s.weight_len(arch.kernel)] {
                *v = normal.sample(&mut rng);
            }
        }
    }
    Ok(p)
}

fn to_channels(img: &ComplexImage) -> Vec<f64> {
    let mut v = img.real_part();
    v.extend(img.imag_part());
    v
}

fn from_channels(h: usize, w: usize, v: &[f64]) -> Result<ComplexImage> {
    let hw = h * w;
    ComplexImage::from_parts(h, w, &v[..hw], &v[hw..2 * hw])
}

/// Activations kept for the backward pass of one block: the input of every
/// convolution (post-ReLU for hidden layers).
struct BlockCache {
    layer_inputs: Vec<Vec<f64>>,
}

fn block_forward(
    params: &NetworkParams,
    cascade: usize,
    input: &[f64],
    h: usize,
    w: usize,
) -> (Vec<f64>, BlockCache) {
    let arch = params.arch;
    let slots = &params.slots[cascade];
    let mut layer_inputs = Vec::with_capacity(slots.len());
    let mut act = input.to_vec();
    for (l, s) in slots.iter().enumerate() {
        let out = conv::conv_forward(
            &act,
            s.cin,
            h,
            w,
            params.weight(cascade, l),
            params.bias(cascade, l),
            s.cout,
            arch.kernel,
        );
        layer_inputs.push(act);
        act = out;
        if l + 1 < slots.len() {
            for v in &mut act {
                *v = v.max(0.0);
            }
        }
    }
    if arch.residual {
        for (o, i) in act.iter_mut().zip(input) {
            *o += i;
        }
    }
    (act, BlockCache { layer_inputs })
}

/// Returns `∂L/∂input` and accumulates parameter gradients into `grad`.
fn block_backward(
    params: &NetworkParams,
    cascade: usize,
    cache: &BlockCache,
    grad_out: &[f64],
    h: usize,
    w: usize,
    grad: &mut [f64],
) -> Vec<f64> {
    let arch = params.arch;
    let slots = &params.slots[cascade];
    let mut g = grad_out.to_vec();
    for l in (0..slots.len()).rev() {
        let s = slots[l];
        if l + 1 < slots.len() {
            // ReLU: the next layer's input is this layer's activation.
            for (gv, a) in g.iter_mut().zip(&cache.layer_inputs[l + 1]) {
                if *a <= 0.0 {
                    *gv = 0.0;
                }
            }
        }
        let (gw, rest) = grad[s.weight..].split_at_mut(s.weight_len(arch.kernel));
        let gb = &mut rest[s.bias - s.weight - s.weight_len(arch.kernel)..][..s.cout];
        g = conv::conv_backward(
            &cache.layer_inputs[l],
            s.cin,
            h,
            w,
            params.weight(cascade, l),
            s.cout,
            arch.kernel,
            &g,
            gw,
            gb,
            true,
        )
        .expect("input gradient requested");
    }
    if arch.residual {
        for (gi, go) in g.iter_mut().zip(grad_out) {
            *gi += go;
        }
    }
    g
}

fn check_inputs(zf: &ComplexImage, y_sub: &KSpaceGrid, mask_sub: &SamplingMask) -> Result<()> {
    y_sub.ensure_shape(zf.shape())?;
    mask_sub.ensure_shape(zf.shape())?;
    zf.ensure_finite("network input")
}

/// Everything the backward pass needs from one forward evaluation.
pub struct ForwardCache {
    blocks: Vec<BlockCache>,
    shape: (usize, usize),
}

/// Run the full cascade and return `x̂_{n+1}`.
pub fn cascade_forward(
    zf: &ComplexImage,
    y_sub: &KSpaceGrid,
    mask_sub: &SamplingMask,
    params: &NetworkParams,
) -> Result<ComplexImage> {
    Ok(cascade_forward_cached(zf, y_sub, mask_sub, params)?.0)
}

pub fn cascade_forward_cached(
    zf: &ComplexImage,
    y_sub: &KSpaceGrid,
    mask_sub: &SamplingMask,
    params: &NetworkParams,
) -> Result<(ComplexImage, ForwardCache)> {
    let (x_hat, _, cache) = forward_all(zf, y_sub, mask_sub, params)?;
    Ok((x_hat, cache))
}

/// Like [`cascade_forward`], also returning the last block's output before
/// its data-consistency step.
pub fn cascade_forward_pre_dc(
    zf: &ComplexImage,
    y_sub: &KSpaceGrid,
    mask_sub: &SamplingMask,
    params: &NetworkParams,
) -> Result<(ComplexImage, ComplexImage)> {
    let (x_hat, pre, _) = forward_all(zf, y_sub, mask_sub, params)?;
    Ok((x_hat, pre))
}

fn forward_all(
    zf: &ComplexImage,
    y_sub: &KSpaceGrid,
    mask_sub: &SamplingMask,
    params: &NetworkParams,
) -> Result<(ComplexImage, ComplexImage, ForwardCache)> {
    check_inputs(zf, y_sub, mask_sub)?;
    let (h, w) = zf.shape();
    let mut x_hat = zf.clone();
    let mut pre = zf.clone();
    let mut blocks = Vec::with_capacity(params.arch.cascades);
    for t in 0..params.arch.cascades {
        let (out, cache) = block_forward(params, t, &to_channels(&x_hat), h, w);
        blocks.push(cache);
        let x_t = from_channels(h, w, &out)?;
        if !x_t.is_finite() {
            return Err(Error::InvalidInput(format!(
                "cascade {t} produced non-finite values"
            )));
        }
        x_hat = data_consistency(&x_t, y_sub, mask_sub)?;
        pre = x_t;
    }
    Ok((x_hat, pre, ForwardCache { blocks, shape: (h, w) }))
}

/// Back-propagate `∂L/∂x̂_{n+1}` through the cascade; returns `∂L/∂Θ`.
pub fn cascade_backward(
    params: &NetworkParams,
    cache: &ForwardCache,
    mask_sub: &SamplingMask,
    grad_output: &ComplexImage,
) -> Result<Vec<f64>> {
    let (h, w) = cache.shape;
    grad_output.ensure_shape((h, w))?;
    let mut grad = vec![0.0; params.len()];
    let mut g = grad_output.clone();
    for t in (0..params.arch.cascades).rev() {
        let g_block_out = project_unsampled(&g, mask_sub)?;
        let g_in = block_backward(params, t, &cache.blocks[t], &to_channels(&g_block_out), h, w, &mut grad);
        g = from_channels(h, w, &g_in)?;
    }
    Ok(grad)
}

/// `L_kdc = ‖y_Υ − F_Υ x̂_Λ‖₂²`.
pub fn ss_loss(x_lambda: &ComplexImage, y_upsilon: &KSpaceGrid, upsilon: &SamplingMask) -> Result<f64> {
    Ok(ss_residual(x_lambda, y_upsilon, upsilon)?.norm_sqr())
}

/// `P_Υ (F x − y)`.
fn ss_residual(x: &ComplexImage, y_upsilon: &KSpaceGrid, upsilon: &SamplingMask) -> Result<KSpaceGrid> {
    y_upsilon.ensure_shape(x.shape())?;
    upsilon.ensure_shape(x.shape())?;
    let mut k = fft2c(x)?;
    for ((z, &y), &s) in k.data_mut().iter_mut().zip(y_upsilon.data()).zip(upsilon.sampled()) {
        *z = if s { *z - y } else { Complex64::new(0.0, 0.0) };
    }
    Ok(k)
}

/// Optional ADMM coupling term `(μ/2)‖x_k − x̂_Λ − q_k‖²`.
#[derive(Debug, Clone, Copy)]
pub struct RedTerm<'a> {
    pub x_k: &'a ComplexImage,
    pub q_k: &'a ComplexImage,
    pub mu: f64,
}

/// `½·L_kdc + (μ/2)‖x_k − x̂_Λ − q_k‖²`.
pub fn combined_loss(
    x_lambda: &ComplexImage,
    y_upsilon: &KSpaceGrid,
    upsilon: &SamplingMask,
    x_k: &ComplexImage,
    q_k: &ComplexImage,
    mu: f64,
) -> Result<f64> {
    Ok(loss_terms(x_lambda, y_upsilon, upsilon, Some(RedTerm { x_k, q_k, mu }))?.total())
}

/// Loss components: `kdc = L_kdc` and `cs = (μ/2)‖x_k − x̂ − q_k‖²`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossTerms {
    pub kdc: f64,
    pub cs: f64,
}

impl LossTerms {
    pub fn total(&self) -> f64 {
        0.5 * self.kdc + self.cs
    }
}

pub fn loss_terms(
    x: &ComplexImage,
    y_upsilon: &KSpaceGrid,
    upsilon: &SamplingMask,
    red: Option<RedTerm<'_>>,
) -> Result<LossTerms> {
    let kdc = ss_loss(x, y_upsilon, upsilon)?;
    let cs = match red {
        Some(t) if t.mu != 0.0 => {
            t.x_k.ensure_shape(x.shape())?;
            t.q_k.ensure_shape(x.shape())?;
            0.5 * t.mu * t.x_k.sub(x).sub(t.q_k).norm_sqr()
        }
        _ => 0.0,
    };
    Ok(LossTerms { kdc, cs })
}

/// `∇_x̂ [½ L_kdc + (μ/2)‖x_k − x̂ − q_k‖²] = F^H P_Υ (F x̂ − y) + μ (x̂ + q_k − x_k)`.
pub fn loss_gradient(
    x: &ComplexImage,
    y_upsilon: &KSpaceGrid,
    upsilon: &SamplingMask,
    red: Option<RedTerm<'_>>,
) -> Result<ComplexImage> {
    let mut g = ifft2c(&ss_residual(x, y_upsilon, upsilon)?)?;
    if let Some(t) = red {
        if t.mu != 0.0 {
            let diff = x.add(t.q_k).sub(t.x_k);
            g.axpy(t.mu, &diff);
        }
    }
    Ok(g)
}

/// One self-supervised training sample: the network sees `(y_in, mask_in)`
/// and is scored on `(y_target, mask_target)`.
#[derive(Debug, Clone, Copy)]
pub struct TrainingPair<'a> {
    pub zf: &'a ComplexImage,
    pub y_in: &'a KSpaceGrid,
    pub mask_in: &'a SamplingMask,
    pub y_target: &'a KSpaceGrid,
    pub mask_target: &'a SamplingMask,
}

/// Forward, loss and parameter gradient in one pass.
pub struct Evaluation {
    pub output: ComplexImage,
    pub loss: LossTerms,
    pub grad: Vec<f64>,
}

pub fn evaluate(params: &NetworkParams, pair: &TrainingPair<'_>, red: Option<RedTerm<'_>>) -> Result<Evaluation> {
    let (output, cache) = cascade_forward_cached(pair.zf, pair.y_in, pair.mask_in, params)?;
    let loss = loss_terms(&output, pair.y_target, pair.mask_target, red)?;
    let g_out = loss_gradient(&output, pair.y_target, pair.mask_target, red)?;
    let grad = cascade_backward(params, &cache, pair.mask_in, &g_out)?;
    Ok(Evaluation { output, loss, grad })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::{adjoint_masked, forward_masked};
    use crate::sampling::{generate_cartesian_mask, split_subsets, MaskSpec};
    use rand::Rng;

    fn tiny() -> NetworkArch {
        NetworkArch { cascades: 2, conv_layers: 3, channels: 4, kernel: 3, residual: true }
    }

    fn image(h: usize, w: usize, seed: u64) -> ComplexImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ComplexImage::from_fn(h, w, |_, _| Complex64::new(rng.random_range(0.0..1.0), rng.random_range(-0.2..0.2)))
    }

    fn randomise(p: &mut NetworkParams, seed: u64, scale: f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for v in p.values_mut() {
            *v = rng.random_range(-scale..scale);
        }
    }

    #[test]
    fn default_parameter_count() {
        // 2→64, 3×(64→64), 64→2, 3×3 kernels, with biases, 7 cascades
        let per_block = (64 * 2 * 9 + 64) + 3 * (64 * 64 * 9 + 64) + (2 * 64 * 9 + 2);
        assert_eq!(NetworkArch::default().parameter_count(), 7 * per_block);
        assert_eq!(per_block, 113_154);
    }

    #[test]
    fn init_is_deterministic_and_identity() {
        let a = init_params(tiny(), 5).unwrap();
        assert_eq!(a, init_params(tiny(), 5).unwrap());
        assert_ne!(a, init_params(tiny(), 6).unwrap());
        assert!(a.weight(0, 2).iter().all(|&v| v == 0.0));
        assert!(a.weight(0, 0).iter().any(|&v| v != 0.0));

        let x = image(12, 12, 1);
        let (out, _) = block_forward(&a, 1, &to_channels(&x), 12, 12);
        assert_eq!(out, to_channels(&x));
    }

    #[test]
    fn identity_network_returns_zero_filled() {
        let truth = image(32, 32, 2);
        let mask = generate_cartesian_mask(&MaskSpec::new(32, 32, 2.0, 1).with_acs(8)).unwrap();
        let y = forward_masked(&truth, &mask).unwrap();
        let zf = adjoint_masked(&y, &mask).unwrap();
        let out = cascade_forward(&zf, &y, &mask, &init_params(tiny(), 1).unwrap()).unwrap();
        assert!(out.sub(&zf).max_abs() < 1e-12);
    }

    #[test]
    fn output_is_data_consistent() {
        let truth = image(32, 32, 3);
        let mask = generate_cartesian_mask(&MaskSpec::new(32, 32, 2.0, 2).with_acs(8)).unwrap();
        let y = forward_masked(&truth, &mask).unwrap();
        let zf = adjoint_masked(&y, &mask).unwrap();
        let mut p = init_params(tiny(), 2).unwrap();
        randomise(&mut p, 9, 0.3);
        let out = cascade_forward(&zf, &y, &mask, &p).unwrap();
        assert!(forward_masked(&out, &mask).unwrap().sub(&y).max_abs() < 1e-10);

        let full = SamplingMask::full(32, 32);
        let yf = fft2c(&truth).unwrap();
        let out = cascade_forward(&zf, &yf, &full, &p).unwrap();
        assert!(out.sub(&truth).max_abs() < 1e-12);
    }

    #[test]
    fn loss_fixtures() {
        let truth = image(16, 16, 4);
        let mask = generate_cartesian_mask(&MaskSpec::new(16, 16, 1.0, 0).with_acs(4)).unwrap();
        let pair = split_subsets(&mask, 0.5, 4, 1).unwrap();
        let y = forward_masked(&truth, &pair.upsilon).unwrap();
        assert!(ss_loss(&truth, &y, &pair.upsilon).unwrap() < 1e-20);
        let zero = ComplexImage::zeros(16, 16);
        assert!((ss_loss(&zero, &y, &pair.upsilon).unwrap() - y.norm_sqr()).abs() < 1e-12);

        // brute-force sum over Υ
        let x = image(16, 16, 5);
        let fx = fft2c(&x).unwrap();
        let brute: f64 = pair.upsilon.indices().map(|i| (y.data()[i] - fx.data()[i]).norm_sqr()).sum();
        assert!((ss_loss(&x, &y, &pair.upsilon).unwrap() - brute).abs() < 1e-10 * brute);

        let q = image(16, 16, 6);
        let xk = image(16, 16, 7);
        let half = 0.5 * ss_loss(&x, &y, &pair.upsilon).unwrap();
        assert_eq!(combined_loss(&x, &y, &pair.upsilon, &xk, &q, 0.0).unwrap(), half);
        let consistent = x.add(&q);
        assert!((combined_loss(&x, &y, &pair.upsilon, &consistent, &q, 1.0).unwrap() - half).abs() < 1e-12);
        let expect = half + 0.25 * xk.sub(&x).sub(&q).norm_sqr();
        assert!((combined_loss(&x, &y, &pair.upsilon, &xk, &q, 0.5).unwrap() - expect).abs() < 1e-10);
    }

    #[test]
    fn loss_gradient_matches_finite_differences() {
        let x = image(8, 8, 8);
        let mask = generate_cartesian_mask(&MaskSpec::new(8, 8, 2.0, 3).with_acs(2)).unwrap();
        let y = forward_masked(&image(8, 8, 9), &mask).unwrap();
        let (xk, q) = (image(8, 8, 10), image(8, 8, 11));
        let red = Some(RedTerm { x_k: &xk, q_k: &q, mu: 0.7 });
        let g = loss_gradient(&x, &y, &mask, red).unwrap();
        let f = |v: &ComplexImage| loss_terms(v, &y, &mask, red).unwrap().total();
        let h = 1e-6;
        for i in [0, 9, 27, 63] {
            for dir in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)] {
                let mut p = x.clone();
                p.data_mut()[i] += dir * h;
                let mut m = x.clone();
                m.data_mut()[i] -= dir * h;
                let fd = (f(&p) - f(&m)) / (2.0 * h);
                let an = (g.data()[i].conj() * dir).re;
                assert!((fd - an).abs() < 1e-6 * (1.0 + an.abs()), "{fd} vs {an}");
            }
        }
    }

    #[test]
    fn rejects_shape_mismatch() {
        let p = init_params(tiny(), 0).unwrap();
        let zf = ComplexImage::zeros(16, 16);
        assert!(cascade_forward(&zf, &KSpaceGrid::zeros(16, 8), &SamplingMask::full(16, 16), &p).is_err());
        assert!(cascade_forward(&zf, &KSpaceGrid::zeros(16, 16), &SamplingMask::full(8, 16), &p).is_err());
    }
}
