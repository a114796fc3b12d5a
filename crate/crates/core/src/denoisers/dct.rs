//! Sliding-window DCT hard thresholding.

use super::transform::{block_origins, dct_matrix, forward_2d, inverse_2d};

/// Denoise one real channel: every `b × b` block (stride 1) is transformed,
/// AC coefficients below `threshold` are zeroed, and the blocks are averaged
/// back with uniform weights.
pub(crate) fn dct_hard_threshold(channel: &[f64], h: usize, w: usize, b: usize, threshold: f64) -> Vec<f64> {
    let c = dct_matrix(b);
    let mut num = vec![0.0; h * w];
    let mut den = vec![0.0; h * w];
    let mut blk = vec![0.0; b * b];
    let mut tmp = vec![0.0; b * b];
    let rows = block_origins(h, b, 1);
    let cols = block_origins(w, b, 1);
    for &r0 in &rows {
        for &c0 in &cols {
            for i in 0..b {
                blk[i * b..(i + 1) * b].copy_from_slice(&channel[(r0 + i) * w + c0..(r0 + i) * w + c0 + b]);
            }
            forward_2d(&mut blk, &c, b, &mut tmp);
            for v in blk.iter_mut().skip(1) {
                if v.abs() < threshold {
                    *v = 0.0;
                }
            }
            inverse_2d(&mut blk, &c, b, &mut tmp);
            for i in 0..b {
                let row = (r0 + i) * w + c0;
                for j in 0..b {
                    num[row + j] += blk[i * b + j];
                    den[row + j] += 1.0;
                }
            }
        }
    }
    num.iter().zip(&den).map(|(n, d)| n / d).collect()
}
