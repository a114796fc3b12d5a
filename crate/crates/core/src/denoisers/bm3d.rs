//! First (hard-thresholding) stage of BM3D: block matching, a separable 3D
//! transform of each group, hard thresholding and weighted aggregation.

use rayon::prelude::*;

use super::transform::{block_origins, dct_matrix, forward_2d, inverse_2d};

#[derive(Debug, Clone, Copy)]
pub(crate) struct Bm3dSettings {
    pub block: usize,
    pub window: usize,
    pub max_matched: usize,
    pub step: usize,
    pub threshold: f64,
    pub match_tau: f64,
}

/// 2D DCT spectra of every block position, `(h−b+1)·(w−b+1)` blocks of `b²`.
fn block_spectra(channel: &[f64], h: usize, w: usize, b: usize) -> Vec<f64> {
    let nr = h - b + 1;
    let nc = w - b + 1;
    let c = dct_matrix(b);
    let mut out = vec![0.0; nr * nc * b * b];
    out.par_chunks_mut(nc * b * b).enumerate().for_each(|(r0, row)| {
        let mut tmp = vec![0.0; b * b];
        for c0 in 0..nc {
            let blk = &mut row[c0 * b * b..(c0 + 1) * b * b];
            for i in 0..b {
                blk[i * b..(i + 1) * b].copy_from_slice(&channel[(r0 + i) * w + c0..(r0 + i) * w + c0 + b]);
            }
            forward_2d(blk, &c, b, &mut tmp);
        }
    });
    out
}

/// Largest power of two not exceeding `n` (n ≥ 1).
fn floor_pow2(n: usize) -> usize {
    1 << (usize::BITS - 1 - n.leading_zeros())
}

pub(crate) fn bm3d_hard_threshold(channel: &[f64], h: usize, w: usize, sigma: f64, s: &Bm3dSettings) -> Vec<f64> {
    let (num, den) = aggregate(channel, h, w, sigma, s);
    num.iter().zip(&den).map(|(n, d)| n / d).collect()
}

/// Weighted sums of the filtered blocks and of their weights, per pixel.
fn aggregate(channel: &[f64], h: usize, w: usize, sigma: f64, s: &Bm3dSettings) -> (Vec<f64>, Vec<f64>) {
    let b = s.block;
    let bb = b * b;
    let nc = w - b + 1;
    let spectra = block_spectra(channel, h, w, b);
    let c2d = dct_matrix(b);
    let group_mats: Vec<Vec<f64>> = (0..=s.max_matched.max(1)).map(|g| if g == 0 { Vec::new() } else { dct_matrix(g) }).collect();
    let thr = s.threshold * sigma;
    let ref_rows = block_origins(h, b, s.step);
    let ref_cols = block_origins(w, b, s.step);
    let half = s.window / 2;

    // One partial accumulator per reference row, summed in row order so the
    // result does not depend on the thread count.
    let partials: Vec<(Vec<f64>, Vec<f64>)> = ref_rows
        .par_iter()
        .map(|&r0| {
            let mut num = vec![0.0; h * w];
            let mut den = vec![0.0; h * w];
            let mut cands: Vec<(f64, usize, usize)> = Vec::new();
            let mut group: Vec<f64> = Vec::new();
            let mut col = Vec::new();
            let mut tmp = vec![0.0; bb];
            for &c0 in &ref_cols {
                let rlo = r0.saturating_sub(half).min(h - b + 1 - s.window.min(h - b + 1));
                let clo = c0.saturating_sub(half).min(w - b + 1 - s.window.min(w - b + 1));
                let rhi = (rlo + s.window).min(h - b + 1);
                let chi = (clo + s.window).min(w - b + 1);
                let reference = &spectra[(r0 * nc + c0) * bb..(r0 * nc + c0 + 1) * bb];
                cands.clear();
                for r in rlo..rhi {
                    for c in clo..chi {
                        let blk = &spectra[(r * nc + c) * bb..(r * nc + c + 1) * bb];
                        let d: f64 = reference.iter().zip(blk).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / bb as f64;
                        if d <= s.match_tau || (r, c) == (r0, c0) {
                            cands.push((d, r, c));
                        }
                    }
                }
                cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
                if let Some(pos) = cands.iter().position(|&(_, r, c)| (r, c) == (r0, c0)) {
                    let own = cands.remove(pos);
                    cands.insert(0, own);
                }
                let g = floor_pow2(cands.len().min(s.max_matched.max(1)));
                let members = &cands[..g];

                // Transform along the group axis.
                group.clear();
                for &(_, r, c) in members {
                    group.extend_from_slice(&spectra[(r * nc + c) * bb..(r * nc + c + 1) * bb]);
                }
                let gm = &group_mats[g];
                col.resize(g, 0.0);
                let mut retained = 0usize;
                for k in 0..bb {
                    for (i, v) in col.iter_mut().enumerate() {
                        *v = (0..g).map(|j| gm[i * g + j] * group[j * bb + k]).sum();
                    }
                    for (i, v) in col.iter_mut().enumerate() {
                        if (k != 0 || i != 0) && v.abs() < thr {
                            *v = 0.0;
                        } else if *v != 0.0 {
                            retained += 1;
                        }
                    }
                    for j in 0..g {
                        group[j * bb + k] = (0..g).map(|i| gm[i * g + j] * col[i]).sum();
                    }
                }
                let weight = 1.0 / retained.max(1) as f64;
                for (j, &(_, r, c)) in members.iter().enumerate() {
                    let blk = &mut group[j * bb..(j + 1) * bb];
                    inverse_2d(blk, &c2d, b, &mut tmp);
                    for i in 0..b {
                        let row = (r + i) * w + c;
                        for jj in 0..b {
                            num[row + jj] += weight * blk[i * b + jj];
                            den[row + jj] += weight;
                        }
                    }
                }
            }
            (num, den)
        })
        .collect();

    let mut num = vec![0.0; h * w];
    let mut den = vec![0.0; h * w];
    for (pn, pd) in partials {
        for i in 0..h * w {
            num[i] += pn[i];
            den[i] += pd[i];
        }
    }
    (num, den)
}
