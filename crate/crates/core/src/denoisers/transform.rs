//! Orthonormal DCT-II helpers for small blocks.

/// Row-major `n × n` orthonormal DCT-II matrix: `C[k][i] = α_k cos(π(2i+1)k / 2n)`.
pub(crate) fn dct_matrix(n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    for k in 0..n {
        let alpha = if k == 0 {
            (1.0 / n as f64).sqrt()
        } else {
            (2.0 / n as f64).sqrt()
        };
        for i in 0..n {
            c[k * n + i] =
                alpha * (std::f64::consts::PI * (2 * i + 1) as f64 * k as f64 / (2 * n) as f64).cos();
        }
    }
    c
}

/// Separable 2D transform `C · X · Cᵀ` of a `b × b` block, in place.
pub(crate) fn forward_2d(block: &mut [f64], c: &[f64], b: usize, tmp: &mut [f64]) {
    // tmp = C · X
    for k in 0..b {
        for j in 0..b {
            let mut acc = 0.0;
            for i in 0..b {
                acc += c[k * b + i] * block[i * b + j];
            }
            tmp[k * b + j] = acc;
        }
    }
    // block = tmp · Cᵀ
    for r in 0..b {
        for k in 0..b {
            let mut acc = 0.0;
            for j in 0..b {
                acc += tmp[r * b + j] * c[k * b + j];
            }
            block[r * b + k] = acc;
        }
    }
}

/// Inverse of [`forward_2d`]: `Cᵀ · Y · C`.
pub(crate) fn inverse_2d(block: &mut [f64], c: &[f64], b: usize, tmp: &mut [f64]) {
    for i in 0..b {
        for j in 0..b {
            let mut acc = 0.0;
            for k in 0..b {
                acc += c[k * b + i] * block[k * b + j];
            }
            tmp[i * b + j] = acc;
        }
    }
    for r in 0..b {
        for j in 0..b {
            let mut acc = 0.0;
            for k in 0..b {
                acc += tmp[r * b + k] * c[k * b + j];
            }
            block[r * b + j] = acc;
        }
    }
}

/// Block origins along one axis: every `step`, with the last admissible
/// origin always included so the blocks cover the whole axis.
pub(crate) fn block_origins(len: usize, block: usize, step: usize) -> Vec<usize> {
    let last = len - block;
    let mut v: Vec<usize> = (0..=last).step_by(step.max(1)).collect();
    if *v.last().unwrap() != last {
        v.push(last);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dct_matrix_is_orthonormal() {
        for n in [1, 2, 4, 8, 16] {
            let c = dct_matrix(n);
            for a in 0..n {
                for b in 0..n {
                    let dot: f64 = (0..n).map(|i| c[a * n + i] * c[b * n + i]).sum();
                    let expect = if a == b { 1.0 } else { 0.0 };
                    assert!((dot - expect).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn forward_inverse_round_trip() {
        let b = 8;
        let c = dct_matrix(b);
        let orig: Vec<f64> = (0..b * b).map(|i| ((i * 37) % 11) as f64 * 0.1).collect();
        let mut blk = orig.clone();
        let mut tmp = vec![0.0; b * b];
        forward_2d(&mut blk, &c, b, &mut tmp);
        inverse_2d(&mut blk, &c, b, &mut tmp);
        for (a, o) in blk.iter().zip(&orig) {
            assert!((a - o).abs() < 1e-12);
        }
    }

    #[test]
    fn origins_cover_axis() {
        assert_eq!(block_origins(20, 8, 3), vec![0, 3, 6, 9, 12]);
        assert_eq!(block_origins(21, 8, 3), vec![0, 3, 6, 9, 12, 13]);
        assert_eq!(block_origins(8, 8, 3), vec![0]);
    }
}
