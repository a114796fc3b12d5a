//! Same-padded 2D convolution on channel-major `f64` buffers, via im2col and
//! `dgemm`.

/// `(cin·k², h·w)` patch matrix with zero padding.
fn im2col(input: &[f64], cin: usize, h: usize, w: usize, k: usize) -> Vec<f64> {
    let pad = k / 2;
    let hw = h * w;
    let mut cols = vec![0.0; cin * k * k * hw];
    for ci in 0..cin {
        let plane = &input[ci * hw..(ci + 1) * hw];
        for ky in 0..k {
            for kx in 0..k {
                let row = &mut cols[((ci * k + ky) * k + kx) * hw..][..hw];
                let dy = ky as isize - pad as isize;
                let dx = kx as isize - pad as isize;
                let c_lo = (-dx).max(0) as usize;
                let c_hi = (w as isize - dx).min(w as isize).max(0) as usize;
                for r in 0..h {
                    let sr = r as isize + dy;
                    if sr < 0 || sr >= h as isize || c_lo >= c_hi {
                        continue;
                    }
                    let src = sr as usize * w;
                    let s0 = (src as isize + c_lo as isize + dx) as usize;
                    row[r * w + c_lo..r * w + c_hi].copy_from_slice(&plane[s0..s0 + (c_hi - c_lo)]);
                }
            }
        }
    }
    cols
}

/// Adjoint of [`im2col`]: scatter-add patches back into an image.
fn col2im(cols: &[f64], cin: usize, h: usize, w: usize, k: usize) -> Vec<f64> {
    let pad = k / 2;
    let hw = h * w;
    let mut out = vec![0.0; cin * hw];
    for ci in 0..cin {
        let plane = &mut out[ci * hw..(ci + 1) * hw];
        for ky in 0..k {
            for kx in 0..k {
                let row = &cols[((ci * k + ky) * k + kx) * hw..][..hw];
                let dy = ky as isize - pad as isize;
                let dx = kx as isize - pad as isize;
                let c_lo = (-dx).max(0) as usize;
                let c_hi = (w as isize - dx).min(w as isize).max(0) as usize;
                for r in 0..h {
                    let sr = r as isize + dy;
                    if sr < 0 || sr >= h as isize || c_lo >= c_hi {
                        continue;
                    }
                    let s0 = (sr as usize * w) as isize + c_lo as isize + dx;
                    let dst = &mut plane[s0 as usize..s0 as usize + (c_hi - c_lo)];
                    for (d, s) in dst.iter_mut().zip(&row[r * w + c_lo..r * w + c_hi]) {
                        *d += s;
                    }
                }
            }
        }
    }
    out
}

/// `C (m×n) = alpha · op(A) (m×k) · op(B) (k×n) + beta · C`, with row/column
/// strides describing the (possibly transposed) operands.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    a_strides: (isize, isize),
    b: &[f64],
    b_strides: (isize, isize),
    beta: f64,
    c: &mut [f64],
) {
    assert!(c.len() >= m * n);
    // SAFETY: the callers size `a`, `b` and `c` to the stated shapes and the
    // strides address only elements inside those slices.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            a_strides.0,
            a_strides.1,
            b.as_ptr(),
            b_strides.0,
            b_strides.1,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Forward convolution: `weight` is `(cout, cin, k, k)`, output `(cout, h, w)`.
pub(crate) fn conv_forward(
    input: &[f64],
    cin: usize,
    h: usize,
    w: usize,
    weight: &[f64],
    bias: &[f64],
    cout: usize,
    k: usize,
) -> Vec<f64> {
    let hw = h * w;
    let kk = cin * k * k;
    let cols = im2col(input, cin, h, w, k);
    let mut out = vec![0.0; cout * hw];
    for (co, plane) in out.chunks_mut(hw).enumerate() {
        plane.fill(bias[co]);
    }
    gemm(cout, kk, hw, weight, (kk as isize, 1), &cols, (hw as isize, 1), 1.0, &mut out);
    out
}

/// Backward convolution. Accumulates `∂L/∂weight` and `∂L/∂bias` into the
/// given slices and returns `∂L/∂input` when requested.
#[allow(clippy::too_many_arguments)]
pub(crate) fn conv_backward(
    input: &[f64],
    cin: usize,
    h: usize,
    w: usize,
    weight: &[f64],
    cout: usize,
    k: usize,
    grad_out: &[f64],
    grad_weight: &mut [f64],
    grad_bias: &mut [f64],
    need_input_grad: bool,
) -> Option<Vec<f64>> {
    let hw = h * w;
    let kk = cin * k * k;
    let cols = im2col(input, cin, h, w, k);
    // dW += dOut · colsᵀ
    gemm(cout, hw, kk, grad_out, (hw as isize, 1), &cols, (1, hw as isize), 1.0, grad_weight);
    for (co, g) in grad_bias.iter_mut().enumerate() {
        *g += grad_out[co * hw..(co + 1) * hw].iter().sum::<f64>();
    }
    if !need_input_grad {
        return None;
    }
    // dCols = Wᵀ · dOut
    let mut dcols = cols;
    gemm(kk, cout, hw, weight, (1, kk as isize), grad_out, (hw as isize, 1), 0.0, &mut dcols);
    Some(col2im(&dcols, cin, h, w, k))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(input: &[f64], cin: usize, h: usize, w: usize, weight: &[f64], bias: &[f64], cout: usize, k: usize) -> Vec<f64> {
        let pad = (k / 2) as isize;
        let mut out = vec![0.0; cout * h * w];
        for co in 0..cout {
            for r in 0..h {
                for c in 0..w {
                    let mut acc = bias[co];
                    for ci in 0..cin {
                        for ky in 0..k {
                            for kx in 0..k {
                                let sr = r as isize + ky as isize - pad;
                                let sc = c as isize + kx as isize - pad;
                                if sr >= 0 && sc >= 0 && (sr as usize) < h && (sc as usize) < w {
                                    acc += weight[((co * cin + ci) * k + ky) * k + kx]
                                        * input[(ci * h + sr as usize) * w + sc as usize];
                                }
                            }
                        }
                    }
                    out[(co * h + r) * w + c] = acc;
                }
            }
        }
        out
    }

    fn pseudo(n: usize, seed: u64) -> Vec<f64> {
        (0..n).map(|i| (((i as u64 + 1) * (seed * 2654435761 + 97)) % 1000) as f64 / 500.0 - 1.0).collect()
    }

    #[test]
    fn matches_direct_convolution() {
        for &(cin, cout, h, w, k) in &[(2, 3, 5, 7, 3), (1, 2, 6, 4, 5), (3, 1, 4, 4, 1)] {
            let x = pseudo(cin * h * w, 1);
            let wt = pseudo(cout * cin * k * k, 2);
            let b = pseudo(cout, 3);
            let fast = conv_forward(&x, cin, h, w, &wt, &b, cout, k);
            let slow = naive(&x, cin, h, w, &wt, &b, cout, k);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn col2im_is_adjoint_of_im2col() {
        let (cin, h, w, k) = (2, 5, 6, 3);
        let x = pseudo(cin * h * w, 4);
        let y = pseudo(cin * k * k * h * w, 5);
        let lhs: f64 = im2col(&x, cin, h, w, k).iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.iter().zip(&col2im(&y, cin, h, w, k)).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-10);
    }
}
