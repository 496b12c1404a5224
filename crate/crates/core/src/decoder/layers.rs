//! Building blocks of the decoder with their hand-derived adjoints.
//!
//! Every backward function takes the upstream gradient and whatever the
//! forward pass cached, and returns gradients w.r.t. inputs and parameters.

use crate::error::{Error, Result};
use crate::numerics::RealTensor3;

/// 1×1 convolution: `out[:, f, t] = W · x[:, f, t]` with `W` row-major `c_out × c_in`.
pub fn conv1x1_forward(x: &RealTensor3, w: &[f64], c_out: usize) -> Result<RealTensor3> {
    let (c_in, f, t) = x.dims();
    if w.len() != c_out * c_in {
        return Err(Error::DimensionMismatch(format!(
            "kernel has {} entries, expected {c_out}x{c_in}",
            w.len()
        )));
    }
    let p = f * t;
    let mut out = RealTensor3::zeros(c_out, f, t);
    // C (c_out × p) = W (c_out × c_in) · X (c_in × p)
    unsafe {
        matrixmultiply::dgemm(
            c_out,
            c_in,
            p,
            1.0,
            w.as_ptr(),
            c_in as isize,
            1,
            x.as_slice().as_ptr(),
            p as isize,
            1,
            0.0,
            out.as_mut_slice().as_mut_ptr(),
            p as isize,
            1,
        );
    }
    Ok(out)
}

/// Adjoint of [`conv1x1_forward`]: returns `(dL/dx, dL/dW)`. The input
/// gradient is skipped when `need_input_grad` is false.
pub fn conv1x1_backward(
    x: &RealTensor3,
    w: &[f64],
    grad_out: &RealTensor3,
    need_input_grad: bool,
) -> (Option<RealTensor3>, Vec<f64>) {
    let (c_in, f, t) = x.dims();
    let c_out = grad_out.channels();
    let p = f * t;
    debug_assert_eq!(grad_out.plane_len(), p);
    let mut dw = vec![0.0; c_out * c_in];
    // dW (c_out × c_in) = G (c_out × p) · Xᵀ (p × c_in)
    unsafe {
        matrixmultiply::dgemm(
            c_out,
            p,
            c_in,
            1.0,
            grad_out.as_slice().as_ptr(),
            p as isize,
            1,
            x.as_slice().as_ptr(),
            1,
            p as isize,
            0.0,
            dw.as_mut_ptr(),
            c_in as isize,
            1,
        );
    }
    let dx = need_input_grad.then(|| {
        let mut dx = RealTensor3::zeros(c_in, f, t);
        // dX (c_in × p) = Wᵀ (c_in × c_out) · G (c_out × p)
        unsafe {
            matrixmultiply::dgemm(
                c_in,
                c_out,
                p,
                1.0,
                w.as_ptr(),
                1,
                c_in as isize,
                grad_out.as_slice().as_ptr(),
                p as isize,
                1,
                0.0,
                dx.as_mut_slice().as_mut_ptr(),
                p as isize,
                1,
            );
        }
        dx
    });
    (dx, dw)
}

/// Interpolation taps for doubling a length-`n` axis: output `j` reads
/// `(1 − w)·x[i0] + w·x[i1]` at source coordinate `(j + 0.5)/2 − 0.5`,
/// clamped to `[0, n − 1]`.
fn upsample_taps(n: usize) -> Vec<(usize, usize, f64)> {
    (0..2 * n)
        .map(|j| {
            let src = ((j as f64 + 0.5) * 0.5 - 0.5).clamp(0.0, (n - 1) as f64);
            let i0 = src.floor() as usize;
            let i1 = (i0 + 1).min(n - 1);
            (i0, i1, src - i0 as f64)
        })
        .collect()
}

/// Separable bilinear ×2 upsampling (freq, then time), half-pixel aligned and edge-clamped.
pub fn upsample2x_forward(x: &RealTensor3) -> RealTensor3 {
    let (c, f, t) = x.dims();
    let (f2, t2) = (2 * f, 2 * t);
    let ftaps = upsample_taps(f);
    let ttaps = upsample_taps(t);
    let mut out = RealTensor3::zeros(c, f2, t2);
    let mut tmp = vec![0.0; f2 * t];
    for ch in 0..c {
        let src = x.plane(ch);
        for (j, &(i0, i1, w)) in ftaps.iter().enumerate() {
            let (r0, r1) = (&src[i0 * t..(i0 + 1) * t], &src[i1 * t..(i1 + 1) * t]);
            let row = &mut tmp[j * t..(j + 1) * t];
            for ((o, a), b) in row.iter_mut().zip(r0).zip(r1) {
                *o = (1.0 - w) * a + w * b;
            }
        }
        let dst = out.plane_mut(ch);
        for j in 0..f2 {
            let row = &tmp[j * t..(j + 1) * t];
            let orow = &mut dst[j * t2..(j + 1) * t2];
            for (u, &(i0, i1, w)) in ttaps.iter().enumerate() {
                orow[u] = (1.0 - w) * row[i0] + w * row[i1];
            }
        }
    }
    out
}

/// Adjoint of [`upsample2x_forward`]; `grad_out` is `c × 2f × 2t`.
pub fn upsample2x_backward(grad_out: &RealTensor3) -> RealTensor3 {
    let (c, f2, t2) = grad_out.dims();
    let (f, t) = (f2 / 2, t2 / 2);
    let ftaps = upsample_taps(f);
    let ttaps = upsample_taps(t);
    let mut gx = RealTensor3::zeros(c, f, t);
    let mut gtmp = vec![0.0; f2 * t];
    for ch in 0..c {
        gtmp.fill(0.0);
        let g = grad_out.plane(ch);
        for j in 0..f2 {
            let grow = &g[j * t2..(j + 1) * t2];
            let trow = &mut gtmp[j * t..(j + 1) * t];
            for (u, &(i0, i1, w)) in ttaps.iter().enumerate() {
                trow[i0] += (1.0 - w) * grow[u];
                trow[i1] += w * grow[u];
            }
        }
        let dst = gx.plane_mut(ch);
        for (j, &(i0, i1, w)) in ftaps.iter().enumerate() {
            let trow = &gtmp[j * t..(j + 1) * t];
            for (k, &v) in trow.iter().enumerate() {
                dst[i0 * t + k] += (1.0 - w) * v;
                dst[i1 * t + k] += w * v;
            }
        }
    }
    gx
}

pub fn relu_forward(x: &RealTensor3) -> RealTensor3 {
    let mut out = x.clone();
    relu_in_place(&mut out);
    out
}

pub fn relu_in_place(x: &mut RealTensor3) {
    x.as_mut_slice().iter_mut().for_each(|v| *v = v.max(0.0));
}

/// Masks `grad` where the ReLU output was not positive.
pub fn relu_backward_in_place(relu_out: &RealTensor3, grad: &mut RealTensor3) {
    grad.as_mut_slice()
        .iter_mut()
        .zip(relu_out.as_slice())
        .for_each(|(g, &y)| {
            if y <= 0.0 {
                *g = 0.0;
            }
        });
}

/// What the batch-norm backward pass needs from the forward pass.
#[derive(Debug, Clone)]
pub struct BatchNormCache {
    pub normalized: RealTensor3,
    pub inv_std: Vec<f64>,
}

/// Per-channel normalization over all grid positions (population variance),
/// followed by the affine map `γ·x̂ + β`. There are no running statistics.
pub fn batchnorm_forward(
    x: &RealTensor3,
    gamma: &[f64],
    beta: &[f64],
    eps: f64,
) -> (RealTensor3, BatchNormCache) {
    let (c, f, t) = x.dims();
    let n = (f * t) as f64;
    let mut out = RealTensor3::zeros(c, f, t);
    let mut normalized = RealTensor3::zeros(c, f, t);
    let mut inv_std = Vec::with_capacity(c);
    for ch in 0..c {
        let src = x.plane(ch);
        let mean = src.iter().sum::<f64>() / n;
        let var = src.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let denom = (var + eps).sqrt();
        let is = if denom > 0.0 { 1.0 / denom } else { 0.0 };
        inv_std.push(is);
        let (g, b) = (gamma[ch], beta[ch]);
        let xh = normalized.plane_mut(ch);
        for (h, v) in xh.iter_mut().zip(src) {
            *h = (v - mean) * is;
        }
        let dst = out.plane_mut(ch);
        for (o, h) in dst.iter_mut().zip(normalized.plane(ch)) {
            *o = g * h + b;
        }
    }
    (out, BatchNormCache { normalized, inv_std })
}

/// Adjoint of [`batchnorm_forward`], including the dependence of the mean and
/// variance on the input. Returns `(dL/dx, dL/dγ, dL/dβ)`.
pub fn batchnorm_backward(
    cache: &BatchNormCache,
    gamma: &[f64],
    grad_out: &RealTensor3,
) -> (RealTensor3, Vec<f64>, Vec<f64>) {
    let (c, f, t) = grad_out.dims();
    let n = (f * t) as f64;
    let mut dx = RealTensor3::zeros(c, f, t);
    let mut dgamma = Vec::with_capacity(c);
    let mut dbeta = Vec::with_capacity(c);
    for ch in 0..c {
        let g = grad_out.plane(ch);
        let xh = cache.normalized.plane(ch);
        let sum_g: f64 = g.iter().sum();
        let sum_gx: f64 = g.iter().zip(xh).map(|(a, b)| a * b).sum();
        dgamma.push(sum_gx);
        dbeta.push(sum_g);
        let scale = gamma[ch] * cache.inv_std[ch];
        let (mg, mgx) = (sum_g / n, sum_gx / n);
        let dst = dx.plane_mut(ch);
        for ((d, gv), hv) in dst.iter_mut().zip(g).zip(xh) {
            *d = scale * (gv - mg - hv * mgx);
        }
    }
    (dx, dgamma, dbeta)
}
