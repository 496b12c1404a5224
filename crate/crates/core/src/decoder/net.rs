//! Forward and reverse passes through the full decoder.
//!
//! Hidden layers `0..l-1` run conv → upsample → relu → batchnorm, layer `l-1`
//! skips the upsampler, and the output layer is a bare 1×1 convolution.

use crate::error::{Error, Result};
use crate::numerics::RealTensor3;

use super::layers::{
    batchnorm_backward, batchnorm_forward, conv1x1_backward, conv1x1_forward, relu_backward_in_place,
    relu_in_place, upsample2x_backward, upsample2x_forward, BatchNormCache,
};
use super::{DecoderArch, DecoderParams};

struct HiddenTrace {
    input: RealTensor3,
    relu_out: RealTensor3,
    bn: BatchNormCache,
}

struct Trace {
    hidden: Vec<HiddenTrace>,
    last_hidden_out: RealTensor3,
    output: RealTensor3,
}

fn check_input(arch: &DecoderArch, params: &DecoderParams, z0: &RealTensor3) -> Result<()> {
    if params.arch() != arch {
        return Err(Error::DimensionMismatch(
            "parameters were allocated for a different architecture".into(),
        ));
    }
    if z0.dims() != arch.input_dims() {
        return Err(Error::DimensionMismatch(format!(
            "decoder input is {:?}, architecture expects {:?}",
            z0.dims(),
            arch.input_dims()
        )));
    }
    Ok(())
}

fn run(arch: &DecoderArch, params: &DecoderParams, z0: &RealTensor3, keep: bool) -> Result<Trace> {
    check_input(arch, params, z0)?;
    let l = arch.hidden_layers;
    let mut hidden = Vec::with_capacity(if keep { l } else { 0 });
    let mut z = z0.clone();
    for i in 0..l {
        let conv = conv1x1_forward(&z, params.conv(i), arch.width)?;
        let mut act = if i + 1 < l {
            upsample2x_forward(&conv)
        } else {
            conv
        };
        relu_in_place(&mut act);
        let (out, bn) = batchnorm_forward(&act, params.gamma(i), params.beta(i), arch.bn_eps);
        let input = std::mem::replace(&mut z, out);
        if keep {
            hidden.push(HiddenTrace {
                input,
                relu_out: act,
                bn,
            });
        }
    }
    let output = conv1x1_forward(&z, params.conv(l), arch.out_channels)?;
    Ok(Trace {
        hidden,
        last_hidden_out: z,
        output,
    })
}

/// `Ŷ = f_l(f_{l−1}(⋯ f_0(Z₀)))`.
pub fn decoder_forward(arch: &DecoderArch, params: &DecoderParams, z0: &RealTensor3) -> Result<RealTensor3> {
    Ok(run(arch, params, z0, false)?.output)
}

/// Squared-error loss `‖target − Ŷ‖²` (plain sum) and its exact gradient
/// w.r.t. every parameter. Also returns the forward output.
pub fn decoder_backward(
    arch: &DecoderArch,
    params: &DecoderParams,
    z0: &RealTensor3,
    target: &RealTensor3,
) -> Result<(f64, DecoderParams, RealTensor3)> {
    if target.dims() != arch.output_dims() {
        return Err(Error::DimensionMismatch(format!(
            "target is {:?}, decoder outputs {:?}",
            target.dims(),
            arch.output_dims()
        )));
    }
    let trace = run(arch, params, z0, true)?;
    let l = arch.hidden_layers;

    let mut grad_out = trace.output.clone();
    let mut loss = 0.0;
    for (g, y) in grad_out.as_mut_slice().iter_mut().zip(target.as_slice()) {
        let r = *g - y;
        loss += r * r;
        *g = 2.0 * r;
    }

    let mut grads = DecoderParams::zeros(arch);
    let (dz, dw) = conv1x1_backward(&trace.last_hidden_out, params.conv(l), &grad_out, true);
    grads.conv_mut(l).copy_from_slice(&dw);
    let mut g = dz.expect("input gradient requested");

    for i in (0..l).rev() {
        let h = &trace.hidden[i];
        let (mut g_act, dgamma, dbeta) = batchnorm_backward(&h.bn, params.gamma(i), &g);
        grads.gamma_mut(i).copy_from_slice(&dgamma);
        grads.beta_mut(i).copy_from_slice(&dbeta);
        relu_backward_in_place(&h.relu_out, &mut g_act);
        let g_conv = if i + 1 < l {
            upsample2x_backward(&g_act)
        } else {
            g_act
        };
        let (dz, dw) = conv1x1_backward(&h.input, params.conv(i), &g_conv, i > 0);
        grads.conv_mut(i).copy_from_slice(&dw);
        if let Some(dz) = dz {
            g = dz;
        }
    }
    Ok((loss, grads, trace.output))
}

/// Result of comparing analytic gradients with central finite differences.
#[derive(Debug, Clone)]
pub struct GradCheck {
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub worst_name: String,
    pub analytic: f64,
    pub numeric: f64,
    pub checked: usize,
}

/// Denominator floor for relative gradient errors; coordinates with smaller
/// gradients are compared in absolute terms.
pub const GRADCHECK_FLOOR: f64 = 1e-6;

/// Central finite-difference check of [`decoder_backward`] over every parameter.
pub fn gradient_check(
    arch: &DecoderArch,
    params: &DecoderParams,
    z0: &RealTensor3,
    target: &RealTensor3,
    step: f64,
) -> Result<GradCheck> {
    let (_, grads, _) = decoder_backward(arch, params, z0, target)?;
    let loss_at = |p: &DecoderParams| -> Result<f64> {
        let y = decoder_forward(arch, p, z0)?;
        y.dist_sq(target)
    };
    let mut worst = GradCheck {
        max_rel_error: 0.0,
        worst_index: 0,
        worst_name: String::new(),
        analytic: 0.0,
        numeric: 0.0,
        checked: params.len(),
    };
    let mut probe = params.clone();
    for idx in 0..params.len() {
        let orig = params.as_slice()[idx];
        probe.as_mut_slice()[idx] = orig + step;
        let lp = loss_at(&probe)?;
        probe.as_mut_slice()[idx] = orig - step;
        let lm = loss_at(&probe)?;
        probe.as_mut_slice()[idx] = orig;
        let numeric = (lp - lm) / (2.0 * step);
        let analytic = grads.as_slice()[idx];
        let rel = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(GRADCHECK_FLOOR);
        if rel > worst.max_rel_error || idx == 0 {
            worst.max_rel_error = rel;
            worst.worst_index = idx;
            worst.analytic = analytic;
            worst.numeric = numeric;
        }
    }
    worst.worst_name = params.describe(worst.worst_index);
    Ok(worst)
}
