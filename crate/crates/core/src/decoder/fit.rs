use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{RealTensor3, RngStream};

use super::{decoder_backward, decoder_forward, AdamConfig, AdamState, DecoderArch, DecoderParams};

/// Settings for fitting a decoder to one grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Number of full-gradient Adam steps; this fixed budget is the only stopping rule.
    pub epochs: usize,
    #[serde(default)]
    pub adam: AdamConfig,
    /// Upper bound of the uniform range the fixed input `Z₀` is drawn from.
    #[serde(default = "default_input_scale")]
    pub input_scale: f64,
}

fn default_input_scale() -> f64 {
    0.1
}

impl FitConfig {
    pub fn new(epochs: usize, lr: f64) -> Self {
        Self {
            epochs,
            adam: AdamConfig {
                lr,
                ..AdamConfig::default()
            },
            input_scale: default_input_scale(),
        }
    }
}

/// Outcome of one fit.
#[derive(Debug, Clone)]
pub struct FitReport {
    /// `‖target − Y*‖²` at the final parameters.
    pub final_loss: f64,
    /// Loss before each of the `epochs` updates.
    pub loss_trace: Vec<f64>,
    pub epochs: usize,
    /// Decoder output at the final parameters.
    pub output: RealTensor3,
    pub params: DecoderParams,
    pub input: RealTensor3,
}

/// Fits a freshly initialized decoder to `target` and returns its output.
///
/// Draws `Z₀ ~ U[0, input_scale)` and the initial weights from `rng`, then runs
/// exactly `config.epochs` Adam steps on the summed squared error.
pub fn fit(arch: &DecoderArch, target: &RealTensor3, config: &FitConfig, rng: &mut RngStream) -> Result<FitReport> {
    arch.validate()?;
    if config.epochs == 0 {
        return Err(Error::InvalidConfig("epochs must be at least 1".into()));
    }
    if target.dims() != arch.output_dims() {
        return Err(Error::DimensionMismatch(format!(
            "target is {:?}, decoder outputs {:?}",
            target.dims(),
            arch.output_dims()
        )));
    }
    let (c, f, t) = arch.input_dims();
    let z0 = RealTensor3::from_vec(c, f, t, rng.uniform(c * f * t, 0.0, config.input_scale))?;
    let mut params = DecoderParams::init(arch, rng);
    let mut adam = AdamState::new(params.len(), config.adam);
    let mut trace = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let (loss, grads, _) = decoder_backward(arch, &params, &z0, target)?;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        trace.push(loss);
        adam.step(params.as_mut_slice(), grads.as_slice());
    }
    let output = decoder_forward(arch, &params, &z0)?;
    let final_loss = output.dist_sq(target)?;
    if !final_loss.is_finite() {
        return Err(Error::NonFiniteLoss { epoch: config.epochs });
    }
    Ok(FitReport {
        final_loss,
        loss_trace: trace,
        epochs: config.epochs,
        output,
        params,
        input: z0,
    })
}
