use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Batch-norm variance floor used unless an architecture overrides it.
pub const DEFAULT_BN_EPS: f64 = 1e-5;

/// Shape of a deep decoder: `hidden_layers` hidden blocks of `width` channels,
/// upsampling by two in freq and time in all but the last hidden block, and a
/// bias-free 1×1 output projection to `out_channels`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoderArch {
    pub hidden_layers: usize,
    pub width: usize,
    pub out_channels: usize,
    pub out_freq: usize,
    pub out_time: usize,
    #[serde(default = "default_bn_eps")]
    pub bn_eps: f64,
}

fn default_bn_eps() -> f64 {
    DEFAULT_BN_EPS
}

impl DecoderArch {
    pub fn new(
        hidden_layers: usize,
        width: usize,
        out_channels: usize,
        out_freq: usize,
        out_time: usize,
    ) -> Result<Self> {
        let arch = Self {
            hidden_layers,
            width,
            out_channels,
            out_freq,
            out_time,
            bn_eps: DEFAULT_BN_EPS,
        };
        arch.validate()?;
        Ok(arch)
    }

    /// Six hidden layers, as used for every preset.
    pub fn six_layer(width: usize, out_channels: usize, out_freq: usize, out_time: usize) -> Result<Self> {
        Self::new(6, width, out_channels, out_freq, out_time)
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_layers == 0 || self.width == 0 || self.out_channels == 0 {
            return Err(Error::InvalidConfig(
                "decoder needs at least one hidden layer and non-zero widths".into(),
            ));
        }
        let factor = 1usize << self.upsample_layers();
        if self.out_freq == 0
            || self.out_time == 0
            || !self.out_freq.is_multiple_of(factor)
            || !self.out_time.is_multiple_of(factor)
        {
            return Err(Error::InvalidConfig(format!(
                "output grid {}x{} must be divisible by 2^{} = {factor}",
                self.out_freq,
                self.out_time,
                self.upsample_layers()
            )));
        }
        let (_, f, t) = self.input_dims();
        if f * t < 2 {
            // batchnorm over a spatially constant map erases the input
            return Err(Error::InvalidConfig(format!(
                "a {}-layer decoder on a {}x{} grid starts from a single position; use fewer layers or a larger grid",
                self.hidden_layers, self.out_freq, self.out_time
            )));
        }
        if !(self.bn_eps >= 0.0) {
            return Err(Error::InvalidConfig("bn_eps must be non-negative".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn upsample_layers(&self) -> usize {
        self.hidden_layers - 1
    }

    /// Dimensions of the fixed random input `Z₀`.
    pub fn input_dims(&self) -> (usize, usize, usize) {
        let f = 1usize << self.upsample_layers();
        (self.width, self.out_freq / f, self.out_time / f)
    }

    pub fn output_dims(&self) -> (usize, usize, usize) {
        (self.out_channels, self.out_freq, self.out_time)
    }

    /// `(c_out, c_in)` of the 1×1 convolution in layer `i` (`i == hidden_layers` is the output layer).
    pub fn conv_shape(&self, i: usize) -> (usize, usize) {
        if i == self.hidden_layers {
            (self.out_channels, self.width)
        } else {
            (self.width, self.width)
        }
    }

    /// Trainable scalar count: `l·k² + k·out + 2·l·k`.
    pub fn weight_count(&self) -> usize {
        let (l, k) = (self.hidden_layers, self.width);
        l * k * k + k * self.out_channels + 2 * l * k
    }
}

/// One row of the preset hyperparameter tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TablePreset {
    pub antennas: usize,
    pub width: usize,
    pub epochs: usize,
    pub weight_count: usize,
}

/// Single-antenna presets (64×64 grid, two real channels).
pub const TABLE_SINGLE_ANTENNA: [TablePreset; 4] = [
    TablePreset { antennas: 1, width: 8, epochs: 2000, weight_count: 496 },
    TablePreset { antennas: 1, width: 16, epochs: 1300, weight_count: 1760 },
    TablePreset { antennas: 1, width: 32, epochs: 900, weight_count: 6592 },
    TablePreset { antennas: 1, width: 64, epochs: 250, weight_count: 25472 },
];

/// 64-antenna presets (128 real channels).
pub const TABLE_MASSIVE: [TablePreset; 4] = [
    TablePreset { antennas: 64, width: 8, epochs: 4000, weight_count: 1504 },
    TablePreset { antennas: 64, width: 16, epochs: 1970, weight_count: 3776 },
    TablePreset { antennas: 64, width: 32, epochs: 1800, weight_count: 10624 },
    TablePreset { antennas: 64, width: 64, epochs: 1000, weight_count: 33536 },
];

impl TablePreset {
    pub fn arch(&self) -> DecoderArch {
        DecoderArch::six_layer(self.width, 2 * self.antennas, 64, 64)
            .expect("table presets are valid")
    }
}

/// Epoch budget from the tables for `(antennas, width)`; falls back to the
/// nearest tabulated width for the closest antenna regime.
pub fn preset_epochs(antennas: usize, width: usize) -> usize {
    let table = if antennas <= 1 { &TABLE_SINGLE_ANTENNA } else { &TABLE_MASSIVE };
    table
        .iter()
        .min_by_key(|p| p.width.abs_diff(width))
        .map(|p| p.epochs)
        .unwrap_or(2000)
}
