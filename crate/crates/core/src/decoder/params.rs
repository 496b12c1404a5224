use crate::numerics::RngStream;

use super::DecoderArch;

/// All trainable parameters of a decoder stored in one flat buffer.
///
/// Layout: conv kernels for layers `0..=l` (row-major `c_out × c_in`), then
/// per hidden layer the batch-norm scales followed by the shifts. Gradients use
/// the same type and layout.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderParams {
    arch: DecoderArch,
    conv_offsets: Vec<usize>,
    bn_offset: usize,
    data: Vec<f64>,
}

impl DecoderParams {
    pub fn zeros(arch: &DecoderArch) -> Self {
        let mut conv_offsets = Vec::with_capacity(arch.hidden_layers + 1);
        let mut off = 0;
        for i in 0..=arch.hidden_layers {
            conv_offsets.push(off);
            let (o, c) = arch.conv_shape(i);
            off += o * c;
        }
        let bn_offset = off;
        off += 2 * arch.hidden_layers * arch.width;
        Self {
            arch: *arch,
            conv_offsets,
            bn_offset,
            data: vec![0.0; off],
        }
    }

    /// Fan-based uniform init `U(−a, a)`, `a = √(6/(c_in + c_out))`, for
    /// kernels; `γ = 1`, `β = 0`.
    pub fn init(arch: &DecoderArch, rng: &mut RngStream) -> Self {
        let mut p = Self::zeros(arch);
        for i in 0..=arch.hidden_layers {
            let (o, c) = arch.conv_shape(i);
            let a = (6.0 / (o + c) as f64).sqrt();
            let w = rng.uniform(o * c, -a, a);
            p.conv_mut(i).copy_from_slice(&w);
        }
        for i in 0..arch.hidden_layers {
            p.gamma_mut(i).fill(1.0);
        }
        p
    }

    pub fn arch(&self) -> &DecoderArch {
        &self.arch
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    fn conv_range(&self, i: usize) -> std::ops::Range<usize> {
        let (o, c) = self.arch.conv_shape(i);
        let start = self.conv_offsets[i];
        start..start + o * c
    }

    /// Kernel of layer `i` as a row-major `c_out × c_in` matrix.
    pub fn conv(&self, i: usize) -> &[f64] {
        &self.data[self.conv_range(i)]
    }

    pub fn conv_mut(&mut self, i: usize) -> &mut [f64] {
        let r = self.conv_range(i);
        &mut self.data[r]
    }

    fn gamma_range(&self, i: usize) -> std::ops::Range<usize> {
        let k = self.arch.width;
        let start = self.bn_offset + 2 * i * k;
        start..start + k
    }

    fn beta_range(&self, i: usize) -> std::ops::Range<usize> {
        let k = self.arch.width;
        let start = self.bn_offset + (2 * i + 1) * k;
        start..start + k
    }

    pub fn gamma(&self, i: usize) -> &[f64] {
        &self.data[self.gamma_range(i)]
    }

    pub fn gamma_mut(&mut self, i: usize) -> &mut [f64] {
        let r = self.gamma_range(i);
        &mut self.data[r]
    }

    pub fn beta(&self, i: usize) -> &[f64] {
        &self.data[self.beta_range(i)]
    }

    pub fn beta_mut(&mut self, i: usize) -> &mut [f64] {
        let r = self.beta_range(i);
        &mut self.data[r]
    }

    /// Human-readable name of flat index `idx` (for gradient-check reports).
    pub fn describe(&self, idx: usize) -> String {
        for i in 0..=self.arch.hidden_layers {
            let r = self.conv_range(i);
            if r.contains(&idx) {
                let (_, c) = self.arch.conv_shape(i);
                let local = idx - r.start;
                return format!("conv[{i}][{}, {}]", local / c, local % c);
            }
        }
        for i in 0..self.arch.hidden_layers {
            let g = self.gamma_range(i);
            if g.contains(&idx) {
                return format!("gamma[{i}][{}]", idx - g.start);
            }
            let b = self.beta_range(i);
            if b.contains(&idx) {
                return format!("beta[{i}][{}]", idx - b.start);
            }
        }
        format!("param[{idx}]")
    }
}
