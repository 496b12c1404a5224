use crate::error::{Error, Result};

/// Real-valued `channels × freq × time` array, row-major (time fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct RealTensor3 {
    channels: usize,
    freq: usize,
    time: usize,
    data: Vec<f64>,
}

impl RealTensor3 {
    pub fn zeros(channels: usize, freq: usize, time: usize) -> Self {
        Self {
            channels,
            freq,
            time,
            data: vec![0.0; channels * freq * time],
        }
    }

    pub fn from_vec(channels: usize, freq: usize, time: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != channels * freq * time {
            return Err(Error::DimensionMismatch(format!(
                "tensor {channels}x{freq}x{time} needs {} values, got {}",
                channels * freq * time,
                data.len()
            )));
        }
        Ok(Self {
            channels,
            freq,
            time,
            data,
        })
    }

    pub fn filled(channels: usize, freq: usize, time: usize, value: f64) -> Self {
        Self {
            channels,
            freq,
            time,
            data: vec![value; channels * freq * time],
        }
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.channels, self.freq, self.time)
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn freq(&self) -> usize {
        self.freq
    }

    #[inline]
    pub fn time(&self) -> usize {
        self.time
    }

    /// Number of grid positions per channel (`freq · time`).
    #[inline]
    pub fn plane_len(&self) -> usize {
        self.freq * self.time
    }

    #[inline]
    pub fn index(&self, c: usize, f: usize, t: usize) -> usize {
        debug_assert!(c < self.channels && f < self.freq && t < self.time);
        (c * self.freq + f) * self.time + t
    }

    #[inline]
    pub fn get(&self, c: usize, f: usize, t: usize) -> f64 {
        self.data[self.index(c, f, t)]
    }

    #[inline]
    pub fn set(&mut self, c: usize, f: usize, t: usize, v: f64) {
        let i = self.index(c, f, t);
        self.data[i] = v;
    }

    /// The `freq × time` plane of one channel.
    #[inline]
    pub fn plane(&self, c: usize) -> &[f64] {
        let n = self.plane_len();
        &self.data[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn plane_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.plane_len();
        &mut self.data[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn same_dims(&self, other: &Self) -> bool {
        self.dims() == other.dims()
    }

    /// Sum of squared entries.
    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// `‖self − other‖²`.
    pub fn dist_sq(&self, other: &Self) -> Result<f64> {
        if !self.same_dims(other) {
            return Err(Error::DimensionMismatch(format!(
                "{:?} vs {:?}",
                self.dims(),
                other.dims()
            )));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    pub fn add_assign(&mut self, other: &Self) -> Result<()> {
        if !self.same_dims(other) {
            return Err(Error::DimensionMismatch(format!(
                "{:?} vs {:?}",
                self.dims(),
                other.dims()
            )));
        }
        self.data
            .iter_mut()
            .zip(&other.data)
            .for_each(|(a, b)| *a += b);
        Ok(())
    }
}
