//! Synthetic frequency-domain channel generators and their covariance factors.
//!
//! The TDL and Kronecker generators are quasi-static: the `antennas ×
//! subcarriers` response is drawn once and held across the symbols of the grid.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{hermitian_eig, ComplexGrid, ComplexMatrix, RngStream};

/// Default LTE subcarrier spacing.
pub const SUBCARRIER_SPACING_HZ: f64 = 15e3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tap {
    pub delay_s: f64,
    pub power: f64,
}

/// Multipath taps with powers normalized to unit sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PdpSpec", into = "PdpSpec")]
pub struct PowerDelayProfile {
    taps: Vec<Tap>,
    /// What the profile was built from; serialized verbatim so that a
    /// round trip reproduces the taps bit for bit.
    source: PdpSpec,
}

/// Serialized form: delays in nanoseconds, powers in dB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PdpSpec {
    delays_ns: Vec<f64>,
    powers_db: Vec<f64>,
}

impl TryFrom<PdpSpec> for PowerDelayProfile {
    type Error = Error;

    fn try_from(s: PdpSpec) -> Result<Self> {
        Self::from_db(&s.delays_ns, &s.powers_db)
    }
}

impl From<PowerDelayProfile> for PdpSpec {
    fn from(p: PowerDelayProfile) -> Self {
        p.source
    }
}

impl PowerDelayProfile {
    /// Builds a profile from linear powers, normalizing them to sum to one.
    pub fn new(delays_s: &[f64], powers: &[f64]) -> Result<Self> {
        if delays_s.len() != powers.len() || delays_s.is_empty() {
            return Err(Error::InvalidConfig(
                "power-delay profile needs matching, non-empty delay and power lists".into(),
            ));
        }
        if delays_s.iter().any(|d| !(*d >= 0.0)) || delays_s.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig(
                "tap delays must be non-negative and strictly increasing".into(),
            ));
        }
        if powers.iter().any(|p| !(*p > 0.0) || !p.is_finite()) {
            return Err(Error::InvalidConfig("tap powers must be positive".into()));
        }
        let total: f64 = powers.iter().sum();
        let source = PdpSpec {
            delays_ns: delays_s.iter().map(|d| d * 1e9).collect(),
            powers_db: powers.iter().map(|p| 10.0 * p.log10()).collect(),
        };
        Ok(Self {
            source,
            taps: delays_s
                .iter()
                .zip(powers)
                .map(|(&delay_s, &p)| Tap {
                    delay_s,
                    power: p / total,
                })
                .collect(),
        })
    }

    pub fn from_db(delays_ns: &[f64], powers_db: &[f64]) -> Result<Self> {
        let delays: Vec<f64> = delays_ns.iter().map(|d| d * 1e-9).collect();
        let powers: Vec<f64> = powers_db.iter().map(|p| 10f64.powf(p / 10.0)).collect();
        let mut pdp = Self::new(&delays, &powers)?;
        pdp.source = PdpSpec {
            delays_ns: delays_ns.to_vec(),
            powers_db: powers_db.to_vec(),
        };
        Ok(pdp)
    }

    /// Extended Pedestrian A: 7 taps up to 410 ns.
    pub fn epa() -> Self {
        Self::from_db(
            &[0.0, 30.0, 70.0, 90.0, 110.0, 190.0, 410.0],
            &[0.0, -1.0, -2.0, -3.0, -8.0, -17.2, -20.8],
        )
        .expect("EPA profile is valid")
    }

    /// Flat fading.
    pub fn single_tap() -> Self {
        Self::new(&[0.0], &[1.0]).expect("single tap is valid")
    }

    pub fn taps(&self) -> &[Tap] {
        &self.taps
    }

    /// `e^{−j2π q Δf τ_p}` for every tap `p` (rows) and subcarrier `q` (cols).
    fn steering(&self, subcarriers: usize, spacing_hz: f64) -> Vec<Vec<Complex64>> {
        self.taps
            .iter()
            .map(|tap| {
                (0..subcarriers)
                    .map(|q| Complex64::from_polar(1.0, -2.0 * PI * q as f64 * spacing_hz * tap.delay_s))
                    .collect()
            })
            .collect()
    }
}

impl Default for PowerDelayProfile {
    fn default() -> Self {
        Self::epa()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    /// Tapped delay line, independent across antennas.
    Tdl,
    /// Tapped delay line with exponential spatial correlation at the array.
    Kronecker,
    /// Every antenna/subcarrier/symbol entry i.i.d. `CN(0, 1)`; the only
    /// generator that is not quasi-static.
    #[serde(alias = "iid")]
    IidPerRe,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModelSpec {
    pub kind: ChannelKind,
    pub pdp: PowerDelayProfile,
    /// Spatial correlation coefficient (Kronecker only).
    pub rho: f64,
    pub antennas: usize,
    pub subcarriers: usize,
    pub symbols: usize,
    pub subcarrier_spacing_hz: f64,
}

impl ChannelModelSpec {
    pub fn new(kind: ChannelKind, antennas: usize, subcarriers: usize, symbols: usize) -> Self {
        Self {
            kind,
            pdp: PowerDelayProfile::epa(),
            rho: if kind == ChannelKind::Kronecker { 0.5 } else { 0.0 },
            antennas,
            subcarriers,
            symbols,
            subcarrier_spacing_hz: SUBCARRIER_SPACING_HZ,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.antennas == 0 || self.subcarriers == 0 || self.symbols == 0 {
            return Err(Error::InvalidConfig("channel dimensions must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::InvalidConfig(format!(
                "spatial correlation {} outside [0, 1)",
                self.rho
            )));
        }
        if !(self.subcarrier_spacing_hz > 0.0) {
            return Err(Error::InvalidConfig("subcarrier spacing must be positive".into()));
        }
        Ok(())
    }
}

/// One channel draw over the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// `antennas × subcarriers` response at symbol 0; the whole grid when
    /// the draw is quasi-static.
    pub h: ComplexMatrix,
    pub symbols: usize,
    per_symbol: Option<ComplexGrid>,
}

impl ChannelRealization {
    pub fn quasi_static(h: ComplexMatrix, symbols: usize) -> Self {
        Self {
            h,
            symbols,
            per_symbol: None,
        }
    }

    /// A response that changes from symbol to symbol.
    pub fn varying(grid: ComplexGrid) -> Self {
        Self {
            h: grid.symbol_slice(0),
            symbols: grid.symbols(),
            per_symbol: Some(grid),
        }
    }

    pub fn is_quasi_static(&self) -> bool {
        self.per_symbol.is_none()
    }

    pub fn grid(&self) -> ComplexGrid {
        match &self.per_symbol {
            Some(g) => g.clone(),
            None => ComplexGrid::from_static(&self.h, self.symbols),
        }
    }

    #[inline]
    pub fn at(&self, m: usize, q: usize, n: usize) -> Complex64 {
        match &self.per_symbol {
            Some(g) => g.get(m, q, n),
            None => self.h[(m, q)],
        }
    }

    /// Per subcarrier, the response averaged over the listed `(q, n)`
    /// positions; subcarriers without a position keep the symbol-0 value.
    pub fn averaged_over(&self, positions: impl IntoIterator<Item = (usize, usize)>) -> ComplexMatrix {
        let Some(g) = &self.per_symbol else {
            return self.h.clone();
        };
        let (m_ant, nf) = (self.h.rows(), self.h.cols());
        let mut acc = ComplexMatrix::zeros(m_ant, nf);
        let mut count = vec![0usize; nf];
        for (q, n) in positions {
            count[q] += 1;
            for m in 0..m_ant {
                acc[(m, q)] += g.get(m, q, n);
            }
        }
        ComplexMatrix::from_fn(m_ant, nf, |m, q| match count[q] {
            0 => self.h[(m, q)],
            c => acc[(m, q)] / c as f64,
        })
    }
}

/// A validated spec with any per-model precomputation (tap steering vectors,
/// spatial square root) done once.
#[derive(Debug, Clone)]
pub struct ChannelModel {
    spec: ChannelModelSpec,
    steering: Vec<Vec<Complex64>>,
    spatial_sqrt: Option<ComplexMatrix>,
}

impl ChannelModel {
    pub fn new(spec: ChannelModelSpec) -> Result<Self> {
        spec.validate()?;
        let steering = spec.pdp.steering(spec.subcarriers, spec.subcarrier_spacing_hz);
        let spatial_sqrt = match spec.kind {
            ChannelKind::Kronecker => Some(matrix_sqrt(&exp_corr_matrix(spec.rho, spec.antennas))?),
            _ => None,
        };
        Ok(Self {
            spec,
            steering,
            spatial_sqrt,
        })
    }

    pub fn spec(&self) -> &ChannelModelSpec {
        &self.spec
    }

    pub fn realize(&self, rng: &mut RngStream) -> ChannelRealization {
        let s = &self.spec;
        let h = match s.kind {
            ChannelKind::Tdl => self.tdl_matrix(rng),
            ChannelKind::Kronecker => {
                let g = self.tdl_matrix(rng);
                self.spatial_sqrt
                    .as_ref()
                    .expect("kronecker model has a spatial square root")
                    .matmul(&g)
                    .expect("square root matches antenna count")
            }
            ChannelKind::IidPerRe => {
                let v = rng.complex_gaussian(s.antennas * s.subcarriers * s.symbols, 1.0);
                let mut g = ComplexGrid::zeros(s.antennas, s.subcarriers, s.symbols);
                g.as_mut_slice().copy_from_slice(&v);
                return ChannelRealization::varying(g);
            }
        };
        ChannelRealization::quasi_static(h, s.symbols)
    }

    /// Per antenna: `H[m, q] = Σ_p a_{m,p} e^{−j2π q Δf τ_p}`, `a_{m,p} ~ CN(0, P_p)`.
    fn tdl_matrix(&self, rng: &mut RngStream) -> ComplexMatrix {
        let s = &self.spec;
        let mut h = ComplexMatrix::zeros(s.antennas, s.subcarriers);
        for m in 0..s.antennas {
            for (tap, steer) in s.pdp.taps().iter().zip(&self.steering) {
                let a = rng.complex_gaussian_one(tap.power);
                for (q, e) in steer.iter().enumerate() {
                    h[(m, q)] += a * e;
                }
            }
        }
        h
    }

    /// `(R_sp, R_f)` with `cov(vec H) = R_f ⊗ R_sp` (columns of `H` stacked).
    pub fn covariance(&self) -> (ComplexMatrix, ComplexMatrix) {
        let s = &self.spec;
        match s.kind {
            ChannelKind::Tdl => (
                ComplexMatrix::identity(s.antennas),
                freq_covariance(&s.pdp, s.subcarriers, s.subcarrier_spacing_hz),
            ),
            ChannelKind::Kronecker => (
                exp_corr_matrix(s.rho, s.antennas),
                freq_covariance(&s.pdp, s.subcarriers, s.subcarrier_spacing_hz),
            ),
            ChannelKind::IidPerRe => (
                ComplexMatrix::identity(s.antennas),
                ComplexMatrix::identity(s.subcarriers),
            ),
        }
    }
}

fn expect_kind(spec: &ChannelModelSpec, kind: ChannelKind) -> Result<()> {
    if spec.kind != kind {
        return Err(Error::InvalidConfig(format!(
            "expected a {kind:?} channel spec, got {:?}",
            spec.kind
        )));
    }
    Ok(())
}

pub fn tdl_channel(spec: &ChannelModelSpec, rng: &mut RngStream) -> Result<ChannelRealization> {
    expect_kind(spec, ChannelKind::Tdl)?;
    Ok(ChannelModel::new(spec.clone())?.realize(rng))
}

pub fn kronecker_channel(spec: &ChannelModelSpec, rng: &mut RngStream) -> Result<ChannelRealization> {
    expect_kind(spec, ChannelKind::Kronecker)?;
    Ok(ChannelModel::new(spec.clone())?.realize(rng))
}

pub fn iid_per_re_channel(spec: &ChannelModelSpec, rng: &mut RngStream) -> Result<ChannelRealization> {
    expect_kind(spec, ChannelKind::IidPerRe)?;
    Ok(ChannelModel::new(spec.clone())?.realize(rng))
}

/// `R[i, j] = ρ^|i−j|`.
pub fn exp_corr_matrix(rho: f64, antennas: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(antennas, antennas, |i, j| {
        Complex64::new(rho.powi(i.abs_diff(j) as i32), 0.0)
    })
}

/// `R_f[q, q'] = Σ_p P_p e^{−j2π(q−q')Δf τ_p}`.
pub fn freq_covariance(pdp: &PowerDelayProfile, subcarriers: usize, spacing_hz: f64) -> ComplexMatrix {
    ComplexMatrix::from_fn(subcarriers, subcarriers, |q, qp| {
        let dq = q as f64 - qp as f64;
        pdp.taps()
            .iter()
            .map(|t| Complex64::from_polar(t.power, -2.0 * PI * dq * spacing_hz * t.delay_s))
            .sum()
    })
}

/// Kronecker factors `(R_sp, R_f)` of the vectorized channel covariance.
pub fn full_covariance(spec: &ChannelModelSpec) -> Result<(ComplexMatrix, ComplexMatrix)> {
    Ok(ChannelModel::new(spec.clone())?.covariance())
}

/// Hermitian PSD square root `U √Λ Uᴴ` (negative round-off eigenvalues clipped).
pub fn matrix_sqrt(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(hermitian_eig(a)?.reconstruct_with(|v| v.max(0.0).sqrt()))
}
