//! Pilot allocation, received-grid synthesis, per-user pilot extraction and
//! conversion between complex grids and real decoder tensors.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channels::ChannelRealization;
use crate::error::{Error, Result};
use crate::numerics::{ComplexGrid, ComplexMatrix, RealTensor3, RngStream};

/// Pilot value used on every pilot resource element.
pub const PILOT_SYMBOL: Complex64 = Complex64::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2);

/// Side length of the interference squares used by [`ContaminationKind::ContiguousBlocks`].
pub const DEFAULT_BLOCK_SIZE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PilotArrangement {
    /// User `k` owns OFDM symbols `k·N_p .. (k+1)·N_p` on every subcarrier.
    #[serde(alias = "block")]
    BlockSymbol,
    /// On every subcarrier, `K·N_p` distinct symbols are drawn at random and
    /// dealt out `N_p` per user.
    #[serde(alias = "random")]
    RandomTones,
}

/// What the resource elements outside every pilot set carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataFill {
    /// Each user's pilot symbol repeated (the grid is a noisy channel image).
    #[default]
    Pilot,
    /// Independent unit-power QPSK per user.
    Qpsk,
    /// Nothing transmitted.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PilotRe {
    pub q: usize,
    pub n: usize,
    pub symbol: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserPilots {
    /// Linear transmit power `ρ_k`.
    pub power: f64,
    /// Sorted by `(q, n)`.
    pub res: Vec<PilotRe>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PilotAllocation {
    pub arrangement: PilotArrangement,
    pub pilot_len: usize,
    pub subcarriers: usize,
    pub symbols: usize,
    pub users: Vec<UserPilots>,
    owner: Vec<Option<usize>>,
}

impl PilotAllocation {
    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    /// In-cell user whose pilot occupies `(q, n)`, if any.
    pub fn owner(&self, q: usize, n: usize) -> Option<usize> {
        self.owner[q * self.symbols + n]
    }

    pub fn user(&self, k: usize) -> Result<&UserPilots> {
        match self.users.get(k) {
            Some(u) if !u.res.is_empty() => Ok(u),
            _ => Err(Error::NoPilots(k)),
        }
    }

    /// Sets every user's transmit power.
    pub fn with_powers(mut self, powers: &[f64]) -> Result<Self> {
        if powers.len() != self.users.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} powers for {} users",
                powers.len(),
                self.users.len()
            )));
        }
        for (u, &p) in self.users.iter_mut().zip(powers) {
            u.power = p;
        }
        Ok(self)
    }
}

/// Allocates disjoint pilot resource elements to `users` users at unit power.
pub fn make_pilot_allocation(
    users: usize,
    pilot_len: usize,
    arrangement: PilotArrangement,
    subcarriers: usize,
    symbols: usize,
    rng: &mut RngStream,
) -> Result<PilotAllocation> {
    if users == 0 || pilot_len == 0 {
        return Err(Error::InvalidConfig("need at least one user and one pilot".into()));
    }
    let per_tone = users * pilot_len;
    if per_tone > symbols || subcarriers == 0 {
        return Err(Error::InsufficientResources(format!(
            "{users} users × {pilot_len} pilots need {per_tone} symbols, grid has {symbols}"
        )));
    }
    let mut res: Vec<Vec<PilotRe>> = vec![Vec::with_capacity(subcarriers * pilot_len); users];
    for q in 0..subcarriers {
        let slots: Vec<usize> = match arrangement {
            PilotArrangement::BlockSymbol => (0..per_tone).collect(),
            PilotArrangement::RandomTones => rng.sample_without_replacement(symbols, per_tone),
        };
        for (k, chunk) in slots.chunks(pilot_len).enumerate() {
            let mut ns = chunk.to_vec();
            ns.sort_unstable();
            res[k].extend(ns.into_iter().map(|n| PilotRe {
                q,
                n,
                symbol: PILOT_SYMBOL,
            }));
        }
    }
    let mut owner = vec![None; subcarriers * symbols];
    for (k, list) in res.iter().enumerate() {
        for re in list {
            owner[re.q * symbols + re.n] = Some(k);
        }
    }
    Ok(PilotAllocation {
        arrangement,
        pilot_len,
        subcarriers,
        symbols,
        users: res.into_iter().map(|res| UserPilots { power: 1.0, res }).collect(),
        owner,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub q0: usize,
    pub n0: usize,
    #[serde(default = "default_block_size")]
    pub height: usize,
    #[serde(default = "default_block_size")]
    pub width: usize,
}

fn default_block_size() -> usize {
    DEFAULT_BLOCK_SIZE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ContaminationKind {
    None,
    /// `⌊fraction·N_f·N⌋` resource elements drawn without replacement.
    #[serde(alias = "random")]
    RandomRes { fraction: f64 },
    /// Fixed rectangles.
    #[serde(alias = "blocks")]
    ContiguousBlocks { blocks: Vec<Block> },
    /// `count` non-overlapping `size × size` squares at random positions.
    RandomBlocks {
        count: usize,
        #[serde(default = "default_block_size")]
        size: usize,
    },
}

/// Out-of-cell interference: which REs are hit, and how hard.
#[derive(Debug, Clone, PartialEq)]
pub struct ContaminationSpec {
    pub kind: ContaminationKind,
    /// `10·log₁₀(ρ_k/ρ_i)`.
    pub sir_db: f64,
}

impl ContaminationSpec {
    pub fn none() -> Self {
        Self {
            kind: ContaminationKind::None,
            sir_db: f64::INFINITY,
        }
    }

    pub fn is_none(&self) -> bool {
        self.kind == ContaminationKind::None
    }

    /// `ρ_i` for a reference user power `ρ_k`.
    pub fn interferer_power(&self, user_power: f64) -> f64 {
        if self.is_none() {
            0.0
        } else {
            user_power * 10f64.powf(-self.sir_db / 10.0)
        }
    }

    pub fn validate(&self, subcarriers: usize, symbols: usize) -> Result<()> {
        match &self.kind {
            ContaminationKind::None => Ok(()),
            ContaminationKind::RandomRes { fraction } => {
                if !(0.0..=1.0).contains(fraction) {
                    return Err(Error::InvalidConfig(format!(
                        "contamination.fraction {fraction} outside [0, 1]"
                    )));
                }
                Ok(())
            }
            ContaminationKind::ContiguousBlocks { blocks } => {
                for b in blocks {
                    if b.height == 0 || b.width == 0 || b.q0 + b.height > subcarriers || b.n0 + b.width > symbols {
                        return Err(Error::InvalidConfig(format!(
                            "contamination block {b:?} outside the {subcarriers}x{symbols} grid"
                        )));
                    }
                }
                Ok(())
            }
            ContaminationKind::RandomBlocks { count, size } => {
                let fit = (subcarriers / size.max(&1)) * (symbols / size.max(&1));
                if *size == 0 || *count > fit {
                    return Err(Error::InvalidConfig(format!(
                        "cannot place {count} disjoint {size}x{size} blocks in a {subcarriers}x{symbols} grid"
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Resource elements `(q, n)` hit by interference, sorted.
pub fn contamination_mask(
    spec: &ContaminationSpec,
    subcarriers: usize,
    symbols: usize,
    rng: &mut RngStream,
) -> Result<Vec<(usize, usize)>> {
    spec.validate(subcarriers, symbols)?;
    let mut hit = vec![false; subcarriers * symbols];
    let mut mark = |q0: usize, n0: usize, h: usize, w: usize| {
        for q in q0..q0 + h {
            for n in n0..n0 + w {
                hit[q * symbols + n] = true;
            }
        }
    };
    match &spec.kind {
        ContaminationKind::None => {}
        ContaminationKind::RandomRes { fraction } => {
            let total = subcarriers * symbols;
            let count = (fraction * total as f64).floor() as usize;
            for i in rng.sample_without_replacement(total, count) {
                hit[i] = true;
            }
        }
        ContaminationKind::ContiguousBlocks { blocks } => {
            for b in blocks {
                mark(b.q0, b.n0, b.height, b.width);
            }
        }
        ContaminationKind::RandomBlocks { count, size } => {
            // aligned tiles keep the squares disjoint
            let (tq, tn) = (subcarriers / size, symbols / size);
            for t in rng.sample_without_replacement(tq * tn, *count) {
                mark((t / tn) * size, (t % tn) * size, *size, *size);
            }
        }
    }
    Ok(hit
        .iter()
        .enumerate()
        .filter(|(_, &h)| h)
        .map(|(i, _)| (i / symbols, i % symbols))
        .collect())
}

/// Everything needed to synthesize one received grid.
#[derive(Debug, Clone)]
pub struct ChannelScene {
    /// One realization per in-cell user.
    pub channels: Vec<ChannelRealization>,
    pub interferer: Option<ChannelRealization>,
    pub allocation: PilotAllocation,
    pub noise_var: f64,
    pub data_fill: DataFill,
    pub contamination: ContaminationSpec,
}

/// A synthesized grid together with the scene that produced it.
#[derive(Debug, Clone)]
pub struct ReceivedGrid {
    pub y: ComplexGrid,
    pub noise_var: f64,
    pub mask: Vec<(usize, usize)>,
    /// `ρ_i` applied on the masked REs.
    pub interferer_power: f64,
    pub scene: ChannelScene,
}

impl ReceivedGrid {
    pub fn true_channel(&self, k: usize) -> Option<&ChannelRealization> {
        self.scene.channels.get(k)
    }

    /// User `k`'s channel as its pilots see it: the quasi-static response, or
    /// for time-varying draws the average over the user's pilot symbols.
    pub fn reference_channel(&self, k: usize) -> Result<ComplexMatrix> {
        let user = self.scene.allocation.user(k)?;
        let ch = self.true_channel(k).ok_or(Error::NoPilots(k))?;
        Ok(ch.averaged_over(user.res.iter().map(|re| (re.q, re.n))))
    }
}

/// `Y[m,q,n] = Σ_k √ρ_k H_k[m,q] s_k[q,n] + √ρ_i H_i[m,q] d[q,n]·1_mask + z`.
pub fn build_received_grid(scene: ChannelScene, rng: &mut RngStream) -> Result<ReceivedGrid> {
    let alloc = &scene.allocation;
    if scene.channels.len() != alloc.num_users() {
        return Err(Error::DimensionMismatch(format!(
            "{} channel realizations for {} users",
            scene.channels.len(),
            alloc.num_users()
        )));
    }
    if !(scene.noise_var >= 0.0) {
        return Err(Error::InvalidConfig(format!("noise variance {} < 0", scene.noise_var)));
    }
    let first = scene
        .channels
        .first()
        .ok_or_else(|| Error::InvalidConfig("scene has no users".into()))?;
    let (m_ant, nf, n_sym) = (first.h.rows(), first.h.cols(), alloc.symbols);
    for ch in scene.channels.iter().chain(scene.interferer.iter()) {
        if ch.h.rows() != m_ant || ch.h.cols() != nf || nf != alloc.subcarriers || ch.symbols != n_sym {
            return Err(Error::DimensionMismatch("channel and allocation dimensions disagree".into()));
        }
    }

    let mut y = ComplexGrid::zeros(m_ant, nf, n_sym);
    let amps: Vec<f64> = alloc.users.iter().map(|u| u.power.sqrt()).collect();
    let mut pilot_at = vec![None; nf * n_sym];
    for u in &alloc.users {
        for re in &u.res {
            pilot_at[re.q * n_sym + re.n] = Some(re.symbol);
        }
    }
    let mut s = vec![Complex64::new(0.0, 0.0); alloc.num_users()];
    for q in 0..nf {
        for n in 0..n_sym {
            match alloc.owner(q, n) {
                Some(k) => {
                    s.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
                    s[k] = pilot_at[q * n_sym + n].expect("owned RE has a pilot");
                }
                None => {
                    for v in s.iter_mut() {
                        *v = match scene.data_fill {
                            DataFill::Pilot => PILOT_SYMBOL,
                            DataFill::Qpsk => rng.qpsk_one(),
                            DataFill::Zero => Complex64::new(0.0, 0.0),
                        };
                    }
                }
            }
            for (k, ch) in scene.channels.iter().enumerate() {
                let sk = amps[k] * s[k];
                if sk == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for m in 0..m_ant {
                    y.add_at(m, q, n, ch.at(m, q, n) * sk);
                }
            }
        }
    }

    let mask = contamination_mask(&scene.contamination, nf, n_sym, rng)?;
    let interferer_power = scene.contamination.interferer_power(alloc.users[0].power);
    if !mask.is_empty() {
        let hi = scene
            .interferer
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig("contamination requires an interferer channel".into()))?;
        let amp = interferer_power.sqrt();
        for &(q, n) in &mask {
            let d = amp * rng.qpsk_one();
            for m in 0..m_ant {
                y.add_at(m, q, n, hi.at(m, q, n) * d);
            }
        }
    }

    if scene.noise_var > 0.0 {
        let z = rng.complex_gaussian(m_ant * nf * n_sym, scene.noise_var);
        for (v, zi) in y.as_mut_slice().iter_mut().zip(z) {
            *v += zi;
        }
    }
    Ok(ReceivedGrid {
        y,
        noise_var: scene.noise_var,
        mask,
        interferer_power,
        scene,
    })
}

/// `Y_k[m, q] = Σ_{(q,n) ∈ pilots_k} Y[m,q,n]·conj(x)`: user `k`'s correlated
/// pilot observation, `√ρ_k·N_p·H_k + noise` for a clean grid.
pub fn extract_user_signal(y: &ComplexGrid, alloc: &PilotAllocation, k: usize) -> Result<ComplexMatrix> {
    let user = alloc.user(k)?;
    if y.subcarriers() != alloc.subcarriers || y.symbols() != alloc.symbols {
        return Err(Error::DimensionMismatch(format!(
            "grid is {:?}, allocation is {}x{}",
            y.dims(),
            alloc.subcarriers,
            alloc.symbols
        )));
    }
    let mut out = ComplexMatrix::zeros(y.antennas(), y.subcarriers());
    for re in &user.res {
        let c = re.symbol.conj();
        for m in 0..y.antennas() {
            out[(m, re.q)] += y.get(m, re.q, re.n) * c;
        }
    }
    Ok(out)
}

/// `M × N_f × N` complex → `2M × N_f × N` real; real parts first, then imaginary.
pub fn pack_grid(y: &ComplexGrid) -> RealTensor3 {
    let (m_ant, nf, n) = y.dims();
    let plane = nf * n;
    let mut out = RealTensor3::zeros(2 * m_ant, nf, n);
    let data = out.as_mut_slice();
    let (re, im) = data.split_at_mut(m_ant * plane);
    for (i, v) in y.as_slice().iter().enumerate() {
        re[i] = v.re;
        im[i] = v.im;
    }
    out
}

/// Inverse of [`pack_grid`].
pub fn unpack_grid(t: &RealTensor3) -> Result<ComplexGrid> {
    let (c, nf, n) = t.dims();
    if c % 2 != 0 {
        return Err(Error::DimensionMismatch(format!(
            "cannot unpack {c} channels into complex pairs"
        )));
    }
    let m_ant = c / 2;
    let (re, im) = t.as_slice().split_at(m_ant * nf * n);
    let mut y = ComplexGrid::zeros(m_ant, nf, n);
    for (i, v) in y.as_mut_slice().iter_mut().enumerate() {
        *v = Complex64::new(re[i], im[i]);
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{ChannelKind, ChannelModel, ChannelModelSpec};
    use proptest::prelude::*;

    fn model(m: usize, nf: usize, n: usize) -> ChannelModel {
        ChannelModel::new(ChannelModelSpec::new(ChannelKind::Tdl, m, nf, n)).unwrap()
    }

    fn scene(
        model: &ChannelModel,
        alloc: PilotAllocation,
        noise_var: f64,
        contamination: ContaminationSpec,
        rng: &mut RngStream,
    ) -> ChannelScene {
        let channels = (0..alloc.num_users()).map(|_| model.realize(rng)).collect();
        ChannelScene {
            channels,
            interferer: Some(model.realize(rng)),
            allocation: alloc,
            noise_var,
            data_fill: DataFill::Pilot,
            contamination,
        }
    }

    #[test]
    fn single_user_block_pilots_on_first_symbol() {
        let a = make_pilot_allocation(1, 1, PilotArrangement::BlockSymbol, 64, 64, &mut RngStream::new(0, 0)).unwrap();
        let res = &a.users[0].res;
        assert_eq!(res.len(), 64);
        for (q, re) in res.iter().enumerate() {
            assert_eq!((re.q, re.n), (q, 0));
            assert!((re.symbol.norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn pilot_energy_per_tone_is_pilot_len() {
        let a = make_pilot_allocation(3, 4, PilotArrangement::RandomTones, 8, 16, &mut RngStream::new(1, 0)).unwrap();
        for u in &a.users {
            for q in 0..8 {
                let e: f64 = u.res.iter().filter(|r| r.q == q).map(|r| r.symbol.norm_sqr()).sum();
                assert!((e - 4.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn users_are_disjoint() {
        for arr in [PilotArrangement::BlockSymbol, PilotArrangement::RandomTones] {
            let a = make_pilot_allocation(4, 2, arr, 16, 16, &mut RngStream::new(2, 0)).unwrap();
            let mut seen = std::collections::HashSet::new();
            for (k, u) in a.users.iter().enumerate() {
                for re in &u.res {
                    assert!(seen.insert((re.q, re.n)), "{arr:?} RE reused");
                    assert_eq!(a.owner(re.q, re.n), Some(k));
                }
            }
            assert_eq!(seen.len(), 4 * 2 * 16);
        }
    }

    #[test]
    fn random_tones_reproducible() {
        let a = make_pilot_allocation(2, 1, PilotArrangement::RandomTones, 8, 8, &mut RngStream::new(3, 0)).unwrap();
        let b = make_pilot_allocation(2, 1, PilotArrangement::RandomTones, 8, 8, &mut RngStream::new(3, 0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn over_allocation_rejected() {
        let err = make_pilot_allocation(5, 2, PilotArrangement::BlockSymbol, 8, 8, &mut RngStream::new(0, 0));
        assert!(matches!(err, Err(Error::InsufficientResources(_))));
    }

    #[test]
    fn mask_cardinalities() {
        let mut rng = RngStream::new(4, 0);
        let spec = |kind| ContaminationSpec { kind, sir_db: 6.0 };
        let m = contamination_mask(&spec(ContaminationKind::RandomRes { fraction: 0.05 }), 64, 64, &mut rng).unwrap();
        assert_eq!(m.len(), 204);
        let m = contamination_mask(&spec(ContaminationKind::RandomRes { fraction: 0.0 }), 64, 64, &mut rng).unwrap();
        assert!(m.is_empty());
        let m = contamination_mask(&spec(ContaminationKind::RandomBlocks { count: 2, size: 8 }), 64, 64, &mut rng).unwrap();
        assert_eq!(m.len(), 128);
        assert!((m.len() as f64 / 4096.0 - 0.03125).abs() < 1e-12);
        let blocks = vec![
            Block { q0: 0, n0: 0, height: 8, width: 8 },
            Block { q0: 4, n0: 4, height: 8, width: 8 },
        ];
        // overlapping rectangles are a union
        let m = contamination_mask(&spec(ContaminationKind::ContiguousBlocks { blocks }), 64, 64, &mut rng).unwrap();
        assert_eq!(m.len(), 128 - 16);
    }

    #[test]
    fn mask_validation() {
        let spec = |kind| ContaminationSpec { kind, sir_db: 6.0 };
        let mut rng = RngStream::new(0, 0);
        assert!(contamination_mask(&spec(ContaminationKind::RandomRes { fraction: 1.5 }), 8, 8, &mut rng).is_err());
        let b = vec![Block { q0: 60, n0: 0, height: 8, width: 8 }];
        assert!(contamination_mask(&spec(ContaminationKind::ContiguousBlocks { blocks: b }), 64, 64, &mut rng).is_err());
        assert!(contamination_mask(&spec(ContaminationKind::RandomBlocks { count: 5, size: 8 }), 16, 16, &mut rng).is_err());
    }

    #[test]
    fn sir_to_power() {
        let c = ContaminationSpec {
            kind: ContaminationKind::RandomRes { fraction: 0.1 },
            sir_db: 6.0,
        };
        assert!((c.interferer_power(1.0) - 0.251_188_643_150_958).abs() < 1e-12);
        assert_eq!(ContaminationSpec::none().interferer_power(1.0), 0.0);
    }

    #[test]
    fn noiseless_grid_equals_channel_on_pilots() {
        let model = model(3, 8, 8);
        let mut rng = RngStream::new(5, 0);
        let mut alloc = make_pilot_allocation(1, 1, PilotArrangement::BlockSymbol, 8, 8, &mut rng).unwrap();
        for re in &mut alloc.users[0].res {
            re.symbol = Complex64::new(1.0, 0.0);
        }
        let sc = scene(&model, alloc, 0.0, ContaminationSpec::none(), &mut rng);
        let h = sc.channels[0].h.clone();
        let g = build_received_grid(sc, &mut rng).unwrap();
        for m in 0..3 {
            for q in 0..8 {
                assert_eq!(g.y.get(m, q, 0), h[(m, q)]);
            }
        }
    }

    #[test]
    fn noiseless_extraction_is_scaled_channel_without_cross_terms() {
        let model = model(4, 8, 16);
        let mut rng = RngStream::new(6, 0);
        for arr in [PilotArrangement::BlockSymbol, PilotArrangement::RandomTones] {
            let alloc = make_pilot_allocation(2, 3, arr, 8, 16, &mut rng)
                .unwrap()
                .with_powers(&[2.0, 0.5])
                .unwrap();
            let mut sc = scene(&model, alloc, 0.0, ContaminationSpec::none(), &mut rng);
            sc.data_fill = DataFill::Qpsk;
            let g = build_received_grid(sc, &mut rng).unwrap();
            for (k, p) in [(0usize, 2.0f64), (1, 0.5)] {
                let yk = extract_user_signal(&g.y, &g.scene.allocation, k).unwrap();
                let want = g.scene.channels[k].h.scaled(p.sqrt() * 3.0);
                assert!(yk.max_abs_diff(&want) < 1e-12, "{arr:?} user {k}");
            }
        }
    }

    #[test]
    fn extraction_without_pilots_errors() {
        let alloc = make_pilot_allocation(1, 1, PilotArrangement::BlockSymbol, 4, 4, &mut RngStream::new(0, 0)).unwrap();
        let y = ComplexGrid::zeros(1, 4, 4);
        assert_eq!(extract_user_signal(&y, &alloc, 1).unwrap_err(), Error::NoPilots(1));
    }

    #[test]
    fn extracted_noise_variance() {
        let np = 4;
        let alloc = make_pilot_allocation(1, np, PilotArrangement::RandomTones, 4, 8, &mut RngStream::new(7, 0)).unwrap();
        let mut rng = RngStream::new(8, 0);
        let sigma2 = 0.7;
        let trials = 10_000;
        let mut acc = 0.0;
        for _ in 0..trials {
            let v = rng.complex_gaussian(4 * 8, sigma2);
            let y = ComplexGrid::from_fn(1, 4, 8, |_, q, n| v[q * 8 + n]);
            let yk = extract_user_signal(&y, &alloc, 0).unwrap();
            acc += yk.as_slice().iter().map(|c| c.norm_sqr()).sum::<f64>() / 4.0;
        }
        let var = acc / trials as f64;
        assert!((var / (np as f64 * sigma2) - 1.0).abs() < 0.03, "{var}");
    }

    #[test]
    fn empirical_snr_matches_setting() {
        let model = model(8, 8, 8);
        let mut rng = RngStream::new(9, 0);
        let sigma2 = 0.1;
        let (mut sig, mut noise) = (0.0, 0.0);
        for _ in 0..1000 {
            let alloc = make_pilot_allocation(1, 1, PilotArrangement::BlockSymbol, 8, 8, &mut rng).unwrap();
            let sc = scene(&model, alloc, sigma2, ContaminationSpec::none(), &mut rng);
            let clean = sc.channels[0].grid().scaled(1.0);
            let g = build_received_grid(sc, &mut rng).unwrap();
            // pilot fill: the noiseless grid is H·x everywhere
            let mut s = clean.clone();
            s.as_mut_slice().iter_mut().for_each(|v| *v *= PILOT_SYMBOL);
            sig += s.norm_sq();
            noise += g.y.dist_sq(&s).unwrap();
        }
        let snr = sig / noise;
        assert!((snr / (1.0 / sigma2) - 1.0).abs() < 0.02, "{snr}");
    }

    #[test]
    fn energy_bookkeeping_with_contamination() {
        let (m, nf, n) = (2, 8, 8);
        let model = model(m, nf, n);
        let mut rng = RngStream::new(10, 0);
        let sigma2 = 0.2;
        let cont = ContaminationSpec {
            kind: ContaminationKind::RandomRes { fraction: 0.25 },
            sir_db: 3.0,
        };
        let trials = 4000;
        let mut energy = 0.0;
        for _ in 0..trials {
            let alloc = make_pilot_allocation(1, 1, PilotArrangement::BlockSymbol, nf, n, &mut rng).unwrap();
            let mut sc = scene(&model, alloc, sigma2, cont.clone(), &mut rng);
            sc.data_fill = DataFill::Qpsk;
            energy += build_received_grid(sc, &mut rng).unwrap().y.norm_sq();
        }
        let res = (m * nf * n) as f64;
        let want = res * (1.0 + sigma2) + 0.25 * res * cont.interferer_power(1.0);
        let got = energy / trials as f64;
        assert!((got / want - 1.0).abs() < 0.02, "{got} vs {want}");
    }

    #[test]
    fn mask_hits_every_antenna() {
        let model = model(3, 8, 8);
        let mut rng = RngStream::new(11, 0);
        let alloc = make_pilot_allocation(1, 1, PilotArrangement::BlockSymbol, 8, 8, &mut rng).unwrap();
        let mut sc = scene(
            &model,
            alloc,
            0.0,
            ContaminationSpec {
                kind: ContaminationKind::RandomRes { fraction: 0.2 },
                sir_db: 0.0,
            },
            &mut rng,
        );
        sc.data_fill = DataFill::Zero;
        let g = build_received_grid(sc, &mut rng).unwrap();
        assert_eq!(g.mask.len(), 12);
        for q in 0..8 {
            for n in 1..8 {
                let masked = g.mask.contains(&(q, n));
                for m in 0..3 {
                    assert_eq!(g.y.get(m, q, n).norm() > 0.0, masked);
                }
            }
        }
    }

    #[test]
    fn pack_known_values() {
        let y = ComplexGrid::from_fn(1, 2, 3, |_, _, _| Complex64::new(3.0, 4.0));
        let t = pack_grid(&y);
        assert_eq!(t.dims(), (2, 2, 3));
        assert!(t.plane(0).iter().all(|&v| v == 3.0));
        assert!(t.plane(1).iter().all(|&v| v == 4.0));

        let y = ComplexGrid::from_fn(2, 2, 2, |m, q, n| Complex64::new((m + q + n) as f64, 0.0));
        let t = pack_grid(&y);
        assert!(t.plane(2).iter().chain(t.plane(3)).all(|&v| v == 0.0));
    }

    #[test]
    fn unpack_odd_channels_rejected() {
        assert!(unpack_grid(&RealTensor3::zeros(3, 2, 2)).is_err());
    }

    proptest! {
        #[test]
        fn pack_round_trip(seed in any::<u64>(), m in 1usize..4, nf in 1usize..5, n in 1usize..5) {
            let v = RngStream::new(seed, 0).complex_gaussian(m * nf * n, 1.0);
            let y = ComplexGrid::from_fn(m, nf, n, |a, b, c| v[(a * nf + b) * n + c]);
            let t = pack_grid(&y);
            prop_assert_eq!(t.get(m - 1, 0, 0), y.get(m - 1, 0, 0).re);
            prop_assert_eq!(t.get(2 * m - 1, 0, 0), y.get(m - 1, 0, 0).im);
            prop_assert_eq!(unpack_grid(&t).unwrap(), y);
        }
    }
}
