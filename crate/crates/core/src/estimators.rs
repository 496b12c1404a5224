//! LS, linear MMSE and decoder-based channel estimators, plus closed-form
//! error predictions for the first two.

use std::time::{Duration, Instant};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::decoder::{fit, DecoderArch, FitConfig, FitReport};
use crate::error::{Error, Result};
use crate::numerics::{hermitian_eig, ComplexGrid, ComplexMatrix, HermitianEig, RngStream};
use crate::signal::{extract_user_signal, pack_grid, unpack_grid, PilotAllocation};

/// An `antennas × subcarriers` channel estimate, held constant over the grid.
#[derive(Debug, Clone)]
pub struct ChannelEstimate {
    pub h: ComplexMatrix,
    pub estimator: String,
    pub elapsed: Duration,
}

impl ChannelEstimate {
    pub fn grid(&self, symbols: usize) -> ComplexGrid {
        ComplexGrid::from_static(&self.h, symbols)
    }
}

/// Variance of each LS estimate entry: `σ² / (ρ N_p)`.
pub fn ls_noise_var(noise_var: f64, power: f64, pilot_len: usize) -> f64 {
    noise_var / (power * pilot_len as f64)
}

/// `Ĥ = Y_k / (√ρ_k N_p)`.
pub fn ls_estimate(y_k: &ComplexMatrix, power: f64, pilot_len: usize) -> ChannelEstimate {
    let start = Instant::now();
    let h = y_k.scaled(1.0 / (power.sqrt() * pilot_len as f64));
    ChannelEstimate {
        h,
        estimator: "ls".into(),
        elapsed: start.elapsed(),
    }
}

/// LS estimate of user `k` read straight from a grid.
pub fn ls_from_grid(y: &ComplexGrid, alloc: &PilotAllocation, k: usize) -> Result<ChannelEstimate> {
    let user = alloc.user(k)?;
    Ok(ls_estimate(&extract_user_signal(y, alloc, k)?, user.power, alloc.pilot_len))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceSource {
    Genie,
    Sample { trials: usize },
}

/// `cov(vec H) = R_f ⊗ R_sp`, with both factors pre-diagonalized.
#[derive(Debug, Clone)]
pub struct CovarianceModel {
    r_sp: ComplexMatrix,
    r_f: ComplexMatrix,
    eig_sp: HermitianEig,
    eig_f: HermitianEig,
    pub source: CovarianceSource,
    /// Co-pilot interference covariance as a multiple of `R_H`, in units of the
    /// user's own LS observation (`Σ_i ρ_i/ρ_k` for interferers sharing `R_H`).
    pub copilot_gain: f64,
}

impl CovarianceModel {
    pub fn new(r_sp: ComplexMatrix, r_f: ComplexMatrix, source: CovarianceSource) -> Result<Self> {
        for (name, r) in [("spatial", &r_sp), ("frequency", &r_f)] {
            if !r.is_square() || !r.is_hermitian(1e-9 * r.max_abs().max(1.0)) {
                return Err(Error::InvalidConfig(format!("{name} covariance factor is not Hermitian")));
            }
        }
        let eig_sp = clip(hermitian_eig(&r_sp)?);
        let eig_f = clip(hermitian_eig(&r_f)?);
        Ok(Self {
            r_sp,
            r_f,
            eig_sp,
            eig_f,
            source,
            copilot_gain: 0.0,
        })
    }

    pub fn genie(r_sp: ComplexMatrix, r_f: ComplexMatrix) -> Result<Self> {
        Self::new(r_sp, r_f, CovarianceSource::Genie)
    }

    pub fn with_copilot_gain(mut self, gain: f64) -> Self {
        self.copilot_gain = gain;
        self
    }

    pub fn r_sp(&self) -> &ComplexMatrix {
        &self.r_sp
    }

    pub fn r_f(&self) -> &ComplexMatrix {
        &self.r_f
    }

    pub fn antennas(&self) -> usize {
        self.r_sp.rows()
    }

    pub fn subcarriers(&self) -> usize {
        self.r_f.rows()
    }

    /// Eigenvalues of `R_f ⊗ R_sp` (all pairwise products).
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eig_f
            .values
            .iter()
            .flat_map(|&a| self.eig_sp.values.iter().map(move |&b| a * b))
            .collect()
    }
}

fn clip(mut e: HermitianEig) -> HermitianEig {
    e.values.iter_mut().for_each(|v| *v = v.max(0.0));
    e
}

fn conj(a: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_fn(a.rows(), a.cols(), |r, c| a[(r, c)].conj())
}

fn transpose(a: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_fn(a.cols(), a.rows(), |r, c| a[(c, r)])
}

/// Linear MMSE estimate from user `k`'s pilot observation.
///
/// With `ĥ_LS = h + Σ_i √(ρ_i/ρ_k) h_i + n`, `n ~ CN(0, σ²/(ρN_p) I)`, this
/// returns `R_H((1+g)R_H + σ²/(ρN_p) I)⁻¹ ĥ_LS`, evaluated in the joint
/// eigenbasis of the Kronecker factors.
pub fn mmse_estimate(
    y_k: &ComplexMatrix,
    power: f64,
    pilot_len: usize,
    cov: &CovarianceModel,
    noise_var: f64,
) -> Result<ChannelEstimate> {
    let start = Instant::now();
    let (m, nf) = (cov.antennas(), cov.subcarriers());
    if y_k.rows() != m || y_k.cols() != nf {
        return Err(Error::DimensionMismatch(format!(
            "observation is {}x{}, covariance is for {m}x{nf}",
            y_k.rows(),
            y_k.cols()
        )));
    }
    let ls = ls_estimate(y_k, power, pilot_len).h;
    let s2 = ls_noise_var(noise_var, power, pilot_len);
    let g = 1.0 + cov.copilot_gain;
    let (u_sp, u_f) = (&cov.eig_sp.vectors, &cov.eig_f.vectors);

    // vec(X) ↦ (U_f ⊗ U_sp)ᴴ vec(X) is X ↦ U_spᴴ X conj(U_f)
    let mut t = u_sp.adjoint().matmul(&ls)?.matmul(&conj(u_f))?;
    for b in 0..m {
        let mu = cov.eig_sp.values[b];
        for a in 0..nf {
            let lam = cov.eig_f.values[a] * mu;
            let den = g * lam + s2;
            let d = if den > 0.0 { lam / den } else { 0.0 };
            t[(b, a)] *= d;
        }
    }
    let h = u_sp.matmul(&t)?.matmul(&transpose(u_f))?;
    if !h.is_finite() {
        return Err(Error::NotPositiveDefinite { pivot: 0, value: f64::NAN });
    }
    Ok(ChannelEstimate {
        h,
        estimator: match cov.source {
            CovarianceSource::Genie => "mmse_genie".into(),
            CovarianceSource::Sample { .. } => "mmse_sample".into(),
        },
        elapsed: start.elapsed(),
    })
}

/// Kronecker-factored covariance estimated from `T` LS estimates.
///
/// Each factor is the sample second moment with the LS noise floor
/// `ls_noise_var·I` removed, then projected back onto the PSD cone.
pub fn sample_covariance(ls_estimates: &[ComplexMatrix], ls_noise_var: f64) -> Result<CovarianceModel> {
    let first = ls_estimates
        .first()
        .ok_or_else(|| Error::InvalidConfig("sample covariance needs at least one estimate".into()))?;
    let (m, nf) = (first.rows(), first.cols());
    let mut r_sp = ComplexMatrix::zeros(m, m);
    let mut r_f = ComplexMatrix::zeros(nf, nf);
    for x in ls_estimates {
        if x.rows() != m || x.cols() != nf {
            return Err(Error::DimensionMismatch("LS estimates differ in shape".into()));
        }
        let s = x.as_slice();
        for i in 0..m {
            for j in i..m {
                let v: Complex64 = (0..nf).map(|q| s[i * nf + q] * s[j * nf + q].conj()).sum();
                r_sp[(i, j)] += v;
            }
        }
        for q in 0..nf {
            for qp in q..nf {
                let v: Complex64 = (0..m).map(|i| s[i * nf + q] * s[i * nf + qp].conj()).sum();
                r_f[(q, qp)] += v;
            }
        }
    }
    let t = ls_estimates.len() as f64;
    let finish = |mut r: ComplexMatrix, count: f64| -> Result<ComplexMatrix> {
        let n = r.rows();
        for i in 0..n {
            for j in i..n {
                let v = r[(i, j)] / count;
                r[(i, j)] = v;
                r[(j, i)] = v.conj();
            }
            r[(i, i)] = Complex64::new(r[(i, i)].re, 0.0);
        }
        r.add_diag(-ls_noise_var);
        Ok(hermitian_eig(&r)?.reconstruct_with(|v| v.max(0.0)))
    };
    let r_sp = finish(r_sp, t * nf as f64)?;
    let r_f = finish(r_f, t * m as f64)?;
    CovarianceModel::new(
        r_sp,
        r_f,
        CovarianceSource::Sample {
            trials: ls_estimates.len(),
        },
    )
}

/// Output of one decoder fit on a received grid.
#[derive(Debug, Clone)]
pub struct Denoised {
    pub grid: ComplexGrid,
    pub report: FitReport,
    pub elapsed: Duration,
}

/// Fits a fresh decoder to the whole received grid and returns its output.
pub fn dce_denoise(y: &ComplexGrid, arch: &DecoderArch, cfg: &FitConfig, rng: &mut RngStream) -> Result<Denoised> {
    let (m, nf, n) = y.dims();
    if arch.output_dims() != (2 * m, nf, n) {
        return Err(Error::DimensionMismatch(format!(
            "decoder outputs {:?}, grid packs to {:?}",
            arch.output_dims(),
            (2 * m, nf, n)
        )));
    }
    let start = Instant::now();
    let report = fit(arch, &pack_grid(y), cfg, rng)?;
    let grid = unpack_grid(&report.output)?;
    Ok(Denoised {
        grid,
        report,
        elapsed: start.elapsed(),
    })
}

/// LS on the decoder output: denoise the grid, then extract user `k`.
pub fn dce_estimate(
    y: &ComplexGrid,
    alloc: &PilotAllocation,
    k: usize,
    arch: &DecoderArch,
    cfg: &FitConfig,
    rng: &mut RngStream,
) -> Result<(ChannelEstimate, FitReport)> {
    alloc.user(k)?;
    let d = dce_denoise(y, arch, cfg, rng)?;
    let mut est = ls_from_grid(&d.grid, alloc, k)?;
    est.estimator = "dce".into();
    est.elapsed = d.elapsed;
    Ok((est, d.report))
}

/// `Σ_m λ_m − λ_m²/(λ_m + 1/snr)`, the total MMSE for eigenvalues `λ` of `R_H`.
pub fn analytic_mmse_error(eigenvalues: &[f64], snr: f64) -> f64 {
    eigenvalues
        .iter()
        .map(|&l| l - l * l / (l + 1.0 / snr))
        .sum()
}

/// `rank / snr`, the total LS error over `rank` observed entries.
pub fn analytic_ls_error(rank: usize, snr: f64) -> f64 {
    rank as f64 / snr
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{exp_corr_matrix, freq_covariance, ChannelKind, ChannelModel, ChannelModelSpec, PowerDelayProfile};
    use crate::numerics::hermitian_solve;
    use proptest::prelude::*;

    fn vec_cols(x: &ComplexMatrix) -> ComplexMatrix {
        let (m, nf) = (x.rows(), x.cols());
        ComplexMatrix::from_fn(m * nf, 1, |i, _| x[(i % m, i / m)])
    }

    fn unvec(v: &ComplexMatrix, m: usize, nf: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(m, nf, |i, q| v[(q * m + i, 0)])
    }

    /// `R (g R + s² I)⁻¹ ĥ_LS` with the full `MN_f × MN_f` matrices.
    fn dense_mmse(ls: &ComplexMatrix, r: &ComplexMatrix, g: f64, s2: f64) -> ComplexMatrix {
        let mut a = r.scaled(g);
        a.add_diag(s2);
        let x = hermitian_solve(&a, &vec_cols(ls)).unwrap();
        unvec(&r.matmul(&x).unwrap(), ls.rows(), ls.cols())
    }

    fn kron_model(m: usize, nf: usize) -> ChannelModel {
        ChannelModel::new(ChannelModelSpec::new(ChannelKind::Kronecker, m, nf, 1)).unwrap()
    }

    fn genie(model: &ChannelModel) -> CovarianceModel {
        let (r_sp, r_f) = model.covariance();
        CovarianceModel::genie(r_sp, r_f).unwrap()
    }

    #[test]
    fn ls_noiseless_is_exact() {
        let h = kron_model(3, 5).realize(&mut RngStream::new(1, 0)).h;
        let y = h.scaled(2.0f64.sqrt() * 4.0);
        let est = ls_estimate(&y, 2.0, 4);
        assert!(est.h.max_abs_diff(&h) < 1e-14);
        assert_eq!(est.grid(3).symbol_slice(2), est.h);
    }

    #[test]
    fn ls_error_variance_halves_with_pilot_len() {
        // the observation carries N_p·σ² noise; dividing by N_p leaves σ²/N_p
        let mut rng = RngStream::new(2, 0);
        let trials = 20_000;
        let var = |np: usize, rng: &mut RngStream| {
            let mut acc = 0.0;
            for _ in 0..trials {
                let z = rng.complex_gaussian(1, np as f64)[0];
                let y = ComplexMatrix::from_vec(1, 1, vec![z]).unwrap();
                acc += ls_estimate(&y, 1.0, np).h[(0, 0)].norm_sqr();
            }
            acc / trials as f64
        };
        let (v1, v2) = (var(1, &mut rng), var(2, &mut rng));
        assert!((v1 / v2 - 2.0).abs() < 0.06, "{v1} {v2}");
    }

    #[test]
    fn scalar_wiener_filter() {
        let one = ComplexMatrix::identity(1);
        let cov = CovarianceModel::genie(one.clone(), one).unwrap();
        let y = ComplexMatrix::from_vec(1, 1, vec![Complex64::new(0.8, -1.4)]).unwrap();
        let est = mmse_estimate(&y, 1.0, 1, &cov, 1.0).unwrap();
        assert!((est.h[(0, 0)] - Complex64::new(0.4, -0.7)).norm() < 1e-15);

        let mut rng = RngStream::new(3, 0);
        let trials = 50_000;
        let mut mse = 0.0;
        for _ in 0..trials {
            let h = rng.complex_gaussian_one(1.0);
            let y = ComplexMatrix::from_vec(1, 1, vec![h + rng.complex_gaussian_one(1.0)]).unwrap();
            mse += (mmse_estimate(&y, 1.0, 1, &cov, 1.0).unwrap().h[(0, 0)] - h).norm_sqr();
        }
        assert!((mse / trials as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn noiseless_mmse_recovers_channel() {
        let model = kron_model(4, 16);
        let cov = genie(&model);
        let h = model.realize(&mut RngStream::new(4, 0)).h;
        let est = mmse_estimate(&h, 1.0, 1, &cov, 0.0).unwrap();
        assert!(est.h.max_abs_diff(&h) < 1e-6, "{}", est.h.max_abs_diff(&h));
        let est = mmse_estimate(&h, 1.0, 1, &cov, 1e-12).unwrap();
        assert!(est.h.max_abs_diff(&h) < 1e-6);
    }

    #[test]
    fn kronecker_matches_dense() {
        let (m, nf) = (4, 8);
        let model = kron_model(m, nf);
        let (r_sp, r_f) = model.covariance();
        let r = r_f.kron(&r_sp);
        let mut rng = RngStream::new(5, 0);
        for (sigma2, np, power, gain) in [(0.1, 1usize, 1.0f64, 0.0), (1.0, 2, 0.5, 0.0), (0.3, 1, 2.0, 0.25)] {
            let cov = genie(&model).with_copilot_gain(gain);
            let h = model.realize(&mut rng).h;
            let noise = ComplexMatrix::from_vec(m, nf, rng.complex_gaussian(m * nf, np as f64 * sigma2)).unwrap();
            let y = h.scaled(power.sqrt() * np as f64).add(&noise).unwrap();
            let fast = mmse_estimate(&y, power, np, &cov, sigma2).unwrap().h;
            let ls = ls_estimate(&y, power, np).h;
            let slow = dense_mmse(&ls, &r, 1.0 + gain, ls_noise_var(sigma2, power, np));
            assert!(fast.max_abs_diff(&slow) < 1e-8, "{}", fast.max_abs_diff(&slow));
        }
    }

    #[test]
    fn mmse_error_orthogonal_to_observation() {
        let (m, nf) = (2, 4);
        let model = kron_model(m, nf);
        let cov = genie(&model);
        let mut rng = RngStream::new(6, 0);
        let trials = 20_000;
        let sigma2 = 0.5;
        let dim = m * nf;
        let mut cross = vec![Complex64::new(0.0, 0.0); dim * dim];
        let mut scale = 0.0;
        for _ in 0..trials {
            let h = model.realize(&mut rng).h;
            let noise = ComplexMatrix::from_vec(m, nf, rng.complex_gaussian(dim, sigma2)).unwrap();
            let y = h.add(&noise).unwrap();
            let e = mmse_estimate(&y, 1.0, 1, &cov, sigma2).unwrap().h.sub(&h).unwrap();
            let (ev, yv) = (e.as_slice(), y.as_slice());
            for i in 0..dim {
                for j in 0..dim {
                    cross[i * dim + j] += ev[i] * yv[j].conj();
                }
            }
            scale += ev.iter().map(|v| v.norm_sqr()).sum::<f64>() * yv.iter().map(|v| v.norm_sqr()).sum::<f64>();
        }
        let t = trials as f64;
        // per-entry standard error ≈ sqrt(E|e|²E|y|²/T)
        let se = (scale / t / (dim * dim) as f64 / t).sqrt();
        let worst = cross.iter().map(|c| (c / t).norm()).fold(0.0, f64::max);
        assert!(worst < 3.0 * se * 1.5, "worst {worst} se {se}");
    }

    #[test]
    fn mmse_matches_analytic_prediction() {
        let (m, nf) = (4, 8);
        let model = kron_model(m, nf);
        let cov = genie(&model);
        let eigs = cov.eigenvalues();
        let mut rng = RngStream::new(7, 0);
        let sigma2 = 0.1;
        let trials = 4000;
        let (mut err, mut ls_err, mut energy) = (0.0, 0.0, 0.0);
        for _ in 0..trials {
            let h = model.realize(&mut rng).h;
            let y = h.add(&ComplexMatrix::from_vec(m, nf, rng.complex_gaussian(m * nf, sigma2)).unwrap()).unwrap();
            err += mmse_estimate(&y, 1.0, 1, &cov, sigma2).unwrap().h.sub(&h).unwrap().frobenius_norm().powi(2);
            ls_err += ls_estimate(&y, 1.0, 1).h.sub(&h).unwrap().frobenius_norm().powi(2);
            energy += h.frobenius_norm().powi(2);
        }
        let want = analytic_mmse_error(&eigs, 1.0 / sigma2) / (m * nf) as f64;
        let got = err / energy;
        assert!((got / want - 1.0).abs() < 0.05, "{got} vs {want}");
        let want_ls = analytic_ls_error(m * nf, 1.0 / sigma2) / (m * nf) as f64;
        assert!(((ls_err / energy) / want_ls - 1.0).abs() < 0.05);
    }

    #[test]
    fn estimator_ordering() {
        let (m, nf) = (4, 16);
        let model = ChannelModel::new(ChannelModelSpec::new(ChannelKind::Tdl, m, nf, 1)).unwrap();
        let gen = genie(&model);
        let mut rng = RngStream::new(8, 0);
        for snr_db in [0.0, 10.0, 20.0] {
            let sigma2 = 10f64.powf(-snr_db / 10.0);
            let train: Vec<ComplexMatrix> = (0..500)
                .map(|_| {
                    let h = model.realize(&mut rng).h;
                    h.add(&ComplexMatrix::from_vec(m, nf, rng.complex_gaussian(m * nf, sigma2)).unwrap()).unwrap()
                })
                .collect();
            let samp = sample_covariance(&train, sigma2).unwrap();
            let (mut e_g, mut e_s, mut e_l, mut en) = (0.0, 0.0, 0.0, 0.0);
            for _ in 0..300 {
                let h = model.realize(&mut rng).h;
                let y = h.add(&ComplexMatrix::from_vec(m, nf, rng.complex_gaussian(m * nf, sigma2)).unwrap()).unwrap();
                let d = |e: ChannelEstimate| e.h.sub(&h).unwrap().frobenius_norm().powi(2);
                e_g += d(mmse_estimate(&y, 1.0, 1, &gen, sigma2).unwrap());
                e_s += d(mmse_estimate(&y, 1.0, 1, &samp, sigma2).unwrap());
                e_l += d(ls_estimate(&y, 1.0, 1));
                en += h.frobenius_norm().powi(2);
            }
            let (g, s, l) = (e_g / en, e_s / en, e_l / en);
            assert!(g <= s && s <= l * 1.02, "snr {snr_db}: {g} {s} {l}");
        }
    }

    #[test]
    fn sample_covariance_converges_to_genie() {
        let (m, nf) = (4, 8);
        let model = kron_model(m, nf);
        let (r_sp, r_f) = model.covariance();
        let mut rng = RngStream::new(9, 0);
        let train: Vec<ComplexMatrix> = (0..10_000).map(|_| model.realize(&mut rng).h).collect();
        let cov = sample_covariance(&train, 0.0).unwrap();
        assert!(cov.r_sp().max_abs_diff(&r_sp) < 0.03, "{}", cov.r_sp().max_abs_diff(&r_sp));
        assert!(cov.r_f().max_abs_diff(&r_f) < 0.03, "{}", cov.r_f().max_abs_diff(&r_f));
        assert_eq!(cov.source, CovarianceSource::Sample { trials: 10_000 });
    }

    #[test]
    fn sample_covariance_of_pure_noise_is_small() {
        let mut rng = RngStream::new(10, 0);
        let s2 = 1.0;
        let train: Vec<ComplexMatrix> = (0..10_000)
            .map(|_| ComplexMatrix::from_vec(8, 16, rng.complex_gaussian(128, s2)).unwrap())
            .collect();
        let cov = sample_covariance(&train, s2).unwrap();
        for r in [cov.r_sp(), cov.r_f()] {
            let e = hermitian_eig(r).unwrap();
            assert!(e.values[0] < 0.05, "{}", e.values[0]);
            assert!(*e.values.last().unwrap() >= -1e-12);
        }
    }

    #[test]
    fn sample_covariance_rejects_empty() {
        assert!(sample_covariance(&[], 0.1).is_err());
    }

    #[test]
    fn analytic_examples() {
        assert!((analytic_mmse_error(&[1.0], 1.0) - 0.5).abs() < 1e-15);
        assert!((analytic_mmse_error(&[1.0, 1.0], 1.0) - 1.0).abs() < 1e-15);
        assert!((analytic_ls_error(2, 10.0) - 0.2).abs() < 1e-15);
        assert_eq!(analytic_ls_error(0, 10.0), 0.0);
        let eigs = [2.0, 0.5, 0.1, 0.0];
        let mut prev = f64::INFINITY;
        for snr in [0.1, 1.0, 10.0, 1e3, 1e6] {
            let e = analytic_mmse_error(&eigs, snr);
            assert!(e < prev);
            prev = e;
        }
        assert!(prev < 1e-5);
    }

    proptest! {
        #[test]
        fn ls_error_bounds_mmse_error(seed in any::<u64>(), n in 1usize..12, snr_db in -10.0f64..30.0) {
            let mut rng = RngStream::new(seed, 0);
            let eigs = rng.uniform(n, 0.0, 3.0);
            let snr = 10f64.powf(snr_db / 10.0);
            prop_assert!(analytic_ls_error(n, snr) >= analytic_mmse_error(&eigs, snr));
        }
    }

    #[test]
    fn dce_shape_and_determinism() {
        let (m, nf, n) = (2, 8, 8);
        let model = ChannelModel::new(ChannelModelSpec::new(ChannelKind::Tdl, m, nf, n)).unwrap();
        let h = model.realize(&mut RngStream::new(11, 0));
        let alloc = crate::signal::make_pilot_allocation(
            1,
            1,
            crate::signal::PilotArrangement::BlockSymbol,
            nf,
            n,
            &mut RngStream::new(0, 0),
        )
        .unwrap();
        let y = h.grid();
        let arch = DecoderArch::new(3, 8, 2 * m, nf, n).unwrap();
        let cfg = FitConfig::new(20, 0.01);
        let (a, rep) = dce_estimate(&y, &alloc, 0, &arch, &cfg, &mut RngStream::new(1, 2)).unwrap();
        let (b, _) = dce_estimate(&y, &alloc, 0, &arch, &cfg, &mut RngStream::new(1, 2)).unwrap();
        assert_eq!(a.h, b.h);
        assert_eq!((a.h.rows(), a.h.cols()), (m, nf));
        assert_eq!(rep.loss_trace.len(), 20);
        let bad = DecoderArch::new(3, 8, 2 * m + 2, nf, n).unwrap();
        assert!(dce_estimate(&y, &alloc, 0, &bad, &cfg, &mut RngStream::new(1, 2)).is_err());
    }

    #[test]
    fn helper_identities() {
        let r = exp_corr_matrix(0.3, 3);
        assert_eq!(transpose(&transpose(&r)), r);
        let f = freq_covariance(&PowerDelayProfile::epa(), 4, 15e3);
        assert_eq!(conj(&f), transpose(&f));
        let x = ComplexMatrix::from_fn(2, 3, |r, c| Complex64::new(r as f64, c as f64));
        assert_eq!(unvec(&vec_cols(&x), 2, 3), x);
    }
}
