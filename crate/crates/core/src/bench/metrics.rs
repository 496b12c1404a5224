use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{hermitian_solve, ComplexGrid, ComplexMatrix, RealTensor3};

/// `‖H − Ĥ‖² / ‖H‖²` over every antenna and subcarrier.
pub fn nmse(h: &ComplexMatrix, h_hat: &ComplexMatrix) -> Result<f64> {
    if h.rows() != h_hat.rows() || h.cols() != h_hat.cols() {
        return Err(Error::DimensionMismatch(format!(
            "nmse of {}x{} against {}x{}",
            h.rows(),
            h.cols(),
            h_hat.rows(),
            h_hat.cols()
        )));
    }
    let reference: f64 = h.as_slice().iter().map(|v| v.norm_sqr()).sum();
    if reference == 0.0 {
        return Err(Error::ZeroReference);
    }
    let err: f64 = h
        .as_slice()
        .iter()
        .zip(h_hat.as_slice())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    Ok(err / reference)
}

/// [`nmse`] over full grids.
pub fn nmse_grid(h: &ComplexGrid, h_hat: &ComplexGrid) -> Result<f64> {
    let reference = h.norm_sq();
    if reference == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok(h.dist_sq(h_hat)? / reference)
}

/// `‖n − n_fit‖² / ‖n‖²`: the share of `n` the fit failed to reproduce.
pub fn noise_suppression_ratio(n: &RealTensor3, n_fit: &RealTensor3) -> Result<f64> {
    let reference = n.norm_sq();
    if reference == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok(n.dist_sq(n_fit)? / reference)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combiner {
    Mr,
    Zf,
    Mmse,
}

impl Combiner {
    pub const ALL: [Combiner; 3] = [Combiner::Mr, Combiner::Zf, Combiner::Mmse];

    pub fn name(self) -> &'static str {
        match self {
            Combiner::Mr => "mr",
            Combiner::Zf => "zf",
            Combiner::Mmse => "mmse",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SePrefactor {
    /// `N_p / N`.
    #[default]
    PilotShare,
    /// `(N − N_p) / N`.
    OneMinusOverhead,
}

impl SePrefactor {
    pub fn value(self, pilot_len: usize, symbols: usize) -> f64 {
        let (np, n) = (pilot_len as f64, symbols as f64);
        match self {
            SePrefactor::PilotShare => np / n,
            SePrefactor::OneMinusOverhead => (n - np) / n,
        }
    }
}

/// `prefactor · mean(log₂(1 + SINR))`.
pub fn spectral_efficiency(sinrs: &[f64], prefactor: f64) -> f64 {
    if sinrs.is_empty() {
        return 0.0;
    }
    prefactor * sinrs.iter().map(|s| (1.0 + s).log2()).sum::<f64>() / sinrs.len() as f64
}

#[derive(Debug, Clone)]
pub struct SeOutcome {
    /// `per_user_sinr[k][q]`.
    pub per_user_sinr: Vec<Vec<f64>>,
    pub per_user_se: Vec<f64>,
    /// Set when the combiner's `K × K` system could not be inverted on some
    /// subcarrier (rank-deficient `ĤᴴĤ` for ZF); that subcarrier then
    /// contributes zero SINR.
    pub zf_singular: bool,
}

impl SeOutcome {
    pub fn mean_se(&self) -> f64 {
        self.per_user_se.iter().sum::<f64>() / self.per_user_se.len().max(1) as f64
    }
}

/// Uplink SINR per user and subcarrier when combining with vectors built
/// from the estimates `h_hat`, and the resulting spectral efficiency.
///
/// `h` and `h_hat` hold one `antennas × subcarriers` matrix per user.
pub fn sinr_and_se(
    h: &[ComplexMatrix],
    h_hat: &[ComplexMatrix],
    combiner: Combiner,
    power: f64,
    noise_var: f64,
    prefactor: f64,
) -> Result<SeOutcome> {
    let k_users = h.len();
    if k_users == 0 || h_hat.len() != k_users {
        return Err(Error::DimensionMismatch(format!(
            "{} true channels, {} estimates",
            k_users,
            h_hat.len()
        )));
    }
    let (m, nf) = (h[0].rows(), h[0].cols());
    if h.iter().chain(h_hat).any(|x| x.rows() != m || x.cols() != nf) {
        return Err(Error::DimensionMismatch("channel matrices differ in shape".into()));
    }
    if k_users > m {
        return Err(Error::InvalidConfig(format!("{k_users} users exceed {m} antennas")));
    }
    let mut sinr = vec![vec![0.0; nf]; k_users];
    let mut zf_singular = false;
    for q in 0..nf {
        let hq = ComplexMatrix::from_fn(m, k_users, |r, c| h[c][(r, q)]);
        let eq = ComplexMatrix::from_fn(m, k_users, |r, c| h_hat[c][(r, q)]);
        let v = match combiner {
            Combiner::Mr => Some(eq.clone()),
            Combiner::Zf => {
                let gram = eq.adjoint().matmul(&eq)?;
                hermitian_solve(&gram, &ComplexMatrix::identity(k_users))
                    .ok()
                    .map(|inv| eq.matmul(&inv))
                    .transpose()?
            }
            Combiner::Mmse => {
                // (ρĤĤᴴ + σ²I)⁻¹Ĥ = Ĥ(ρĤᴴĤ + σ²I)⁻¹
                let mut a = eq.adjoint().matmul(&eq)?.scaled(power);
                a.add_diag(noise_var);
                hermitian_solve(&a, &ComplexMatrix::identity(k_users))
                    .ok()
                    .map(|inv| eq.matmul(&inv))
                    .transpose()?
            }
        };
        let Some(v) = v else {
            zf_singular = true;
            continue;
        };
        let gains = v.adjoint().matmul(&hq)?;
        for k in 0..k_users {
            let vnorm: f64 = (0..m).map(|r| v[(r, k)].norm_sqr()).sum();
            if vnorm == 0.0 || !vnorm.is_finite() {
                continue;
            }
            let signal = power * gains[(k, k)].norm_sqr();
            let interference: f64 = (0..k_users)
                .filter(|&i| i != k)
                .map(|i| power * gains[(k, i)].norm_sqr())
                .sum();
            let den = interference + noise_var * vnorm;
            sinr[k][q] = if den > 0.0 { signal / den } else { f64::INFINITY };
        }
    }
    let per_user_se = sinr.iter().map(|s| spectral_efficiency(s, prefactor)).collect();
    Ok(SeOutcome {
        per_user_sinr: sinr,
        per_user_se,
        zf_singular,
    })
}
