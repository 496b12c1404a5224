//! JSON experiment description and its resolution into runnable settings.

use serde::{Deserialize, Serialize};

use crate::channels::{ChannelKind, ChannelModelSpec, PowerDelayProfile, SUBCARRIER_SPACING_HZ};
use crate::decoder::{preset_epochs, AdamConfig, DecoderArch, FitConfig, TABLE_MASSIVE, TABLE_SINGLE_ANTENNA};
use crate::error::{Error, Result};
use crate::signal::{ContaminationKind, ContaminationSpec, DataFill, PilotArrangement};

use super::metrics::{Combiner, SePrefactor};

/// Training-set size for the sample-covariance MMSE baseline.
pub const DEFAULT_TRAINING: usize = 500;

/// A scalar or a list of scalars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub channel: ChannelConfig,
    pub grid: GridConfig,
    pub noise: NoiseConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contamination: Option<ContaminationConfig>,
    pub estimators: Vec<EstimatorConfig>,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub se: SeConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub kind: ChannelKind,
    /// Spatial correlation; defaults to 0.5 for `kronecker`, 0 otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    /// Defaults to EPA.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pdp: Option<PowerDelayProfile>,
    #[serde(default = "default_spacing")]
    pub subcarrier_spacing_hz: f64,
}

fn default_spacing() -> f64 {
    SUBCARRIER_SPACING_HZ
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub m: usize,
    #[serde(default = "default_grid_side")]
    pub n_f: usize,
    #[serde(default = "default_grid_side")]
    pub n: usize,
    #[serde(default = "default_one")]
    pub k_users: usize,
    /// A list runs every estimator once per pilot length; ids then gain an
    /// `_np<N>` suffix.
    #[serde(default = "default_np")]
    pub n_p: OneOrMany<usize>,
    #[serde(default = "default_arrangement")]
    pub arrangement: PilotArrangement,
    #[serde(default)]
    pub data_fill: DataFill,
}

fn default_grid_side() -> usize {
    64
}

fn default_one() -> usize {
    1
}

fn default_np() -> OneOrMany<usize> {
    OneOrMany::One(1)
}

fn default_arrangement() -> PilotArrangement {
    PilotArrangement::BlockSymbol
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub snr_db: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContaminationConfig {
    #[serde(flatten)]
    pub kind: ContaminationKind,
    /// Signal-to-interference ratio(s) in dB; each value is a sweep point.
    #[serde(default = "default_sir")]
    pub sir_db: OneOrMany<f64>,
}

fn default_sir() -> OneOrMany<f64> {
    OneOrMany::One(6.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Ls,
    MmseGenie,
    MmseSample,
    Dce,
}

impl EstimatorKind {
    fn infer(id: &str) -> Option<Self> {
        match id {
            "ls" => Some(Self::Ls),
            "mmse_genie" => Some(Self::MmseGenie),
            "mmse_sample" => Some(Self::MmseSample),
            _ if id.starts_with("dce") => Some(Self::Dce),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    pub id: String,
    /// Inferred from `id` when absent (`ls`, `mmse_genie`, `mmse_sample`, `dce*`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<EstimatorKind>,
    /// Decoder preset `k8`, `k16`, `k32` or `k64`: width plus the matching
    /// epoch budget for the antenna count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<EstimatorParams>,
}

impl EstimatorConfig {
    pub fn new(id: &str) -> Self {
        Self {
            id: id.into(),
            kind: None,
            preset: None,
            params: None,
        }
    }

    pub fn dce_preset(id: &str, preset: &str) -> Self {
        Self {
            preset: Some(preset.into()),
            ..Self::new(id)
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden_layers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_scale: Option<f64>,
    /// Training-set size for `mmse_sample`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub training: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; results do not depend on it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

fn default_trials() -> usize {
    20
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            trials: default_trials(),
            seed: 0,
            threads: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeConfig {
    #[serde(default)]
    pub enable: bool,
    #[serde(default = "default_combiners")]
    pub combiners: Vec<Combiner>,
    #[serde(default)]
    pub prefactor: SePrefactor,
}

fn default_combiners() -> Vec<Combiner> {
    Combiner::ALL.to_vec()
}

impl Default for SeConfig {
    fn default() -> Self {
        Self {
            enable: false,
            combiners: default_combiners(),
            prefactor: SePrefactor::default(),
        }
    }
}

/// A fully specified estimator.
#[derive(Debug, Clone, PartialEq)]
pub enum EstimatorSpec {
    Ls,
    MmseGenie,
    MmseSample { training: usize },
    Dce { arch: DecoderArch, fit: FitConfig },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedEstimator {
    pub id: String,
    pub spec: EstimatorSpec,
}

fn invalid(key: impl AsRef<str>, msg: impl AsRef<str>) -> Error {
    Error::InvalidConfig(format!("{}: {}", key.as_ref(), msg.as_ref()))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            invalid(if path.is_empty() { "config".into() } else { path }, e.inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn channel_spec(&self) -> ChannelModelSpec {
        let kind = self.channel.kind;
        let mut spec = ChannelModelSpec::new(kind, self.grid.m, self.grid.n_f, self.grid.n);
        if let Some(rho) = self.channel.rho {
            spec.rho = rho;
        }
        if let Some(pdp) = &self.channel.pdp {
            spec.pdp = pdp.clone();
        }
        spec.subcarrier_spacing_hz = self.channel.subcarrier_spacing_hz;
        spec
    }

    pub fn pilot_lengths(&self) -> Vec<usize> {
        self.grid.n_p.to_vec()
    }

    /// One spec per SIR point; a single `none` spec without contamination.
    pub fn contamination_points(&self) -> Vec<ContaminationSpec> {
        match &self.contamination {
            None => vec![ContaminationSpec::none()],
            Some(c) if c.kind == ContaminationKind::None => vec![ContaminationSpec::none()],
            Some(c) => c
                .sir_db
                .to_vec()
                .into_iter()
                .map(|sir_db| ContaminationSpec {
                    kind: c.kind.clone(),
                    sir_db,
                })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        if g.m == 0 || g.n_f == 0 || g.n == 0 {
            return Err(invalid("grid", "m, n_f and n must be at least 1"));
        }
        if g.k_users == 0 {
            return Err(invalid("grid.k_users", "must be at least 1"));
        }
        let nps = self.pilot_lengths();
        if nps.is_empty() || nps.iter().any(|&p| p == 0 || p * g.k_users > g.n) {
            return Err(invalid("grid.n_p", format!("every pilot length must be in 1..={}", g.n / g.k_users)));
        }
        self.channel_spec()
            .validate()
            .map_err(|e| invalid("channel", e.to_string()))?;
        if self.noise.snr_db.is_empty() || self.noise.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(invalid("noise.snr_db", "needs at least one finite value"));
        }
        if let Some(c) = &self.contamination {
            if c.sir_db.to_vec().is_empty() || c.sir_db.to_vec().iter().any(|s| !s.is_finite()) {
                return Err(invalid("contamination.sir_db", "needs at least one finite value"));
            }
            for spec in self.contamination_points() {
                spec.validate(g.n_f, g.n).map_err(|e| invalid("contamination", e.to_string()))?;
            }
        }
        if self.estimators.is_empty() {
            return Err(invalid("estimators", "list is empty"));
        }
        let mut ids = std::collections::HashSet::new();
        for (i, e) in self.estimators.iter().enumerate() {
            if !ids.insert(e.id.as_str()) {
                return Err(invalid(format!("estimators[{i}].id"), format!("duplicate id {:?}", e.id)));
            }
        }
        self.resolve_estimators()?;
        if self.run.trials == 0 {
            return Err(invalid("run.trials", "must be at least 1"));
        }
        if self.run.threads == Some(0) {
            return Err(invalid("run.threads", "must be at least 1"));
        }
        if self.se.enable {
            if self.se.combiners.is_empty() {
                return Err(invalid("se.combiners", "list is empty"));
            }
            if g.k_users > g.m {
                return Err(invalid("grid.k_users", "spectral efficiency needs k_users <= m"));
            }
        }
        Ok(())
    }

    pub fn resolve_estimators(&self) -> Result<Vec<ResolvedEstimator>> {
        self.estimators
            .iter()
            .enumerate()
            .map(|(i, e)| self.resolve_one(i, e))
            .collect()
    }

    fn resolve_one(&self, i: usize, e: &EstimatorConfig) -> Result<ResolvedEstimator> {
        let key = |f: &str| format!("estimators[{i}].{f}");
        let kind = match e.kind {
            Some(k) => k,
            None => EstimatorKind::infer(&e.id)
                .ok_or_else(|| invalid(key("kind"), format!("cannot infer estimator kind from id {:?}", e.id)))?,
        };
        let p = e.params.clone().unwrap_or_default();
        let spec = match kind {
            EstimatorKind::Ls => EstimatorSpec::Ls,
            EstimatorKind::MmseGenie => EstimatorSpec::MmseGenie,
            EstimatorKind::MmseSample => {
                let training = p.training.unwrap_or(DEFAULT_TRAINING);
                if training == 0 {
                    return Err(invalid(key("params.training"), "must be at least 1"));
                }
                EstimatorSpec::MmseSample { training }
            }
            EstimatorKind::Dce => {
                let (mut width, mut epochs) = (None, None);
                if let Some(name) = &e.preset {
                    let k = name
                        .strip_prefix('k')
                        .and_then(|s| s.parse::<usize>().ok())
                        .ok_or_else(|| invalid(key("preset"), format!("unknown preset {name:?}")))?;
                    let table = if self.grid.m > 1 { &TABLE_MASSIVE } else { &TABLE_SINGLE_ANTENNA };
                    if !table.iter().any(|row| row.width == k) {
                        return Err(invalid(key("preset"), format!("unknown preset {name:?} (k8, k16, k32, k64)")));
                    }
                    width = Some(k);
                    epochs = Some(preset_epochs(self.grid.m, k));
                }
                let width = p
                    .width
                    .or(width)
                    .ok_or_else(|| invalid(key("params.width"), "dce needs a preset or params.width"))?;
                let epochs = p
                    .epochs
                    .or(epochs)
                    .unwrap_or_else(|| preset_epochs(self.grid.m, width));
                let layers = p.hidden_layers.unwrap_or(6);
                let arch = DecoderArch::new(layers, width, 2 * self.grid.m, self.grid.n_f, self.grid.n)
                    .map_err(|err| invalid(key("params"), err.to_string()))?;
                if epochs == 0 {
                    return Err(invalid(key("params.epochs"), "must be at least 1"));
                }
                let mut fit = FitConfig::new(epochs, p.lr.unwrap_or(AdamConfig::default().lr));
                if let Some(s) = p.input_scale {
                    fit.input_scale = s;
                }
                if !(fit.adam.lr > 0.0) || !(fit.input_scale > 0.0) {
                    return Err(invalid(key("params"), "lr and input_scale must be positive"));
                }
                EstimatorSpec::Dce { arch, fit }
            }
        };
        Ok(ResolvedEstimator { id: e.id.clone(), spec })
    }

    /// The same experiment with every default written out.
    pub fn normalized(&self) -> Result<Self> {
        self.validate()?;
        let mut out = self.clone();
        let spec = self.channel_spec();
        out.channel.rho = Some(spec.rho);
        out.channel.pdp = Some(spec.pdp);
        let resolved = self.resolve_estimators()?;
        for (e, r) in out.estimators.iter_mut().zip(resolved) {
            let (kind, params) = match r.spec {
                EstimatorSpec::Ls => (EstimatorKind::Ls, None),
                EstimatorSpec::MmseGenie => (EstimatorKind::MmseGenie, None),
                EstimatorSpec::MmseSample { training } => (
                    EstimatorKind::MmseSample,
                    Some(EstimatorParams {
                        training: Some(training),
                        ..Default::default()
                    }),
                ),
                EstimatorSpec::Dce { arch, fit } => (
                    EstimatorKind::Dce,
                    Some(EstimatorParams {
                        width: Some(arch.width),
                        hidden_layers: Some(arch.hidden_layers),
                        epochs: Some(fit.epochs),
                        lr: Some(fit.adam.lr),
                        input_scale: Some(fit.input_scale),
                        training: None,
                    }),
                ),
            };
            e.kind = Some(kind);
            e.params = params;
        }
        Ok(out)
    }
}
