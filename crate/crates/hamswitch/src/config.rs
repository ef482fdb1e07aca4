//! Run configuration: a strict TOML schema (unknown keys rejected) mapped
//! onto the kernel model types, with field-named validation errors.

use hamswitch_core::model::{
    B1Family, B2Family, CoefficientSet, ModelSpec, RateShape, RateSpec, RegimeCoefficients,
    SigmaFamily,
};
use hamswitch_core::segment::{HistoryMap, Segment, TailSpec};
use hamswitch_core::Regime;
use serde::Deserialize;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error in {path}:\n{message}")]
    Parse { path: String, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("invalid config: {0}")]
    Model(#[from] hamswitch_core::CoreError),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub initial: InitialSection,
    pub simulation: SimulationSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub zvonkin: ZvonkinSection,
    #[serde(default)]
    pub validation: ValidationSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    pub decay_rate: f64,
    pub a: f64,
    pub b: f64,
    /// Declared (H1) Lipschitz constant; defaults to the family value.
    pub lipschitz_l1: Option<f64>,
    /// Declared (A2) Hölder constant; defaults to the sharp family value.
    pub holder_l2: Option<f64>,
    pub regime: Vec<RegimeSection>,
    pub rates: RatesSection,
}

fn default_dimension() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeSection {
    pub b1: B1Config,
    pub b2: B2Config,
    pub sigma: SigmaConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum B1Config {
    Zero,
    DiscreteLag { scale: f64, lag: f64 },
    WeightedIntegral {
        scale: f64,
        weight_rate: f64,
        map: MapConfig,
    },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapConfig {
    Identity,
    Tanh,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum B2Config {
    Zero,
    Constant { value: Vec<f64> },
    SignedPower {
        beta: f64,
        alpha: f64,
        #[serde(default = "default_clip_radius")]
        clip_radius: f64,
    },
}

fn default_clip_radius() -> f64 {
    1000.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SigmaConfig {
    Constant { value: f64 },
    Cosine { base: f64, modulation: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesSection {
    pub c: Vec<Vec<f64>>,
    pub beta: Vec<Vec<f64>>,
    pub shape: ShapeConfig,
    /// Declared uniform bound H; defaults to the tightest valid value.
    pub bound: Option<f64>,
    /// Declared rate-Lipschitz constant K; defaults to the family value.
    pub lipschitz: Option<f64>,
    /// Optional dominating-matrix override (entrywise at or above the
    /// family supremum).
    pub q_hat: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeConfig {
    One,
    InverseQuadratic,
    ExpDecay,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub tail: TailConfig,
    /// Optional node rows `[theta, components...]`; times nonpositive,
    /// ascending, ending at 0.
    pub nodes: Option<Vec<Vec<f64>>>,
    /// 1-based regime label.
    pub regime: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TailConfig {
    Zero,
    Constant { value: Vec<f64> },
    ExpGrowth { value: Vec<f64> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub horizon: f64,
    pub step: f64,
    #[serde(default = "default_paths")]
    pub paths: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub mode: ModeConfig,
    #[serde(default = "default_true")]
    pub include_b2: bool,
}

fn default_paths() -> u64 {
    10_000
}

fn default_seed() -> u64 {
    42
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum ModeConfig {
    Markovian,
    #[default]
    StateDependent,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<String>,
    #[serde(default)]
    pub trace: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZvonkinSection {
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
    #[serde(default = "default_extent")]
    pub x_max: f64,
    #[serde(default = "default_extent")]
    pub y_max: f64,
    #[serde(default = "default_nx")]
    pub nx: usize,
    #[serde(default = "default_ny")]
    pub ny: usize,
    /// 1-based regime label.
    #[serde(default = "default_one")]
    pub regime: usize,
}

fn default_lambdas() -> Vec<f64> {
    vec![1.0, 10.0, 100.0]
}

fn default_extent() -> f64 {
    4.0
}

fn default_nx() -> usize {
    21
}

fn default_ny() -> usize {
    321
}

fn default_one() -> usize {
    1
}

impl Default for ZvonkinSection {
    fn default() -> Self {
        ZvonkinSection {
            lambdas: default_lambdas(),
            x_max: default_extent(),
            y_max: default_extent(),
            nx: default_nx(),
            ny: default_ny(),
            regime: 1,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationSection {
    /// Paths per validation suite (default 20000).
    pub paths: Option<u64>,
    /// Step override for the suites.
    pub step: Option<f64>,
    /// Perturbation ladder for the continuity and Feller suites.
    pub ladder: Option<Vec<f64>>,
    /// Horizon for the Girsanov transfer suite (default 0.5).
    pub girsanov_horizon: Option<f64>,
}

/// A fully validated run: the raw config plus the constructed model and
/// initial condition.
pub struct LoadedRun {
    pub config: RunConfig,
    pub model: ModelSpec,
    pub initial: Segment,
    pub initial_regime: Regime,
}

pub fn load_config(path: &Path) -> Result<LoadedRun, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let config: RunConfig = toml::from_str(&text).map_err(|e| ConfigError::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let (model, initial, initial_regime) = build_model(&config)?;
    Ok(LoadedRun {
        config,
        model,
        initial,
        initial_regime,
    })
}

pub fn build_model(config: &RunConfig) -> Result<(ModelSpec, Segment, Regime), ConfigError> {
    let m = &config.model;
    let d = m.dimension;
    if d == 0 {
        return Err(ConfigError::Invalid(
            "model.dimension must be at least 1".into(),
        ));
    }
    if !(config.simulation.step > 0.0) {
        return Err(ConfigError::Invalid(format!(
            "simulation.step must be positive, got {}",
            config.simulation.step
        )));
    }
    if !(config.simulation.horizon > 0.0) {
        return Err(ConfigError::Invalid(format!(
            "simulation.horizon must be positive, got {}",
            config.simulation.horizon
        )));
    }
    if config.simulation.paths == 0 {
        return Err(ConfigError::Invalid(
            "simulation.paths must be at least 1".into(),
        ));
    }
    let states = m.regime.len();
    if states == 0 {
        return Err(ConfigError::Invalid(
            "model.regime must list at least one regime".into(),
        ));
    }
    for (idx, row) in m.rates.c.iter().enumerate() {
        for (jdx, &v) in row.iter().enumerate() {
            if idx != jdx && v < 0.0 {
                return Err(ConfigError::Invalid(format!(
                    "model.rates.c[{}][{}] must be nonnegative, got {v}",
                    idx + 1,
                    jdx + 1
                )));
            }
        }
    }
    if m.rates.c.len() != states {
        return Err(ConfigError::Invalid(format!(
            "model.rates.c is {}x? but the model lists {states} regimes",
            m.rates.c.len()
        )));
    }

    let mut regimes = Vec::with_capacity(states);
    for (idx, r) in m.regime.iter().enumerate() {
        let b1 = match &r.b1 {
            B1Config::Zero => B1Family::Zero,
            B1Config::DiscreteLag { scale, lag } => B1Family::DiscreteLag {
                scale: *scale,
                lag: *lag,
            },
            B1Config::WeightedIntegral {
                scale,
                weight_rate,
                map,
            } => B1Family::WeightedIntegral {
                scale: *scale,
                weight_rate: *weight_rate,
                map: match map {
                    MapConfig::Identity => HistoryMap::Identity,
                    MapConfig::Tanh => HistoryMap::Tanh,
                },
            },
        };
        let b2 = match &r.b2 {
            B2Config::Zero => B2Family::Zero,
            B2Config::Constant { value } => {
                if value.len() != d {
                    return Err(ConfigError::Invalid(format!(
                        "model.regime[{}].b2.value has {} components, expected {d}",
                        idx + 1,
                        value.len()
                    )));
                }
                B2Family::Constant(value.clone())
            }
            B2Config::SignedPower {
                beta,
                alpha,
                clip_radius,
            } => B2Family::SignedPower {
                beta: *beta,
                alpha: *alpha,
                clip_radius: *clip_radius,
            },
        };
        let sigma = match &r.sigma {
            SigmaConfig::Constant { value } => SigmaFamily::Constant { value: *value },
            SigmaConfig::Cosine { base, modulation } => SigmaFamily::Cosine {
                base: *base,
                modulation: *modulation,
            },
        };
        regimes.push(RegimeCoefficients { b1, b2, sigma });
    }
    let coefficients = CoefficientSet::new(m.a, m.b, d, regimes, m.lipschitz_l1, m.holder_l2)?;
    let shape = match m.rates.shape {
        ShapeConfig::One => RateShape::One,
        ShapeConfig::InverseQuadratic => RateShape::InvQuadratic,
        ShapeConfig::ExpDecay => RateShape::ExpDecay,
    };
    let rates = RateSpec::new(
        m.rates.c.clone(),
        m.rates.beta.clone(),
        shape,
        m.rates.bound,
        m.rates.lipschitz,
        m.rates.q_hat.clone(),
    )?;
    let model = ModelSpec::new(coefficients, rates, m.decay_rate)?;

    // Initial history.
    let tail = match &config.initial.tail {
        TailConfig::Zero => TailSpec::Zero,
        TailConfig::Constant { value } => TailSpec::Constant(value.clone()),
        TailConfig::ExpGrowth { value } => TailSpec::ExpGrowth(value.clone()),
    };
    let nodes = match &config.initial.nodes {
        None => Vec::new(),
        Some(rows) => {
            let mut nodes = Vec::with_capacity(rows.len());
            for (i, row) in rows.iter().enumerate() {
                if row.len() != 1 + 2 * d {
                    return Err(ConfigError::Invalid(format!(
                        "initial.nodes[{i}] has {} entries, expected 1 + 2 x {d}",
                        row.len()
                    )));
                }
                nodes.push((row[0], row[1..].to_vec()));
            }
            nodes
        }
    };
    let initial = Segment::new(m.decay_rate, d, tail, nodes)?;
    if config.initial.regime == 0 || config.initial.regime > states {
        return Err(ConfigError::Invalid(format!(
            "initial.regime is {} but the model has regimes 1..={states}",
            config.initial.regime
        )));
    }
    if config.zvonkin.regime == 0 || config.zvonkin.regime > states {
        return Err(ConfigError::Invalid(format!(
            "zvonkin.regime is {} but the model has regimes 1..={states}",
            config.zvonkin.regime
        )));
    }
    Ok((model, initial, config.initial.regime - 1))
}
