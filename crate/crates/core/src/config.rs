//! Scenario configuration (TOML), with every default taken from the
//! reference experiment.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::avs::DqnParams;
use crate::behavior::{behavior_table, BehaviorKind, BehaviorWeights};
use crate::humans::CostUnit;
use crate::net::{GridParams, PathGenParams};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid `{field}`: {msg}")]
    Invalid { field: &'static str, msg: String },
}

fn invalid(field: &'static str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, msg: msg.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    /// Master seed; repetition seeds derive from it.
    pub seed: u64,
    pub repetitions: usize,
    /// One of the six named behaviors, or `custom` together with `custom_phi`.
    pub behavior: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub custom_phi: Option<[f64; 4]>,
    /// Registered simulator name.
    pub simulator: String,
    /// Unit of travel times fed to the reward function.
    pub reward_unit: CostUnit,
    /// Divide warmth values by the observation window before feeding the network.
    pub normalize_warmth: bool,
    pub network: NetworkConfig,
    pub routes: RouteConfig,
    pub population: PopulationConfig,
    pub phases: PhaseConfig,
    pub windows: WindowConfig,
    pub dqn: DqnParams,
    pub summary: SummaryConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 0,
            repetitions: 3,
            behavior: "selfish".into(),
            custom_phi: None,
            simulator: "meso".into(),
            reward_unit: CostUnit::Minutes,
            normalize_warmth: false,
            network: NetworkConfig::default(),
            routes: RouteConfig::default(),
            population: PopulationConfig::default(),
            phases: PhaseConfig::default(),
            windows: WindowConfig::default(),
            dqn: DqnParams::default(),
            summary: SummaryConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkConfig {
    /// Edge-list file; when absent a synthetic grid is generated.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    pub grid: GridParams,
    /// Seed of the grid's randomized speeds.
    pub grid_seed: u64,
    /// Defaults to the two left grid corners.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub origins: Option<Vec<String>>,
    /// Defaults to the two right grid corners.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub destinations: Option<Vec<String>>,
}


#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RouteConfig {
    /// Route-set file; when absent routes are generated.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    pub seed: u64,
    pub generation: PathGenParams,
}


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PopulationConfig {
    /// Population file; when absent drivers are sampled from the seed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    pub size: usize,
    pub av_count: usize,
    pub start_mean_s: f64,
    pub start_sd_s: f64,
    pub alpha: f64,
    pub beta_min: f64,
    pub beta_max: f64,
    pub cost_unit: CostUnit,
}

impl Default for PopulationConfig {
    fn default() -> Self {
        PopulationConfig {
            file: None,
            size: 1200,
            av_count: 377,
            start_mean_s: 1800.0,
            start_sd_s: 600.0,
            alpha: 0.2,
            beta_min: -0.8,
            beta_max: -0.2,
            cost_unit: CostUnit::Minutes,
        }
    }
}

/// Episode numbers are 1-based; Settle always starts at episode 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhaseConfig {
    pub shock_start: usize,
    pub adapt_start: usize,
    pub total_episodes: usize,
}

impl Default for PhaseConfig {
    fn default() -> Self {
        PhaseConfig { shock_start: 1000, adapt_start: 4000, total_episodes: 6000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindowConfig {
    pub observation_s: f64,
    pub reward_s: f64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig { observation_s: 300.0, reward_s: 300.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SummaryConfig {
    /// Episodes at the end of Settle and of Adapt compared by the summary.
    pub window: usize,
}

impl Default for SummaryConfig {
    fn default() -> Self {
        SummaryConfig { window: 100 }
    }
}

impl ScenarioConfig {
    pub fn behavior_weights(&self) -> Result<BehaviorWeights, ConfigError> {
        if self.behavior == BehaviorKind::Custom.as_str() {
            let phi = self
                .custom_phi
                .ok_or_else(|| invalid("custom_phi", "required when behavior = \"custom\""))?;
            if phi.iter().any(|v| !v.is_finite()) {
                return Err(invalid("custom_phi", "weights must be finite"));
            }
            return Ok(BehaviorWeights::custom(phi));
        }
        behavior_table(&self.behavior).map_err(|e| invalid("behavior", e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.behavior_weights()?;
        let p = &self.phases;
        if p.shock_start < 1 {
            return Err(invalid("phases.shock_start", "must be at least 1"));
        }
        if p.shock_start >= p.adapt_start {
            return Err(invalid("phases.shock_start", "must be smaller than phases.adapt_start"));
        }
        if p.adapt_start > p.total_episodes {
            return Err(invalid("phases.adapt_start", "must not exceed phases.total_episodes"));
        }
        let pop = &self.population;
        if pop.size == 0 {
            return Err(invalid("population.size", "must be positive"));
        }
        if pop.av_count >= pop.size {
            return Err(invalid("population.av_count", "must be smaller than population.size"));
        }
        if !(pop.alpha > 0.0 && pop.alpha <= 1.0) {
            return Err(invalid("population.alpha", "must lie in (0, 1]"));
        }
        if !(pop.beta_min <= pop.beta_max && pop.beta_max <= 0.0) {
            return Err(invalid("population.beta_min", "need beta_min <= beta_max <= 0"));
        }
        if !(pop.start_sd_s > 0.0) {
            return Err(invalid("population.start_sd_s", "must be positive"));
        }
        if !(self.windows.observation_s > 0.0) {
            return Err(invalid("windows.observation_s", "must be positive"));
        }
        if !(self.windows.reward_s > 0.0) {
            return Err(invalid("windows.reward_s", "must be positive"));
        }
        if self.repetitions == 0 {
            return Err(invalid("repetitions", "must be positive"));
        }
        let d = &self.dqn;
        if d.batch_size == 0 || d.batch_size > d.buffer_capacity {
            return Err(invalid("dqn.batch_size", "must be in 1..=dqn.buffer_capacity"));
        }
        if !(d.epsilon_min >= 0.0 && d.epsilon_min <= d.epsilon_start && d.epsilon_start <= 1.0) {
            return Err(invalid("dqn.epsilon_start", "need 0 <= epsilon_min <= epsilon_start <= 1"));
        }
        if !(d.epsilon_decay > 0.0 && d.epsilon_decay <= 1.0) {
            return Err(invalid("dqn.epsilon_decay", "must lie in (0, 1]"));
        }
        if self.routes.generation.count != crate::net::ROUTES_PER_OD {
            return Err(invalid("routes.generation.count", "the action space has exactly 3 routes"));
        }
        if self.summary.window == 0 {
            return Err(invalid("summary.window", "must be positive"));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Parses and validates a TOML document. Absent keys take their defaults;
/// unknown keys are rejected.
pub fn parse_config(document: &str) -> Result<ScenarioConfig, ConfigError> {
    let cfg: ScenarioConfig = toml::from_str(document).map_err(|e| ConfigError::Parse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}
