//! TOML run configuration. Every table is optional; command-line flags win.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Deserialize;

use stlmine::classifier::TreeConfig;
use stlmine::enumeration::GrammarConfig;
use stlmine::miner::MinerConfig;
use stlmine::models::ModelConfig;

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub model: Option<ModelConfig>,
    pub miner: MinerConfig,
    pub classify: ClassifyConfig,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyConfig {
    pub split_ratio: f64,
    pub samples: usize,
    /// Enumerated templates must have fewer nodes than this.
    pub max_length: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub tree: TreeConfig,
    pub grammar: GrammarConfig,
    /// Range of time parameters; defaults to `[0, shortest trace duration]`.
    pub time_range: Option<(f64, f64)>,
    /// Explicit parameter ranges by name; value parameters otherwise span
    /// the observed extent of their signal.
    pub ranges: BTreeMap<String, (f64, f64)>,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            split_ratio: 0.7,
            samples: 8,
            max_length: 5,
            epsilon: 0.01,
            seed: 0,
            tree: TreeConfig::default(),
            grammar: GrammarConfig::default(),
            time_range: None,
            ranges: BTreeMap::new(),
        }
    }
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Config> {
        let Some(path) = path else {
            return Ok(Config::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}
