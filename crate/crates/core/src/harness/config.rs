use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::seeds::SeedSet;
use crate::mcts::SearchConfig;
use crate::policy::{PolicyArch, TrainConfig};
use crate::style::{AeConfig, GRID};
use crate::synthetic::SynthConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    /// Generic embedding, argmax policy.
    Base,
    /// Player embedding, argmax policy.
    Finetuned,
    /// Player embedding, most visited move after search.
    FinetunedMcts,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Base, Variant::Finetuned, Variant::FinetunedMcts];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Base => "base",
            Variant::Finetuned => "finetuned",
            Variant::FinetunedMcts => "finetuned+mcts",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown variant `{s}` (base | finetuned | finetuned+mcts)")))
    }
}

impl Serialize for Variant {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Variant {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicySection {
    pub arch: PolicyArch,
    pub pretrain: TrainConfig,
    pub finetune: TrainConfig,
}

impl Default for PolicySection {
    fn default() -> Self {
        PolicySection {
            arch: PolicyArch::default(),
            pretrain: TrainConfig::pretrain(),
            finetune: TrainConfig::finetune(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricConfig {
    pub grid: usize,
    pub projector: String,
    pub bootstrap_resamples: usize,
    /// Model moves generated per test position for alignment.
    pub samples: usize,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            grid: GRID,
            projector: "pca".into(),
            bootstrap_resamples: 100,
            samples: 1,
        }
    }
}

/// Everything an experiment run needs. Section `seed` fields are
/// overwritten from the root seed by [`ExperimentConfig::resolved`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub players: Vec<String>,
    pub variants: Vec<Variant>,
    pub data_dir: PathBuf,
    pub output_dir: PathBuf,
    pub split_ratio: f64,
    pub policy: PolicySection,
    pub mcts: SearchConfig,
    pub metric: MetricConfig,
    pub autoencoder: AeConfig,
    pub synthetic: SynthConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            players: Vec::new(),
            variants: Variant::ALL.to_vec(),
            data_dir: PathBuf::from("data"),
            output_dir: PathBuf::from("out"),
            split_ratio: 0.8,
            policy: PolicySection::default(),
            mcts: SearchConfig::default(),
            metric: MetricConfig::default(),
            autoencoder: AeConfig::default(),
            synthetic: SynthConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                Error::MissingArtifact(path.to_path_buf())
            } else {
                Error::io(format!("reading {}", path.display()), e)
            }
        })?;
        Self::from_toml(&text)
    }

    /// TOML form with section seeds zeroed: they are re-derived from the
    /// root seed on load and may exceed TOML's i64 range.
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(&self.without_section_seeds()).expect("config is always serializable")
    }

    fn section_seeds(&self) -> [u64; 5] {
        [
            self.policy.pretrain.seed,
            self.policy.finetune.seed,
            self.autoencoder.seed,
            self.mcts.seed,
            self.synthetic.seed,
        ]
    }

    fn set_section_seeds(&mut self, s: [u64; 5]) {
        self.policy.pretrain.seed = s[0];
        self.policy.finetune.seed = s[1];
        self.autoencoder.seed = s[2];
        self.mcts.seed = s[3];
        self.synthetic.seed = s[4];
    }

    fn without_section_seeds(&self) -> Self {
        let mut c = self.clone();
        c.set_section_seeds([0; 5]);
        c
    }

    pub fn seeds(&self) -> SeedSet {
        SeedSet::new(self.seed)
    }

    /// Copy with every section seed derived from the root seed.
    pub fn resolved(&self) -> Self {
        let s = self.seeds();
        let mut c = self.clone();
        c.policy.pretrain.seed = s.init;
        c.policy.pretrain.freeze_backbone = false;
        c.policy.finetune.seed = SeedSet::child(s.init, "finetune");
        c.policy.finetune.freeze_backbone = true;
        c.autoencoder.seed = SeedSet::child(s.init, "autoencoder");
        c.mcts.seed = s.search;
        c.synthetic.seed = SeedSet::child(self.seed, "synthetic");
        c
    }

    pub fn validate(&self) -> Result<()> {
        if self.players.is_empty() {
            return Err(Error::Config("at least one player is required".into()));
        }
        if self.variants.is_empty() {
            return Err(Error::Config("at least one variant is required".into()));
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(Error::Config(format!("split_ratio must lie in (0, 1), got {}", self.split_ratio)));
        }
        if self.metric.grid == 0 || self.metric.samples == 0 {
            return Err(Error::Config("metric.grid and metric.samples must be >= 1".into()));
        }
        if self.policy.pretrain.epochs == 0 || self.policy.finetune.epochs == 0 {
            return Err(Error::Config("training epochs must be >= 1".into()));
        }
        self.policy.pretrain.validate()?;
        self.policy.finetune.validate()?;
        self.mcts.validate()?;
        Ok(())
    }

    /// Applies one `key=value` override using the config file's key path,
    /// e.g. `mcts.simulations=50` or `players=["a","b"]`.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
        let key = key.trim();
        let value = value.trim();
        let parsed: toml::Value = match toml::from_str::<toml::Table>(&format!("v = {value}")) {
            Ok(mut t) => t.remove("v").expect("key present"),
            Err(_) => toml::Value::String(value.to_string()),
        };
        let seeds = self.section_seeds();
        let mut doc =
            toml::Value::try_from(self.without_section_seeds()).map_err(|e| Error::Config(e.to_string()))?;
        let mut slot = &mut doc;
        let parts: Vec<&str> = key.split('.').collect();
        for (i, part) in parts.iter().enumerate() {
            let table = slot
                .as_table_mut()
                .ok_or_else(|| Error::Config(format!("`{key}` does not name a config key")))?;
            if i + 1 == parts.len() {
                table.insert(part.to_string(), parsed.clone());
                break;
            }
            slot = table
                .get_mut(*part)
                .ok_or_else(|| Error::Config(format!("unknown config section `{part}` in `{key}`")))?;
        }
        *self = doc.try_into().map_err(|e: toml::de::Error| Error::Config(format!("{key}: {e}")))?;
        self.set_section_seeds(seeds);
        Ok(())
    }
}
