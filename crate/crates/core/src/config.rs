//! Run configuration: one TOML document covering distillation, the prompt
//! template, model profiles, the embedder, and batch parameters.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::distill::DistillationConfig;
use crate::gateway::{ApiKey, ModelProfile};
use crate::summarize::PromptTemplate;

/// Environment variable that overrides every profile's API key.
pub const API_KEY_ENV: &str = "MALSUM_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default)]
    pub distillation: DistillationConfig,
    #[serde(default)]
    pub template: PromptTemplate,
    /// Chat-completion profiles; one summary is generated per profile per
    /// sample.
    pub profiles: Vec<ModelProfile>,
    /// Profile used for every embedding request.
    pub embedder_profile: ModelProfile,
    #[serde(default = "default_keyphrase_k")]
    pub keyphrase_k: usize,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_keyphrase_k() -> usize {
    10
}

fn default_parallelism() -> usize {
    4
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl RunConfig {
    pub fn from_toml_str(raw: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(raw)?)
    }

    /// Read and parse a config file, then apply the [`API_KEY_ENV`]
    /// override to every profile.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let raw = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config = Self::from_toml_str(&raw)?;
        if let Ok(key) = std::env::var(API_KEY_ENV) {
            if !key.is_empty() {
                let key = ApiKey::new(key);
                for profile in &mut config.profiles {
                    profile.api_key = Some(key.clone());
                }
                config.embedder_profile.api_key = Some(key);
            }
        }
        Ok(config)
    }

    /// Check every invariant; the message names the offending field.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.distillation
            .validate()
            .map_err(ConfigError::Invalid)?;
        self.template.validate().map_err(ConfigError::Invalid)?;
        if self.profiles.is_empty() {
            return Err(ConfigError::Invalid(
                "profiles must contain at least one model profile".into(),
            ));
        }
        for profile in &self.profiles {
            profile.validate().map_err(ConfigError::Invalid)?;
        }
        self.embedder_profile
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("embedder_{e}")))?;
        if self.keyphrase_k == 0 {
            return Err(ConfigError::Invalid(
                "keyphrase_k must be at least 1".into(),
            ));
        }
        if self.parallelism == 0 {
            return Err(ConfigError::Invalid(
                "parallelism must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Stable hash of the effective configuration, recorded with every
    /// evaluation record.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&canonical);
        hex::encode(digest)[..16].to_string()
    }

    /// A ready-to-run offline configuration backed by the mock backend.
    pub fn offline(model_names: &[&str], output_dir: PathBuf) -> Self {
        Self {
            distillation: DistillationConfig::default(),
            template: PromptTemplate::default(),
            profiles: model_names
                .iter()
                .map(|name| ModelProfile::offline(*name))
                .collect(),
            embedder_profile: ModelProfile::offline("mock-embedder"),
            keyphrase_k: default_keyphrase_k(),
            parallelism: default_parallelism(),
            output_dir,
        }
    }
}

/// Flatten the profile facts worth persisting with a record.
pub fn profile_meta(profile: &ModelProfile) -> BTreeMap<String, serde_json::Value> {
    let mut meta = BTreeMap::new();
    meta.insert(
        "quantization_hint".to_string(),
        match profile.quantization_hint {
            Some(hint) => serde_json::Value::String(hint.as_str().to_string()),
            None => serde_json::Value::Null,
        },
    );
    meta
}
