//! Serializable pipeline configuration and its content digest.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifier::LdaConfig;
use crate::denoise::DenoiseConfig;
use crate::evaluation::EvalConfig;
use crate::features::FeatureConfig;

/// Everything that determines the feature values of a window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractionConfig {
    /// Spectral subtraction applied to each recording before windowing.
    pub denoise: Option<DenoiseConfig>,
    pub features: FeatureConfig,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            denoise: Some(DenoiseConfig::default()),
            features: FeatureConfig::default(),
        }
    }
}

impl ExtractionConfig {
    pub fn digest(&self) -> String {
        digest_json(self)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub extraction: ExtractionConfig,
    pub lda: LdaConfig,
    pub evaluation: EvalConfig,
    pub seed: u64,
}

impl PipelineConfig {
    pub fn digest(&self) -> String {
        digest_json(self)
    }
}

/// Hex SHA-256 of the compact JSON encoding.
pub fn digest_json<S: Serialize>(value: &S) -> String {
    let bytes = serde_json::to_vec(value).expect("config serializes");
    hex::encode(Sha256::digest(&bytes))
}
