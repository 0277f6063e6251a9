pub mod audio;
pub mod classifier;
pub mod config;
pub mod denoise;
pub mod dsp;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod pipeline;
pub mod scalar;
pub mod seed;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Recording = audio::Recording<f64>;
pub type FeatureVector = features::FeatureVector<f64>;
pub type FeatureExtractor = features::FeatureExtractor<f64>;
pub type LdaModel = classifier::LdaModel<f64>;
pub type NoiseProfile = denoise::NoiseProfile<f64>;
pub type Corpus = synth::Corpus<f64>;

pub type RecordingF32 = audio::Recording<f32>;
pub type FeatureVectorF32 = features::FeatureVector<f32>;
pub type FeatureExtractorF32 = features::FeatureExtractor<f32>;
pub type LdaModelF32 = classifier::LdaModel<f32>;
pub type NoiseProfileF32 = denoise::NoiseProfile<f32>;
