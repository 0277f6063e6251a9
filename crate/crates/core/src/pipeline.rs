//! Recording-to-feature-table orchestration shared by the CLI and tests.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::audio::{split_windows, window_recording, LabeledEvent, Recording};
use crate::config::ExtractionConfig;
use crate::denoise::{estimate_noise, spectral_subtract};
use crate::error::{Error, Result};
use crate::features::{FeatureExtractor, FeatureVector};
use crate::scalar::Real;

/// Applies the configured denoising, if any.
pub fn enhance<T: Real>(rec: &Recording<T>, config: &ExtractionConfig) -> Result<Recording<T>> {
    match &config.denoise {
        Some(d) => spectral_subtract(rec, &estimate_noise(rec, d)?, d),
        None => Ok(rec.clone()),
    }
}

#[derive(Clone, Debug)]
pub struct FeatureTable<T> {
    pub rows: Vec<FeatureVector<T>>,
    /// Sub-frames whose LPC recursion failed.
    pub lpc_failures: usize,
}

/// Enhances, windows and extracts every recording. With `labels`, every
/// label must name a recording and every recording must have labels.
pub fn extract_corpus<T: Real>(
    recordings: &[Recording<T>],
    labels: Option<&[LabeledEvent]>,
    config: &ExtractionConfig,
) -> Result<FeatureTable<T>> {
    if let Some(labels) = labels {
        let recorded: BTreeSet<&str> = recordings.iter().map(|r| r.patient_id()).collect();
        let labeled: BTreeSet<&str> = labels.iter().map(|e| e.patient_id.as_str()).collect();
        let unknown: Vec<&str> = labeled.difference(&recorded).copied().collect();
        let unlabeled: Vec<&str> = recorded.difference(&labeled).copied().collect();
        if !unknown.is_empty() || !unlabeled.is_empty() {
            return Err(Error::validation(format!(
                "label/recording patient mismatch: labels without recording {unknown:?}, recordings without labels {unlabeled:?}"
            )));
        }
    }
    let extractor = FeatureExtractor::new(config.features.clone())?;
    let per_recording: Vec<Vec<FeatureVector<T>>> = recordings
        .par_iter()
        .map(|rec| {
            let clean = enhance(rec, config)?;
            let windows = match labels {
                Some(labels) => {
                    let mine: Vec<LabeledEvent> =
                        labels.iter().filter(|e| e.patient_id == rec.patient_id()).cloned().collect();
                    window_recording(&clean, &mine)?
                }
                None => split_windows(&clean),
            };
            windows.iter().map(|w| extractor.extract(w)).collect()
        })
        .collect::<Result<_>>()?;
    Ok(FeatureTable {
        rows: per_recording.into_iter().flatten().collect(),
        lpc_failures: extractor.lpc_failures(),
    })
}
