//! Recording ingestion, label files and 10 s analysis windows.

mod labels;
mod resample;
mod wav;
mod window;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub use labels::{parse_labels, read_labels, validate_events, write_labels};
pub use resample::resample;
pub use wav::{load_recording, load_recording_from_reader, wav_bytes, write_wav};
pub use window::{split_windows, window_count, window_recording, AnalysisWindow};

/// Canonical pipeline sample rate.
pub const SAMPLE_RATE_HZ: u32 = 16_000;
/// Analysis window length in seconds.
pub const WINDOW_SECONDS: f64 = 10.0;
/// Analysis window length in samples at the canonical rate.
pub const WINDOW_SAMPLES: usize = 160_000;

/// Ground-truth annotation class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    OsaSnore,
    SimpleSnore,
    Other,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::OsaSnore, Label::SimpleSnore, Label::Other];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::OsaSnore => "osa_snore",
            Label::SimpleSnore => "simple_snore",
            Label::Other => "other",
        }
    }

    pub(crate) fn slot(self) -> usize {
        match self {
            Label::OsaSnore => 0,
            Label::SimpleSnore => 1,
            Label::Other => 2,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "osa_snore" => Ok(Label::OsaSnore),
            "simple_snore" => Ok(Label::SimpleSnore),
            "other" => Ok(Label::Other),
            _ => Err(Error::validation(format!("unknown label {s:?}"))),
        }
    }
}

/// Mono recording at the canonical 16 kHz rate with amplitudes in [-1, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct Recording<T> {
    patient_id: String,
    samples: Vec<T>,
}

impl<T: Real> Recording<T> {
    /// Wraps samples that are already at 16 kHz.
    pub fn new(patient_id: impl Into<String>, samples: Vec<T>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(pos) = samples
            .iter()
            .position(|x| !x.is_finite() || x.abs() > T::one())
        {
            return Err(Error::validation(format!(
                "sample {pos} is {} (must be finite and within [-1, 1])",
                samples[pos]
            )));
        }
        Ok(Self {
            patient_id: patient_id.into(),
            samples,
        })
    }

    /// Canonicalizes samples recorded at `sample_rate_hz`: resamples to 16 kHz
    /// and clamps to [-1, 1].
    pub fn from_raw(
        patient_id: impl Into<String>,
        samples: &[T],
        sample_rate_hz: u32,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyInput);
        }
        if sample_rate_hz == 0 {
            return Err(Error::validation("sample rate must be positive"));
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::validation("non-finite sample in input"));
        }
        let mut out = resample(samples, sample_rate_hz, SAMPLE_RATE_HZ);
        for x in &mut out {
            *x = x.max(-T::one()).min(T::one());
        }
        Self::new(patient_id, out)
    }

    pub fn patient_id(&self) -> &str {
        &self.patient_id
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<T> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        SAMPLE_RATE_HZ
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / f64::from(SAMPLE_RATE_HZ)
    }
}

/// Time interval on a recording tagged with a class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledEvent {
    pub patient_id: String,
    pub start_s: f64,
    pub end_s: f64,
    pub label: Label,
}

impl LabeledEvent {
    pub fn new(patient_id: impl Into<String>, start_s: f64, end_s: f64, label: Label) -> Self {
        Self {
            patient_id: patient_id.into(),
            start_s,
            end_s,
            label,
        }
    }

    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }
}
