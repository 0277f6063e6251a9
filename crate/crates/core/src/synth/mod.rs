//! Seeded synthetic corpora: snore-like voiced bursts, breathing noise and
//! ambience, cut into labeled 10 s segments. Also generates feature tables
//! with a planted discriminative column.

mod planted;
mod signal;

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::audio::{self, Label, LabeledEvent, Recording, SAMPLE_RATE_HZ, WINDOW_SAMPLES, WINDOW_SECONDS};
use crate::config::digest_json;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::seed;

pub use planted::{planted_feature_rows, PlantedSpec};

/// Closed interval `[min, max]` with `min < max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub min: f64,
    pub max: f64,
}

impl Span {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        rng.random_range(self.min..=self.max)
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) {
            return Err(Error::validation(format!(
                "{name}: need finite min < max, got [{}, {}]",
                self.min, self.max
            )));
        }
        Ok(())
    }
}

/// Acoustic parameters of one snore class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnoreAcoustics {
    pub f0_hz: Span,
    /// Fraction of time covered by bursts.
    pub duty_cycle: Span,
    pub burst_s: Span,
    pub formants_hz: [f64; 3],
    pub bandwidths_hz: [f64; 3],
    /// Burst level relative to the patient's ambient noise.
    pub snr_db: Span,
    /// Relative level of turbulent noise mixed into the voiced source.
    pub breathiness: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OtherAcoustics {
    /// Probability that an Other segment holds breathing rather than only ambience.
    pub breathing_probability: f64,
    pub breath_s: Span,
    pub pause_s: Span,
    pub lowpass_hz: Span,
    pub snr_db: Span,
    /// Probability that an Other segment also holds short voiced sounds
    /// such as sleep talking.
    pub voice_probability: f64,
    pub voice_f0_hz: Span,
    pub syllable_s: Span,
    pub voice_snr_db: Span,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub n_patients: usize,
    pub windows_per_class_per_patient: usize,
    pub osa_snore: SnoreAcoustics,
    pub simple_snore: SnoreAcoustics,
    pub other: OtherAcoustics,
    /// Relative standard deviation of each patient's formant frequencies.
    pub patient_jitter: f64,
    /// Per-patient ambient noise RMS is drawn from this range.
    pub ambient_rms: Span,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_patients: 10,
            windows_per_class_per_patient: 30,
            osa_snore: SnoreAcoustics {
                f0_hz: Span::new(60.0, 120.0),
                duty_cycle: Span::new(0.2, 0.5),
                burst_s: Span::new(0.8, 1.8),
                formants_hz: [500.0, 1300.0, 2500.0],
                bandwidths_hz: [90.0, 130.0, 180.0],
                snr_db: Span::new(-10.0, 12.0),
                breathiness: 0.3,
            },
            simple_snore: SnoreAcoustics {
                f0_hz: Span::new(90.0, 180.0),
                duty_cycle: Span::new(0.45, 0.75),
                burst_s: Span::new(0.8, 1.8),
                formants_hz: [550.0, 1350.0, 2550.0],
                bandwidths_hz: [90.0, 130.0, 180.0],
                snr_db: Span::new(-10.0, 12.0),
                breathiness: 0.3,
            },
            other: OtherAcoustics {
                breathing_probability: 0.8,
                breath_s: Span::new(0.8, 2.0),
                pause_s: Span::new(0.5, 2.5),
                lowpass_hz: Span::new(400.0, 1500.0),
                snr_db: Span::new(0.0, 12.0),
                voice_probability: 0.5,
                voice_f0_hz: Span::new(80.0, 200.0),
                syllable_s: Span::new(0.4, 1.2),
                voice_snr_db: Span::new(-5.0, 12.0),
            },
            patient_jitter: 0.12,
            ambient_rms: Span::new(0.004, 0.015),
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_patients == 0 || self.windows_per_class_per_patient == 0 {
            return Err(Error::validation("n_patients and windows_per_class_per_patient must be positive"));
        }
        for (name, s) in [("osa_snore", &self.osa_snore), ("simple_snore", &self.simple_snore)] {
            s.f0_hz.validate(&format!("{name}.f0_hz"))?;
            s.duty_cycle.validate(&format!("{name}.duty_cycle"))?;
            s.burst_s.validate(&format!("{name}.burst_s"))?;
            s.snr_db.validate(&format!("{name}.snr_db"))?;
            if s.f0_hz.min <= 0.0 || s.duty_cycle.min <= 0.0 || s.duty_cycle.max > 1.0 || s.burst_s.min <= 0.0 {
                return Err(Error::validation(format!("{name}: F0, duty cycle and burst length must be positive, duty <= 1")));
            }
            let nyquist = f64::from(SAMPLE_RATE_HZ) / 2.0;
            if s.formants_hz.iter().chain(&s.bandwidths_hz).any(|&f| !(f > 0.0 && f < nyquist)) {
                return Err(Error::validation(format!("{name}: formants and bandwidths must lie in (0, {nyquist}) Hz")));
            }
            if !(s.breathiness >= 0.0 && s.breathiness.is_finite()) {
                return Err(Error::validation(format!("{name}: breathiness must be >= 0")));
            }
        }
        let o = &self.other;
        o.breath_s.validate("other.breath_s")?;
        o.pause_s.validate("other.pause_s")?;
        o.lowpass_hz.validate("other.lowpass_hz")?;
        o.snr_db.validate("other.snr_db")?;
        o.voice_f0_hz.validate("other.voice_f0_hz")?;
        o.voice_snr_db.validate("other.voice_snr_db")?;
        o.syllable_s.validate("other.syllable_s")?;
        if !(0.0..=1.0).contains(&o.voice_probability) || o.voice_f0_hz.min <= 0.0 || o.syllable_s.min <= 0.0 {
            return Err(Error::validation("other: invalid voice parameters"));
        }
        if !(0.0..=1.0).contains(&o.breathing_probability) || o.breath_s.min <= 0.0 || o.pause_s.min < 0.0 || o.lowpass_hz.min <= 0.0 {
            return Err(Error::validation("other: invalid breathing parameters"));
        }
        self.ambient_rms.validate("ambient_rms")?;
        if self.ambient_rms.min <= 0.0 || !(self.patient_jitter >= 0.0 && self.patient_jitter < 0.5) {
            return Err(Error::validation("ambient_rms must be positive and patient_jitter in [0, 0.5)"));
        }
        Ok(())
    }

    pub fn digest(&self) -> String {
        digest_json(self)
    }

    /// Zero-padded patient identifiers, e.g. `p01` .. `p10`.
    pub fn patient_ids(&self) -> Vec<String> {
        let width = self.n_patients.to_string().len().max(2);
        (1..=self.n_patients).map(|i| format!("p{i:0width$}")).collect()
    }
}

#[derive(Clone, Debug)]
pub struct Corpus<T> {
    pub recordings: Vec<Recording<T>>,
    /// One event per 10 s segment, tiling each recording.
    pub labels: Vec<LabeledEvent>,
}

/// Patient-specific voice: formant scaling and ambient level.
struct Patient {
    formant_scale: [f64; 3],
    ambient_rms: f64,
}

pub fn generate_corpus<T: Real>(spec: &SynthSpec) -> Result<Corpus<T>> {
    spec.validate()?;
    let ids = spec.patient_ids();
    let per_patient: Vec<(Recording<T>, Vec<LabeledEvent>)> = ids
        .par_iter()
        .enumerate()
        .map(|(p, id)| generate_patient(spec, p, id))
        .collect::<Result<_>>()?;
    let mut recordings = Vec::with_capacity(per_patient.len());
    let mut labels = Vec::new();
    for (rec, events) in per_patient {
        recordings.push(rec);
        labels.extend(events);
    }
    Ok(Corpus { recordings, labels })
}

fn generate_patient<T: Real>(spec: &SynthSpec, p: usize, id: &str) -> Result<(Recording<T>, Vec<LabeledEvent>)> {
    let patient_seed = seed::derive(spec.seed, p as u64);
    let mut rng = seed::rng(patient_seed, 0);
    let jitter = Normal::new(1.0, spec.patient_jitter).expect("valid jitter");
    let patient = Patient {
        formant_scale: std::array::from_fn(|_| jitter.sample(&mut rng).clamp(0.7, 1.3)),
        ambient_rms: spec.ambient_rms.sample(&mut rng),
    };
    let w = spec.windows_per_class_per_patient;
    let mut order: Vec<Label> = Label::ALL.iter().flat_map(|&l| std::iter::repeat_n(l, w)).collect();
    order.shuffle(&mut rng);

    let mut samples = Vec::with_capacity(order.len() * WINDOW_SAMPLES);
    let mut events = Vec::with_capacity(order.len());
    for (s, &label) in order.iter().enumerate() {
        let mut seg_rng = seed::rng(patient_seed, 1 + s as u64);
        let segment = match label {
            Label::OsaSnore => snore_segment(&spec.osa_snore, &patient, &mut seg_rng),
            Label::SimpleSnore => snore_segment(&spec.simple_snore, &patient, &mut seg_rng),
            Label::Other => other_segment(&spec.other, &patient, &mut seg_rng),
        };
        samples.extend(segment.into_iter().map(|v| T::lit(v.clamp(-1.0, 1.0))));
        let start = s as f64 * WINDOW_SECONDS;
        events.push(LabeledEvent::new(id, start, start + WINDOW_SECONDS, label));
    }
    Ok((Recording::new(id, samples)?, events))
}

fn ambience<R: Rng>(patient: &Patient, rng: &mut R) -> Vec<f64> {
    let mut x = signal::white(rng, WINDOW_SAMPLES);
    signal::lowpass(&mut x, 3000.0, f64::from(SAMPLE_RATE_HZ));
    signal::scale_to_rms(&mut x, patient.ambient_rms);
    x
}

fn snore_segment<R: Rng>(c: &SnoreAcoustics, patient: &Patient, rng: &mut R) -> Vec<f64> {
    let fs = f64::from(SAMPLE_RATE_HZ);
    let mut out = ambience(patient, rng);
    let f0 = c.f0_hz.sample(rng);
    let duty = c.duty_cycle.sample(rng);
    let burst_s = c.burst_s.sample(rng);
    let period = burst_s / duty;
    let mut t = -rng.random_range(0.0..period);
    while t < WINDOW_SECONDS {
        let len_s = burst_s * rng.random_range(0.85..1.15);
        let start = (t * fs).round() as i64;
        let n = (len_s * fs).round() as usize;
        let mut burst = signal::pulse_train(n, f0, 0.02, rng.random_range(2.0..5.0), fs);
        signal::scale_to_rms(&mut burst, 1.0);
        let mut noise = signal::white(rng, n);
        signal::scale_to_rms(&mut noise, c.breathiness);
        burst.iter_mut().zip(&noise).for_each(|(b, z)| *b += z);
        for k in 0..3 {
            signal::resonate(&mut burst, c.formants_hz[k] * patient.formant_scale[k], c.bandwidths_hz[k], fs);
        }
        signal::fade_edges(&mut burst, (0.08 * fs) as usize);
        let level = patient.ambient_rms * 10f64.powf(c.snr_db.sample(rng) / 20.0);
        signal::scale_to_rms(&mut burst, level);
        add_at(&mut out, &burst, start);
        t += len_s + (period - burst_s) * rng.random_range(0.7..1.3);
    }
    out
}

fn other_segment<R: Rng>(c: &OtherAcoustics, patient: &Patient, rng: &mut R) -> Vec<f64> {
    let fs = f64::from(SAMPLE_RATE_HZ);
    let mut out = ambience(patient, rng);
    let breathing = rng.random::<f64>() < c.breathing_probability;
    let voiced = rng.random::<f64>() < c.voice_probability;
    if breathing {
        let cutoff = c.lowpass_hz.sample(rng);
        let level = patient.ambient_rms * 10f64.powf(c.snr_db.sample(rng) / 20.0);
        let mut t = -rng.random_range(0.0..c.breath_s.max + c.pause_s.max);
        while t < WINDOW_SECONDS {
            let len_s = c.breath_s.sample(rng);
            let n = (len_s * fs).round() as usize;
            let mut breath = signal::white(rng, n);
            signal::lowpass(&mut breath, cutoff, fs);
            signal::lowpass(&mut breath, cutoff, fs);
            signal::fade_edges(&mut breath, n / 3);
            signal::scale_to_rms(&mut breath, level);
            add_at(&mut out, &breath, (t * fs).round() as i64);
            t += len_s + c.pause_s.sample(rng);
        }
    }
    if voiced {
        // A few short syllables with vowel-like resonances.
        let level = patient.ambient_rms * 10f64.powf(c.voice_snr_db.sample(rng) / 20.0);
        let mut t = rng.random_range(0.0..2.0);
        while t < WINDOW_SECONDS {
            let n = (c.syllable_s.sample(rng) * fs).round() as usize;
            let mut syllable = signal::pulse_train(n, c.voice_f0_hz.sample(rng), 0.05, rng.random_range(2.0..6.0), fs);
            for (k, f) in [rng.random_range(300.0..800.0), rng.random_range(900.0..2200.0), 2700.0].into_iter().enumerate() {
                signal::resonate(&mut syllable, f * patient.formant_scale[k], 80.0 + 40.0 * k as f64, fs);
            }
            signal::fade_edges(&mut syllable, n / 4);
            signal::scale_to_rms(&mut syllable, level);
            add_at(&mut out, &syllable, (t * fs).round() as i64);
            t += n as f64 / fs + rng.random_range(0.1..1.5);
        }
    }
    out
}

fn add_at(out: &mut [f64], x: &[f64], start: i64) {
    for (i, &v) in x.iter().enumerate() {
        let j = start + i as i64;
        if j >= 0 && (j as usize) < out.len() {
            out[j as usize] += v;
        }
    }
}

/// Digests of everything a corpus directory contains.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub spec_digest: String,
    pub spec: SynthSpec,
    /// `(file name, hex SHA-256)` in write order.
    pub files: Vec<(String, String)>,
}

/// Writes `<patient>.wav` per recording plus `labels.csv` and
/// `manifest.json` into `dir`.
pub fn write_corpus<T: Real>(dir: impl AsRef<Path>, spec: &SynthSpec, corpus: &Corpus<T>) -> Result<CorpusManifest> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    let mut put = |name: String, bytes: Vec<u8>| -> Result<()> {
        let path = dir.join(&name);
        fs::write(&path, &bytes).map_err(|e| Error::io(&path, e))?;
        files.push((name, hex::encode(Sha256::digest(&bytes))));
        Ok(())
    };
    for rec in &corpus.recordings {
        put(format!("{}.wav", rec.patient_id()), audio::wav_bytes(rec))?;
    }
    let mut labels = Vec::new();
    audio::write_labels(&mut labels, &corpus.labels)?;
    put("labels.csv".to_string(), labels)?;
    let manifest = CorpusManifest {
        spec_digest: spec.digest(),
        spec: spec.clone(),
        files,
    };
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_vec_pretty(&manifest)?).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests;
