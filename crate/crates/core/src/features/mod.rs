//! The fixed 50-value feature vector computed for every 10 s window.
//!
//! Short-time quantities are computed on a 25 ms / 10 ms Hann sub-frame grid
//! and averaged to one value per window. Fundamental and harmonic frequency
//! are averaged over voiced sub-frames only (0 when none are voiced); every
//! other short-time feature is averaged over all sub-frames. Chroma uses
//! longer 256 ms frames so that one semitone spans several FFT bins.

mod chroma;
mod grid;
mod lpc;
mod mfcc;
mod pitch;
mod spectral;
mod table;
mod time;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::Fft;
use serde::{Deserialize, Serialize};

use crate::audio::{AnalysisWindow, Label, SAMPLE_RATE_HZ, WINDOW_SAMPLES};
use crate::dsp;
use crate::error::{Error, Result};
use crate::scalar::Real;

pub use chroma::{bin_classes, chroma_frame, pitch_class, N_CHROMA};
pub use grid::SubframeGrid;
pub use lpc::{autocorrelation, formants_from_lpc, levinson_durbin, polynomial_roots, LpcFailure};
pub use mfcc::{delta_mfcc, hz_to_mel, mel_to_hz, MelFilterbank, N_MFCC};
pub use pitch::{estimate_pitch, normalized_autocorrelation, strongest_harmonic, PitchEstimate, PitchSettings};
pub use spectral::{spectral_shape, unit_magnitude, SpectralShape};
pub use table::{read_feature_csv, write_feature_csv, FeatureSidecar};
pub use time::{time_features, TimeFeatures};

pub const N_FEATURES: usize = 50;

/// Canonical index map.
pub mod index {
    use std::ops::Range;

    pub const ENERGY: usize = 0;
    pub const ENERGY_ENTROPY: usize = 1;
    pub const ZCR: usize = 2;
    pub const FORMANTS: Range<usize> = 3..6;
    pub const MFCC: Range<usize> = 6..19;
    pub const DELTA_MFCC: Range<usize> = 19..32;
    pub const CHROMA: Range<usize> = 32..44;
    pub const SPECTRAL_ENTROPY: usize = 44;
    pub const SPECTRAL_FLUX: usize = 45;
    pub const SPECTRAL_CENTROID: usize = 46;
    pub const SPECTRAL_ROLLOFF: usize = 47;
    pub const F0: usize = 48;
    pub const HARMONIC: usize = 49;
}

const CHROMA_NAMES: [&str; N_CHROMA] = ["c", "c#", "d", "d#", "e", "f", "f#", "g", "g#", "a", "a#", "b"];

/// Human-readable name of each canonical feature index.
pub fn feature_names() -> Vec<String> {
    let mut names = vec![
        "energy".to_string(),
        "energy_entropy".into(),
        "zcr".into(),
        "formant_f1_hz".into(),
        "formant_f2_hz".into(),
        "formant_f3_hz".into(),
    ];
    names.extend((1..=N_MFCC).map(|i| format!("mfcc_{i}")));
    names.extend((1..=N_MFCC).map(|i| format!("delta_mfcc_{i}")));
    names.extend(CHROMA_NAMES.iter().map(|c| format!("chroma_{c}")));
    names.extend(
        [
            "spectral_entropy",
            "spectral_flux",
            "spectral_centroid_hz",
            "spectral_rolloff_hz",
            "f0_hz",
            "harmonic_hz",
        ]
        .map(String::from),
    );
    names
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub frame_len: usize,
    pub hop: usize,
    pub fft_size: usize,
    pub n_mels: usize,
    pub mel_low_hz: f64,
    pub mel_high_hz: f64,
    pub log_floor: f64,
    pub delta_half_width: usize,
    pub chroma_fft_size: usize,
    pub chroma_hop: usize,
    pub chroma_min_hz: f64,
    pub rolloff_fraction: f64,
    pub entropy_blocks: usize,
    pub f0_min_hz: f64,
    pub f0_max_hz: f64,
    pub voicing_threshold: f64,
    pub max_harmonic: usize,
    pub lpc_order: usize,
    pub pre_emphasis: f64,
    pub max_formant_bandwidth_hz: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            frame_len: 400,
            hop: 160,
            fft_size: 512,
            n_mels: 26,
            mel_low_hz: 0.0,
            mel_high_hz: 8000.0,
            log_floor: 1e-10,
            delta_half_width: 2,
            chroma_fft_size: 4096,
            chroma_hop: 2048,
            chroma_min_hz: 32.7,
            rolloff_fraction: 0.85,
            entropy_blocks: 10,
            f0_min_hz: 40.0,
            f0_max_hz: 500.0,
            voicing_threshold: 0.3,
            max_harmonic: 8,
            lpc_order: 12,
            pre_emphasis: 0.97,
            max_formant_bandwidth_hz: 400.0,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        let nyquist = f64::from(SAMPLE_RATE_HZ) / 2.0;
        let checks = [
            (self.frame_len > 0 && self.hop > 0, "frame_len and hop must be positive"),
            (self.fft_size >= self.frame_len, "fft_size must be >= frame_len"),
            (self.chroma_fft_size >= 2 && self.chroma_hop > 0, "chroma frame must be positive"),
            (self.delta_half_width > 0, "delta_half_width must be positive"),
            (self.entropy_blocks > 0, "entropy_blocks must be positive"),
            (self.log_floor > 0.0, "log_floor must be positive"),
            (
                self.rolloff_fraction > 0.0 && self.rolloff_fraction <= 1.0,
                "rolloff_fraction must be in (0, 1]",
            ),
            (
                0.0 < self.f0_min_hz && self.f0_min_hz < self.f0_max_hz && self.f0_max_hz < nyquist,
                "f0 range must satisfy 0 < min < max < nyquist",
            ),
            (self.max_harmonic >= 2, "max_harmonic must be at least 2"),
            (self.lpc_order >= 2, "lpc_order must be at least 2"),
            ((0.0..1.0).contains(&self.pre_emphasis), "pre_emphasis must be in [0, 1)"),
            (self.max_formant_bandwidth_hz > 0.0, "max_formant_bandwidth_hz must be positive"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(Error::validation(msg));
            }
        }
        if self.frame_len <= (f64::from(SAMPLE_RATE_HZ) / self.f0_max_hz) as usize {
            return Err(Error::validation("frame_len shorter than the shortest pitch period"));
        }
        Ok(())
    }
}

/// One window's 50 features in canonical order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct FeatureVector<T> {
    pub patient_id: String,
    pub window_index: usize,
    pub label: Option<Label>,
    values: Vec<T>,
}

impl<T: Real> FeatureVector<T> {
    pub fn new(patient_id: impl Into<String>, window_index: usize, label: Option<Label>, values: Vec<T>) -> Result<Self> {
        if values.len() != N_FEATURES {
            return Err(Error::validation(format!(
                "feature vector needs {N_FEATURES} values, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::validation(format!("feature {i} is not finite")));
        }
        Ok(Self {
            patient_id: patient_id.into(),
            window_index,
            label,
            values,
        })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }
}

/// Per-sub-frame intermediates retained from one window's analysis.
#[derive(Clone, Debug, Default)]
pub struct FrameTrace<T> {
    pub mfcc: Vec<[T; N_MFCC]>,
    pub delta_mfcc: Vec<[T; N_MFCC]>,
    pub spectral: Vec<SpectralShape<T>>,
    pub pitch: Vec<PitchEstimate<T>>,
    pub harmonic_hz: Vec<T>,
    pub formants: Vec<[T; 3]>,
    pub chroma: Vec<[T; N_CHROMA]>,
}

#[derive(Clone, Debug)]
pub struct WindowAnalysis<T> {
    pub values: Vec<T>,
    pub frames: FrameTrace<T>,
}

/// Reusable extractor holding FFT plans and filterbanks. Shareable across
/// threads; counts LPC numerical failures.
pub struct FeatureExtractor<T: Real> {
    config: FeatureConfig,
    window: Vec<T>,
    fft: Arc<dyn Fft<T>>,
    mel: MelFilterbank<T>,
    chroma_window: Vec<T>,
    chroma_fft: Arc<dyn Fft<T>>,
    chroma_classes: Vec<Option<usize>>,
    lpc_failures: AtomicUsize,
}

impl<T: Real> FeatureExtractor<T> {
    pub fn new(config: FeatureConfig) -> Result<Self> {
        config.validate()?;
        let fs = f64::from(SAMPLE_RATE_HZ);
        Ok(Self {
            window: dsp::hann(config.frame_len),
            fft: dsp::forward_plan(config.fft_size),
            mel: MelFilterbank::new(config.n_mels, config.fft_size, fs, config.mel_low_hz, config.mel_high_hz)?,
            chroma_window: dsp::hann(config.chroma_fft_size),
            chroma_fft: dsp::forward_plan(config.chroma_fft_size),
            chroma_classes: bin_classes(config.chroma_fft_size, fs, config.chroma_min_hz),
            lpc_failures: AtomicUsize::new(0),
            config,
        })
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.config
    }

    pub fn mel_filterbank(&self) -> &MelFilterbank<T> {
        &self.mel
    }

    /// Number of sub-frames whose LPC recursion failed; their formants were set to 0.
    pub fn lpc_failures(&self) -> usize {
        self.lpc_failures.load(Ordering::Relaxed)
    }

    pub fn extract(&self, win: &AnalysisWindow<'_, T>) -> Result<FeatureVector<T>> {
        if win.samples.len() != WINDOW_SAMPLES {
            return Err(Error::validation(format!(
                "window {} of {} has {} samples, expected {WINDOW_SAMPLES}",
                win.index,
                win.patient_id,
                win.samples.len()
            )));
        }
        let analysis = self.analyze(win.samples)?;
        FeatureVector::new(win.patient_id, win.index, win.label, analysis.values)
    }

    /// Extracts every window in parallel, preserving order.
    pub fn extract_all(&self, windows: &[AnalysisWindow<'_, T>]) -> Result<Vec<FeatureVector<T>>> {
        windows.par_iter().map(|w| self.extract(w)).collect()
    }

    /// Power spectrum of one Hann-windowed sub-frame.
    pub fn frame_power(&self, frame: &[T]) -> Vec<T> {
        let mut buf = vec![Complex::new(T::zero(), T::zero()); self.config.fft_size];
        dsp::load_windowed(frame, &self.window, &mut buf);
        self.fft.process(&mut buf);
        dsp::one_sided_power(&buf)
    }

    /// Full analysis of an arbitrary-length buffer (at least five sub-frames).
    pub fn analyze(&self, samples: &[T]) -> Result<WindowAnalysis<T>> {
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::validation(format!("sample {i} is not finite")));
        }
        let cfg = &self.config;
        let fs = f64::from(SAMPLE_RATE_HZ);
        let grid = SubframeGrid::new(samples.len(), cfg.frame_len, cfg.hop)?;
        let bin_hz = T::lit(fs / cfg.fft_size as f64);
        let log_floor = T::lit(cfg.log_floor);
        let rolloff = T::lit(cfg.rolloff_fraction);
        let pitch_settings = PitchSettings {
            sample_rate: fs,
            min_hz: cfg.f0_min_hz,
            max_hz: cfg.f0_max_hz,
            voicing_threshold: cfg.voicing_threshold,
        };

        let mut trace = FrameTrace::<T>::default();
        let mut previous_unit: Option<Vec<T>> = None;
        let mut lpc_frame = vec![T::zero(); cfg.frame_len];
        for f in 0..grid.count {
            let frame = grid.frame(samples, f);
            let power = self.frame_power(frame);

            trace.mfcc.push(self.mel.mfcc(&power, log_floor));

            let (shape, unit) = spectral_shape(&power, bin_hz, rolloff, previous_unit.as_deref());
            trace.spectral.push(shape);
            previous_unit = Some(unit);

            let pitch = estimate_pitch(samples, grid.start(f), cfg.frame_len, &pitch_settings);
            trace
                .harmonic_hz
                .push(strongest_harmonic(&power, bin_hz, pitch.f0_hz, cfg.max_harmonic));
            trace.pitch.push(pitch);

            self.pre_emphasize_windowed(frame, &mut lpc_frame);
            trace.formants.push(self.formants(&lpc_frame));
        }
        trace.delta_mfcc = delta_mfcc(&trace.mfcc, cfg.delta_half_width)?;
        trace.chroma = self.chroma_frames(samples);

        let time = time_features(samples, cfg.entropy_blocks);
        let mut values = Vec::with_capacity(N_FEATURES);
        values.extend([time.energy, time.energy_entropy, time.zcr]);
        for i in 0..3 {
            values.push(mean_by(&trace.formants, |v| v[i]));
        }
        for i in 0..N_MFCC {
            values.push(mean_by(&trace.mfcc, |v| v[i]));
        }
        for i in 0..N_MFCC {
            values.push(mean_by(&trace.delta_mfcc, |v| v[i]));
        }
        for i in 0..N_CHROMA {
            values.push(mean_by(&trace.chroma, |v| v[i]));
        }
        values.push(mean_by(&trace.spectral, |s| s.entropy));
        values.push(mean_by(&trace.spectral, |s| s.flux));
        values.push(mean_by(&trace.spectral, |s| s.centroid_hz));
        values.push(mean_by(&trace.spectral, |s| s.rolloff_hz));

        let voiced: Vec<usize> = (0..grid.count).filter(|&f| trace.pitch[f].voiced()).collect();
        values.push(mean_by(&voiced, |&f| trace.pitch[f].f0_hz));
        values.push(mean_by(&voiced, |&f| trace.harmonic_hz[f]));
        debug_assert_eq!(values.len(), N_FEATURES);

        Ok(WindowAnalysis { values, frames: trace })
    }

    fn pre_emphasize_windowed(&self, frame: &[T], out: &mut [T]) {
        let mu = T::lit(self.config.pre_emphasis);
        for i in 0..frame.len() {
            let prev = if i > 0 { frame[i - 1] } else { T::zero() };
            out[i] = (frame[i] - mu * prev) * self.window[i];
        }
    }

    fn formants(&self, frame: &[T]) -> [T; 3] {
        let r = autocorrelation(frame, self.config.lpc_order);
        match levinson_durbin(&r) {
            Ok(a) => {
                let found = formants_from_lpc(&a, f64::from(SAMPLE_RATE_HZ), self.config.max_formant_bandwidth_hz);
                std::array::from_fn(|i| found.get(i).copied().unwrap_or(T::zero()))
            }
            Err(LpcFailure::Silent) => [T::zero(); 3],
            Err(LpcFailure::NotPositiveDefinite) => {
                self.lpc_failures.fetch_add(1, Ordering::Relaxed);
                [T::zero(); 3]
            }
        }
    }

    fn chroma_frames(&self, samples: &[T]) -> Vec<[T; N_CHROMA]> {
        let n = self.config.chroma_fft_size;
        if samples.len() < n {
            return Vec::new();
        }
        let mut buf = vec![Complex::new(T::zero(), T::zero()); n];
        (0..=(samples.len() - n) / self.config.chroma_hop)
            .map(|k| {
                let start = k * self.config.chroma_hop;
                dsp::load_windowed(&samples[start..start + n], &self.chroma_window, &mut buf);
                self.chroma_fft.process(&mut buf);
                chroma_frame(&dsp::one_sided_power(&buf), &self.chroma_classes)
            })
            .collect()
    }
}

fn mean_by<I, T: Real>(items: &[I], f: impl Fn(&I) -> T) -> T {
    if items.is_empty() {
        return T::zero();
    }
    items.iter().map(f).sum::<T>() / T::from_usize_lossy(items.len())
}

/// One-off extraction with a fresh extractor.
pub fn extract_features<T: Real>(win: &AnalysisWindow<'_, T>, config: &FeatureConfig) -> Result<FeatureVector<T>> {
    FeatureExtractor::new(config.clone())?.extract(win)
}
