//! Mel-frequency cepstral coefficients and their regression deltas.

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const N_MFCC: usize = 13;

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular mel filters over a one-sided power spectrum, each normalized to
/// unit weight sum so a flat spectrum gives equal band energies.
#[derive(Clone, Debug)]
pub struct MelFilterbank<T> {
    weights: Vec<Vec<T>>,
    dct: Vec<Vec<T>>,
}

impl<T: Real> MelFilterbank<T> {
    pub fn new(n_mels: usize, fft_size: usize, sample_rate: f64, low_hz: f64, high_hz: f64) -> Result<Self> {
        if n_mels <= N_MFCC {
            return Err(Error::validation(format!("need more than {N_MFCC} mel filters")));
        }
        if !(0.0 <= low_hz && low_hz < high_hz && high_hz <= sample_rate / 2.0) {
            return Err(Error::validation("mel band edges must satisfy 0 <= low < high <= nyquist"));
        }
        let n_bins = fft_size / 2 + 1;
        let (mel_lo, mel_hi) = (hz_to_mel(low_hz), hz_to_mel(high_hz));
        let edges: Vec<f64> = (0..n_mels + 2)
            .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (n_mels + 1) as f64))
            .collect();
        let bin_hz = sample_rate / fft_size as f64;

        let mut weights = Vec::with_capacity(n_mels);
        for m in 0..n_mels {
            let (l, c, r) = (edges[m], edges[m + 1], edges[m + 2]);
            let row: Vec<f64> = (0..n_bins)
                .map(|k| {
                    let f = k as f64 * bin_hz;
                    if f > l && f < r {
                        if f <= c {
                            (f - l) / (c - l)
                        } else {
                            (r - f) / (r - c)
                        }
                    } else {
                        0.0
                    }
                })
                .collect();
            let sum: f64 = row.iter().sum();
            if sum <= 0.0 {
                return Err(Error::validation(format!(
                    "mel filter {m} covers no FFT bin; use fewer filters or a larger FFT"
                )));
            }
            weights.push(row.iter().map(|w| T::lit(w / sum)).collect());
        }

        let scale = (2.0 / n_mels as f64).sqrt();
        let dct = (1..=N_MFCC)
            .map(|k| {
                (0..n_mels)
                    .map(|m| {
                        T::lit(scale * (std::f64::consts::PI * k as f64 * (m as f64 + 0.5) / n_mels as f64).cos())
                    })
                    .collect()
            })
            .collect();
        Ok(Self { weights, dct })
    }

    pub fn n_mels(&self) -> usize {
        self.weights.len()
    }

    pub fn band_energies(&self, power: &[T]) -> Vec<T> {
        self.weights
            .iter()
            .map(|row| row.iter().zip(power).map(|(&w, &p)| w * p).sum())
            .collect()
    }

    /// Coefficients c1..c13 of the orthonormal DCT-II of floored log band energies.
    pub fn mfcc(&self, power: &[T], log_floor: T) -> [T; N_MFCC] {
        let mut logs: Vec<T> = self
            .band_energies(power)
            .into_iter()
            .map(|e| e.max(log_floor).ln())
            .collect();
        // Rows k >= 1 of the DCT are orthogonal to constants, so this shift
        // leaves the result unchanged and makes flat spectra exactly zero.
        let first = logs[0];
        logs.iter_mut().for_each(|l| *l -= first);
        let mut out = [T::zero(); N_MFCC];
        for (c, basis) in out.iter_mut().zip(&self.dct) {
            *c = basis.iter().zip(&logs).map(|(&b, &l)| b * l).sum();
        }
        out
    }
}

/// Regression deltas over time with half-width `half_width`, replicating the
/// first and last frames at the edges.
pub fn delta_mfcc<T: Real>(frames: &[[T; N_MFCC]], half_width: usize) -> Result<Vec<[T; N_MFCC]>> {
    let min_frames = 2 * half_width + 1;
    if frames.len() < min_frames {
        return Err(Error::InsufficientData(format!(
            "delta needs at least {min_frames} frames, got {}",
            frames.len()
        )));
    }
    let last = frames.len() as isize - 1;
    let at = |t: isize| &frames[t.clamp(0, last) as usize];
    let denom = T::from_usize_lossy(2 * (1..=half_width).map(|n| n * n).sum::<usize>());
    Ok((0..frames.len() as isize)
        .map(|t| {
            let mut d = [T::zero(); N_MFCC];
            for n in 1..=half_width as isize {
                let (ahead, behind) = (at(t + n), at(t - n));
                let w = T::from_usize_lossy(n as usize);
                for i in 0..N_MFCC {
                    d[i] += w * (ahead[i] - behind[i]);
                }
            }
            d.iter_mut().for_each(|v| *v /= denom);
            d
        })
        .collect())
}
