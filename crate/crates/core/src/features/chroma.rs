//! Pitch-class profiles.

use crate::scalar::Real;

pub const N_CHROMA: usize = 12;

/// Pitch class (0 = C .. 11 = B) of frequency `hz`, nearest equal-tempered note.
pub fn pitch_class(hz: f64) -> usize {
    let midi = (12.0 * (hz / 440.0).log2()).round() as i64 + 69;
    midi.rem_euclid(12) as usize
}

/// Per-bin pitch class for a one-sided spectrum; bins below `min_hz` map to `None`.
pub fn bin_classes(fft_size: usize, sample_rate: f64, min_hz: f64) -> Vec<Option<usize>> {
    let bin_hz = sample_rate / fft_size as f64;
    (0..=fft_size / 2)
        .map(|k| {
            let f = k as f64 * bin_hz;
            (k > 0 && f >= min_hz).then(|| pitch_class(f))
        })
        .collect()
}

/// Power per pitch class normalized by the total mapped power; all-zero for silence.
pub fn chroma_frame<T: Real>(power: &[T], classes: &[Option<usize>]) -> [T; N_CHROMA] {
    let mut out = [T::zero(); N_CHROMA];
    for (&p, class) in power.iter().zip(classes) {
        if let Some(c) = class {
            out[*c] += p;
        }
    }
    let total: T = out.iter().copied().sum();
    if total > T::zero() {
        out.iter_mut().for_each(|v| *v /= total);
    }
    out
}
