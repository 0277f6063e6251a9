//! Fundamental frequency by normalized autocorrelation, and the strongest
//! harmonic above it.

use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PitchSettings {
    pub sample_rate: f64,
    pub min_hz: f64,
    pub max_hz: f64,
    /// Minimum normalized autocorrelation peak for a voiced frame.
    pub voicing_threshold: f64,
}

impl PitchSettings {
    pub fn min_lag(&self) -> usize {
        (self.sample_rate / self.max_hz).floor() as usize
    }

    pub fn max_lag(&self) -> usize {
        (self.sample_rate / self.min_hz).ceil() as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PitchEstimate<T> {
    /// Fundamental in Hz; 0 when unvoiced.
    pub f0_hz: T,
    /// Highest normalized autocorrelation in the search range.
    pub peak: T,
}

impl<T: Real> PitchEstimate<T> {
    pub fn voiced(&self) -> bool {
        self.f0_hz > T::zero()
    }
}

/// Normalized cross-correlation between `samples[start..start+len]` and the
/// same-length segment `lag` samples later. `None` if the lagged segment runs
/// off the end of `samples`.
pub fn normalized_autocorrelation<T: Real>(samples: &[T], start: usize, len: usize, lag: usize) -> Option<T> {
    let end = start + lag + len;
    if end > samples.len() {
        return None;
    }
    let a = &samples[start..start + len];
    let b = &samples[start + lag..end];
    let (mut ab, mut aa, mut bb) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in a.iter().zip(b) {
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    let denom = (aa * bb).sqrt();
    Some(if denom > T::zero() { ab / denom } else { T::zero() })
}

/// `normalized_autocorrelation` for every lag in `first..=last` that fits in
/// `samples`, with the frame energy computed once and the lagged energy
/// updated incrementally.
fn lag_correlations<T: Real>(samples: &[T], start: usize, len: usize, first: usize, last: usize) -> Vec<T> {
    let a = &samples[start..start + len];
    let aa = dot(a, a);
    let mut out = Vec::with_capacity(last + 1 - first);
    let mut bb = T::zero();
    for lag in first..=last {
        let end = start + lag + len;
        if end > samples.len() {
            break;
        }
        let b = &samples[start + lag..end];
        bb = if lag == first {
            dot(b, b)
        } else {
            let (old, new) = (samples[start + lag - 1], samples[end - 1]);
            (bb - old * old + new * new).max(T::zero())
        };
        let denom = (aa * bb).sqrt();
        out.push(if denom > T::zero() { dot(a, b) / denom } else { T::zero() });
    }
    out
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::zero(); 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let tail: T = ca.remainder().iter().zip(cb.remainder()).map(|(&x, &y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    acc.iter().copied().sum::<T>() + tail
}

/// Estimates F0 for the frame of `len` samples starting at `start`, correlating
/// against later samples of the same buffer.
///
/// The chosen lag is the shortest local maximum within 90% of the global
/// maximum, refined by parabolic interpolation.
pub fn estimate_pitch<T: Real>(samples: &[T], start: usize, len: usize, settings: &PitchSettings) -> PitchEstimate<T> {
    let unvoiced = |peak| PitchEstimate {
        f0_hz: T::zero(),
        peak,
    };
    let lo = settings.min_lag().max(2);
    let hi = settings.max_lag();
    // r[i] holds the correlation at lag lo - 1 + i
    let r = lag_correlations(samples, start, len, lo - 1, hi + 1);
    if r.len() < 3 {
        return unvoiced(T::zero());
    }
    let last = r.len() - 2; // last index with a right neighbour
    let (mut best_i, mut peak) = (1, r[1]);
    for i in 1..=last.min(hi - lo + 1) {
        if r[i] > peak {
            peak = r[i];
            best_i = i;
        }
    }
    if peak < T::lit(settings.voicing_threshold) {
        return unvoiced(peak);
    }
    let accept = T::lit(0.9) * peak;
    let chosen = (1..=last.min(hi - lo + 1))
        .find(|&i| r[i] >= accept && r[i] >= r[i - 1] && r[i] >= r[i + 1])
        .unwrap_or(best_i);

    let (a, b, c) = (r[chosen - 1], r[chosen], r[chosen + 1]);
    let curvature = a - T::lit(2.0) * b + c;
    let shift = if curvature < T::zero() {
        (T::lit(0.5) * (a - c) / curvature).max(T::lit(-0.5)).min(T::lit(0.5))
    } else {
        T::zero()
    };
    let lag = T::from_usize_lossy(lo - 1 + chosen) + shift;
    PitchEstimate {
        f0_hz: T::lit(settings.sample_rate) / lag,
        peak,
    }
}

/// Frequency of the strongest bin within one bin of any of the harmonics
/// `2*f0 ..= max_harmonic*f0` below Nyquist; 0 if `f0` is 0.
pub fn strongest_harmonic<T: Real>(power: &[T], bin_hz: T, f0_hz: T, max_harmonic: usize) -> T {
    if !(f0_hz > T::zero()) || power.len() < 2 {
        return T::zero();
    }
    let top = power.len() - 1;
    let mut best: Option<(usize, T)> = None;
    for h in 2..=max_harmonic {
        let target = f0_hz * T::from_usize_lossy(h) / bin_hz;
        let centre = target.round().to_usize().unwrap_or(usize::MAX);
        if centre > top {
            break;
        }
        for k in centre.saturating_sub(1).max(1)..=(centre + 1).min(top) {
            if best.is_none_or(|(_, p)| power[k] > p) {
                best = Some((k, power[k]));
            }
        }
    }
    best.map_or(T::zero(), |(k, _)| T::from_usize_lossy(k) * bin_hz)
}
