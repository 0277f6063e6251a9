//! Windowed-sinc polyphase sample-rate conversion.

use std::f64::consts::PI;

use crate::scalar::Real;

/// Kernel half-width in zero crossings of the low-pass sinc.
const ZERO_CROSSINGS: f64 = 16.0;
/// Cutoff relative to the lower of the two Nyquist frequencies.
const ROLLOFF: f64 = 0.95;

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

fn blackman(t: f64, half_width: f64) -> f64 {
    // t in [-half_width, half_width]
    let u = (t / half_width + 1.0) * 0.5;
    0.42 - 0.5 * (2.0 * PI * u).cos() + 0.08 * (4.0 * PI * u).cos()
}

/// Resamples `input` from `from_hz` to `to_hz`.
///
/// Output length is `ceil(len * to / from)`. Each polyphase branch is
/// normalized to unit DC gain.
pub fn resample<T: Real>(input: &[T], from_hz: u32, to_hz: u32) -> Vec<T> {
    if from_hz == to_hz || input.is_empty() {
        return input.to_vec();
    }
    let g = gcd(u64::from(from_hz), u64::from(to_hz));
    let up = u64::from(to_hz) / g;
    let down = u64::from(from_hz) / g;

    let cutoff = ROLLOFF * (up as f64 / down as f64).min(1.0);
    let half_width = ZERO_CROSSINGS / cutoff;
    let reach = half_width.ceil() as i64 + 1;
    let taps_per_phase = (2 * reach + 1) as usize;

    // taps[p][j + reach] = h(j + p / up)
    let taps: Vec<Vec<f64>> = (0..up)
        .map(|p| {
            let frac = p as f64 / up as f64;
            let mut row: Vec<f64> = (-reach..=reach)
                .map(|j| {
                    let t = j as f64 + frac;
                    if t.abs() >= half_width {
                        0.0
                    } else {
                        cutoff * sinc(cutoff * t) * blackman(t, half_width)
                    }
                })
                .collect();
            let sum: f64 = row.iter().sum();
            row.iter_mut().for_each(|h| *h /= sum);
            row
        })
        .collect();

    let n_in = input.len() as u64;
    let n_out = (n_in * up).div_ceil(down);
    let mut out = Vec::with_capacity(n_out as usize);
    for n in 0..n_out {
        let pos = n * down;
        let base = (pos / up) as i64;
        let row = &taps[(pos % up) as usize];
        let mut acc = 0.0;
        for (k, h) in row.iter().enumerate().take(taps_per_phase) {
            let j = k as i64 - reach;
            let i = base - j;
            if i >= 0 && (i as u64) < n_in {
                acc += h * input[i as usize].as_f64();
            }
        }
        out.push(T::lit(acc));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(freq: f64, rate: u32, secs: f64) -> Vec<f64> {
        let n = (secs * f64::from(rate)) as usize;
        (0..n)
            .map(|i| 0.5 * (2.0 * PI * freq * i as f64 / f64::from(rate)).sin())
            .collect()
    }

    fn rms(x: &[f64]) -> f64 {
        (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
    }

    #[test]
    fn lengths_follow_rate_ratio() {
        assert_eq!(resample(&vec![0.0_f64; 320_000], 32_000, 16_000).len(), 160_000);
        assert_eq!(resample(&vec![0.0_f64; 441_000], 44_100, 16_000).len(), 160_000);
        assert_eq!(resample(&vec![0.0_f64; 80_000], 8_000, 16_000).len(), 160_000);
    }

    #[test]
    fn passband_tone_preserved() {
        let x = tone(1000.0, 44_100, 1.0);
        let y = resample(&x, 44_100, 16_000);
        let expected = tone(1000.0, 16_000, 1.0);
        // ignore kernel edge effects
        let err: Vec<f64> = y[200..15_800]
            .iter()
            .zip(&expected[200..15_800])
            .map(|(a, b)| a - b)
            .collect();
        assert!(rms(&err) < 1e-3, "rms error {}", rms(&err));
    }

    #[test]
    fn stopband_tone_rejected() {
        // 12 kHz is above the 8 kHz output Nyquist and must not alias in.
        let x = tone(12_000.0, 48_000, 1.0);
        let y = resample(&x, 48_000, 16_000);
        assert!(rms(&y[200..15_800]) < 1e-3);
    }

    #[test]
    fn dc_is_exact_away_from_edges() {
        let x = vec![0.25_f64; 22_050];
        let y = resample(&x, 22_050, 16_000);
        for v in &y[100..y.len() - 100] {
            assert!((v - 0.25).abs() < 1e-12);
        }
    }
}
