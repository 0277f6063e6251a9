//! Magnitude spectral subtraction.
//!
//! The noise spectrum is estimated per recording as the mean STFT magnitude of
//! the quietest frames. Each frame's magnitude is then reduced by
//! `alpha * noise` and floored at `floor_beta * |X|`; the noisy phase is kept
//! and the signal is rebuilt by weighted overlap-add.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::audio::Recording;
use crate::dsp;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DenoiseConfig {
    /// STFT frame length in samples; a power of two (512 = 32 ms).
    pub fft_size: usize,
    pub hop: usize,
    /// Over-subtraction factor.
    pub alpha: f64,
    /// Spectral floor as a fraction of the noisy magnitude.
    pub floor_beta: f64,
    /// Fraction of lowest-energy frames averaged into the noise profile.
    pub noise_fraction: f64,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        Self {
            fft_size: 512,
            hop: 256,
            alpha: 2.0,
            floor_beta: 0.02,
            noise_fraction: 0.1,
        }
    }
}

impl DenoiseConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.fft_size.is_power_of_two() || self.fft_size < 4 {
            return Err(Error::validation("fft_size must be a power of two >= 4"));
        }
        if self.hop == 0 || self.hop > self.fft_size / 2 {
            return Err(Error::validation("hop must be in 1..=fft_size/2"));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::validation("alpha must be finite and >= 0"));
        }
        if !(0.0..=1.0).contains(&self.floor_beta) {
            return Err(Error::validation("floor_beta must be within [0, 1]"));
        }
        if !(self.noise_fraction > 0.0 && self.noise_fraction <= 1.0) {
            return Err(Error::validation("noise_fraction must be within (0, 1]"));
        }
        Ok(())
    }
}

/// Mean noise magnitude per frequency bin (`fft_size / 2 + 1` bins).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseProfile<T> {
    fft_size: usize,
    mean_magnitude: Vec<T>,
}

impl<T: Real> NoiseProfile<T> {
    pub fn new(fft_size: usize, mean_magnitude: Vec<T>) -> Result<Self> {
        if !fft_size.is_power_of_two() || mean_magnitude.len() != fft_size / 2 + 1 {
            return Err(Error::validation(format!(
                "noise profile needs {} bins for fft_size {fft_size}, got {}",
                fft_size / 2 + 1,
                mean_magnitude.len()
            )));
        }
        if mean_magnitude.iter().any(|m| !m.is_finite() || *m < T::zero()) {
            return Err(Error::validation("noise magnitudes must be finite and >= 0"));
        }
        Ok(Self {
            fft_size,
            mean_magnitude,
        })
    }

    pub fn zeros(fft_size: usize) -> Self {
        Self {
            fft_size,
            mean_magnitude: vec![T::zero(); fft_size / 2 + 1],
        }
    }

    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    pub fn mean_magnitude(&self) -> &[T] {
        &self.mean_magnitude
    }
}

pub fn estimate_noise<T: Real>(rec: &Recording<T>, config: &DenoiseConfig) -> Result<NoiseProfile<T>> {
    estimate_noise_samples(rec.samples(), config)
}

/// Noise estimate from the quietest `noise_fraction` of full frames, ranked by
/// raw frame energy (ties by frame position).
pub fn estimate_noise_samples<T: Real>(samples: &[T], config: &DenoiseConfig) -> Result<NoiseProfile<T>> {
    config.validate()?;
    let n = config.fft_size;
    if samples.len() < n {
        return Err(Error::InsufficientData(format!(
            "{} samples is shorter than one {n}-sample STFT frame",
            samples.len()
        )));
    }
    let starts: Vec<usize> = (0..=(samples.len() - n) / config.hop)
        .map(|k| k * config.hop)
        .collect();
    let mut ranked: Vec<(T, usize)> = starts
        .iter()
        .map(|&s| (samples[s..s + n].iter().map(|&x| x * x).sum::<T>(), s))
        .collect();
    ranked.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite energy").then(a.1.cmp(&b.1)));

    let take = ((config.noise_fraction * ranked.len() as f64).ceil() as usize).clamp(1, ranked.len());
    let window = dsp::hann::<T>(n);
    let fft = dsp::forward_plan::<T>(n);
    let mut buf = vec![Complex::new(T::zero(), T::zero()); n];
    let mut acc = vec![T::zero(); n / 2 + 1];
    for &(_, s) in &ranked[..take] {
        dsp::load_windowed(&samples[s..s + n], &window, &mut buf);
        fft.process(&mut buf);
        for (a, c) in acc.iter_mut().zip(&buf) {
            *a += c.norm();
        }
    }
    let inv = T::one() / T::from_usize_lossy(take);
    acc.iter_mut().for_each(|a| *a *= inv);
    NoiseProfile::new(n, acc)
}

/// Output magnitude for one bin: `max(|X| - alpha * noise, beta * |X|)`.
#[inline]
pub fn subtract_magnitude<T: Real>(magnitude: T, noise: T, alpha: T, beta: T) -> T {
    (magnitude - alpha * noise).max(beta * magnitude)
}

pub fn spectral_subtract<T: Real>(
    rec: &Recording<T>,
    noise: &NoiseProfile<T>,
    config: &DenoiseConfig,
) -> Result<Recording<T>> {
    let mut out = spectral_subtract_samples(rec.samples(), noise, config)?;
    for x in &mut out {
        *x = x.max(-T::one()).min(T::one());
    }
    Recording::new(rec.patient_id(), out)
}

/// Spectral subtraction on a raw sample buffer; output length equals input length.
pub fn spectral_subtract_samples<T: Real>(
    samples: &[T],
    noise: &NoiseProfile<T>,
    config: &DenoiseConfig,
) -> Result<Vec<T>> {
    config.validate()?;
    if noise.fft_size != config.fft_size {
        return Err(Error::validation(format!(
            "noise profile fft_size {} does not match config fft_size {}",
            noise.fft_size, config.fft_size
        )));
    }
    let n = config.fft_size;
    let hop = config.hop;
    let pad = n / 2;
    let frames = (samples.len() + pad).div_ceil(hop);
    let padded_len = frames * hop + n;
    let mut padded = vec![T::zero(); padded_len];
    padded[pad..pad + samples.len()].copy_from_slice(samples);

    let window = dsp::hann::<T>(n);
    let fwd = dsp::forward_plan::<T>(n);
    let inv = dsp::inverse_plan::<T>(n);
    let alpha = T::lit(config.alpha);
    let beta = T::lit(config.floor_beta);
    let scale = T::one() / T::from_usize_lossy(n);

    let mut acc = vec![T::zero(); padded_len];
    let mut weight = vec![T::zero(); padded_len];
    let mut buf = vec![Complex::new(T::zero(), T::zero()); n];
    for k in 0..=frames {
        let start = k * hop;
        if start + n > padded_len {
            break;
        }
        dsp::load_windowed(&padded[start..start + n], &window, &mut buf);
        fwd.process(&mut buf);
        for (bin, c) in buf.iter_mut().enumerate() {
            let mag = c.norm();
            if mag > T::zero() {
                let noise_bin = noise.mean_magnitude[bin.min(n - bin)];
                let gain = subtract_magnitude(mag, noise_bin, alpha, beta) / mag;
                *c = *c * gain;
            }
        }
        inv.process(&mut buf);
        for i in 0..n {
            acc[start + i] += buf[i].re * scale;
            weight[start + i] += window[i];
        }
    }

    let tiny = T::lit(1e-9);
    Ok((pad..pad + samples.len())
        .map(|i| {
            if weight[i] > tiny {
                acc[i] / weight[i]
            } else {
                T::zero()
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn white(n: usize, sigma: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| sigma * rng.sample::<f64, _>(StandardNormal)).collect()
    }

    #[test]
    fn white_noise_profile_is_flat() {
        // Monte-Carlo over seeds: interior bins of a 10 s white-noise profile.
        let cfg = DenoiseConfig::default();
        for seed in 0..5 {
            let x = white(160_000, 0.1, seed);
            let p = estimate_noise_samples(&x, &cfg).unwrap();
            let interior = &p.mean_magnitude()[1..256];
            let max = interior.iter().copied().fold(f64::MIN, f64::max);
            let min = interior.iter().copied().fold(f64::MAX, f64::min);
            assert!(max / min < 3.0, "seed {seed}: ratio {}", max / min);
        }
    }

    #[test]
    fn silence_profile_is_zero() {
        let p = estimate_noise_samples(&vec![0.0_f64; 16_000], &DenoiseConfig::default()).unwrap();
        assert!(p.mean_magnitude().iter().all(|&m| m == 0.0));
    }

    #[test]
    fn profile_drawn_from_silent_half() {
        let mut x: Vec<f64> = (0..80_000)
            .map(|i| 0.5 * (2.0 * std::f64::consts::PI * 1000.0 * i as f64 / 16_000.0).sin())
            .collect();
        x.extend(std::iter::repeat(0.0).take(80_000));
        let p = estimate_noise_samples(&x, &DenoiseConfig::default()).unwrap();
        assert!(p.mean_magnitude().iter().all(|&m| m < 1e-12));
    }

    #[test]
    fn too_short_is_insufficient() {
        assert!(matches!(
            estimate_noise_samples(&vec![0.0_f64; 100], &DenoiseConfig::default()),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn zero_profile_reconstructs_input() {
        let x = white(48_000, 0.2, 9);
        let cfg = DenoiseConfig::default();
        let y = spectral_subtract_samples(&x, &NoiseProfile::zeros(512), &cfg).unwrap();
        assert_eq!(y.len(), x.len());
        let dev = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(dev < 1e-6, "max deviation {dev}");
    }

    #[test]
    fn mismatched_profile_rejected() {
        let cfg = DenoiseConfig::default();
        assert!(spectral_subtract_samples(&[0.0_f64; 1024], &NoiseProfile::zeros(256), &cfg).is_err());
    }

    #[test]
    fn frame_stationary_input_collapses_to_floor() {
        // Period of 256 samples (the hop), so every full frame has the same
        // magnitude spectrum and the estimated profile equals it exactly.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let comps: Vec<(f64, f64)> = (1..40).map(|k| (k as f64 * 62.5, rng.random::<f64>() * 6.28)).collect();
        let x: Vec<f64> = (0..160_000)
            .map(|i| {
                let t = i as f64 / 16_000.0;
                comps.iter().map(|(f, ph)| (2.0 * std::f64::consts::PI * f * t + ph).cos()).sum::<f64>() * 0.02
            })
            .collect();
        let cfg = DenoiseConfig {
            alpha: 1.0,
            ..DenoiseConfig::default()
        };
        let p = estimate_noise_samples(&x, &cfg).unwrap();
        let y = spectral_subtract_samples(&x, &p, &cfg).unwrap();
        let energy = |s: &[f64]| s.iter().map(|v| v * v).sum::<f64>();
        let beta2 = cfg.floor_beta * cfg.floor_beta;
        let interior = 1024..x.len() - 1024;
        let (ei, eo) = (energy(&x[interior.clone()]), energy(&y[interior]));
        assert!(eo <= beta2 * ei * (1.0 + 1e-6), "interior ratio {}", eo / ei);
        let (ein, eout) = (energy(&x), energy(&y));
        assert!(eout <= beta2 * ein + 0.01 * ein, "whole ratio {}", eout / ein);
    }

    #[test]
    fn subtraction_never_increases_magnitude() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let mag: f64 = rng.random::<f64>() * 10.0;
            let noise: f64 = rng.random::<f64>() * 10.0;
            let alpha = rng.random::<f64>() * 4.0;
            let beta = rng.random::<f64>();
            let out = subtract_magnitude(mag, noise, alpha, beta);
            assert!(out >= 0.0 && out <= mag);
        }
    }

    #[test]
    fn deterministic_bits() {
        let x = white(32_000, 0.1, 3);
        let cfg = DenoiseConfig::default();
        let p = estimate_noise_samples(&x, &cfg).unwrap();
        let a = spectral_subtract_samples(&x, &p, &cfg).unwrap();
        let b = spectral_subtract_samples(&x, &p, &cfg).unwrap();
        assert!(a.iter().zip(&b).all(|(u, v)| u.to_bits() == v.to_bits()));
    }

    fn snr_db(clean: &[f64], est: &[f64]) -> f64 {
        let sig: f64 = clean.iter().map(|v| v * v).sum();
        let err: f64 = clean.iter().zip(est).map(|(c, e)| (c - e) * (c - e)).sum();
        10.0 * (sig / err).log10()
    }

    /// 1 kHz tone gated on for alternate seconds, mixed with white noise
    /// scaled so the whole-signal SNR is 0 dB.
    fn gated_mixture(seed: u64) -> (Vec<f64>, Vec<f64>) {
        let clean: Vec<f64> = (0..160_000)
            .map(|i| {
                let on = (i / 16_000) % 2 == 1;
                if on {
                    0.3 * (2.0 * std::f64::consts::PI * 1000.0 * i as f64 / 16_000.0).sin()
                } else {
                    0.0
                }
            })
            .collect();
        let p_sig = clean.iter().map(|v| v * v).sum::<f64>() / clean.len() as f64;
        let noise = white(clean.len(), p_sig.sqrt(), seed);
        let mix = clean.iter().zip(&noise).map(|(c, n)| c + n).collect();
        (clean, mix)
    }

    #[test]
    fn gated_tone_snr_gain() {
        let cfg = DenoiseConfig::default();
        for seed in 0..3 {
            let (clean, mix) = gated_mixture(seed);
            let pre = snr_db(&clean, &mix);
            assert!(pre.abs() < 0.2, "pre-SNR {pre}");
            let p = estimate_noise_samples(&mix, &cfg).unwrap();
            let out = spectral_subtract_samples(&mix, &p, &cfg).unwrap();
            let post = snr_db(&clean, &out);
            assert!(post - pre >= 5.0, "seed {seed}: gain {}", post - pre);
            let e_in: f64 = mix.iter().map(|v| v * v).sum();
            let e_out: f64 = out.iter().map(|v| v * v).sum();
            assert!(e_out <= e_in);
        }
    }

    #[test]
    fn continuous_tone_with_reference_noise_profile() {
        let cfg = DenoiseConfig::default();
        let clean: Vec<f64> = (0..160_000)
            .map(|i| 0.3 * (2.0 * std::f64::consts::PI * 1000.0 * i as f64 / 16_000.0).sin())
            .collect();
        let sigma = 0.3 / 2f64.sqrt();
        let noise = white(clean.len(), sigma, 11);
        let mix: Vec<f64> = clean.iter().zip(&noise).map(|(c, n)| c + n).collect();
        let reference = white(clean.len(), sigma, 12);
        let p = estimate_noise_samples(&reference, &DenoiseConfig { noise_fraction: 1.0, ..cfg.clone() }).unwrap();
        let out = spectral_subtract_samples(&mix, &p, &cfg).unwrap();
        let gain = snr_db(&clean, &out) - snr_db(&clean, &mix);
        assert!(gain >= 5.0, "gain {gain}");
    }
}
