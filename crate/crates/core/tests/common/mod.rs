//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// MFCC c1..c13 of one 400-sample frame, written from the textbook recipe:
/// periodic Hann, direct 512-point DFT, 26 unit-sum HTK mel triangles over
/// 0-8000 Hz, natural log floored at 1e-10, orthonormal DCT-II.
pub struct MfccOracle {
    window: Vec<f64>,
    cos: Vec<Vec<f64>>,
    sin: Vec<Vec<f64>>,
    filters: Vec<Vec<f64>>,
}

impl MfccOracle {
    pub const FRAME: usize = 400;
    pub const HOP: usize = 160;
    const NFFT: usize = 512;
    const NMEL: usize = 26;

    pub fn new() -> Self {
        let n = Self::FRAME;
        let window = (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()).collect();
        let bins = Self::NFFT / 2 + 1;
        let cos = (0..bins)
            .map(|k| (0..n).map(|t| (2.0 * PI * ((k * t) % Self::NFFT) as f64 / Self::NFFT as f64).cos()).collect())
            .collect();
        let sin = (0..bins)
            .map(|k| (0..n).map(|t| (2.0 * PI * ((k * t) % Self::NFFT) as f64 / Self::NFFT as f64).sin()).collect())
            .collect();
        let mel = |f: f64| 2595.0 * (1.0 + f / 700.0).log10();
        let hz = |m: f64| 700.0 * (10f64.powf(m / 2595.0) - 1.0);
        let top = mel(8000.0);
        let points: Vec<f64> = (0..Self::NMEL + 2).map(|i| hz(top * i as f64 / (Self::NMEL + 1) as f64)).collect();
        let filters = (0..Self::NMEL)
            .map(|m| {
                let raw: Vec<f64> = (0..bins)
                    .map(|k| {
                        let f = k as f64 * 16000.0 / Self::NFFT as f64;
                        let up = (f - points[m]) / (points[m + 1] - points[m]);
                        let down = (points[m + 2] - f) / (points[m + 2] - points[m + 1]);
                        up.min(down).max(0.0)
                    })
                    .collect();
                let total: f64 = raw.iter().sum();
                raw.iter().map(|w| w / total).collect()
            })
            .collect();
        Self { window, cos, sin, filters }
    }

    pub fn frame(&self, x: &[f64]) -> [f64; 13] {
        let power: Vec<f64> = self
            .cos
            .iter()
            .zip(&self.sin)
            .map(|(c, s)| {
                let (mut re, mut im) = (0.0, 0.0);
                for t in 0..Self::FRAME {
                    let v = x[t] * self.window[t];
                    re += v * c[t];
                    im -= v * s[t];
                }
                re * re + im * im
            })
            .collect();
        let logs: Vec<f64> = self
            .filters
            .iter()
            .map(|w| w.iter().zip(&power).map(|(a, b)| a * b).sum::<f64>().max(1e-10).ln())
            .collect();
        let nm = Self::NMEL as f64;
        std::array::from_fn(|i| {
            let k = (i + 1) as f64;
            (2.0 / nm).sqrt()
                * logs
                    .iter()
                    .enumerate()
                    .map(|(m, l)| l * (PI * k * (m as f64 + 0.5) / nm).cos())
                    .sum::<f64>()
        })
    }

    /// Mean of per-frame coefficients over every full frame of `x`.
    pub fn window_mean(&self, x: &[f64]) -> [f64; 13] {
        let count = (x.len() - Self::FRAME) / Self::HOP + 1;
        let mut acc = [0.0; 13];
        for f in 0..count {
            let c = self.frame(&x[f * Self::HOP..f * Self::HOP + Self::FRAME]);
            for i in 0..13 {
                acc[i] += c[i];
            }
        }
        acc.map(|v| v / count as f64)
    }
}

/// Gaussian Bayes classifier with a shared covariance, evaluated through the
/// full log-density including normalizing constants.
pub struct GaussianBayes {
    means: Vec<DVector<f64>>,
    inverse: DMatrix<f64>,
    log_norm: f64,
    log_priors: Vec<f64>,
}

impl GaussianBayes {
    /// Pooled covariance = within-class scatter / (N - K), loaded with
    /// `epsilon * mean(diag) * I`; priors are class frequencies.
    pub fn fit(rows: &[Vec<f64>], targets: &[usize], k: usize, epsilon: f64) -> Self {
        let d = rows[0].len();
        let n = rows.len();
        let mut means = vec![DVector::zeros(d); k];
        let mut counts = vec![0usize; k];
        for (r, &t) in rows.iter().zip(targets) {
            means[t] += DVector::from_column_slice(r);
            counts[t] += 1;
        }
        for (m, &c) in means.iter_mut().zip(&counts) {
            *m /= c as f64;
        }
        let mut cov = DMatrix::zeros(d, d);
        for (r, &t) in rows.iter().zip(targets) {
            let z = DVector::from_column_slice(r) - &means[t];
            cov += &z * z.transpose();
        }
        cov /= (n - k) as f64;
        let load = epsilon * cov.diagonal().mean();
        for i in 0..d {
            cov[(i, i)] += load;
        }
        let det = cov.determinant();
        let inverse = cov.try_inverse().expect("invertible");
        Self {
            means,
            inverse,
            log_norm: -0.5 * ((2.0 * PI).powi(d as i32) * det).ln(),
            log_priors: counts.iter().map(|&c| (c as f64 / n as f64).ln()).collect(),
        }
    }

    pub fn log_posteriors_unnormalized(&self, x: &[f64]) -> Vec<f64> {
        let x = DVector::from_column_slice(x);
        self.means
            .iter()
            .zip(&self.log_priors)
            .map(|(m, lp)| {
                let z = &x - m;
                self.log_norm - 0.5 * (z.transpose() * &self.inverse * &z)[(0, 0)] + lp
            })
            .collect()
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        let s = self.log_posteriors_unnormalized(x);
        (0..s.len()).fold(0, |b, i| if s[i] > s[b] { i } else { b })
    }
}

/// Percentile bootstrap of the mean, by sorting resampled means and reading
/// the nearest-rank percentiles.
pub fn bootstrap_mean_interval(samples: &[f64], resamples: usize, level: f64, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = samples.len();
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| {
            let mut total = 0.0;
            for _ in 0..n {
                total += samples[rng.random_range(0..n)];
            }
            total / n as f64
        })
        .collect();
    means.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let tail = (1.0 - level) / 2.0;
    let rank = |p: f64| ((p * resamples as f64).ceil() as usize).clamp(1, resamples) - 1;
    (means[rank(tail)], means[rank(1.0 - tail)])
}

pub fn white_noise(n: usize, sigma: f64, seed: u64) -> Vec<f64> {
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| sigma * Distribution::<f64>::sample(&StandardNormal, &mut rng)).collect()
}

/// 1 kHz tone (amplitude 0.3) plus white noise of equal power: 0 dB SNR.
/// With `gated` the tone sounds only in odd seconds and the noise power
/// matches the average tone power. Returns `(clean, mixture)`.
pub fn tone_mixture(n: usize, gated: bool, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let clean: Vec<f64> = (0..n)
        .map(|i| {
            let on = !gated || (i / 16_000) % 2 == 1;
            if on {
                0.3 * (2.0 * PI * 1000.0 * i as f64 / 16_000.0).sin()
            } else {
                0.0
            }
        })
        .collect();
    let power = clean.iter().map(|v| v * v).sum::<f64>() / n as f64;
    let noise = white_noise(n, power.sqrt(), seed);
    let mix = clean.iter().zip(&noise).map(|(c, z)| c + z).collect();
    (clean, mix)
}

pub fn snr_db(clean: &[f64], estimate: &[f64]) -> f64 {
    let signal: f64 = clean.iter().map(|c| c * c).sum();
    let error: f64 = clean.iter().zip(estimate).map(|(c, e)| (c - e) * (c - e)).sum();
    10.0 * (signal / error).log10()
}
