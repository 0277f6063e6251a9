//! Signal building blocks for synthetic snores, breaths and ambience.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::PI;

/// Two-pole resonator at `freq_hz` with bandwidth `bw_hz`, unity gain at the
/// centre frequency.
pub fn resonate(x: &mut [f64], freq_hz: f64, bw_hz: f64, fs: f64) {
    let r = (-PI * bw_hz / fs).exp();
    let theta = 2.0 * PI * freq_hz / fs;
    let a1 = 2.0 * r * theta.cos();
    let a2 = -r * r;
    // |1 - a1 z^-1 - a2 z^-2| at z = e^{j theta}
    let re = 1.0 - a1 * theta.cos() - a2 * (2.0 * theta).cos();
    let im = a1 * theta.sin() + a2 * (2.0 * theta).sin();
    let gain = (re * re + im * im).sqrt();
    let (mut y1, mut y2) = (0.0, 0.0);
    for v in x.iter_mut() {
        let y = *v * gain + a1 * y1 + a2 * y2;
        y2 = y1;
        y1 = y;
        *v = y;
    }
}

pub fn lowpass(x: &mut [f64], cutoff_hz: f64, fs: f64) {
    let a = 1.0 - (-2.0 * PI * cutoff_hz / fs).exp();
    let mut y = 0.0;
    for v in x.iter_mut() {
        y += a * (*v - y);
        *v = y;
    }
}

pub fn white<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

pub fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

pub fn scale_to_rms(x: &mut [f64], target: f64) {
    let r = rms(x);
    if r > 0.0 {
        x.iter_mut().for_each(|v| *v *= target / r);
    }
}

/// Differentiated Rosenberg glottal pulse train at `f0_hz` with slow
/// sinusoidal vibrato of relative depth `vibrato`.
pub fn pulse_train(n: usize, f0_hz: f64, vibrato: f64, vibrato_hz: f64, fs: f64) -> Vec<f64> {
    const OPEN: f64 = 0.4;
    const CLOSE: f64 = 0.2;
    let glottal = |p: f64| {
        if p < OPEN {
            0.5 * (1.0 - (PI * p / OPEN).cos())
        } else if p < OPEN + CLOSE {
            (0.5 * PI * (p - OPEN) / CLOSE).cos()
        } else {
            0.0
        }
    };
    let mut phase = 0.0;
    let mut prev = 0.0;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / fs;
        let f = f0_hz * (1.0 + vibrato * (2.0 * PI * vibrato_hz * t).sin());
        phase = (phase + f / fs).fract();
        let g = glottal(phase);
        out.push(g - prev);
        prev = g;
    }
    out
}

/// Raised-cosine attack and release over `fade` samples at each end.
pub fn fade_edges(x: &mut [f64], fade: usize) {
    let n = x.len();
    let fade = fade.min(n / 2);
    for i in 0..fade {
        let g = 0.5 - 0.5 * (PI * i as f64 / fade as f64).cos();
        x[i] *= g;
        x[n - 1 - i] *= g;
    }
}
