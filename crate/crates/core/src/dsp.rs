//! Small DSP helpers shared by the denoiser and the feature extractor.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::scalar::Real;

/// Periodic Hann window of length `n`.
pub fn hann<T: Real>(n: usize) -> Vec<T> {
    let two_pi = T::lit(2.0) * T::PI();
    let len = T::from_usize_lossy(n);
    (0..n)
        .map(|i| T::lit(0.5) - T::lit(0.5) * (two_pi * T::from_usize_lossy(i) / len).cos())
        .collect()
}

pub fn forward_plan<T: Real>(n: usize) -> Arc<dyn Fft<T>> {
    FftPlanner::new().plan_fft_forward(n)
}

pub fn inverse_plan<T: Real>(n: usize) -> Arc<dyn Fft<T>> {
    FftPlanner::new().plan_fft_inverse(n)
}

/// Copies `frame * window` into a zero-padded complex buffer of the plan's length.
pub fn load_windowed<T: Real>(frame: &[T], window: &[T], buf: &mut [Complex<T>]) {
    debug_assert!(frame.len() <= buf.len());
    for (i, slot) in buf.iter_mut().enumerate() {
        let re = match (frame.get(i), window.get(i)) {
            (Some(&x), Some(&w)) => x * w,
            _ => T::zero(),
        };
        *slot = Complex::new(re, T::zero());
    }
}

/// One-sided power spectrum `|X_k|^2`, `k = 0..=n/2`.
pub fn one_sided_power<T: Real>(buf: &[Complex<T>]) -> Vec<T> {
    buf[..buf.len() / 2 + 1].iter().map(|c| c.norm_sqr()).collect()
}

pub fn mean<T: Real>(xs: &[T]) -> T {
    if xs.is_empty() {
        return T::zero();
    }
    xs.iter().copied().sum::<T>() / T::from_usize_lossy(xs.len())
}
