//! Linear prediction (autocorrelation method) and formant extraction from
//! the roots of the prediction polynomial.

use num_complex::Complex;

use crate::scalar::Real;

pub fn autocorrelation<T: Real>(x: &[T], max_lag: usize) -> Vec<T> {
    (0..=max_lag)
        .map(|lag| {
            x.iter()
                .zip(x.iter().skip(lag))
                .map(|(&a, &b)| a * b)
                .sum()
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpcFailure {
    /// Zero-energy frame.
    Silent,
    /// Reflection coefficient reached 1 or the prediction error vanished.
    NotPositiveDefinite,
}

/// Levinson-Durbin recursion. Returns `[1, a1, .., ap]` for
/// `A(z) = 1 + sum a_k z^-k`.
pub fn levinson_durbin<T: Real>(r: &[T]) -> Result<Vec<T>, LpcFailure> {
    let order = r.len() - 1;
    if !(r[0] > T::zero()) {
        return Err(LpcFailure::Silent);
    }
    let mut a = vec![T::zero(); order + 1];
    a[0] = T::one();
    let mut err = r[0];
    let mut prev = a.clone();
    for i in 1..=order {
        let mut acc = r[i];
        for j in 1..i {
            acc += a[j] * r[i - j];
        }
        let k = -acc / err;
        if !k.is_finite() || k.abs() >= T::one() {
            return Err(LpcFailure::NotPositiveDefinite);
        }
        prev.copy_from_slice(&a);
        for j in 1..i {
            a[j] = prev[j] + k * prev[i - j];
        }
        a[i] = k;
        err *= T::one() - k * k;
        if !(err > T::zero()) {
            return Err(LpcFailure::NotPositiveDefinite);
        }
    }
    Ok(a)
}

fn eval_with_derivative<T: Real>(coeffs: &[T], z: Complex<T>) -> (Complex<T>, Complex<T>) {
    let mut p = Complex::new(coeffs[0], T::zero());
    let mut dp = Complex::new(T::zero(), T::zero());
    for &c in &coeffs[1..] {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// All roots of the real polynomial `coeffs[0] z^n + .. + coeffs[n]` by
/// Aberth-Ehrlich iteration.
pub fn polynomial_roots<T: Real>(coeffs: &[T]) -> Vec<Complex<T>> {
    let lead = coeffs[0];
    let monic: Vec<T> = coeffs.iter().map(|&c| c / lead).collect();
    let n = monic.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    let radius = monic[1..]
        .iter()
        .map(|c| c.abs())
        .fold(T::zero(), |a, b| a.max(b))
        .min(T::one())
        .max(T::lit(0.5));
    let mut roots: Vec<Complex<T>> = (0..n)
        .map(|k| {
            let theta = T::lit(2.0) * T::PI() * T::from_usize_lossy(k) / T::from_usize_lossy(n) + T::lit(0.4);
            Complex::from_polar(radius, theta)
        })
        .collect();

    let tol = T::epsilon() * T::lit(16.0);
    for _ in 0..500 {
        let mut max_step = T::zero();
        for k in 0..n {
            let z = roots[k];
            let (p, dp) = eval_with_derivative(&monic, z);
            if p.norm() == T::zero() {
                continue;
            }
            let ratio = p / dp;
            let mut repulsion = Complex::new(T::zero(), T::zero());
            for (j, &other) in roots.iter().enumerate() {
                if j != k {
                    repulsion = repulsion + (z - other).inv();
                }
            }
            let step = ratio / (Complex::new(T::one(), T::zero()) - ratio * repulsion);
            if step.re.is_finite() && step.im.is_finite() {
                roots[k] = z - step;
                max_step = max_step.max(step.norm() / (T::one() + z.norm()));
            }
        }
        if max_step <= tol {
            break;
        }
    }
    roots
}

/// Formant candidates from LPC polynomial `a`: upper-half-plane roots with
/// bandwidth below `max_bandwidth_hz`, sorted by frequency.
pub fn formants_from_lpc<T: Real>(a: &[T], sample_rate: f64, max_bandwidth_hz: f64) -> Vec<T> {
    let fs = T::lit(sample_rate);
    let two_pi = T::lit(2.0) * T::PI();
    let mut freqs: Vec<T> = polynomial_roots(a)
        .into_iter()
        .filter(|z| z.im > T::lit(1e-9))
        .filter_map(|z| {
            let freq = z.im.atan2(z.re) * fs / two_pi;
            let bandwidth = -z.norm().ln() * fs / T::PI();
            (bandwidth < T::lit(max_bandwidth_hz) && freq > T::zero()).then_some(freq)
        })
        .collect();
    freqs.sort_by(|x, y| x.partial_cmp(y).expect("finite formant"));
    freqs
}
