//! Whole-window time-domain features.

use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeFeatures<T> {
    /// Mean squared amplitude.
    pub energy: T,
    /// Shannon entropy (nats) of the energy distribution over equal sub-blocks.
    pub energy_entropy: T,
    /// Sign changes per adjacent sample pair.
    pub zcr: T,
}

pub fn time_features<T: Real>(samples: &[T], blocks: usize) -> TimeFeatures<T> {
    let n = samples.len();
    if n == 0 {
        return TimeFeatures {
            energy: T::zero(),
            energy_entropy: T::zero(),
            zcr: T::zero(),
        };
    }
    let total: T = samples.iter().map(|&x| x * x).sum();
    let energy = total / T::from_usize_lossy(n);

    let blocks = blocks.clamp(1, n);
    let block_len = n / blocks;
    let mut energy_entropy = T::zero();
    if total > T::zero() {
        for b in 0..blocks {
            let end = if b + 1 == blocks { n } else { (b + 1) * block_len };
            let e: T = samples[b * block_len..end].iter().map(|&x| x * x).sum();
            let p = e / total;
            if p > T::zero() {
                energy_entropy -= p * p.ln();
            }
        }
    }

    let crossings = samples
        .windows(2)
        .filter(|w| w[0] * w[1] < T::zero())
        .count();
    let zcr = if n > 1 {
        T::from_usize_lossy(crossings) / T::from_usize_lossy(n - 1)
    } else {
        T::zero()
    };

    TimeFeatures {
        energy,
        energy_entropy,
        zcr,
    }
}
