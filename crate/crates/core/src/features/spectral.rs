//! Spectral shape descriptors of one power spectrum.

use crate::scalar::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SpectralShape<T> {
    /// Shannon entropy of the normalized power spectrum divided by ln(bins), in [0, 1].
    pub entropy: T,
    /// L2 distance between this and the previous unit-norm magnitude spectrum.
    pub flux: T,
    pub centroid_hz: T,
    pub rolloff_hz: T,
}

/// Unit-L2-norm magnitude spectrum (zero vector for silence).
pub fn unit_magnitude<T: Real>(power: &[T]) -> Vec<T> {
    let total: T = power.iter().copied().sum();
    if total > T::zero() {
        power.iter().map(|&p| (p / total).sqrt()).collect()
    } else {
        vec![T::zero(); power.len()]
    }
}

/// `bin_hz` is the spacing of `power`'s bins. `previous` is the preceding
/// frame's [`unit_magnitude`], or `None` for the first frame (flux 0).
pub fn spectral_shape<T: Real>(
    power: &[T],
    bin_hz: T,
    rolloff_fraction: T,
    previous: Option<&[T]>,
) -> (SpectralShape<T>, Vec<T>) {
    let unit = unit_magnitude(power);
    let flux = previous.map_or(T::zero(), |prev| {
        prev.iter()
            .zip(&unit)
            .map(|(&a, &b)| (b - a) * (b - a))
            .sum::<T>()
            .sqrt()
    });

    let total: T = power.iter().copied().sum();
    if !(total > T::zero()) {
        return (
            SpectralShape {
                flux,
                ..SpectralShape::default()
            },
            unit,
        );
    }

    let mut entropy = T::zero();
    let mut centroid = T::zero();
    for (k, &p) in power.iter().enumerate() {
        let q = p / total;
        if q > T::zero() {
            entropy -= q * q.ln();
        }
        centroid += T::from_usize_lossy(k) * bin_hz * q;
    }
    if power.len() > 1 {
        entropy /= T::from_usize_lossy(power.len()).ln();
    }

    let target = rolloff_fraction * total;
    let mut cumulative = T::zero();
    let mut rolloff_bin = power.len() - 1;
    for (k, &p) in power.iter().enumerate() {
        cumulative += p;
        if cumulative >= target {
            rolloff_bin = k;
            break;
        }
    }

    (
        SpectralShape {
            entropy,
            flux,
            centroid_hz: centroid,
            rolloff_hz: T::from_usize_lossy(rolloff_bin) * bin_hz,
        },
        unit,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const BIN_HZ: f64 = 31.25;

    #[test]
    fn single_bin_spectrum() {
        let mut p = vec![0.0_f64; 257];
        p[32] = 5.0;
        let (s, _) = spectral_shape(&p, BIN_HZ, 0.85, None);
        assert_eq!(s.centroid_hz, 1000.0);
        assert_eq!(s.entropy, 0.0);
        assert_eq!(s.rolloff_hz, 1000.0);
        assert_eq!(s.flux, 0.0);
    }

    #[test]
    fn flat_spectrum_has_unit_entropy() {
        let (s, _) = spectral_shape(&vec![2.0_f64; 257], BIN_HZ, 0.85, None);
        assert!((s.entropy - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_frames_have_zero_flux() {
        let p: Vec<f64> = (0..257).map(|k| (k as f64 * 0.3).sin().abs()).collect();
        let (_, unit) = spectral_shape(&p, BIN_HZ, 0.85, None);
        let (s, _) = spectral_shape(&p, BIN_HZ, 0.85, Some(&unit));
        assert!(s.flux.abs() < 1e-12);
        let mut q = p.clone();
        q[10] += 3.0;
        let (s, _) = spectral_shape(&q, BIN_HZ, 0.85, Some(&unit));
        assert!(s.flux > 0.0);
    }

    #[test]
    fn rolloff_two_bins() {
        let mut p = vec![0.0_f64; 257];
        p[4] = 0.8;
        p[100] = 0.2;
        let (s, _) = spectral_shape(&p, BIN_HZ, 0.85, None);
        assert_eq!(s.rolloff_hz, 100.0 * BIN_HZ);
        assert!((s.centroid_hz - (4.0 * 0.8 + 100.0 * 0.2) * BIN_HZ).abs() < 1e-9);
    }

    #[test]
    fn silence_is_all_zero() {
        let (s, unit) = spectral_shape(&vec![0.0_f64; 257], BIN_HZ, 0.85, None);
        assert_eq!(s, SpectralShape::default());
        assert!(unit.iter().all(|&u| u == 0.0));
    }
}
