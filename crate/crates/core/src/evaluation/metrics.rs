//! Confusion-matrix metrics and bootstrap confidence intervals.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// `confusion[truth][predicted]`.
pub type Confusion = Vec<Vec<u64>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinaryMetrics {
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub ppv: Option<f64>,
    pub npv: Option<f64>,
}

/// One-vs-rest rates for a single class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassRates {
    pub sensitivity: Option<f64>,
    pub ppv: Option<f64>,
}

/// `None` marks a rate whose denominator is zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub accuracy: Option<f64>,
    pub binary: Option<BinaryMetrics>,
    pub per_class: Vec<ClassRates>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn validate_confusion(confusion: &[Vec<u64>]) -> Result<usize> {
    let k = confusion.len();
    if k == 0 || confusion.iter().any(|r| r.len() != k) {
        return Err(Error::validation("confusion matrix must be square and non-empty"));
    }
    Ok(k)
}

/// Binary metrics are reported when `positive` is given for a 2x2 matrix.
pub fn compute_metrics(confusion: &[Vec<u64>], positive: Option<usize>) -> Result<MetricSet> {
    let k = validate_confusion(confusion)?;
    let total: u64 = confusion.iter().flatten().sum();
    let correct: u64 = (0..k).map(|i| confusion[i][i]).sum();
    let per_class = (0..k)
        .map(|c| {
            let tp = confusion[c][c];
            let actual: u64 = confusion[c].iter().sum();
            let predicted: u64 = confusion.iter().map(|r| r[c]).sum();
            ClassRates {
                sensitivity: ratio(tp, actual),
                ppv: ratio(tp, predicted),
            }
        })
        .collect();
    let binary = match positive {
        Some(p) if k == 2 && p < 2 => {
            let n = 1 - p;
            let (tp, fn_, fp, tn) = (confusion[p][p], confusion[p][n], confusion[n][p], confusion[n][n]);
            Some(BinaryMetrics {
                sensitivity: ratio(tp, tp + fn_),
                specificity: ratio(tn, tn + fp),
                ppv: ratio(tp, tp + fp),
                npv: ratio(tn, tn + fn_),
            })
        }
        Some(p) => {
            return Err(Error::validation(format!(
                "positive class {p} needs a 2x2 matrix, got {k}x{k}"
            )))
        }
        None => None,
    };
    Ok(MetricSet {
        accuracy: ratio(correct, total),
        binary,
        per_class,
    })
}

/// Linear-interpolation sample quantile of sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn percentile_interval(mut stats: Vec<f64>, level: f64) -> Option<(f64, f64)> {
    if stats.is_empty() {
        return None;
    }
    stats.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Some((quantile(&stats, tail), quantile(&stats, 1.0 - tail)))
}

/// Percentile bootstrap of the mean of per-patient metric values.
/// `None` for fewer than 3 samples.
pub fn confidence_interval(samples: &[f64], level: f64, resamples: usize, seed: u64) -> Option<(f64, f64)> {
    let n = samples.len();
    if n < 3 || resamples == 0 {
        return None;
    }
    let mut rng = seed::rng(seed, 0);
    let stats = (0..resamples)
        .map(|_| {
            // Shifted by the first sample so constant input gives its exact value.
            let shift = samples[0];
            shift + (0..n).map(|_| samples[rng.random_range(0..n)] - shift).sum::<f64>() / n as f64
        })
        .collect();
    percentile_interval(stats, level)
}

/// Cluster bootstrap over patients: each resample draws patients with
/// replacement and pools their confusion matrices. Returns one
/// `(lower, upper)` per statistic produced by `stats`; `stats` must return
/// the same number of values for every matrix.
pub fn cluster_bootstrap<F>(
    per_patient: &[Confusion],
    level: f64,
    resamples: usize,
    seed: u64,
    stats: F,
) -> Vec<Option<(f64, f64)>>
where
    F: Fn(&[Vec<u64>]) -> Vec<Option<f64>>,
{
    let n = per_patient.len();
    let k = per_patient.first().map_or(0, |c| c.len());
    let width = per_patient.first().map_or(0, |c| stats(c).len());
    if n < 3 || resamples == 0 {
        return vec![None; width];
    }
    let mut rng = seed::rng(seed, 0);
    let mut columns = vec![Vec::with_capacity(resamples); width];
    let mut pooled = vec![vec![0u64; k]; k];
    for _ in 0..resamples {
        pooled.iter_mut().flatten().for_each(|c| *c = 0);
        for _ in 0..n {
            let m = &per_patient[rng.random_range(0..n)];
            for (prow, mrow) in pooled.iter_mut().zip(m) {
                for (p, v) in prow.iter_mut().zip(mrow) {
                    *p += v;
                }
            }
        }
        for (col, v) in columns.iter_mut().zip(stats(&pooled)) {
            if let Some(v) = v {
                col.push(v);
            }
        }
    }
    columns.into_iter().map(|c| percentile_interval(c, level)).collect()
}

/// Flattens a metric set into a fixed list, in report order.
pub fn metric_values(m: &MetricSet) -> Vec<Option<f64>> {
    let mut out = vec![m.accuracy];
    if let Some(b) = &m.binary {
        out.extend([b.sensitivity, b.specificity, b.ppv, b.npv]);
    }
    for c in &m.per_class {
        out.extend([c.sensitivity, c.ppv]);
    }
    out
}
