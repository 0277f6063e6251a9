//! Cross-validation report and its CSV summary.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::metrics::{cluster_bootstrap, compute_metrics, Confusion, MetricSet};
use super::{Balancing, Dataset, EvalConfig, ExperimentKind, ExperimentSpec, SelectionMode};
use crate::classifier::Class;
use crate::error::Result;
use crate::scalar::Real;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowPrediction {
    pub window_index: usize,
    pub truth: Class,
    pub predicted: Class,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub test_patient: String,
    pub selected_features: Vec<usize>,
    /// Mean inner-fold accuracy of the final selected subset.
    pub inner_accuracy: Option<f64>,
    pub confusion: Confusion,
    pub predictions: Vec<WindowPrediction>,
}

/// A pooled metric with its patient-bootstrap interval. `class` is set for
/// one-vs-rest rates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub metric: String,
    pub class: Option<Class>,
    pub value: Option<f64>,
    pub ci_lower: Option<f64>,
    pub ci_upper: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub schema_version: u32,
    pub experiment: ExperimentKind,
    pub selection: SelectionMode,
    pub balancing: Balancing,
    pub seed: u64,
    pub classes: Vec<Class>,
    pub positive_class: Option<Class>,
    pub evaluation: EvalConfig,
    pub n_windows: u64,
    pub skipped_patients: Vec<String>,
    pub folds: Vec<FoldReport>,
    pub pooled_confusion: Confusion,
    pub metrics: Vec<MetricRow>,
    /// Number of folds that selected each feature.
    pub selection_tally: Vec<usize>,
    pub mean_selected_features: f64,
    /// Digest of the feature extraction config, when known.
    pub feature_config_digest: Option<String>,
}

fn rows_of(m: &MetricSet, classes: &[Class]) -> Vec<(&'static str, Option<Class>, Option<f64>)> {
    let mut rows = vec![("accuracy", None, m.accuracy)];
    match &m.binary {
        Some(b) => rows.extend([
            ("sensitivity", None, b.sensitivity),
            ("specificity", None, b.specificity),
            ("ppv", None, b.ppv),
            ("npv", None, b.npv),
        ]),
        None => {
            for (c, r) in classes.iter().zip(&m.per_class) {
                rows.push(("sensitivity", Some(*c), r.sensitivity));
                rows.push(("ppv", Some(*c), r.ppv));
            }
        }
    }
    rows
}

pub(super) fn assemble<T: Real>(
    data: &Dataset<'_, T>,
    spec: &ExperimentSpec,
    config: &EvalConfig,
    folds: Vec<FoldReport>,
    bootstrap_seed: u64,
) -> Result<CvReport> {
    let k = data.classes.len();
    let positive = spec.kind.positive();
    let mut pooled = vec![vec![0u64; k]; k];
    for f in &folds {
        for (prow, frow) in pooled.iter_mut().zip(&f.confusion) {
            for (p, v) in prow.iter_mut().zip(frow) {
                *p += v;
            }
        }
    }
    let point = compute_metrics(&pooled, positive)?;
    let per_patient: Vec<Confusion> = folds.iter().map(|f| f.confusion.clone()).collect();
    let classes = &data.classes;
    let intervals = cluster_bootstrap(&per_patient, config.ci_level, config.ci_resamples, bootstrap_seed, |c| {
        let m = compute_metrics(c, positive).expect("square matrix");
        rows_of(&m, classes).into_iter().map(|r| r.2).collect()
    });
    let metrics = rows_of(&point, classes)
        .into_iter()
        .zip(intervals)
        .map(|((metric, class, value), ci)| {
            // A percentile interval can miss a point estimate near 0 or 1;
            // widen it to contain the estimate.
            let ci = match (value, ci) {
                (Some(v), Some((lo, hi))) => Some((lo.min(v), hi.max(v))),
                _ => None,
            };
            MetricRow {
                metric: metric.to_string(),
                class,
                value,
                ci_lower: ci.map(|c| c.0),
                ci_upper: ci.map(|c| c.1),
            }
        })
        .collect();

    let mut tally = vec![0usize; data.dim()];
    for f in &folds {
        for &i in &f.selected_features {
            tally[i] += 1;
        }
    }
    let mean_selected = if folds.is_empty() {
        0.0
    } else {
        folds.iter().map(|f| f.selected_features.len()).sum::<usize>() as f64 / folds.len() as f64
    };
    Ok(CvReport {
        schema_version: REPORT_SCHEMA_VERSION,
        experiment: spec.kind,
        selection: spec.selection,
        balancing: spec.balancing,
        seed: spec.seed,
        classes: classes.clone(),
        positive_class: positive.map(|p| classes[p]),
        evaluation: config.clone(),
        n_windows: pooled.iter().flatten().sum(),
        skipped_patients: data.skipped.clone(),
        folds,
        pooled_confusion: pooled,
        metrics,
        selection_tally: tally,
        mean_selected_features: mean_selected,
        feature_config_digest: None,
    })
}

impl CvReport {
    pub fn metric(&self, name: &str, class: Option<Class>) -> Option<&MetricRow> {
        self.metrics.iter().find(|m| m.metric == name && m.class == class)
    }

    pub fn accuracy(&self) -> f64 {
        self.metric("accuracy", None).and_then(|m| m.value).unwrap_or(f64::NAN)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One row per metric, values in percent; undefined values are empty.
    pub fn write_summary_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["experiment", "selection", "metric", "class", "value_pct", "ci_lower_pct", "ci_upper_pct"])?;
        let pct = |v: Option<f64>| v.map(|x| format!("{:.2}", 100.0 * x)).unwrap_or_default();
        for m in &self.metrics {
            let selection = match self.selection {
                SelectionMode::All => "all",
                SelectionMode::Forward => "forward",
            };
            w.write_record([
                self.experiment.as_str(),
                selection,
                &m.metric,
                m.class.map(Class::as_str).unwrap_or(""),
                &pct(m.value),
                &pct(m.ci_lower),
                &pct(m.ci_upper),
            ])?;
        }
        w.flush().map_err(|e| crate::Error::io("<summary>", e))?;
        Ok(())
    }
}
