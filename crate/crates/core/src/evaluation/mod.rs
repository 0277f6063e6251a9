//! Nested leave-one-patient-out cross-validation for the three experiments.
//!
//! The outer loop holds out one patient per fold. Inside a fold, feature
//! selection sees only the remaining patients, split into patient-grouped
//! inner folds. Every split is checked for shared window IDs before use.

mod metrics;
mod report;
mod selection;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audio::Label;
use crate::classifier::{fit_from_stats, Class, ClassStats, LdaConfig, LdaModel, Priors};
use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::scalar::Real;
use crate::seed;

pub use metrics::{
    cluster_bootstrap, compute_metrics, confidence_interval, metric_values, quantile, BinaryMetrics, ClassRates,
    Confusion, MetricSet,
};
pub use report::{CvReport, FoldReport, MetricRow, WindowPrediction};
pub use selection::{forward_selection, inner_folds, SelectionTrace};

const BALANCE_STREAM: u64 = 0xba1a_0ce;
const BOOTSTRAP_STREAM: u64 = 0xb007_5742;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExperimentKind {
    #[serde(rename = "snore-vs-other")]
    SnoreVsOther,
    #[serde(rename = "osa-vs-simple")]
    OsaVsSimple,
    #[serde(rename = "direct-3class")]
    Direct3Class,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 3] = [
        ExperimentKind::SnoreVsOther,
        ExperimentKind::OsaVsSimple,
        ExperimentKind::Direct3Class,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::SnoreVsOther => "snore-vs-other",
            ExperimentKind::OsaVsSimple => "osa-vs-simple",
            ExperimentKind::Direct3Class => "direct-3class",
        }
    }

    /// Target classes in model order.
    pub fn classes(self) -> Vec<Class> {
        match self {
            ExperimentKind::SnoreVsOther => vec![Class::Snore, Class::Other],
            ExperimentKind::OsaVsSimple => vec![Class::OsaSnore, Class::SimpleSnore],
            ExperimentKind::Direct3Class => vec![Class::OsaSnore, Class::SimpleSnore, Class::Other],
        }
    }

    /// Index of the positive class for binary experiments.
    pub fn positive(self) -> Option<usize> {
        match self {
            ExperimentKind::Direct3Class => None,
            _ => Some(0),
        }
    }

    /// Maps a ground-truth label to a target class, or `None` if the
    /// experiment ignores it.
    pub fn map(self, label: Label) -> Option<Class> {
        match (self, label) {
            (ExperimentKind::SnoreVsOther, Label::Other) => Some(Class::Other),
            (ExperimentKind::SnoreVsOther, _) => Some(Class::Snore),
            (ExperimentKind::OsaVsSimple, Label::Other) => None,
            (_, Label::OsaSnore) => Some(Class::OsaSnore),
            (_, Label::SimpleSnore) => Some(Class::SimpleSnore),
            (ExperimentKind::Direct3Class, Label::Other) => Some(Class::Other),
        }
    }

    pub fn default_balancing(self) -> Balancing {
        match self {
            ExperimentKind::OsaVsSimple => Balancing::PerPatientEqual,
            _ => Balancing::None,
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::validation(format!("unknown experiment {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Balancing {
    None,
    PerPatientEqual,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionMode {
    All,
    Forward,
}

impl FromStr for SelectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(SelectionMode::All),
            "forward" => Ok(SelectionMode::Forward),
            _ => Err(Error::validation(format!("unknown selection mode {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub balancing: Balancing,
    pub selection: SelectionMode,
    pub seed: u64,
}

impl ExperimentSpec {
    pub fn new(kind: ExperimentKind, selection: SelectionMode, seed: u64) -> Self {
        Self {
            kind,
            balancing: kind.default_balancing(),
            selection,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.balancing != self.kind.default_balancing() {
            return Err(Error::validation(format!(
                "{} requires balancing {:?}",
                self.kind,
                self.kind.default_balancing()
            )));
        }
        Ok(())
    }

    /// The balanced experiment always uses uniform priors.
    pub fn lda_config(&self, base: &LdaConfig) -> LdaConfig {
        let mut cfg = base.clone();
        if self.balancing == Balancing::PerPatientEqual {
            cfg.priors = Priors::Uniform;
        }
        cfg
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub inner_folds: usize,
    /// Minimum gain in mean inner accuracy for forward selection to continue.
    pub tolerance: f64,
    pub ci_resamples: usize,
    pub ci_level: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            inner_folds: 10,
            tolerance: 0.001,
            ci_resamples: 1000,
            ci_level: 0.95,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.inner_folds < 2 {
            return Err(Error::validation("inner_folds must be at least 2"));
        }
        if !(self.tolerance >= 0.0) || !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(Error::validation("tolerance must be >= 0 and ci_level in (0, 1)"));
        }
        Ok(())
    }
}

/// One mapped window. `patient` indexes `Dataset::patients`.
#[derive(Clone, Copy, Debug)]
pub struct Sample<'a, T> {
    pub patient: usize,
    pub window_index: usize,
    pub target: usize,
    pub row: &'a [T],
}

/// Windows mapped onto an experiment's classes, ordered by patient then
/// window index.
#[derive(Clone, Debug)]
pub struct Dataset<'a, T> {
    pub classes: Vec<Class>,
    pub patients: Vec<String>,
    pub samples: Vec<Sample<'a, T>>,
    /// Patients dropped because they lack a class the experiment needs.
    pub skipped: Vec<String>,
}

impl<'a, T: Real> Dataset<'a, T> {
    /// Maps labels, drops unlabeled and unmapped windows, skips patients
    /// missing a class under the balanced experiment, then balances.
    pub fn prepare(rows: &'a [FeatureVector<T>], spec: &ExperimentSpec) -> Result<Self> {
        spec.validate()?;
        let classes = spec.kind.classes();
        let mut by_patient: BTreeMap<&str, Vec<(usize, usize, &'a [T])>> = BTreeMap::new();
        let mut seen = HashSet::new();
        for row in rows {
            if !seen.insert((row.patient_id.as_str(), row.window_index)) {
                return Err(Error::validation(format!(
                    "duplicate window {} of patient {}",
                    row.window_index, row.patient_id
                )));
            }
            let Some(class) = row.label.and_then(|l| spec.kind.map(l)) else {
                continue;
            };
            let target = classes.iter().position(|&c| c == class).expect("mapped class");
            by_patient
                .entry(&row.patient_id)
                .or_default()
                .push((row.window_index, target, row.values()));
        }

        let mut patients = Vec::new();
        let mut samples = Vec::new();
        let mut skipped = Vec::new();
        for (id, mut windows) in by_patient {
            if spec.balancing == Balancing::PerPatientEqual {
                let mut counts = vec![0usize; classes.len()];
                windows.iter().for_each(|w| counts[w.1] += 1);
                if counts.contains(&0) {
                    log::warn!("patient {id} skipped: lacks a class required by {}", spec.kind);
                    skipped.push(id.to_string());
                    continue;
                }
                windows = balance_windows(id, windows, classes.len(), spec.seed);
            }
            windows.sort_by_key(|w| w.0);
            let patient = patients.len();
            patients.push(id.to_string());
            samples.extend(windows.into_iter().map(|(window_index, target, row)| Sample {
                patient,
                window_index,
                target,
                row,
            }));
        }
        Ok(Self {
            classes,
            patients,
            samples,
            skipped,
        })
    }

    pub fn dim(&self) -> usize {
        self.samples.first().map_or(0, |s| s.row.len())
    }

    pub fn class_stats(&self, indices: &[usize]) -> Result<ClassStats<T>> {
        let rows: Vec<&[T]> = indices.iter().map(|&i| self.samples[i].row).collect();
        let targets: Vec<usize> = indices.iter().map(|&i| self.samples[i].target).collect();
        ClassStats::from_rows(&rows, &targets, self.classes.len())
    }

    fn window_id(&self, i: usize) -> (usize, usize) {
        let s = &self.samples[i];
        (s.patient, s.window_index)
    }
}

fn balance_windows<R: Copy>(
    patient_id: &str,
    windows: Vec<(usize, usize, R)>,
    n_classes: usize,
    seed: u64,
) -> Vec<(usize, usize, R)> {
    let mut per_class: Vec<Vec<(usize, usize, R)>> = vec![Vec::new(); n_classes];
    for w in windows {
        per_class[w.1].push(w);
    }
    let keep = per_class.iter().map(Vec::len).min().unwrap_or(0);
    let mut rng = seed::rng(seed::derive(seed, BALANCE_STREAM), seed::hash_str(patient_id));
    let mut out = Vec::new();
    for mut class_windows in per_class {
        if class_windows.len() > keep {
            class_windows.shuffle(&mut rng);
            class_windows.truncate(keep);
        }
        out.extend(class_windows);
    }
    out
}

/// Undersamples every class of each patient to that patient's smallest class
/// count, without replacement. Retained windows keep their input order.
pub fn balance_per_patient<T: Real>(
    rows: &[FeatureVector<T>],
    kind: ExperimentKind,
    seed: u64,
) -> Vec<FeatureVector<T>> {
    let classes = kind.classes();
    let mut by_patient: BTreeMap<&str, Vec<(usize, usize, usize)>> = BTreeMap::new();
    for (pos, row) in rows.iter().enumerate() {
        if let Some(class) = row.label.and_then(|l| kind.map(l)) {
            let target = classes.iter().position(|&c| c == class).expect("mapped class");
            by_patient.entry(&row.patient_id).or_default().push((row.window_index, target, pos));
        }
    }
    let mut keep: Vec<usize> = by_patient
        .into_iter()
        .flat_map(|(id, w)| balance_windows(id, w, classes.len(), seed))
        .map(|w| w.2)
        .collect();
    keep.sort_unstable();
    keep.into_iter().map(|i| rows[i].clone()).collect()
}

/// Errors with `Error::Leakage` if any window ID occurs in both index sets.
pub fn check_disjoint<T: Real>(data: &Dataset<'_, T>, a: &[usize], b: &[usize], context: &str) -> Result<()> {
    let ids: HashSet<(usize, usize)> = a.iter().map(|&i| data.window_id(i)).collect();
    let count = b.iter().filter(|&&i| ids.contains(&data.window_id(i))).count();
    if count > 0 {
        return Err(Error::Leakage {
            count,
            context: context.to_string(),
        });
    }
    Ok(())
}

/// Sample indices of one outer fold.
#[derive(Clone, Debug, PartialEq)]
pub struct FoldPlan {
    pub fold: usize,
    pub test_patient: usize,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// One leave-one-patient-out fold per patient, in patient order.
pub fn plan_outer_folds<T: Real>(data: &Dataset<'_, T>) -> Vec<FoldPlan> {
    (0..data.patients.len())
        .map(|p| {
            let (test, train) = (0..data.samples.len()).partition(|&i| data.samples[i].patient == p);
            FoldPlan {
                fold: p,
                test_patient: p,
                train,
                test,
            }
        })
        .collect()
}

fn fold_seed(spec: &ExperimentSpec, fold: usize) -> u64 {
    seed::derive(spec.seed, fold as u64)
}

/// Selects features and fits the fold model on `plan.train`, after checking
/// that no test window is present in training.
pub fn fit_fold_model<T: Real>(
    data: &Dataset<'_, T>,
    plan: &FoldPlan,
    spec: &ExperimentSpec,
    lda: &LdaConfig,
    config: &EvalConfig,
) -> Result<(LdaModel<T>, Option<SelectionTrace>)> {
    check_disjoint(data, &plan.test, &plan.train, "outer training set")?;
    let lda = spec.lda_config(lda);
    let trace = match spec.selection {
        SelectionMode::All => None,
        SelectionMode::Forward => Some(forward_selection(
            data,
            &plan.train,
            &plan.test,
            &lda,
            config,
            fold_seed(spec, plan.fold),
        )?),
    };
    let selected: Vec<usize> = match &trace {
        Some(t) => t.features.clone(),
        None => (0..data.dim()).collect(),
    };
    let model = fit_from_stats(&data.class_stats(&plan.train)?, &data.classes, &selected, &lda)?;
    Ok((model, trace))
}

pub fn run_fold<T: Real>(
    data: &Dataset<'_, T>,
    plan: &FoldPlan,
    spec: &ExperimentSpec,
    lda: &LdaConfig,
    config: &EvalConfig,
) -> Result<FoldReport> {
    let (model, trace) = fit_fold_model(data, plan, spec, lda, config)?;
    let k = data.classes.len();
    let mut confusion = vec![vec![0u64; k]; k];
    let predictions = plan
        .test
        .iter()
        .map(|&i| {
            let s = &data.samples[i];
            let predicted = model.classify(s.row);
            confusion[s.target][predicted] += 1;
            WindowPrediction {
                window_index: s.window_index,
                truth: data.classes[s.target],
                predicted: data.classes[predicted],
            }
        })
        .collect();
    Ok(FoldReport {
        fold: plan.fold,
        test_patient: data.patients[plan.test_patient].clone(),
        selected_features: model.selected_features().to_vec(),
        inner_accuracy: trace.and_then(|t| t.final_score()),
        confusion,
        predictions,
    })
}

/// Model for deployment: trained on every patient except `exclude`, with the
/// same selection stream the evaluation fold for that patient uses. Without
/// an exclusion the model sees all patients.
pub fn train_model<T: Real>(
    rows: &[FeatureVector<T>],
    spec: &ExperimentSpec,
    lda: &LdaConfig,
    config: &EvalConfig,
    exclude: Option<&str>,
) -> Result<LdaModel<T>> {
    let data = Dataset::prepare(rows, spec)?;
    let plan = match exclude {
        Some(id) => {
            let p = data
                .patients
                .iter()
                .position(|q| q == id)
                .ok_or_else(|| Error::validation(format!("patient {id:?} not present in training data")))?;
            plan_outer_folds(&data).swap_remove(p)
        }
        None => FoldPlan {
            fold: data.patients.len(),
            test_patient: usize::MAX,
            train: (0..data.samples.len()).collect(),
            test: Vec::new(),
        },
    };
    Ok(fit_fold_model(&data, &plan, spec, lda, config)?.0)
}

/// Runs the nested cross-validation for one experiment.
pub fn outer_loop<T: Real>(
    rows: &[FeatureVector<T>],
    spec: &ExperimentSpec,
    lda: &LdaConfig,
    config: &EvalConfig,
) -> Result<CvReport> {
    config.validate()?;
    let data = Dataset::prepare(rows, spec)?;
    if data.patients.len() < 3 {
        return Err(Error::InsufficientPatients {
            required: 3,
            found: data.patients.len(),
        });
    }
    let plans = plan_outer_folds(&data);
    let folds: Vec<FoldReport> = plans
        .par_iter()
        .map(|plan| run_fold(&data, plan, spec, lda, config))
        .collect::<Result<_>>()?;
    report::assemble(&data, spec, config, folds, seed::derive(spec.seed, BOOTSTRAP_STREAM))
}

#[cfg(test)]
mod tests;
