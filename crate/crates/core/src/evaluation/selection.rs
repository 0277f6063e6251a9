//! Sequential forward feature selection over patient-grouped inner folds.

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::{check_disjoint, Dataset, EvalConfig};
use crate::classifier::{fit_from_stats, ClassStats, LdaConfig};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::seed;

const INNER_ASSIGNMENT_STREAM: u64 = 1;

/// Selected features in the order they were added, with the mean inner-fold
/// accuracy reached after each addition.
#[derive(Clone, Debug, PartialEq)]
pub struct SelectionTrace {
    pub features: Vec<usize>,
    pub scores: Vec<f64>,
}

impl SelectionTrace {
    pub fn final_score(&self) -> Option<f64> {
        self.scores.last().copied()
    }
}

struct InnerFold<T> {
    stats: ClassStats<T>,
    validation: Vec<usize>,
}

/// Splits the patients of `train` into at most `config.inner_folds` groups
/// (assignment shuffled by `seed`) and returns `(inner_train, validation)`
/// index lists per fold. Every split is checked for window-ID overlap with
/// itself and with `held_out`.
pub fn inner_folds<T: Real>(
    data: &Dataset<'_, T>,
    train: &[usize],
    held_out: &[usize],
    config: &EvalConfig,
    seed: u64,
) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    let mut patients: Vec<usize> = train.iter().map(|&i| data.samples[i].patient).collect();
    patients.sort_unstable();
    patients.dedup();
    let k = config.inner_folds.min(patients.len());
    if k < 2 {
        return Err(Error::InsufficientPatients {
            required: 2,
            found: patients.len(),
        });
    }
    patients.shuffle(&mut seed::rng(seed, INNER_ASSIGNMENT_STREAM));
    let mut fold_of = vec![usize::MAX; data.patients.len()];
    for (pos, &p) in patients.iter().enumerate() {
        fold_of[p] = pos % k;
    }
    let mut folds = Vec::with_capacity(k);
    for j in 0..k {
        let (valid, fit): (Vec<usize>, Vec<usize>) =
            train.iter().partition(|&&i| fold_of[data.samples[i].patient] == j);
        check_disjoint(data, &valid, &fit, "inner training split")?;
        check_disjoint(data, held_out, &fit, "inner training split")?;
        check_disjoint(data, held_out, &valid, "inner validation split")?;
        folds.push((fit, valid));
    }
    Ok(folds)
}

/// Greedy forward selection. Starting from an empty set scored 0, each step
/// adds the feature with the best mean inner-fold accuracy and stops once the
/// gain falls below `config.tolerance`. Accuracy ties go to the candidate
/// with the higher mean posterior of the true class, then the lowest index.
pub fn forward_selection<T: Real>(
    data: &Dataset<'_, T>,
    train: &[usize],
    held_out: &[usize],
    lda: &LdaConfig,
    config: &EvalConfig,
    seed: u64,
) -> Result<SelectionTrace> {
    let n_classes = data.classes.len();
    let mut folds = Vec::new();
    for (fit, validation) in inner_folds(data, train, held_out, config, seed)? {
        let stats = data.class_stats(&fit)?;
        if stats.counts().iter().any(|&n| n < 2) {
            log::debug!("inner fold skipped: class counts {:?}", stats.counts());
            continue;
        }
        folds.push(InnerFold { stats, validation });
    }
    if folds.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no inner fold has at least 2 windows of each of {n_classes} classes"
        )));
    }

    let dim = data.dim();
    let mut selected: Vec<usize> = Vec::new();
    let mut trace = SelectionTrace {
        features: Vec::new(),
        scores: Vec::new(),
    };
    let mut current = 0.0;
    while selected.len() < dim {
        let candidates: Vec<usize> = (0..dim).filter(|f| !selected.contains(f)).collect();
        let scores: Vec<Score> = candidates
            .par_iter()
            .map(|&f| {
                let mut subset = selected.clone();
                subset.push(f);
                score(data, &folds, &subset, lda)
            })
            .collect::<Result<_>>()?;
        let mut best = 0;
        for i in 1..scores.len() {
            if scores[i].beats(&scores[best]) {
                best = i;
            }
        }
        if scores[best].accuracy - current < config.tolerance {
            break;
        }
        current = scores[best].accuracy;
        selected.push(candidates[best]);
        trace.features.push(candidates[best]);
        trace.scores.push(current);
    }
    Ok(trace)
}

/// Mean inner-fold accuracy and mean true-class posterior.
#[derive(Clone, Copy, Debug)]
struct Score {
    accuracy: f64,
    confidence: f64,
}

impl Score {
    fn beats(&self, other: &Score) -> bool {
        const TIE: f64 = 1e-12;
        self.accuracy > other.accuracy + TIE
            || ((self.accuracy - other.accuracy).abs() <= TIE && self.confidence > other.confidence + TIE)
    }
}

fn score<T: Real>(data: &Dataset<'_, T>, folds: &[InnerFold<T>], subset: &[usize], lda: &LdaConfig) -> Result<Score> {
    let (mut accuracy, mut confidence) = (0.0, 0.0);
    for fold in folds {
        let model = fit_from_stats(&fold.stats, &data.classes, subset, lda)?;
        let (mut correct, mut posterior) = (0usize, 0.0);
        for &i in &fold.validation {
            let s = &data.samples[i];
            let p = model.predict(s.row);
            correct += usize::from(p.class_index == s.target);
            posterior += p.posteriors[s.target].as_f64();
        }
        let n = fold.validation.len() as f64;
        accuracy += correct as f64 / n;
        confidence += posterior / n;
    }
    let k = folds.len() as f64;
    Ok(Score {
        accuracy: accuracy / k,
        confidence: confidence / k,
    })
}
