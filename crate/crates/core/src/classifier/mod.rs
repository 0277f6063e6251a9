//! Linear discriminant analysis: Gaussian classes sharing one covariance.

mod linalg;
mod stats;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub use linalg::Cholesky;
pub use stats::ClassStats;

use linalg::dot;

/// Classifier target. `Snore` merges both snore labels for snore-vs-other.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Class {
    OsaSnore,
    SimpleSnore,
    Snore,
    Other,
}

impl Class {
    pub fn as_str(self) -> &'static str {
        match self {
            Class::OsaSnore => "osa_snore",
            Class::SimpleSnore => "simple_snore",
            Class::Snore => "snore",
            Class::Other => "other",
        }
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Class {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "osa_snore" => Ok(Class::OsaSnore),
            "simple_snore" => Ok(Class::SimpleSnore),
            "snore" => Ok(Class::Snore),
            "other" => Ok(Class::Other),
            _ => Err(Error::validation(format!("unknown class {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Priors {
    /// Training-set class frequencies.
    #[default]
    Empirical,
    Uniform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdaConfig {
    pub priors: Priors,
    /// Initial diagonal loading, relative to the mean covariance diagonal.
    pub reg_epsilon: f64,
    /// Largest loading tried before giving up.
    pub reg_max: f64,
}

impl Default for LdaConfig {
    fn default() -> Self {
        Self {
            priors: Priors::Empirical,
            reg_epsilon: 1e-6,
            reg_max: 1e-2,
        }
    }
}

impl LdaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.reg_epsilon > 0.0 && self.reg_epsilon <= self.reg_max && self.reg_max.is_finite()) {
            return Err(Error::validation("need 0 < reg_epsilon <= reg_max"));
        }
        Ok(())
    }
}

pub const SCHEMA_VERSION: u32 = 1;

/// Fitted model. Discriminant coefficients are derived on construction and
/// never serialized.
#[derive(Clone, Debug)]
pub struct LdaModel<T> {
    classes: Vec<Class>,
    selected_features: Vec<usize>,
    means: Vec<Vec<T>>,
    covariance: Vec<Vec<T>>,
    priors: Vec<T>,
    feature_config_digest: Option<String>,
    weights: Vec<Vec<T>>,
    biases: Vec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction<T> {
    pub class: Class,
    pub class_index: usize,
    pub posteriors: Vec<T>,
}

/// Fits a model on full-length feature rows using the features in `selected`.
pub fn fit<T: Real>(
    rows: &[&[T]],
    targets: &[Class],
    selected: &[usize],
    config: &LdaConfig,
) -> Result<LdaModel<T>> {
    let mut classes: Vec<Class> = targets.to_vec();
    classes.sort();
    classes.dedup();
    let index: Vec<usize> = targets
        .iter()
        .map(|t| classes.binary_search(t).expect("class present"))
        .collect();
    let stats = ClassStats::from_rows(rows, &index, classes.len())?;
    fit_from_stats(&stats, &classes, selected, config)
}

/// Fits from precomputed statistics; `classes[i]` names class index `i`.
pub fn fit_from_stats<T: Real>(
    stats: &ClassStats<T>,
    classes: &[Class],
    selected: &[usize],
    config: &LdaConfig,
) -> Result<LdaModel<T>> {
    config.validate()?;
    if classes.len() != stats.counts.len() {
        return Err(Error::validation("class list does not match statistics"));
    }
    if classes.len() < 2 {
        return Err(Error::validation("LDA needs at least two classes"));
    }
    if selected.is_empty() {
        return Err(Error::validation("no features selected"));
    }
    if let Some(&bad) = selected.iter().find(|&&i| i >= stats.dim()) {
        return Err(Error::validation(format!("feature index {bad} out of range")));
    }
    for (class, &n) in classes.iter().zip(&stats.counts) {
        if n < 2 {
            return Err(Error::UnderpopulatedClass {
                class: class.to_string(),
                count: n,
            });
        }
    }
    let total: usize = stats.counts.iter().sum();
    let dof = T::from_usize_lossy(total - classes.len());
    let d = selected.len();

    let means: Vec<Vec<T>> = stats
        .means
        .iter()
        .map(|m| selected.iter().map(|&i| m[i]).collect())
        .collect();
    let pooled: Vec<Vec<T>> = selected
        .iter()
        .map(|&i| selected.iter().map(|&j| stats.scatter[i][j] / dof).collect())
        .collect();

    let mean_diag = (0..d).map(|i| pooled[i][i]).sum::<T>() / T::from_usize_lossy(d);
    if !mean_diag.is_finite() {
        return Err(Error::DegenerateData { epsilon: 0.0 });
    }
    let scale = if mean_diag > T::zero() { mean_diag } else { T::one() };

    let mut epsilon = config.reg_epsilon;
    let covariance = loop {
        let load = T::lit(epsilon) * scale;
        let mut candidate = pooled.clone();
        for (i, row) in candidate.iter_mut().enumerate() {
            row[i] += load;
        }
        if Cholesky::new(&candidate).is_some() {
            break candidate;
        }
        epsilon *= 10.0;
        if epsilon > config.reg_max * (1.0 + 1e-9) {
            return Err(Error::DegenerateData { epsilon: config.reg_max });
        }
    };

    let priors: Vec<T> = match config.priors {
        Priors::Empirical => stats
            .counts
            .iter()
            .map(|&n| T::from_usize_lossy(n) / T::from_usize_lossy(total))
            .collect(),
        Priors::Uniform => vec![T::one() / T::from_usize_lossy(classes.len()); classes.len()],
    };

    LdaModel::from_parts(classes.to_vec(), selected.to_vec(), means, covariance, priors, None)
}

impl<T: Real> LdaModel<T> {
    /// Validates the parts and derives the linear discriminants.
    pub fn from_parts(
        classes: Vec<Class>,
        selected_features: Vec<usize>,
        means: Vec<Vec<T>>,
        covariance: Vec<Vec<T>>,
        priors: Vec<T>,
        feature_config_digest: Option<String>,
    ) -> Result<Self> {
        let k = classes.len();
        let d = selected_features.len();
        if k < 2 || means.len() != k || priors.len() != k {
            return Err(Error::validation("model needs matching classes, means and priors (>= 2)"));
        }
        if d == 0 || means.iter().any(|m| m.len() != d) || covariance.len() != d || covariance.iter().any(|r| r.len() != d) {
            return Err(Error::validation("model dimensions disagree with selected_features"));
        }
        let mut sorted = selected_features.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::validation("duplicate selected feature"));
        }
        let prior_sum: f64 = priors.iter().map(|p| p.as_f64()).sum();
        if priors.iter().any(|p| !(*p > T::zero())) || (prior_sum - 1.0).abs() > 1e-12 * (k as f64).max(1.0) {
            return Err(Error::validation(format!("priors must be positive and sum to 1 (sum {prior_sum})")));
        }
        for i in 0..d {
            for j in 0..i {
                if (covariance[i][j] - covariance[j][i]).abs().as_f64() > 1e-10 {
                    return Err(Error::validation("covariance is not symmetric"));
                }
            }
        }
        if means.iter().flatten().chain(covariance.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::validation("model contains non-finite values"));
        }
        let chol = Cholesky::new(&covariance)
            .ok_or_else(|| Error::validation("covariance is not positive-definite"))?;
        let weights: Vec<Vec<T>> = means.iter().map(|m| chol.solve(m)).collect();
        let biases = weights
            .iter()
            .zip(&means)
            .zip(&priors)
            .map(|((w, m), &p)| -T::lit(0.5) * dot(w, m) + p.ln())
            .collect();
        Ok(Self {
            classes,
            selected_features,
            means,
            covariance,
            priors,
            feature_config_digest,
            weights,
            biases,
        })
    }

    pub fn classes(&self) -> &[Class] {
        &self.classes
    }

    pub fn selected_features(&self) -> &[usize] {
        &self.selected_features
    }

    pub fn means(&self) -> &[Vec<T>] {
        &self.means
    }

    pub fn covariance(&self) -> &[Vec<T>] {
        &self.covariance
    }

    pub fn priors(&self) -> &[T] {
        &self.priors
    }

    pub fn feature_config_digest(&self) -> Option<&str> {
        self.feature_config_digest.as_deref()
    }

    pub fn with_feature_config_digest(mut self, digest: impl Into<String>) -> Self {
        self.feature_config_digest = Some(digest.into());
        self
    }

    /// `x^T S^-1 mu_k - mu_k^T S^-1 mu_k / 2 + ln pi_k` for each class, where
    /// `x` is a full-length feature row.
    pub fn discriminants(&self, x: &[T]) -> Vec<T> {
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(w, &b)| {
                self.selected_features
                    .iter()
                    .zip(w)
                    .map(|(&i, &wi)| x[i] * wi)
                    .sum::<T>()
                    + b
            })
            .collect()
    }

    /// Highest-discriminant class (first in class order on ties) and softmax posteriors.
    pub fn predict(&self, x: &[T]) -> Prediction<T> {
        let scores = self.discriminants(x);
        let best = argmax(&scores);
        let top = scores[best];
        let exp: Vec<T> = scores.iter().map(|&s| (s - top).exp()).collect();
        let z: T = exp.iter().copied().sum();
        Prediction {
            class: self.classes[best],
            class_index: best,
            posteriors: exp.into_iter().map(|e| e / z).collect(),
        }
    }

    /// Index of the predicted class, without computing posteriors.
    pub fn classify(&self, x: &[T]) -> usize {
        argmax(&self.discriminants(x))
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            schema_version: SCHEMA_VERSION,
            classes: self.classes.clone(),
            selected_features: self.selected_features.clone(),
            means: self.means.clone(),
            covariance: self.covariance.clone(),
            priors: self.priors.clone(),
            feature_config_digest: self.feature_config_digest.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let version: VersionProbe = serde_json::from_str(text)?;
        if version.schema_version != SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                found: version.schema_version,
                expected: SCHEMA_VERSION,
            });
        }
        let file: ModelFile<T> = serde_json::from_str(text)?;
        Self::from_parts(
            file.classes,
            file.selected_features,
            file.means,
            file.covariance,
            file.priors,
            file.feature_config_digest,
        )
    }
}

/// First index whose score is within rounding of the maximum, so exact ties
/// resolve to the earlier class.
fn argmax<T: Real>(scores: &[T]) -> usize {
    let top = scores.iter().copied().fold(T::neg_infinity(), T::max);
    let tol = T::lit(1e-12) * top.abs().max(T::one());
    scores.iter().position(|&s| s >= top - tol).unwrap_or(0)
}

pub fn save_model<T: Real>(model: &LdaModel<T>) -> Result<Vec<u8>> {
    Ok(model.to_json()?.into_bytes())
}

pub fn load_model<T: Real>(bytes: &[u8]) -> Result<LdaModel<T>> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::validation(format!("model is not UTF-8: {e}")))?;
    LdaModel::from_json(text)
}

#[derive(Deserialize)]
struct VersionProbe {
    schema_version: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Real", deny_unknown_fields)]
struct ModelFile<T> {
    schema_version: u32,
    classes: Vec<Class>,
    selected_features: Vec<usize>,
    means: Vec<Vec<T>>,
    covariance: Vec<Vec<T>>,
    priors: Vec<T>,
    feature_config_digest: Option<String>,
}
