use crate::error::{Error, Result};
use crate::scalar::Real;

/// Per-class counts and means plus the pooled within-class scatter over all
/// feature dimensions. Models over any feature subset are fitted from these
/// without revisiting the rows.
#[derive(Clone, Debug)]
pub struct ClassStats<T> {
    pub(crate) counts: Vec<usize>,
    pub(crate) means: Vec<Vec<T>>,
    /// Sum over rows of (x - mean_c)(x - mean_c)^T, dim x dim.
    pub(crate) scatter: Vec<Vec<T>>,
}

impl<T: Real> ClassStats<T> {
    /// `rows[i]` has class index `targets[i] < n_classes`.
    pub fn from_rows(rows: &[&[T]], targets: &[usize], n_classes: usize) -> Result<Self> {
        if rows.len() != targets.len() {
            return Err(Error::validation("rows and targets differ in length"));
        }
        let dim = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::validation("rows differ in dimension"));
        }
        let mut counts = vec![0usize; n_classes];
        let mut means = vec![vec![T::zero(); dim]; n_classes];
        for (row, &c) in rows.iter().zip(targets) {
            if c >= n_classes {
                return Err(Error::validation(format!("class index {c} out of range")));
            }
            counts[c] += 1;
            for (m, &x) in means[c].iter_mut().zip(row.iter()) {
                *m += x;
            }
        }
        for (mean, &n) in means.iter_mut().zip(&counts) {
            if n > 0 {
                let inv = T::one() / T::from_usize_lossy(n);
                mean.iter_mut().for_each(|m| *m *= inv);
            }
        }
        let mut scatter = vec![vec![T::zero(); dim]; dim];
        let mut centered = vec![T::zero(); dim];
        for (row, &c) in rows.iter().zip(targets) {
            for ((d, &x), &m) in centered.iter_mut().zip(row.iter()).zip(&means[c]) {
                *d = x - m;
            }
            for i in 0..dim {
                let di = centered[i];
                let srow = &mut scatter[i];
                for j in 0..=i {
                    srow[j] += di * centered[j];
                }
            }
        }
        for i in 0..dim {
            for j in 0..i {
                scatter[j][i] = scatter[i][j];
            }
        }
        Ok(Self { counts, means, scatter })
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn dim(&self) -> usize {
        self.scatter.len()
    }
}
