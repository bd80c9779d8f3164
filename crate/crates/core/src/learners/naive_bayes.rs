use serde::{Deserialize, Serialize};

use super::{Classifier, LabeledDataset};

/// Gaussian naive Bayes with weighted class statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    log_prior: [f64; 2],
    means: [Vec<f64>; 2],
    vars: [Vec<f64>; 2],
}

impl GaussianNb {
    /// Expects both classes to carry positive total weight; the caller
    /// filters single-class data.
    pub fn fit(data: &LabeledDataset, weights: &[f64]) -> Self {
        let d = data.arity();
        let mut wsum = [0.0f64; 2];
        for (i, (_, y)) in data.rows().enumerate() {
            wsum[y as usize] += weights[i];
        }
        // A class with zero total weight falls back to unweighted statistics.
        let w = |i: usize, c: usize| if wsum[c] > 0.0 { weights[i] } else { 1.0 };
        let mut norm = [0.0f64; 2];
        let mut means = [vec![0.0; d], vec![0.0; d]];
        for (i, (x, y)) in data.rows().enumerate() {
            let c = y as usize;
            norm[c] += w(i, c);
            for (m, v) in means[c].iter_mut().zip(x) {
                *m += w(i, c) * v;
            }
        }
        for c in 0..2 {
            means[c].iter_mut().for_each(|m| *m /= norm[c]);
        }
        let mut vars = [vec![0.0; d], vec![0.0; d]];
        for (i, (x, y)) in data.rows().enumerate() {
            let c = y as usize;
            for ((acc, v), m) in vars[c].iter_mut().zip(x).zip(&means[c]) {
                *acc += w(i, c) * (v - m) * (v - m);
            }
        }
        let mut max_var = 0.0f64;
        for c in 0..2 {
            for v in vars[c].iter_mut() {
                *v /= norm[c];
                max_var = max_var.max(*v);
            }
        }
        let eps = (1e-9 * max_var).max(1e-12);
        for v in vars.iter_mut().flatten() {
            *v += eps;
        }
        let total = wsum[0] + wsum[1];
        let prior = |c: usize| (wsum[c] / total).max(1e-12).ln();
        Self {
            log_prior: [prior(0), prior(1)],
            means,
            vars,
        }
    }

    fn log_likelihood(&self, c: usize, x: &[f64]) -> f64 {
        let mut ll = self.log_prior[c];
        for ((v, m), var) in x.iter().zip(&self.means[c]).zip(&self.vars[c]) {
            ll -= 0.5 * ((v - m) * (v - m) / var + (2.0 * std::f64::consts::PI * var).ln());
        }
        ll
    }
}

impl Classifier for GaussianNb {
    fn arity(&self) -> usize {
        self.means[0].len()
    }

    fn probability_unchecked(&self, x: &[f64]) -> f64 {
        let diff = self.log_likelihood(0, x) - self.log_likelihood(1, x);
        1.0 / (1.0 + diff.exp())
    }
}
