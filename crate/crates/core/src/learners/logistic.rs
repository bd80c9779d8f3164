use serde::{Deserialize, Serialize};

use super::{BaseLearnerSpec, Classifier, LabeledDataset};
use crate::aggregate::sigmoid;

/// Single logistic unit on standardized inputs, trained by full-batch
/// gradient descent on the weighted log loss. Training is deterministic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticUnit {
    center: Vec<f64>,
    scale: Vec<f64>,
    coef: Vec<f64>,
    bias: f64,
}

impl LogisticUnit {
    pub fn fit(data: &LabeledDataset, weights: &[f64], spec: &BaseLearnerSpec) -> Self {
        let d = data.arity();
        let total: f64 = weights.iter().sum();
        let w: Vec<f64> = if total > 0.0 {
            weights.iter().map(|v| v / total).collect()
        } else {
            vec![1.0 / data.len() as f64; data.len()]
        };
        let mut center = vec![0.0; d];
        for (i, (x, _)) in data.rows().enumerate() {
            for (c, v) in center.iter_mut().zip(x) {
                *c += w[i] * v;
            }
        }
        let mut scale = vec![0.0; d];
        for (i, (x, _)) in data.rows().enumerate() {
            for ((s, v), c) in scale.iter_mut().zip(x).zip(&center) {
                *s += w[i] * (v - c) * (v - c);
            }
        }
        scale.iter_mut().for_each(|s| *s = if *s > 1e-24 { s.sqrt() } else { 1.0 });

        let z: Vec<Vec<f64>> = data
            .rows()
            .map(|(x, _)| x.iter().zip(&center).zip(&scale).map(|((v, c), s)| (v - c) / s).collect())
            .collect();
        let mut coef = vec![0.0; d];
        let mut bias = 0.0;
        let mut grad = vec![0.0; d];
        for _ in 0..spec.epochs {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut gb = 0.0;
            for (i, zi) in z.iter().enumerate() {
                let p = sigmoid(bias + zi.iter().zip(&coef).map(|(a, b)| a * b).sum::<f64>());
                let err = w[i] * (p - f64::from(data.y(i)));
                gb += err;
                for (g, v) in grad.iter_mut().zip(zi) {
                    *g += err * v;
                }
            }
            bias -= spec.learning_rate * gb;
            for (c, g) in coef.iter_mut().zip(&grad) {
                *c -= spec.learning_rate * g;
            }
        }
        Self {
            center,
            scale,
            coef,
            bias,
        }
    }
}

impl Classifier for LogisticUnit {
    fn arity(&self) -> usize {
        self.coef.len()
    }

    fn probability_unchecked(&self, x: &[f64]) -> f64 {
        let mut s = self.bias;
        for (((v, c), sc), k) in x.iter().zip(&self.center).zip(&self.scale).zip(&self.coef) {
            s += k * (v - c) / sc;
        }
        sigmoid(s)
    }
}
