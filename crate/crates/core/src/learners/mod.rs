//! From-scratch binary classifiers and the AdaBoost, Bagging and Stacking
//! ensembles built on top of them.
//!
//! Four base learners are available: a CART-style tree, a random tree that
//! subsamples features at every split, Gaussian naive Bayes and a logistic
//! unit trained by gradient descent. Every learner accepts per-row weights,
//! which AdaBoost relies on.

mod dataset;
mod ensemble;
mod logistic;
mod naive_bayes;
mod tree;

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use dataset::LabeledDataset;
pub use ensemble::{
    bootstrap_indices, stratified_split, train_adaboost, train_bagging, train_stacking, AdaBoostReport, AdaBoostSpec,
    BaggingSpec, BootstrapMode, EnsembleKind, EnsembleModel, EnsembleSuite, LabelAudit, MetaEnsemble, MetaFeatures, ModelFile,
    StackingReport, StackingSpec, WeightedMember, MODEL_FORMAT_VERSION,
};
pub use logistic::LogisticUnit;
pub use naive_bayes::GaussianNb;
pub use tree::DecisionTree;

use crate::error::{Error, Result};

/// A trained binary classifier.
pub trait Classifier {
    fn arity(&self) -> usize;

    /// Probability of the positive class. `x` must have [`Classifier::arity`]
    /// components; callers on hot paths check this once up front.
    fn probability_unchecked(&self, x: &[f64]) -> f64;

    fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.arity() {
            return Err(Error::invalid(format!(
                "feature vector has {} components, model expects {}",
                x.len(),
                self.arity()
            )));
        }
        Ok(self.probability_unchecked(x).clamp(0.0, 1.0))
    }

    /// 1 iff the positive-class probability is at least 0.5.
    fn predict(&self, x: &[f64]) -> Result<u8> {
        Ok(u8::from(self.predict_proba(x)? >= 0.5))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseKind {
    CartTree,
    RandomTree,
    GaussianNb,
    Logistic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaseLearnerSpec {
    pub kind: BaseKind,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Features examined per split; `None` means all. Random trees default
    /// to `ceil(sqrt(arity))` when unset.
    pub feature_subset: Option<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
}

impl Default for BaseLearnerSpec {
    fn default() -> Self {
        Self {
            kind: BaseKind::CartTree,
            max_depth: 6,
            min_leaf: 1,
            feature_subset: None,
            learning_rate: 0.5,
            epochs: 300,
        }
    }
}

impl BaseLearnerSpec {
    pub fn of(kind: BaseKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }

    pub fn stump() -> Self {
        Self {
            max_depth: 1,
            ..Self::of(BaseKind::CartTree)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_depth == 0 || self.min_leaf == 0 || self.epochs == 0 || self.feature_subset == Some(0) {
            return Err(Error::invalid(format!("learner hyperparameters must be positive: {self:?}")));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::invalid("learning rate must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BaseModel {
    Constant { label: u8, arity: usize },
    Tree(DecisionTree),
    NaiveBayes(GaussianNb),
    Logistic(LogisticUnit),
}

impl Classifier for BaseModel {
    fn arity(&self) -> usize {
        match self {
            BaseModel::Constant { arity, .. } => *arity,
            BaseModel::Tree(m) => m.arity(),
            BaseModel::NaiveBayes(m) => m.arity(),
            BaseModel::Logistic(m) => m.arity(),
        }
    }

    fn probability_unchecked(&self, x: &[f64]) -> f64 {
        match self {
            BaseModel::Constant { label, .. } => f64::from(*label),
            BaseModel::Tree(m) => m.probability_unchecked(x),
            BaseModel::NaiveBayes(m) => m.probability_unchecked(x),
            BaseModel::Logistic(m) => m.probability_unchecked(x),
        }
    }
}

impl BaseModel {
    pub(crate) fn label_unchecked(&self, x: &[f64]) -> u8 {
        u8::from(self.probability_unchecked(x) >= 0.5)
    }
}

/// Trains one base learner with uniform row weights.
pub fn train_base(spec: &BaseLearnerSpec, data: &LabeledDataset, seed: u64) -> Result<BaseModel> {
    let w = vec![1.0 / data.len() as f64; data.len()];
    train_base_weighted(spec, data, &w, seed)
}

/// Trains one base learner with the given non-negative row weights.
///
/// Data holding a single label yields a constant model (with a warning).
pub fn train_base_weighted(spec: &BaseLearnerSpec, data: &LabeledDataset, weights: &[f64], seed: u64) -> Result<BaseModel> {
    spec.validate()?;
    if data.is_empty() {
        return Err(Error::invalid("cannot train on an empty dataset"));
    }
    if weights.len() != data.len() || weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::invalid("row weights must be finite, non-negative and one per row"));
    }
    let positives = data.positives();
    if positives == 0 || positives == data.len() {
        let label = u8::from(positives > 0);
        warn!(
            "training data has a single class ({} rows, label {label}); using a constant model",
            data.len()
        );
        return Ok(BaseModel::Constant {
            label,
            arity: data.arity(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(match spec.kind {
        BaseKind::CartTree => BaseModel::Tree(DecisionTree::fit(data, weights, spec, spec.feature_subset, &mut rng)),
        BaseKind::RandomTree => {
            let k = spec
                .feature_subset
                .unwrap_or_else(|| (data.arity() as f64).sqrt().ceil() as usize)
                .min(data.arity());
            BaseModel::Tree(DecisionTree::fit(data, weights, spec, Some(k), &mut rng))
        }
        BaseKind::GaussianNb => BaseModel::NaiveBayes(GaussianNb::fit(data, weights)),
        BaseKind::Logistic => BaseModel::Logistic(LogisticUnit::fit(data, weights, spec)),
    })
}

/// Fraction of rows on which `model` agrees with the labels.
pub fn accuracy<C: Classifier + ?Sized>(model: &C, data: &LabeledDataset) -> f64 {
    let correct = data
        .rows()
        .filter(|(x, y)| u8::from(model.probability_unchecked(x) >= 0.5) == *y)
        .count();
    correct as f64 / data.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two features, separable by the line x0 + x1 = 1.
    fn linear_toy() -> LabeledDataset {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..4 {
            for j in 0..5 {
                let (x0, x1) = (i as f64 * 0.3, j as f64 * 0.25);
                let s = x0 + x1;
                if (s - 1.0).abs() < 0.1 {
                    continue;
                }
                rows.push(vec![x0, x1]);
                labels.push(u8::from(s > 1.0));
            }
        }
        LabeledDataset::new(rows, labels).unwrap()
    }

    /// Brute-force best single-threshold split: the oracle for depth-1 trees.
    fn best_stump_accuracy(data: &LabeledDataset) -> f64 {
        let mut best = 0.0f64;
        for f in 0..data.arity() {
            let mut vals: Vec<f64> = data.rows().map(|(x, _)| x[f]).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            for t in vals.windows(2).map(|w| 0.5 * (w[0] + w[1])) {
                for polarity in [0u8, 1] {
                    let ok = data
                        .rows()
                        .filter(|(x, y)| u8::from(x[f] > t) ^ polarity ^ 1 == *y)
                        .count();
                    best = best.max(ok as f64 / data.len() as f64);
                }
            }
        }
        best
    }

    #[test]
    fn linear_toy_is_separable_by_enumeration() {
        let d = linear_toy();
        assert!(d.len() <= 20);
        // Every row is on the labeled side of x0 + x1 = 1.
        assert!(d.rows().all(|(x, y)| u8::from(x[0] + x[1] > 1.0) == y));
        let m = train_base(&BaseLearnerSpec::of(BaseKind::Logistic), &d, 0).unwrap();
        assert_eq!(accuracy(&m, &d), 1.0);
    }

    #[test]
    fn stump_on_threshold_separable_set() {
        let rows: Vec<Vec<f64>> = (0..12).map(|i| vec![(i * 7 % 5) as f64, i as f64]).collect();
        let labels: Vec<u8> = (0..12).map(|i| u8::from(i >= 5)).collect();
        let d = LabeledDataset::new(rows, labels).unwrap();
        assert_eq!(best_stump_accuracy(&d), 1.0);
        let m = train_base(&BaseLearnerSpec::stump(), &d, 0).unwrap();
        assert_eq!(accuracy(&m, &d), 1.0);
    }

    #[test]
    fn constant_label_gives_constant_model() {
        let d = LabeledDataset::new(vec![vec![0.0], vec![1.0]], vec![1, 1]).unwrap();
        for kind in [BaseKind::CartTree, BaseKind::GaussianNb, BaseKind::Logistic] {
            let m = train_base(&BaseLearnerSpec::of(kind), &d, 0).unwrap();
            assert!(matches!(m, BaseModel::Constant { label: 1, .. }));
            assert_eq!(m.predict(&[123.0]).unwrap(), 1);
        }
    }

    #[test]
    fn tree_predicts_leaf_majority_on_training_rows() {
        let d = linear_toy();
        let m = train_base(&BaseLearnerSpec::of(BaseKind::CartTree), &d, 0).unwrap();
        for (x, y) in d.rows() {
            assert_eq!(m.predict(x).unwrap(), y);
        }
    }

    #[test]
    fn arity_checked_and_probability_bounded() {
        let d = linear_toy();
        for kind in [BaseKind::CartTree, BaseKind::RandomTree, BaseKind::GaussianNb, BaseKind::Logistic] {
            let m = train_base(&BaseLearnerSpec::of(kind), &d, 3).unwrap();
            assert!(m.predict(&[0.0]).is_err());
            for (x, _) in d.rows() {
                let p = m.predict_proba(x).unwrap();
                assert!((0.0..=1.0).contains(&p));
                assert_eq!(m.predict(x).unwrap(), u8::from(p >= 0.5));
            }
        }
    }

    #[test]
    fn training_is_seed_deterministic() {
        let d = linear_toy();
        let spec = BaseLearnerSpec::of(BaseKind::RandomTree);
        assert_eq!(train_base(&spec, &d, 11).unwrap(), train_base(&spec, &d, 11).unwrap());
    }

    #[test]
    fn invalid_hyperparameters_rejected() {
        let d = linear_toy();
        let spec = BaseLearnerSpec {
            max_depth: 0,
            ..BaseLearnerSpec::default()
        };
        assert!(train_base(&spec, &d, 0).is_err());
    }
}
