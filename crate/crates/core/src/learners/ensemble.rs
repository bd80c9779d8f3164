use std::cell::RefCell;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{train_base, train_base_weighted, BaseKind, BaseLearnerSpec, BaseModel, Classifier, LabeledDataset};
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;
const MODEL_FORMAT: &str = "edge-alloc/ensemble";
const EPS_CLAMP: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    AdaBoost,
    Bagging,
    Stacking,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedMember {
    pub model: BaseModel,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnsembleModel {
    AdaBoost { members: Vec<WeightedMember> },
    Bagging { members: Vec<BaseModel> },
    Stacking {
        bases: Vec<BaseModel>,
        meta: BaseModel,
        #[serde(default)]
        meta_features: MetaFeatures,
    },
}

/// What the Stacking meta learner sees from each base learner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetaFeatures {
    /// Hard 0/1 predictions.
    #[default]
    Labels,
    /// Positive-class probabilities.
    Probabilities,
}

impl MetaFeatures {
    fn of(self, base: &BaseModel, x: &[f64]) -> f64 {
        match self {
            MetaFeatures::Labels => f64::from(base.label_unchecked(x)),
            MetaFeatures::Probabilities => base.probability_unchecked(x),
        }
    }
}

impl EnsembleModel {
    pub fn kind(&self) -> EnsembleKind {
        match self {
            EnsembleModel::AdaBoost { .. } => EnsembleKind::AdaBoost,
            EnsembleModel::Bagging { .. } => EnsembleKind::Bagging,
            EnsembleModel::Stacking { .. } => EnsembleKind::Stacking,
        }
    }

    fn first_arity(&self) -> usize {
        match self {
            EnsembleModel::AdaBoost { members } => members[0].model.arity(),
            EnsembleModel::Bagging { members } => members[0].arity(),
            EnsembleModel::Stacking { bases, .. } => bases[0].arity(),
        }
    }

    /// Signed AdaBoost vote `Σ α_t h_t(x)` with `h_t ∈ {-1, +1}`.
    fn adaboost_score(members: &[WeightedMember], x: &[f64]) -> f64 {
        members
            .iter()
            .map(|m| if m.model.label_unchecked(x) == 1 { m.weight } else { -m.weight })
            .sum()
    }
}

impl Classifier for EnsembleModel {
    fn arity(&self) -> usize {
        self.first_arity()
    }

    fn probability_unchecked(&self, x: &[f64]) -> f64 {
        match self {
            EnsembleModel::AdaBoost { members } => {
                let total: f64 = members.iter().map(|m| m.weight.abs()).sum();
                if total == 0.0 {
                    return 0.5;
                }
                0.5 * (1.0 + Self::adaboost_score(members, x) / total)
            }
            EnsembleModel::Bagging { members } => {
                let yes = members.iter().filter(|m| m.label_unchecked(x) == 1).count();
                yes as f64 / members.len() as f64
            }
            EnsembleModel::Stacking {
                bases,
                meta,
                meta_features,
            } => {
                let z: Vec<f64> = bases.iter().map(|b| meta_features.of(b, x)).collect();
                meta.probability_unchecked(&z)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaBoostSpec {
    pub rounds: usize,
    pub base: BaseLearnerSpec,
}

impl Default for AdaBoostSpec {
    fn default() -> Self {
        Self {
            rounds: 20,
            base: BaseLearnerSpec {
                max_depth: 2,
                ..BaseLearnerSpec::of(BaseKind::CartTree)
            },
        }
    }
}

/// Per-round diagnostics from AdaBoost training.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AdaBoostReport {
    /// Weighted training error of each round's learner.
    pub round_errors: Vec<f64>,
    /// Sum of the instance weights after each reweighting.
    pub weight_sums: Vec<f64>,
    /// True when training stopped before the configured round count.
    pub stopped_early: bool,
}

/// Discrete AdaBoost.
///
/// Rounds stop early when the weighted error reaches 0.5 (the learner is
/// discarded unless it is the first) or hits 0 (the learner is kept with the
/// weight implied by the clamped error).
pub fn train_adaboost(data: &LabeledDataset, spec: &AdaBoostSpec, seed: u64) -> Result<(EnsembleModel, AdaBoostReport)> {
    if spec.rounds == 0 {
        return Err(Error::invalid("AdaBoost needs at least one round"));
    }
    let n = data.len();
    if n == 0 {
        return Err(Error::invalid("cannot train on an empty dataset"));
    }
    let mut w = vec![1.0 / n as f64; n];
    let mut members = Vec::new();
    let mut report = AdaBoostReport::default();
    for t in 0..spec.rounds {
        let h = train_base_weighted(&spec.base, data, &w, seed.wrapping_add(t as u64))?;
        let preds: Vec<u8> = data.rows().map(|(x, _)| h.label_unchecked(x)).collect();
        let eps: f64 = preds
            .iter()
            .zip(data.labels())
            .zip(&w)
            .filter(|((p, y), _)| p != y)
            .map(|(_, wi)| wi)
            .sum();
        report.round_errors.push(eps);
        if eps >= 0.5 {
            if members.is_empty() {
                members.push(WeightedMember { model: h, weight: 1.0 });
            }
            report.stopped_early = t + 1 < spec.rounds;
            break;
        }
        let e = eps.clamp(EPS_CLAMP, 1.0 - EPS_CLAMP);
        let alpha = 0.5 * ((1.0 - e) / e).ln();
        members.push(WeightedMember { model: h, weight: alpha });
        if eps == 0.0 {
            report.stopped_early = t + 1 < spec.rounds;
            break;
        }
        for ((wi, p), y) in w.iter_mut().zip(&preds).zip(data.labels()) {
            let agree = if p == y { 1.0 } else { -1.0 };
            *wi *= (-alpha * agree).exp();
        }
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|wi| *wi /= total);
        report.weight_sums.push(w.iter().sum());
    }
    Ok((EnsembleModel::AdaBoost { members }, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BootstrapMode {
    #[default]
    Resample,
    /// Every bag is the full dataset in order. Used to check that a single
    /// bag reduces to its base learner.
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaggingSpec {
    pub bags: usize,
    pub base: BaseLearnerSpec,
    pub bootstrap: BootstrapMode,
}

impl Default for BaggingSpec {
    fn default() -> Self {
        Self {
            bags: 20,
            base: BaseLearnerSpec {
                max_depth: 8,
                ..BaseLearnerSpec::of(BaseKind::RandomTree)
            },
            bootstrap: BootstrapMode::Resample,
        }
    }
}

/// `n` row indices drawn uniformly with replacement.
pub fn bootstrap_indices<R: Rng>(n: usize, rng: &mut R) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Bootstrap aggregation; members vote and a tie goes to the positive class.
pub fn train_bagging(data: &LabeledDataset, spec: &BaggingSpec, seed: u64) -> Result<EnsembleModel> {
    if spec.bags == 0 {
        return Err(Error::invalid("Bagging needs at least one bag"));
    }
    if data.is_empty() {
        return Err(Error::invalid("cannot train on an empty dataset"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let members = (0..spec.bags)
        .map(|b| {
            let member_seed = seed.wrapping_add(1 + b as u64);
            match spec.bootstrap {
                BootstrapMode::Resample => {
                    let idx = bootstrap_indices(data.len(), &mut rng);
                    train_base(&spec.base, &data.subset(&idx), member_seed)
                }
                BootstrapMode::Identity => train_base(&spec.base, data, member_seed),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EnsembleModel::Bagging { members })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StackingSpec {
    pub bases: Vec<BaseLearnerSpec>,
    pub meta: BaseLearnerSpec,
    /// Fraction of rows used to train the base learners.
    pub split_ratio: f64,
    pub meta_features: MetaFeatures,
}

impl Default for StackingSpec {
    fn default() -> Self {
        Self {
            bases: vec![
                BaseLearnerSpec {
                    max_depth: 4,
                    ..BaseLearnerSpec::of(BaseKind::CartTree)
                },
                BaseLearnerSpec::of(BaseKind::GaussianNb),
                BaseLearnerSpec::of(BaseKind::Logistic),
            ],
            meta: BaseLearnerSpec::of(BaseKind::Logistic),
            split_ratio: 0.5,
            meta_features: MetaFeatures::Labels,
        }
    }
}

/// Records which rows had their label read.
#[derive(Debug, Default)]
pub struct LabelAudit {
    reads: RefCell<Vec<usize>>,
}

impl LabelAudit {
    /// Copies `indices` out of `data`, logging each label read.
    pub fn materialize(&self, data: &LabeledDataset, indices: &[usize]) -> LabeledDataset {
        self.reads.borrow_mut().extend_from_slice(indices);
        data.subset(indices)
    }

    pub fn reads(&self) -> Vec<usize> {
        self.reads.borrow().clone()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StackingReport {
    pub part_a: Vec<usize>,
    pub part_b: Vec<usize>,
    /// Rows whose labels were read while training base learners.
    pub base_label_reads: Vec<usize>,
    /// Rows whose labels were read while training the meta learner.
    pub meta_label_reads: Vec<usize>,
}

impl StackingReport {
    /// Number of part-B label reads that happened during base training.
    pub fn leaked_label_reads(&self) -> usize {
        let mut b = self.part_b.clone();
        b.sort_unstable();
        self.base_label_reads
            .iter()
            .filter(|i| b.binary_search(i).is_ok())
            .count()
    }
}

/// Splits row indices into two parts, class by class, so both parts keep
/// the label balance. Each class with at least two rows contributes to both
/// parts.
pub fn stratified_split<R: Rng>(labels: &[u8], ratio: f64, rng: &mut R) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::invalid(format!("split ratio must lie in (0, 1), got {ratio}")));
    }
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for class in [0u8, 1] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.is_empty() {
            continue;
        }
        idx.shuffle(rng);
        let n = idx.len();
        let mut take = (ratio * n as f64).round() as usize;
        if n >= 2 {
            take = take.clamp(1, n - 1);
        } else {
            take = 1;
        }
        a.extend_from_slice(&idx[..take]);
        b.extend_from_slice(&idx[take..]);
    }
    a.sort_unstable();
    b.sort_unstable();
    Ok((a, b))
}

/// Stacked generalization: bases learn from part A, the meta learner learns
/// from the bases' predictions on part B.
pub fn train_stacking(data: &LabeledDataset, spec: &StackingSpec, seed: u64) -> Result<(EnsembleModel, StackingReport)> {
    if spec.bases.len() < 2 {
        return Err(Error::invalid("Stacking needs at least two base learners"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (part_a, part_b) = stratified_split(data.labels(), spec.split_ratio, &mut rng)?;
    if part_b.is_empty() {
        return Err(Error::invalid("Stacking split left the meta part empty"));
    }
    let base_audit = LabelAudit::default();
    let train_a = base_audit.materialize(data, &part_a);
    let bases = spec
        .bases
        .iter()
        .enumerate()
        .map(|(k, s)| train_base(s, &train_a, seed.wrapping_add(1 + k as u64)))
        .collect::<Result<Vec<_>>>()?;

    // Meta features come from part-B inputs only; labels are read after.
    let meta_x: Vec<Vec<f64>> = part_b
        .iter()
        .map(|&i| bases.iter().map(|b| spec.meta_features.of(b, data.x(i))).collect())
        .collect();
    let meta_audit = LabelAudit::default();
    let meta_labels = meta_audit.materialize(data, &part_b).labels().to_vec();
    let meta_data = LabeledDataset::new(meta_x, meta_labels)?;
    let meta = train_base(&spec.meta, &meta_data, seed.wrapping_add(1000))?;
    let report = StackingReport {
        part_a,
        part_b,
        base_label_reads: base_audit.reads(),
        meta_label_reads: meta_audit.reads(),
    };
    Ok((
        EnsembleModel::Stacking {
            bases,
            meta,
            meta_features: spec.meta_features,
        },
        report,
    ))
}

/// Specs for the three ensembles.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSuite {
    pub adaboost: AdaBoostSpec,
    pub stacking: StackingSpec,
    pub bagging: BaggingSpec,
}

/// The three trained ensembles producing `Y1` (AdaBoost), `Y2` (Stacking)
/// and `Y3` (Bagging).
#[derive(Debug, Clone, PartialEq)]
pub struct MetaEnsemble {
    pub adaboost: EnsembleModel,
    pub stacking: EnsembleModel,
    pub bagging: EnsembleModel,
}

impl EnsembleSuite {
    pub fn train(&self, data: &LabeledDataset, seed: u64) -> Result<MetaEnsemble> {
        let (adaboost, _) = train_adaboost(data, &self.adaboost, seed)?;
        let (stacking, _) = train_stacking(data, &self.stacking, seed.wrapping_add(1 << 20))?;
        let bagging = train_bagging(data, &self.bagging, seed.wrapping_add(2 << 20))?;
        Ok(MetaEnsemble {
            adaboost,
            stacking,
            bagging,
        })
    }
}

impl MetaEnsemble {
    pub fn arity(&self) -> usize {
        self.adaboost.arity()
    }

    /// `[Y1, Y2, Y3]` for one feature vector.
    pub fn labels(&self, x: &[f64]) -> Result<[u8; 3]> {
        for m in self.members() {
            if m.arity() != x.len() {
                return Err(Error::invalid(format!(
                    "feature vector has {} components, model expects {}",
                    x.len(),
                    m.arity()
                )));
            }
        }
        Ok(self.labels_unchecked(x))
    }

    pub(crate) fn labels_unchecked(&self, x: &[f64]) -> [u8; 3] {
        let l = |m: &EnsembleModel| u8::from(m.probability_unchecked(x) >= 0.5);
        [l(&self.adaboost), l(&self.stacking), l(&self.bagging)]
    }

    pub fn members(&self) -> [&EnsembleModel; 3] {
        [&self.adaboost, &self.stacking, &self.bagging]
    }
}

/// Versioned JSON envelope for a trained ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub arity: usize,
    pub model: EnsembleModel,
}

impl ModelFile {
    pub fn new(model: EnsembleModel) -> Self {
        Self {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_FORMAT_VERSION,
            arity: model.arity(),
            model,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialization")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: ModelFile = serde_json::from_str(text).map_err(|e| Error::Format(format!("model file: {e}")))?;
        if f.format != MODEL_FORMAT {
            return Err(Error::Format(format!("not a model file (format {:?})", f.format)));
        }
        if f.version != MODEL_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "model format version {} is not supported (expected {MODEL_FORMAT_VERSION})",
                f.version
            )));
        }
        if f.model.arity() != f.arity {
            return Err(Error::Format("model arity does not match its header".into()));
        }
        Ok(f)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
