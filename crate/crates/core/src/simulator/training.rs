//! Labeled training set `TD` drawn from a scenario's generative process.
//!
//! Each row pairs a freshly generated query with a randomly chosen node of
//! the scenario, under freshly drawn load and speed. The label says whether
//! that node is a good host: close data, light load and fast processing.

use serde::{Deserialize, Serialize};

use super::{generate_query, stream_rng, Scenario, TraceSource, STREAM_TRAINING};
use crate::error::{Error, Result};
use crate::fcp::FuzzyClassifier;
use crate::learners::LabeledDataset;
use crate::model::{build_context_vectors_with_complexity, ContextVector, TrainingTuple};
use rand::Rng;

/// Thresholds of the labeling rule `r <= rho_r && l <= rho_l && s >= rho_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelingPolicy {
    pub rho_r: f64,
    pub rho_l: f64,
    pub rho_s: f64,
}

impl Default for LabelingPolicy {
    fn default() -> Self {
        Self {
            rho_r: 0.5,
            rho_l: 0.5,
            rho_s: 0.5,
        }
    }
}

impl LabelingPolicy {
    pub fn new(rho_r: f64, rho_l: f64, rho_s: f64) -> Result<Self> {
        let p = Self { rho_r, rho_l, rho_s };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("rho_r", self.rho_r), ("rho_l", self.rho_l), ("rho_s", self.rho_s)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!("{name} = {v} outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// Reads `rho_r` as a fraction of mismatched dimensions and maps it onto
    /// the `r` scale of exponent `alpha`, where a fraction `p` of fully
    /// mismatched dimensions gives `r = p^(1/alpha)`. Identity at `alpha = 1`.
    /// Without it a fixed 0.5 labels almost nothing positive for large `alpha`.
    pub fn matched_to_alpha(self, alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
        }
        Ok(Self {
            rho_r: self.rho_r.powf(1.0 / alpha),
            ..self
        })
    }

    pub fn label(&self, v: &ContextVector) -> u8 {
        u8::from(v.relevance <= self.rho_r && v.load <= self.rho_l && v.speed >= self.rho_s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub rows: usize,
    pub positives: usize,
    pub positive_ratio: f64,
}

impl std::fmt::Display for BalanceReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} rows, {} positive, {} negative (positive ratio {:.3})",
            self.rows,
            self.positives,
            self.rows - self.positives,
            self.positive_ratio
        )
    }
}

/// `size` labeled context vectors, reproducible from `scenario.config.seed`.
pub fn synthesize_training_set(
    scenario: &Scenario,
    fcp: &FuzzyClassifier,
    policy: &LabelingPolicy,
    size: usize,
) -> Result<(LabeledDataset, BalanceReport)> {
    if size == 0 {
        return Err(Error::invalid("training set size must be >= 1"));
    }
    if scenario.nodes.is_empty() {
        return Err(Error::invalid("scenario has no nodes"));
    }
    policy.validate()?;
    let cfg = &scenario.config;
    let trace = cfg.trace.as_ref().map(TraceSource::load).transpose()?;
    let classes = fcp.classes().len();
    let mut rng = stream_rng(cfg.seed, STREAM_TRAINING);
    let mut tuples = Vec::with_capacity(size);
    for i in 0..size {
        let (query, _) = generate_query(i as u64, cfg, classes, &mut rng)?;
        let o = fcp.classify(&query.statement)?.complexity_scalar();
        let mut node = scenario.nodes[rng.random_range(0..scenario.nodes.len())].clone();
        node.speed = cfg.distribution.sample_speed(&mut rng);
        let drawn = cfg.distribution.sample_unit(&mut rng);
        node.load = match &trace {
            Some(t) => t.sample(&mut rng),
            None => drawn,
        };
        let v = build_context_vectors_with_complexity(&query, o, std::slice::from_ref(&node), &cfg.relevance)?[0];
        tuples.push(TrainingTuple::new(v, policy.label(&v))?);
    }
    let data = LabeledDataset::from_tuples(&tuples);
    let report = BalanceReport {
        rows: data.len(),
        positives: data.positives(),
        positive_ratio: data.positive_ratio(),
    };
    if report.positives == 0 || report.positives == report.rows {
        return Err(Error::SingleClass {
            positive_ratio: report.positive_ratio,
        });
    }
    Ok((data, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fcp::FcpParams;
    use crate::model::ComplexityClasses;
    use crate::simulator::{corpus::generate_corpus, generate_scenario, ScenarioConfig};

    fn v(r: f64, l: f64, s: f64) -> ContextVector {
        ContextVector {
            complexity: 0.5,
            deadline: 3.0,
            relevance: r,
            load: l,
            speed: s,
        }
    }

    fn setup() -> (Scenario, FuzzyClassifier) {
        let cfg = ScenarioConfig {
            nodes: 4,
            dims: 4,
            queries: 5,
            samples_per_node: 100,
            ..ScenarioConfig::default()
        };
        let classes = ComplexityClasses::default();
        let corpus = generate_corpus(&classes, 10, 0).unwrap();
        (
            generate_scenario(&cfg).unwrap(),
            FuzzyClassifier::new(classes, corpus, FcpParams::default()).unwrap(),
        )
    }

    #[test]
    fn policy_examples() {
        let p = LabelingPolicy::default();
        assert_eq!(p.label(&v(0.2, 0.3, 0.8)), 1);
        for (l, s) in [(0.0, 1.0), (0.3, 0.8), (1.0, 0.0)] {
            assert_eq!(p.label(&v(0.9, l, s)), 0);
        }
        assert!(LabelingPolicy::new(1.5, 0.5, 0.5).is_err());
    }

    #[test]
    fn alpha_matched_threshold() {
        let p = LabelingPolicy::default();
        assert_eq!(p.matched_to_alpha(1.0).unwrap(), p);
        assert_close!(p.matched_to_alpha(0.5).unwrap().rho_r, 0.25, 1e-12);
        assert_close!(p.matched_to_alpha(5.0).unwrap().rho_r, 0.5f64.powf(0.2), 1e-12);
        assert!(p.matched_to_alpha(0.0).is_err());
    }

    #[test]
    fn degenerate_policy_rejected() {
        let (s, fcp) = setup();
        let p = LabelingPolicy::new(1.0, 1.0, 0.0).unwrap();
        match synthesize_training_set(&s, &fcp, &p, 200) {
            Err(Error::SingleClass { positive_ratio }) => assert_eq!(positive_ratio, 1.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn labels_follow_policy_and_are_reproducible() {
        let (s, fcp) = setup();
        let p = LabelingPolicy::default();
        let (d, report) = synthesize_training_set(&s, &fcp, &p, 500).unwrap();
        assert_eq!(report.rows, 500);
        assert!(report.positives > 0 && report.positives < 500);
        for (x, y) in d.rows() {
            assert_eq!(p.label(&ContextVector::from_features(x).unwrap()), y);
        }
        assert_eq!(synthesize_training_set(&s, &fcp, &p, 500).unwrap().0, d);
    }
}
