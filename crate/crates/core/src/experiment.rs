//! End-to-end runs: build a scenario, train the three ensembles on its
//! synthesized training set, then allocate every query of its stream.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::allocator::{ova_allocate, select_top_k, FusionScheme};
use crate::error::{Error, Result};
use crate::fcp::{FcpParams, FuzzyClassifier, TrainingQueryCorpus};
use crate::learners::{EnsembleSuite, MetaEnsemble};
use crate::metrics::{DecisionRecord, RunDescriptor, RunResult};
use crate::model::ComplexityClasses;
use crate::simulator::corpus::generate_corpus;
use crate::simulator::{
    generate_scenario, synthesize_training_set, BalanceReport, Distribution, LabelingPolicy, Scenario, ScenarioConfig,
    Simulation, TraceSource,
};

/// The three evaluation datasets: uniform and Gaussian draws, and uniform
/// draws with load replayed from a utilization trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    Uniform,
    Gaussian,
    Trace,
}

impl DatasetKind {
    pub const ALL: [DatasetKind; 3] = [DatasetKind::Uniform, DatasetKind::Gaussian, DatasetKind::Trace];

    /// `base` adjusted for this dataset. `trace` is used for [`DatasetKind::Trace`].
    pub fn apply(self, base: &ScenarioConfig, trace: &TraceSource) -> ScenarioConfig {
        let mut cfg = base.clone();
        match self {
            DatasetKind::Uniform => {
                cfg.distribution = Distribution::Uniform;
                cfg.trace = None;
            }
            DatasetKind::Gaussian => {
                cfg.distribution = Distribution::Gaussian;
                cfg.trace = None;
            }
            DatasetKind::Trace => {
                cfg.distribution = Distribution::Uniform;
                cfg.trace = Some(trace.clone());
            }
        }
        cfg
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DatasetKind::Uniform => "uniform",
            DatasetKind::Gaussian => "gaussian",
            DatasetKind::Trace => "trace",
        })
    }
}

impl FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(Self::Uniform),
            "gaussian" => Ok(Self::Gaussian),
            "trace" => Ok(Self::Trace),
            other => Err(Error::invalid(format!("unknown dataset {other:?}"))),
        }
    }
}

/// Everything besides the scenario that a run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub fcp: FcpParams,
    /// Statements per class in the generated corpus.
    pub corpus_per_class: usize,
    pub corpus_seed: u64,
    pub ensembles: EnsembleSuite,
    pub policy: LabelingPolicy,
    pub training_size: usize,
    /// Hosts per query.
    pub k: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            fcp: FcpParams::default(),
            corpus_per_class: 30,
            corpus_seed: 0,
            ensembles: EnsembleSuite::default(),
            policy: LabelingPolicy::default(),
            training_size: 2000,
            k: 1,
        }
    }
}

impl PipelineConfig {
    pub fn classifier(&self, corpus: Option<TrainingQueryCorpus>) -> Result<FuzzyClassifier> {
        let classes = ComplexityClasses::default();
        let corpus = match corpus {
            Some(c) => c,
            None => generate_corpus(&classes, self.corpus_per_class, self.corpus_seed)?,
        };
        FuzzyClassifier::new(classes, corpus, self.fcp.clone())
    }
}

/// A scenario with its classifier and trained ensembles.
#[derive(Debug, Clone)]
pub struct TrainedPipeline {
    pub scenario: Scenario,
    pub fcp: FuzzyClassifier,
    pub ensembles: MetaEnsemble,
    pub balance: BalanceReport,
}

/// Generates the scenario and trains on its training set. The training
/// seed is the scenario seed.
pub fn prepare(pipeline: &PipelineConfig, scenario: &ScenarioConfig, fcp: FuzzyClassifier) -> Result<TrainedPipeline> {
    let scenario = generate_scenario(scenario)?;
    let (td, balance) = synthesize_training_set(&scenario, &fcp, &pipeline.policy, pipeline.training_size)?;
    let ensembles = pipeline.ensembles.train(&td, scenario.config.seed)?;
    Ok(TrainedPipeline {
        scenario,
        fcp,
        ensembles,
        balance,
    })
}

/// Allocates every query of the stream in order, updating node state
/// between decisions. Records are taken against the pre-decision snapshot.
pub fn simulate(p: &TrainedPipeline, scheme: FusionScheme, k: usize) -> Result<Vec<DecisionRecord>> {
    let mut sim = Simulation::new(p.scenario.clone())?;
    let relevance = p.scenario.config.relevance;
    let mut records = Vec::with_capacity(p.scenario.queries.len());
    for (epoch, (query, &class)) in p.scenario.queries.iter().zip(&p.scenario.query_classes).enumerate() {
        sim.begin_epoch(epoch);
        let decision = ova_allocate(query, sim.nodes(), &p.ensembles, scheme, &p.fcp, &relevance)?;
        let predicted = p.fcp.classify(&query.statement)?.resolved.unwrap_or(usize::MAX);
        records.push(DecisionRecord::new(&decision, sim.nodes(), predicted, class)?);
        let hosts = select_top_k(&decision, k.min(decision.node_ids.len()))?;
        sim.commit(&hosts, query.id)?;
    }
    Ok(records)
}

/// One grid cell before the scheme is chosen.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSpec {
    pub dataset: DatasetKind,
    pub nodes: usize,
    pub seed: u64,
}

/// Runs both schemes on one trained pipeline.
pub fn run_cell(
    pipeline: &PipelineConfig,
    base: &ScenarioConfig,
    trace: &TraceSource,
    cell: &CellSpec,
    schemes: &[FusionScheme],
    fcp: &FuzzyClassifier,
) -> Result<Vec<RunResult>> {
    let mut cfg = cell.dataset.apply(base, trace);
    cfg.nodes = cell.nodes;
    cfg.seed = cell.seed;
    let trained = prepare(pipeline, &cfg, fcp.clone())?;
    schemes
        .iter()
        .map(|&scheme| {
            Ok(RunResult {
                descriptor: descriptor(scheme, &cfg, cell.dataset),
                records: simulate(&trained, scheme, pipeline.k)?,
            })
        })
        .collect()
}

pub fn descriptor(scheme: FusionScheme, cfg: &ScenarioConfig, dataset: DatasetKind) -> RunDescriptor {
    RunDescriptor {
        scheme,
        nodes: cfg.nodes,
        dataset: dataset.to_string(),
        dims: cfg.dims,
        alpha: format!("{}", cfg.relevance.alpha),
        seed: cfg.seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_run_is_reproducible() {
        let pipeline = PipelineConfig {
            training_size: 400,
            ..PipelineConfig::default()
        };
        let base = ScenarioConfig {
            queries: 40,
            samples_per_node: 100,
            ..ScenarioConfig::default()
        };
        let fcp = pipeline.classifier(None).unwrap();
        let cell = CellSpec {
            dataset: DatasetKind::Trace,
            nodes: 10,
            seed: 3,
        };
        let a = run_cell(&pipeline, &base, &TraceSource::Bundled, &cell, &FusionScheme::ALL, &fcp).unwrap();
        let b = run_cell(&pipeline, &base, &TraceSource::Bundled, &cell, &FusionScheme::ALL, &fcp).unwrap();
        assert_eq!(a.len(), 2);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.records.len(), 40);
            let strip = |r: &RunResult| r.records.iter().map(|d| (d.selected, d.load_selected, d.speed_max)).collect::<Vec<_>>();
            assert_eq!(strip(x), strip(y));
            for r in &x.records {
                assert!(r.load_min <= r.load_selected && r.speed_selected <= r.speed_max);
            }
        }
    }
}
