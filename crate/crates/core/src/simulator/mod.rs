//! Scenario generation, node-state evolution and training-set synthesis.
//!
//! A [`Scenario`] is a set of edge nodes (each with a dataset digest) and a
//! stream of queries, drawn reproducibly from a [`ScenarioConfig`]. A
//! [`Simulation`] walks the stream one decision epoch at a time and updates
//! node load and speed between decisions, either by replaying fresh draws
//! (or a utilization trace) or by simple queue dynamics.

pub mod corpus;
pub mod dynamics;
pub mod trace;
pub mod training;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    ComplexityClasses, DatasetDigest, Interval, NodeState, Query, QueryConstraints, DEFAULT_QUEUE_CAPACITY,
};
use crate::relevance::RelevanceParams;

pub use dynamics::{apply_allocation, complete_epoch, DEFAULT_SERVICE_RATE};
pub use trace::{LoadTrace, TraceSource};
pub use training::{synthesize_training_set, BalanceReport, LabelingPolicy};

// Independent random streams derived from one seed.
const STREAM_NODES: u64 = 1;
const STREAM_QUERIES: u64 = 2;
const STREAM_EPOCHS: u64 = 3;
pub(crate) const STREAM_TRAINING: u64 = 4;

pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Value distribution for constraints, node data, load and speed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distribution {
    Uniform,
    /// Mean 0.5, standard deviation 0.15, clamped to `[0, 1]`.
    Gaussian,
}

pub const GAUSSIAN_MEAN: f64 = 0.5;
pub const GAUSSIAN_SD: f64 = 0.15;
/// Raw speeds are drawn on `(0, MAX_RAW_SPEED]` and divided by it.
pub const MAX_RAW_SPEED: f64 = 10.0;

impl Distribution {
    /// A value in `[0, 1]`.
    pub fn sample_unit<R: Rng>(self, rng: &mut R) -> f64 {
        match self {
            Distribution::Uniform => rng.random::<f64>(),
            Distribution::Gaussian => {
                let n = Normal::new(GAUSSIAN_MEAN, GAUSSIAN_SD).expect("valid normal");
                n.sample(rng).clamp(0.0, 1.0)
            }
        }
    }

    /// Normalized speed: a raw draw on `(0, 10]` divided by 10.
    pub fn sample_speed<R: Rng>(self, rng: &mut R) -> f64 {
        let raw = match self {
            Distribution::Uniform => MAX_RAW_SPEED * (1.0 - rng.random::<f64>()),
            Distribution::Gaussian => {
                let n = Normal::new(GAUSSIAN_MEAN * MAX_RAW_SPEED, GAUSSIAN_SD * MAX_RAW_SPEED).expect("valid normal");
                n.sample(rng).clamp(0.0, MAX_RAW_SPEED)
            }
        };
        raw / MAX_RAW_SPEED
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Distribution::Uniform => "uniform",
            Distribution::Gaussian => "gaussian",
        })
    }
}

impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(Self::Uniform),
            "gaussian" | "normal" => Ok(Self::Gaussian),
            other => Err(Error::invalid(format!("unknown distribution {other:?}"))),
        }
    }
}

/// How node load evolves between decisions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadMode {
    /// Load and speed are redrawn (or read from the trace) every epoch.
    #[default]
    TraceReplay,
    /// Allocations enqueue, nodes drain `floor(s * service_rate)` per epoch.
    QueueDynamics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub nodes: usize,
    /// Attributes per dataset (`L`).
    pub dims: usize,
    pub queries: usize,
    pub distribution: Distribution,
    /// Deadlines are drawn on `[0, deadline_max)`.
    pub deadline_max: f64,
    pub relevance: RelevanceParams,
    pub seed: u64,
    pub queue_capacity: usize,
    /// Points generated per node dataset before digesting.
    pub samples_per_node: usize,
    pub load_mode: LoadMode,
    pub service_rate: usize,
    /// Replaces the drawn load with a utilization trace when set.
    pub trace: Option<TraceSource>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            nodes: 10,
            dims: 10,
            queries: 1000,
            distribution: Distribution::Uniform,
            deadline_max: 10.0,
            relevance: RelevanceParams::default(),
            seed: 0,
            queue_capacity: DEFAULT_QUEUE_CAPACITY,
            samples_per_node: 1000,
            load_mode: LoadMode::TraceReplay,
            service_rate: DEFAULT_SERVICE_RATE,
            trace: None,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::invalid(m));
        if self.nodes == 0 {
            return bad("nodes must be >= 1".into());
        }
        if self.dims == 0 {
            return bad("dims must be >= 1".into());
        }
        if self.queries == 0 {
            return bad("queries must be >= 1".into());
        }
        if !(self.deadline_max > 0.0) || !self.deadline_max.is_finite() {
            return bad(format!("deadline_max must be finite and > 0, got {}", self.deadline_max));
        }
        if !(self.relevance.z > 0.0) || !self.relevance.z.is_finite() {
            return bad(format!("z must be finite and > 0, got {}", self.relevance.z));
        }
        if !(self.relevance.alpha > 0.0) || !self.relevance.alpha.is_finite() {
            return bad(format!("alpha must be finite and > 0, got {}", self.relevance.alpha));
        }
        if self.queue_capacity == 0 {
            return bad("queue_capacity must be >= 1".into());
        }
        if self.samples_per_node == 0 {
            return bad("samples_per_node must be >= 1".into());
        }
        Ok(())
    }
}

/// Nodes and a query stream. `query_classes[i]` is the template class the
/// statement of `queries[i]` was generated from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub nodes: Vec<NodeState>,
    pub queries: Vec<Query>,
    pub query_classes: Vec<usize>,
}

/// Draws one query (statement, constraints, deadline) and its template class.
pub fn generate_query<R: Rng>(id: u64, cfg: &ScenarioConfig, classes: usize, rng: &mut R) -> Result<(Query, usize)> {
    let class = rng.random_range(0..classes);
    let statement = corpus::generate_statement(class, rng);
    let intervals = (0..cfg.dims)
        .map(|_| {
            let (a, b) = (cfg.distribution.sample_unit(rng), cfg.distribution.sample_unit(rng));
            Interval::new(a.min(b), a.max(b))
        })
        .collect::<Result<Vec<_>>>()?;
    let deadline = rng.random::<f64>() * cfg.deadline_max;
    Ok((Query::new(id, statement, QueryConstraints::new(intervals)?, deadline)?, class))
}

fn generate_digest<R: Rng>(cfg: &ScenarioConfig, rng: &mut R) -> Result<DatasetDigest> {
    let rows: Vec<Vec<f64>> = (0..cfg.samples_per_node)
        .map(|_| (0..cfg.dims).map(|_| cfg.distribution.sample_unit(rng)).collect())
        .collect();
    DatasetDigest::from_samples(&rows)
}

/// Reproducible scenario from `cfg` (including its seed).
pub fn generate_scenario(cfg: &ScenarioConfig) -> Result<Scenario> {
    cfg.validate()?;
    let classes = ComplexityClasses::default().len();
    let mut node_rng = stream_rng(cfg.seed, STREAM_NODES);
    let nodes = (0..cfg.nodes)
        .map(|id| {
            let digest = generate_digest(cfg, &mut node_rng)?;
            NodeState::new(id, 0.0, 1.0, digest, cfg.queue_capacity)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut q_rng = stream_rng(cfg.seed, STREAM_QUERIES);
    let (queries, query_classes) = (0..cfg.queries)
        .map(|i| generate_query(i as u64, cfg, classes, &mut q_rng))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    let mut scenario = Scenario {
        config: cfg.clone(),
        nodes,
        queries,
        query_classes,
    };
    // Initial load and speed are the epoch-0 state.
    let mut sim = Simulation::new(scenario.clone())?;
    sim.begin_epoch(0);
    scenario.nodes = sim.nodes;
    Ok(scenario)
}

const SCENARIO_FORMAT: &str = "edge-alloc/scenario";
const SCENARIO_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ScenarioFile {
    format: String,
    version: u32,
    scenario: Scenario,
}

impl Scenario {
    pub fn to_json(&self) -> Result<String> {
        let file = ScenarioFile {
            format: SCENARIO_FORMAT.into(),
            version: SCENARIO_VERSION,
            scenario: self.clone(),
        };
        serde_json::to_string_pretty(&file).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(|e| Error::Format(format!("scenario: {e}")))?;
        if file.format != SCENARIO_FORMAT || file.version != SCENARIO_VERSION {
            return Err(Error::Format(format!(
                "expected {SCENARIO_FORMAT} v{SCENARIO_VERSION}, found {} v{}",
                file.format, file.version
            )));
        }
        let s = file.scenario;
        s.config.validate()?;
        if s.nodes.len() != s.config.nodes || s.queries.len() != s.query_classes.len() {
            return Err(Error::Format("scenario node or query count disagrees with its config".into()));
        }
        Ok(s)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Steps node state through the query stream.
///
/// Call [`Simulation::begin_epoch`] before each decision and
/// [`Simulation::commit`] with the chosen hosts after it.
#[derive(Debug, Clone)]
pub struct Simulation {
    config: ScenarioConfig,
    nodes: Vec<NodeState>,
    trace: Option<LoadTrace>,
    rng: ChaCha8Rng,
}

impl Simulation {
    pub fn new(scenario: Scenario) -> Result<Self> {
        let trace = scenario.config.trace.as_ref().map(TraceSource::load).transpose()?;
        if let Some(t) = &trace {
            if t.len() < scenario.nodes.len() {
                return Err(Error::invalid(format!(
                    "trace has {} values, fewer than the {} nodes",
                    t.len(),
                    scenario.nodes.len()
                )));
            }
        }
        Ok(Self {
            rng: stream_rng(scenario.config.seed, STREAM_EPOCHS),
            config: scenario.config,
            nodes: scenario.nodes,
            trace,
        })
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    pub fn trace(&self) -> Option<&LoadTrace> {
        self.trace.as_ref()
    }

    /// Sets load and speed for decision epoch `epoch`.
    ///
    /// Trace replay redraws every node's speed, and its load from the trace
    /// or the scenario distribution. Queue dynamics only draws the initial
    /// state at epoch 0 and afterwards leaves state to [`Simulation::commit`].
    pub fn begin_epoch(&mut self, epoch: usize) {
        let n = self.nodes.len();
        let dist = self.config.distribution;
        if self.config.load_mode == LoadMode::QueueDynamics && epoch > 0 {
            return;
        }
        for (j, node) in self.nodes.iter_mut().enumerate() {
            node.speed = dist.sample_speed(&mut self.rng);
            let drawn = dist.sample_unit(&mut self.rng);
            node.load = match &self.trace {
                Some(t) => t.load_at(j, n, epoch),
                None => drawn,
            };
            if self.config.load_mode == LoadMode::QueueDynamics {
                node.fill_queue_to_load();
            }
        }
    }

    /// Records the hosts chosen for `query_id`. Under queue dynamics the
    /// hosts enqueue it and every node then serves one epoch.
    pub fn commit(&mut self, hosts: &[usize], query_id: u64) -> Result<()> {
        if let Some(bad) = hosts.iter().find(|&&h| !self.nodes.iter().any(|n| n.id == h)) {
            return Err(Error::invalid(format!("unknown node id {bad}")));
        }
        if self.config.load_mode == LoadMode::QueueDynamics {
            dynamics::enqueue(&mut self.nodes, hosts, query_id);
            complete_epoch(&mut self.nodes, self.config.service_rate);
        }
        Ok(())
    }
}
