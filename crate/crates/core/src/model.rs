//! Shared domain types and per-node context-vector assembly.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fcp::FuzzyClassifier;
use crate::relevance::{self, RelevanceParams};

/// Default queue length, uniform across nodes.
pub const DEFAULT_QUEUE_CAPACITY: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityClass {
    pub id: usize,
    pub label: String,
}

/// The fixed class set Θ. Ids are contiguous from 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityClasses(Vec<ComplexityClass>);

impl ComplexityClasses {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let classes: Vec<_> = labels
            .into_iter()
            .enumerate()
            .map(|(id, l)| ComplexityClass { id, label: l.into() })
            .collect();
        if classes.is_empty() {
            return Err(Error::invalid("complexity class set is empty"));
        }
        for (i, c) in classes.iter().enumerate() {
            if c.label.trim().is_empty() {
                return Err(Error::invalid("complexity class label is empty"));
            }
            if classes[..i].iter().any(|p| p.label == c.label) {
                return Err(Error::invalid(format!("duplicate class label {:?}", c.label)));
            }
        }
        Ok(Self(classes))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, id: usize) -> Option<&ComplexityClass> {
        self.0.get(id)
    }

    pub fn by_label(&self, label: &str) -> Option<&ComplexityClass> {
        self.0.iter().find(|c| c.label == label)
    }

    pub fn iter(&self) -> impl Iterator<Item = &ComplexityClass> {
        self.0.iter()
    }
}

impl Default for ComplexityClasses {
    fn default() -> Self {
        Self::new(["O(n log n)", "O(n)", "O(n^2)"]).expect("static class set")
    }
}

/// Closed real interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::invalid(format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_degenerate(&self) -> bool {
        self.hi == self.lo
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }
}

/// Per-attribute `[min, max]` constraints of a query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryConstraints(Vec<Interval>);

impl QueryConstraints {
    pub fn new(intervals: Vec<Interval>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::invalid("query constraints need at least one dimension"));
        }
        for w in &intervals {
            Interval::new(w.lo, w.hi)?;
        }
        Ok(Self(intervals))
    }

    pub fn dims(&self) -> usize {
        self.0.len()
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub id: u64,
    pub statement: String,
    pub constraints: QueryConstraints,
    /// Deadline in time units. Carried as a learner feature only.
    pub deadline: f64,
}

impl Query {
    pub fn new(id: u64, statement: impl Into<String>, constraints: QueryConstraints, deadline: f64) -> Result<Self> {
        let statement = statement.into();
        if statement.trim().is_empty() {
            return Err(Error::invalid("query statement is empty"));
        }
        if !(deadline >= 0.0) || !deadline.is_finite() {
            return Err(Error::invalid(format!("deadline must be finite and >= 0, got {deadline}")));
        }
        Ok(Self {
            id,
            statement,
            constraints,
            deadline,
        })
    }
}

/// Summary statistics a node reports for its local dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetDigest {
    pub means: Vec<f64>,
    pub spreads: Vec<f64>,
    pub cardinality: u64,
}

impl DatasetDigest {
    pub fn new(means: Vec<f64>, spreads: Vec<f64>, cardinality: u64) -> Result<Self> {
        if means.is_empty() || means.len() != spreads.len() {
            return Err(Error::invalid(format!(
                "digest dimensionality mismatch: {} means vs {} spreads",
                means.len(),
                spreads.len()
            )));
        }
        if cardinality == 0 {
            return Err(Error::invalid("digest cardinality must be >= 1"));
        }
        if means.iter().any(|m| !m.is_finite()) || spreads.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err(Error::invalid("digest has non-finite mean or negative spread"));
        }
        Ok(Self {
            means,
            spreads,
            cardinality,
        })
    }

    /// Column-wise mean and population standard deviation of `rows`.
    pub fn from_samples(rows: &[Vec<f64>]) -> Result<Self> {
        let first = rows.first().ok_or_else(|| Error::invalid("digest of an empty sample"))?;
        let dims = first.len();
        let n = rows.len() as f64;
        let mut means = vec![0.0; dims];
        for row in rows {
            if row.len() != dims {
                return Err(Error::invalid("ragged sample rows"));
            }
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut vars = vec![0.0; dims];
        for row in rows {
            for ((acc, v), m) in vars.iter_mut().zip(row).zip(&means) {
                *acc += (v - m) * (v - m);
            }
        }
        let spreads = vars.into_iter().map(|v| (v / n).sqrt()).collect();
        Self::new(means, spreads, rows.len() as u64)
    }

    pub fn dims(&self) -> usize {
        self.means.len()
    }
}

/// Bounded FIFO of query ids waiting on a node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryQueue {
    capacity: usize,
    items: VecDeque<u64>,
}

impl QueryQueue {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::invalid("queue capacity must be >= 1"));
        }
        Ok(Self {
            capacity,
            items: VecDeque::new(),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Enqueues `id`; returns false when the queue is full.
    pub fn push(&mut self, id: u64) -> bool {
        if self.items.len() >= self.capacity {
            return false;
        }
        self.items.push_back(id);
        true
    }

    pub fn pop(&mut self) -> Option<u64> {
        self.items.pop_front()
    }

    pub fn clear(&mut self) {
        self.items.clear();
    }

    pub fn occupancy(&self) -> f64 {
        self.items.len() as f64 / self.capacity as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeState {
    pub id: usize,
    /// Fraction of the queue that is occupied, in `[0, 1]`.
    pub load: f64,
    /// Normalized processing speed in `[0, 1]`.
    pub speed: f64,
    pub digest: DatasetDigest,
    pub queue: QueryQueue,
}

impl NodeState {
    pub fn new(id: usize, load: f64, speed: f64, digest: DatasetDigest, queue_capacity: usize) -> Result<Self> {
        check_unit("load", load)?;
        check_unit("speed", speed)?;
        Ok(Self {
            id,
            load,
            speed,
            digest,
            queue: QueryQueue::new(queue_capacity)?,
        })
    }

    /// Rebuilds the queue with `round(load * capacity)` placeholder entries
    /// so that queue occupancy and `load` agree.
    pub fn fill_queue_to_load(&mut self) {
        let target = (self.load * self.queue.capacity() as f64).round() as usize;
        self.queue.clear();
        for k in 0..target {
            self.queue.push(u64::MAX - k as u64);
        }
        self.load = self.queue.occupancy();
    }
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} {v} outside [0, 1]")))
    }
}

/// The `⟨o, a, r, l, s⟩` vector describing one (query, node) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContextVector {
    pub complexity: f64,
    pub deadline: f64,
    pub relevance: f64,
    pub load: f64,
    pub speed: f64,
}

impl ContextVector {
    pub const ARITY: usize = 5;

    pub fn features(&self) -> [f64; Self::ARITY] {
        [self.complexity, self.deadline, self.relevance, self.load, self.speed]
    }

    pub fn from_features(f: &[f64]) -> Result<Self> {
        match *f {
            [complexity, deadline, relevance, load, speed] => Ok(Self {
                complexity,
                deadline,
                relevance,
                load,
                speed,
            }),
            _ => Err(Error::invalid(format!(
                "context vector needs {} features, got {}",
                Self::ARITY,
                f.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingTuple {
    pub context: ContextVector,
    /// 1 = allocate, 0 = do not allocate.
    pub label: u8,
}

impl TrainingTuple {
    pub fn new(context: ContextVector, label: u8) -> Result<Self> {
        if label > 1 {
            return Err(Error::invalid(format!("label must be 0 or 1, got {label}")));
        }
        Ok(Self { context, label })
    }
}

/// One context vector per node for `query`.
///
/// The complexity scalar is computed once from the statement and shared by
/// every vector; relevance is computed per node from its digest.
pub fn build_context_vectors(
    query: &Query,
    nodes: &[NodeState],
    fcp: &FuzzyClassifier,
    params: &RelevanceParams,
) -> Result<Vec<ContextVector>> {
    check_nodes(query, nodes)?;
    let complexity = fcp.classify(&query.statement)?.complexity_scalar();
    assemble(query, complexity, nodes, params)
}

/// As [`build_context_vectors`] with a precomputed complexity scalar.
pub fn build_context_vectors_with_complexity(
    query: &Query,
    complexity: f64,
    nodes: &[NodeState],
    params: &RelevanceParams,
) -> Result<Vec<ContextVector>> {
    check_nodes(query, nodes)?;
    assemble(query, complexity, nodes, params)
}

fn check_nodes(query: &Query, nodes: &[NodeState]) -> Result<()> {
    if nodes.is_empty() {
        return Err(Error::invalid("no candidate nodes"));
    }
    let dims = query.constraints.dims();
    if let Some(n) = nodes.iter().find(|n| n.digest.dims() != dims) {
        return Err(Error::invalid(format!(
            "node {} has {} dimensions, query has {dims}",
            n.id,
            n.digest.dims()
        )));
    }
    Ok(())
}

fn assemble(query: &Query, complexity: f64, nodes: &[NodeState], params: &RelevanceParams) -> Result<Vec<ContextVector>> {
    nodes
        .iter()
        .map(|node| {
            let ci = relevance::confidence_intervals(&node.digest, params.z, params.ci_denominator)?;
            let r = relevance::relevance(&query.constraints, &ci, params.alpha)?;
            Ok(ContextVector {
                complexity,
                deadline: query.deadline,
                relevance: r,
                load: node.load,
                speed: node.speed,
            })
        })
        .collect()
}
