//! Query controller decisions: fuse the three ensemble labels per node and
//! elect the host by one-over-all voting.
//!
//! With fused labels `b_i`, node `i` gets one vote when `b_i = 1`; when
//! `b_i = 0` every other node gets one vote. The vote tally is the matching
//! degree used to rank nodes. Ties go to the lower current load, then the
//! lower node id.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fcp::FuzzyClassifier;
use crate::learners::MetaEnsemble;
use crate::model::{build_context_vectors_with_complexity, ContextVector, NodeState, Query};
use crate::relevance::RelevanceParams;

/// Floor applied to measured conclusion times, in milliseconds.
pub const CLOCK_FLOOR_MS: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FusionScheme {
    /// Conjunction: allocate only if all three ensembles agree.
    Cs,
    /// Majority: allocate if at least two of three agree.
    Mvs,
}

impl FusionScheme {
    pub const ALL: [FusionScheme; 2] = [FusionScheme::Cs, FusionScheme::Mvs];
}

impl fmt::Display for FusionScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FusionScheme::Cs => "cs",
            FusionScheme::Mvs => "mvs",
        })
    }
}

impl FromStr for FusionScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cs" => Ok(Self::Cs),
            "mvs" => Ok(Self::Mvs),
            other => Err(Error::invalid(format!("unknown fusion scheme {other:?} (expected cs or mvs)"))),
        }
    }
}

pub fn fuse(y1: u8, y2: u8, y3: u8, scheme: FusionScheme) -> u8 {
    match scheme {
        FusionScheme::Cs => y1 * y2 * y3,
        FusionScheme::Mvs => u8::from(y1 + y2 + y3 >= 2),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationDecision {
    pub query_id: u64,
    pub scheme: FusionScheme,
    pub node_ids: Vec<usize>,
    /// Raw `[Y1, Y2, Y3]` per node.
    pub ensemble_labels: Vec<[u8; 3]>,
    pub fused: Vec<u8>,
    pub votes: Vec<u64>,
    /// Current load of each node at decision time.
    pub loads: Vec<f64>,
    /// Node id of the winner.
    pub selected: usize,
    /// Wall-clock decision time in milliseconds.
    pub conclusion_ms: f64,
}

impl AllocationDecision {
    /// Position of the winner in the candidate list.
    pub fn selected_index(&self) -> usize {
        self.node_ids
            .iter()
            .position(|&id| id == self.selected)
            .expect("winner is a candidate")
    }
}

/// One-over-all vote tally for fused labels.
pub fn tally_votes(fused: &[u8]) -> Vec<u64> {
    let zeros = fused.iter().filter(|&&b| b == 0).count() as u64;
    fused
        .iter()
        .map(|&b| if b == 1 { 1 + zeros } else { zeros - 1 })
        .collect()
}

/// Candidate positions ordered by (votes desc, load asc, id asc).
pub fn rank_nodes(votes: &[u64], loads: &[f64], ids: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..votes.len()).collect();
    order.sort_by(|&a, &b| {
        votes[b]
            .cmp(&votes[a])
            .then(loads[a].total_cmp(&loads[b]))
            .then(ids[a].cmp(&ids[b]))
    });
    order
}

/// Winner position from fused labels. When every tally is zero the
/// lowest-load node wins.
pub fn elect(fused: &[u8], loads: &[f64], ids: &[usize]) -> usize {
    let votes = tally_votes(fused);
    if votes.iter().all(|&v| v == 0) {
        return rank_nodes(&vec![0; votes.len()], loads, ids)[0];
    }
    rank_nodes(&votes, loads, ids)[0]
}

/// Everything needed to decide one query.
pub struct Allocator<'a> {
    pub fcp: &'a FuzzyClassifier,
    pub ensembles: &'a MetaEnsemble,
    pub relevance: RelevanceParams,
}

impl Allocator<'_> {
    pub fn allocate(&self, query: &Query, nodes: &[NodeState], scheme: FusionScheme) -> Result<AllocationDecision> {
        ova_allocate(query, nodes, self.ensembles, scheme, self.fcp, &self.relevance)
    }
}

/// Builds the context vectors, fuses the ensemble labels and elects the
/// host. The conclusion time covers the whole call.
pub fn ova_allocate(
    query: &Query,
    nodes: &[NodeState],
    ensembles: &MetaEnsemble,
    scheme: FusionScheme,
    fcp: &FuzzyClassifier,
    relevance: &RelevanceParams,
) -> Result<AllocationDecision> {
    let start = Instant::now();
    if nodes.is_empty() {
        return Err(Error::invalid("no candidate nodes"));
    }
    if ensembles.arity() != ContextVector::ARITY {
        return Err(Error::invalid(format!(
            "ensembles expect {} features, context vectors have {}",
            ensembles.arity(),
            ContextVector::ARITY
        )));
    }
    let complexity = fcp.classify(&query.statement)?.complexity_scalar();
    let vectors = build_context_vectors_with_complexity(query, complexity, nodes, relevance)?;
    let ensemble_labels: Vec<[u8; 3]> = vectors
        .iter()
        .map(|v| ensembles.labels_unchecked(&v.features()))
        .collect();
    let fused: Vec<u8> = ensemble_labels.iter().map(|y| fuse(y[0], y[1], y[2], scheme)).collect();
    let loads: Vec<f64> = nodes.iter().map(|n| n.load).collect();
    let node_ids: Vec<usize> = nodes.iter().map(|n| n.id).collect();
    let votes = tally_votes(&fused);
    let winner = elect(&fused, &loads, &node_ids);
    let conclusion_ms = (start.elapsed().as_secs_f64() * 1e3).max(CLOCK_FLOOR_MS);
    Ok(AllocationDecision {
        query_id: query.id,
        scheme,
        selected: node_ids[winner],
        node_ids,
        ensemble_labels,
        fused,
        votes,
        loads,
        conclusion_ms,
    })
}

/// The best `k` node ids by (votes desc, load asc, id asc).
pub fn select_top_k(decision: &AllocationDecision, k: usize) -> Result<Vec<usize>> {
    let n = decision.node_ids.len();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("k must lie in 1..={n}, got {k}")));
    }
    Ok(rank_nodes(&decision.votes, &decision.loads, &decision.node_ids)
        .into_iter()
        .take(k)
        .map(|i| decision.node_ids[i])
        .collect())
}
