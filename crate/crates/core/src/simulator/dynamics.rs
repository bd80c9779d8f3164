//! Queue arrivals and service between decisions.
//!
//! A node's load is its queue occupancy. An allocation pushes the query id
//! onto each chosen host (dropped when the queue is full), and one epoch of
//! service removes `floor(s * service_rate)` entries from every node.

use crate::allocator::{select_top_k, AllocationDecision};
use crate::error::Result;
use crate::model::NodeState;

pub const DEFAULT_SERVICE_RATE: usize = 5;

fn sync_queue(node: &mut NodeState) {
    let expected = (node.load * node.queue.capacity() as f64).round() as usize;
    if node.queue.len() != expected {
        node.fill_queue_to_load();
    }
}

pub(crate) fn enqueue(nodes: &mut [NodeState], hosts: &[usize], query_id: u64) {
    for node in nodes.iter_mut().filter(|n| hosts.contains(&n.id)) {
        sync_queue(node);
        node.queue.push(query_id);
        node.load = node.queue.occupancy();
    }
}

/// Enqueues the decision's query on its best `k` nodes. Returns their ids.
pub fn apply_allocation(nodes: &mut [NodeState], decision: &AllocationDecision, k: usize) -> Result<Vec<usize>> {
    let hosts = select_top_k(decision, k)?;
    enqueue(nodes, &hosts, decision.query_id);
    Ok(hosts)
}

/// One epoch of service on every node.
pub fn complete_epoch(nodes: &mut [NodeState], service_rate: usize) {
    for node in nodes.iter_mut() {
        sync_queue(node);
        let done = (node.speed * service_rate as f64).floor() as usize;
        for _ in 0..done {
            if node.queue.pop().is_none() {
                break;
            }
        }
        node.load = node.queue.occupancy();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocator::FusionScheme;
    use crate::model::DatasetDigest;

    fn node(id: usize, load: f64, speed: f64) -> NodeState {
        let d = DatasetDigest::new(vec![0.5], vec![0.1], 10).unwrap();
        NodeState::new(id, load, speed, d, 100).unwrap()
    }

    fn decision_for(ids: Vec<usize>, loads: Vec<f64>) -> AllocationDecision {
        let n = ids.len();
        AllocationDecision {
            query_id: 42,
            scheme: FusionScheme::Mvs,
            node_ids: ids,
            ensemble_labels: vec![[1; 3]; n],
            fused: vec![1; n],
            votes: vec![1; n],
            loads,
            selected: 0,
            conclusion_ms: 0.0,
        }
    }

    #[test]
    fn arrival_saturates() {
        let mut nodes = vec![node(0, 0.99, 0.0)];
        apply_allocation(&mut nodes, &decision_for(vec![0], vec![0.99]), 1).unwrap();
        assert_close!(nodes[0].load, 1.0, 1e-12);
        apply_allocation(&mut nodes, &decision_for(vec![0], vec![1.0]), 1).unwrap();
        assert_close!(nodes[0].load, 1.0, 1e-12);
    }

    #[test]
    fn zero_speed_never_completes() {
        let mut nodes = vec![node(0, 0.3, 0.0)];
        for _ in 0..50 {
            complete_epoch(&mut nodes, DEFAULT_SERVICE_RATE);
        }
        assert_close!(nodes[0].load, 0.3, 1e-12);
    }

    #[test]
    fn full_speed_serves_five() {
        let mut nodes = vec![node(0, 0.10, 1.0)];
        complete_epoch(&mut nodes, DEFAULT_SERVICE_RATE);
        assert_close!(nodes[0].load, 0.05, 1e-12);
    }

    #[test]
    fn top_k_hosts_enqueue() {
        let mut nodes = vec![node(0, 0.5, 0.0), node(1, 0.2, 0.0), node(2, 0.3, 0.0)];
        let hosts = apply_allocation(&mut nodes, &decision_for(vec![0, 1, 2], vec![0.5, 0.2, 0.3]), 2).unwrap();
        assert_eq!(hosts, vec![1, 2]);
        assert_close!(nodes[0].load, 0.5, 1e-12);
        assert_close!(nodes[1].load, 0.21, 1e-12);
        assert_close!(nodes[2].load, 0.31, 1e-12);
    }

    proptest::proptest! {
        #[test]
        fn load_stays_in_unit_interval(
            start in 0.0f64..=1.0,
            speed in 0.0f64..=1.0,
            ops in proptest::collection::vec(proptest::bool::ANY, 0..300),
        ) {
            let mut nodes = vec![node(0, start, speed)];
            for arrive in ops {
                if arrive {
                    enqueue(&mut nodes, &[0], 1);
                } else {
                    complete_epoch(&mut nodes, DEFAULT_SERVICE_RATE);
                }
                proptest::prop_assert!((0.0..=1.0).contains(&nodes[0].load));
            }
        }
    }
}
