//! Interval relevance between query constraints and node data digests,
//! and how the aggregation exponent alpha shapes it.
//!
//! cargo run --example relevance

use edge_alloc::aggregate::quasi_arithmetic_mean;
use edge_alloc::model::{DatasetDigest, Interval, QueryConstraints};
use edge_alloc::relevance::{confidence_intervals, psi, relevance, CiDenominator};

fn main() -> edge_alloc::Result<()> {
    let iv = |lo, hi| Interval::new(lo, hi);
    println!("psi([0,2], [1,3]) = {}", psi(&iv(0.0, 2.0)?, &iv(1.0, 3.0)?));
    println!("psi([0,4], [1,2]) = {}", psi(&iv(0.0, 4.0)?, &iv(1.0, 2.0)?));
    println!("psi([0,1], [2,3]) = {}", psi(&iv(0.0, 1.0)?, &iv(2.0, 3.0)?));

    // Three nodes whose data sit low, in the middle and high.
    let digests = [0.2, 0.5, 0.8].map(|mu| DatasetDigest::new(vec![mu; 3], vec![1.0; 3], 10));
    let query = QueryConstraints::new(vec![iv(0.1, 0.6)?, iv(0.4, 0.9)?, iv(0.45, 0.55)?])?;
    for (i, d) in digests.into_iter().enumerate() {
        let ci = confidence_intervals(&d?, 1.28, CiDenominator::N)?;
        let r: Vec<String> = [0.5, 1.0, 5.0]
            .iter()
            .map(|&a| Ok(format!("alpha {a}: {:.3}", relevance(&query, &ci, a)?)))
            .collect::<edge_alloc::Result<_>>()?;
        let bounds: Vec<String> = ci.iter().map(|c| format!("[{:.3}, {:.3}]", c.lo, c.hi)).collect();
        println!("node {i} intervals {}  r {}", bounds.join(" "), r.join(", "));
    }

    let psis = [0.5, 0.0, 1.0];
    for a in [0.5, 1.0, 2.0, 5.0] {
        println!("mean of {psis:?} at alpha {a}: {:.4}", quasi_arithmetic_mean(&psis, a)?);
    }
    Ok(())
}
