//! Query/dataset relevance from per-dimension interval overlap.
//!
//! A node's digest (means, spreads, cardinality) is turned into one
//! confidence interval per dimension. Each interval is compared with the
//! query's `[min, max]` constraint on the same dimension through the overlap
//! distance `ψ = 1 - |w ∩ f| / min(|w|, |f|)`, and the per-dimension values
//! are combined with a quasi-arithmetic mean.
//!
//! The result behaves as a distance: 0 means the query's constraints cover
//! the node's data on every dimension, 1 means no overlap anywhere.

use serde::{Deserialize, Serialize};

use crate::aggregate;
use crate::error::{Error, Result};
use crate::model::{DatasetDigest, Interval, QueryConstraints};

/// Divisor applied to the spread when building confidence intervals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiDenominator {
    /// `μ ± z·σ/n`
    #[default]
    N,
    /// `μ ± z·σ/√n`, the usual standard-error form.
    SqrtN,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RelevanceParams {
    pub z: f64,
    pub alpha: f64,
    pub ci_denominator: CiDenominator,
}

impl Default for RelevanceParams {
    fn default() -> Self {
        // z = 1.28 covers roughly the central 80% of a standard normal.
        Self {
            z: 1.28,
            alpha: 1.0,
            ci_denominator: CiDenominator::N,
        }
    }
}

pub type IntervalVector = Vec<Interval>;

pub fn confidence_intervals(digest: &DatasetDigest, z: f64, denom: CiDenominator) -> Result<IntervalVector> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::invalid(format!("z must be finite and > 0, got {z}")));
    }
    let n = digest.cardinality as f64;
    let div = match denom {
        CiDenominator::N => n,
        CiDenominator::SqrtN => n.sqrt(),
    };
    Ok(digest
        .means
        .iter()
        .zip(&digest.spreads)
        .map(|(&mu, &sigma)| {
            let half = z * sigma / div;
            Interval {
                lo: mu - half,
                hi: mu + half,
            }
        })
        .collect())
}

pub fn interval_intersection_length(w: &Interval, f: &Interval) -> f64 {
    let lo = w.lo.max(f.lo);
    let hi = w.hi.min(f.hi);
    if lo < hi {
        hi - lo
    } else {
        0.0
    }
}

/// Overlap distance between two intervals, in `[0, 1]`.
///
/// When the shorter interval has zero length the ratio is replaced by its
/// limit: 0 if the point lies inside the other interval (or both points
/// coincide), otherwise 1.
pub fn psi(w: &Interval, f: &Interval) -> f64 {
    let shorter = w.len().min(f.len());
    if shorter <= 0.0 {
        let (point, other) = if w.len() <= f.len() { (w, f) } else { (f, w) };
        return if other.lo <= point.lo && point.hi <= other.hi {
            0.0
        } else {
            1.0
        };
    }
    (1.0 - interval_intersection_length(w, f) / shorter).clamp(0.0, 1.0)
}

/// Quasi-arithmetic mean of the per-dimension `ψ` values.
pub fn relevance(w: &QueryConstraints, f: &[Interval], alpha: f64) -> Result<f64> {
    if w.dims() != f.len() {
        return Err(Error::invalid(format!(
            "query has {} dimensions, dataset intervals have {}",
            w.dims(),
            f.len()
        )));
    }
    let psis: Vec<f64> = w.intervals().iter().zip(f).map(|(wk, fk)| psi(wk, fk)).collect();
    Ok(aggregate::quasi_arithmetic_mean(&psis, alpha)?.clamp(0.0, 1.0))
}
