//! Meta-ensemble query allocation for edge networks.
//!
//! A query controller receives analytics queries and must pick the edge node
//! that should host each one. The pipeline implemented here:
//!
//! 1. [`fcp`] scores a query statement against a labeled corpus of past
//!    queries and produces a membership vector over complexity classes.
//! 2. [`relevance`] measures how far a query's per-attribute constraints are
//!    from a node's data, using confidence intervals built from the node's
//!    dataset digest.
//! 3. [`model::build_context_vectors`] assembles one `⟨o, a, r, l, s⟩` vector
//!    per node.
//! 4. [`learners`] provides AdaBoost, Bagging and Stacking ensembles that
//!    label each vector allocate / do-not-allocate.
//! 5. [`allocator`] fuses the three labels (conjunctive or majority) and runs
//!    one-over-all voting to pick the host.
//!
//! [`simulator`], [`metrics`] and [`experiment`] reproduce the evaluation
//! workflow: synthetic and trace-driven scenarios, training-set synthesis,
//! and the load/speed distance metrics over query streams.
//!
//! See the crate's `examples/` directory for one runnable program per
//! capability.

// `!(x >= 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]


pub mod aggregate;
pub mod allocator;
pub mod config;
pub mod error;
pub mod experiment;
pub mod fcp;
pub mod learners;
pub mod metrics;
pub mod model;
pub mod relevance;
pub mod simulator;

pub use error::{Error, Result};
