//! Heat kernel PageRank estimation and local graph clustering.
//!
//! The crate provides a CSR graph, truncated Poisson hop weights, push and
//! random-walk primitives, the Monte-Carlo / TEA / TEA+ estimators, a power
//! method oracle, sweep-cut clustering and an experiment harness.

// Parameter checks use `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod cli;
pub mod clustering;
pub mod error;
pub mod estimators;
pub mod graph;
pub mod oracle;
pub mod push;
pub mod sampling;
pub mod synthetic;
pub mod walk;
pub mod weights;

pub use clustering::{conductance, sweep, sweep_order, SweepResult};
pub use error::{Error, Result};
pub use estimators::{ApproxHkpr, Delta, Estimator, HkprParams, Method};
pub use graph::{load_edge_list, load_edge_list_file, Graph, LoadOptions, NodeId};
pub use oracle::{exact_hkpr, ExactHkpr};
pub use sampling::{AliasTable, RandomSource};
pub use weights::PoissonWeights;
