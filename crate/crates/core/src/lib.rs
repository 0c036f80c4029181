//! Exact metric-space indexing through one lens: every index is a *sprawl* —
//! a bipartite digraph of points and linear-ambit regions — and every query
//! runs the same gated traversal over it. Classic structures (BS-trees,
//! VP-trees, M-trees, BK-trees, GNAT, GH-trees, LAESA, the full-matrix
//! family, PM-trees, excluded-middle VP forests) are reproduced as builder
//! configurations, benchmarked in distance computations.

pub mod ambit;
pub mod bench;
pub mod builders;
pub mod dataset;
pub mod error;
pub mod io;
pub mod metrics;
pub mod sprawl;

pub use error::{Error, Result};

/// Shared comparison slack for geometric inequalities, always applied in the
/// permissive direction: never prune on a tie within this margin.
pub const EPSILON: f64 = 1e-9;
