//! The sprawl: a bipartite digraph of point nodes and region nodes, plus the
//! unified search procedures that drive every index in this crate.
//!
//! Point nodes hold data and point at the regions they parameterize; region
//! nodes hold a [`LinearAmbit`](crate::ambit::LinearAmbit) and either
//! *discover* points (positive edges) or *eliminate* them (negative edges).
//! A region is only evaluated once all of its parents (its ambit's foci) have
//! been visited and their query distances memoized.

mod graph;
mod search;
mod state;
mod validate;

pub use graph::{AesaHeuristic, AesaTable, PointNode, RegionId, RegionNode, SprawlGraph};
pub use search::{
    ambit_search, ambit_search_in, knn_search, knn_search_in, range_search, range_search_in,
    NoTrace, PriorityRule, TraceSink,
};
pub use state::{Hit, SearchReport, TraversalState};
pub use validate::{ValidationIssue, ValidationReport};
