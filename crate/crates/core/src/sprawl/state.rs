use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::metrics::PointId;
use crate::sprawl::graph::{RegionId, SprawlGraph};

/// One answer: the point's id and its reported value (the query distance for
/// range and kNN searches; the first-row remoteness for ambit queries).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub id: PointId,
    pub value: f64,
}

/// Result set plus the traversal statistics for one query.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SearchReport {
    /// Hits sorted by (value, id).
    pub results: Vec<Hit>,
    /// Metric-counter delta for this query.
    pub distance_count: u64,
    /// Regions whose ambit was evaluated (counter reached the parent count).
    pub regions_checked: u64,
    /// Evaluated regions whose overlap test failed.
    pub regions_pruned: u64,
    /// Points removed without computing their distance: negative-edge
    /// eliminations plus lower-bound prunes in kNN.
    pub points_eliminated: u64,
}

impl SearchReport {
    pub fn result_ids(&self) -> Vec<PointId> {
        self.results.iter().map(|h| h.id).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum NodeRef {
    Point(PointId),
    Region(RegionId),
}

/// Priority-queue entry; min-heap on (priority, seq) so equal priorities pop
/// in insertion order.
#[derive(Debug, Clone, Copy)]
pub(crate) struct QueueEntry {
    pub prio: f64,
    pub seq: u64,
    pub node: NodeRef,
}

impl PartialEq for QueueEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for QueueEntry {}

impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QueueEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap, we want smallest first.
        other
            .prio
            .total_cmp(&self.prio)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Per-query scratch state, reusable across queries.
///
/// Every node attribute is generation-stamped: a slot is only meaningful when
/// its stamp equals the current generation, so [`reset`](Self::reset) is O(1)
/// plus clearing the queue, never O(graph).
#[derive(Debug, Default)]
pub struct TraversalState {
    generation: u64,
    // Per point, stamped by p_stamp.
    p_stamp: Vec<u64>,
    black: Vec<bool>,
    memo_set: Vec<bool>,
    memo: Vec<f64>,
    /// Ambit mode: distances to each query focus, `memo_width` per point.
    memo_multi: Vec<f64>,
    memo_width: usize,
    /// Best containment-backed lower bound on the query distance.
    pub(crate) bound: Vec<f64>,
    /// Smallest discovery lower bound seen (min rule).
    pub(crate) disc: Vec<f64>,
    /// Ordering accumulator for failed eliminations (sum rule support).
    pub(crate) acc: Vec<f64>,
    cur_prio: Vec<f64>,
    cur_seq: Vec<u64>,
    enqueued: Vec<bool>,
    // Per region, stamped by r_stamp.
    r_stamp: Vec<u64>,
    count: Vec<u32>,
    pub(crate) lb: Vec<f64>,
    evaluated: Vec<bool>,
    prune_counted: Vec<bool>,
    // Traversal queue (kNN).
    pub(crate) heap: BinaryHeap<QueueEntry>,
    seq: u64,
    // Statistics for the report.
    pub(crate) regions_checked: u64,
    pub(crate) regions_pruned: u64,
    pub(crate) points_eliminated: u64,
}

impl TraversalState {
    pub fn new() -> Self {
        TraversalState { generation: 0, ..Default::default() }
    }

    /// Size the stamp arrays for `graph` and start a fresh generation.
    pub fn reset_for(&mut self, graph: &SprawlGraph) {
        self.ensure(graph.points().len(), graph.regions().len());
        self.reset();
    }

    /// Size the arrays for `graph` without discarding the current
    /// generation, so pre-seeded eliminations survive into the search.
    pub(crate) fn prepare(&mut self, graph: &SprawlGraph) {
        self.ensure(graph.points().len(), graph.regions().len());
        if self.generation == 0 {
            self.generation = 1;
        }
    }

    /// Invalidate all per-node state in O(1) by bumping the generation.
    pub fn reset(&mut self) {
        self.generation += 1;
        self.heap.clear();
        self.seq = 0;
        self.regions_checked = 0;
        self.regions_pruned = 0;
        self.points_eliminated = 0;
    }

    fn ensure(&mut self, n_points: usize, n_regions: usize) {
        if self.p_stamp.len() < n_points {
            self.p_stamp.resize(n_points, 0);
            self.black.resize(n_points, false);
            self.memo_set.resize(n_points, false);
            self.memo.resize(n_points, 0.0);
            self.bound.resize(n_points, 0.0);
            self.disc.resize(n_points, f64::INFINITY);
            self.acc.resize(n_points, 0.0);
            self.cur_prio.resize(n_points, 0.0);
            self.cur_seq.resize(n_points, 0);
            self.enqueued.resize(n_points, false);
        }
        if self.r_stamp.len() < n_regions {
            self.r_stamp.resize(n_regions, 0);
            self.count.resize(n_regions, 0);
            self.lb.resize(n_regions, 0.0);
            self.evaluated.resize(n_regions, false);
            self.prune_counted.resize(n_regions, false);
        }
    }

    pub(crate) fn ensure_memo_width(&mut self, n_points: usize, width: usize) {
        if self.memo_width != width || self.memo_multi.len() < n_points * width {
            self.memo_multi.clear();
            self.memo_multi.resize(n_points * width, 0.0);
            self.memo_width = width;
            // Widths changed mid-generation would alias stale rows.
            self.generation += 1;
        }
    }

    fn touch_point(&mut self, u: PointId) {
        if self.p_stamp[u] != self.generation {
            self.p_stamp[u] = self.generation;
            self.black[u] = false;
            self.memo_set[u] = false;
            self.bound[u] = 0.0;
            self.disc[u] = f64::INFINITY;
            self.acc[u] = 0.0;
            self.enqueued[u] = false;
        }
    }

    fn touch_region(&mut self, r: RegionId) {
        if self.r_stamp[r] != self.generation {
            self.r_stamp[r] = self.generation;
            self.count[r] = 0;
            self.lb[r] = 0.0;
            self.evaluated[r] = false;
            self.prune_counted[r] = false;
        }
    }

    pub(crate) fn is_black(&self, u: PointId) -> bool {
        self.p_stamp[u] == self.generation && self.black[u]
    }

    pub(crate) fn set_black(&mut self, u: PointId) {
        self.touch_point(u);
        self.black[u] = true;
    }

    /// Color a point black so traversal never computes its distance. A no-op
    /// for already-visited points: their distance is already spent.
    pub fn eliminate(&mut self, u: PointId) {
        if !self.is_black(u) {
            self.set_black(u);
            self.points_eliminated += 1;
        }
    }

    pub(crate) fn memoize(&mut self, u: PointId, d: f64) {
        self.touch_point(u);
        self.memo_set[u] = true;
        self.memo[u] = d;
    }

    pub(crate) fn memoized(&self, u: PointId) -> f64 {
        debug_assert!(
            self.p_stamp[u] == self.generation && self.memo_set[u],
            "distance of point {u} used before it was memoized"
        );
        self.memo[u]
    }

    pub(crate) fn memoize_multi(&mut self, u: PointId, dists: &[f64]) {
        debug_assert_eq!(dists.len(), self.memo_width);
        self.touch_point(u);
        self.memo_set[u] = true;
        let w = self.memo_width;
        self.memo_multi[u * w..(u + 1) * w].copy_from_slice(dists);
    }

    pub(crate) fn memoized_multi(&self, u: PointId) -> &[f64] {
        debug_assert!(self.p_stamp[u] == self.generation && self.memo_set[u]);
        let w = self.memo_width;
        &self.memo_multi[u * w..(u + 1) * w]
    }

    /// Bump a region's visit counter; true when it just reached `parents`.
    pub(crate) fn count_parent(&mut self, r: RegionId, parents: usize) -> bool {
        self.touch_region(r);
        self.count[r] += 1;
        debug_assert!(self.count[r] as usize <= parents, "region {r} counted past its parents");
        self.count[r] as usize == parents
    }

    pub(crate) fn mark_evaluated(&mut self, r: RegionId, lb: f64) {
        self.touch_region(r);
        debug_assert!(!self.evaluated[r], "region {r} evaluated twice");
        self.evaluated[r] = true;
        self.lb[r] = lb;
        self.regions_checked += 1;
    }

    pub(crate) fn count_pruned_once(&mut self, r: RegionId) {
        self.touch_region(r);
        if !self.prune_counted[r] {
            self.prune_counted[r] = true;
            self.regions_pruned += 1;
        }
    }

    pub(crate) fn point_state(&mut self, u: PointId) -> (f64, f64, f64, bool, f64, u64) {
        self.touch_point(u);
        (
            self.bound[u],
            self.disc[u],
            self.acc[u],
            self.enqueued[u],
            self.cur_prio[u],
            self.cur_seq[u],
        )
    }

    pub(crate) fn next_seq(&mut self) -> u64 {
        self.seq += 1;
        self.seq
    }

    pub(crate) fn push_point(&mut self, u: PointId, prio: f64) {
        self.touch_point(u);
        let seq = self.next_seq();
        self.enqueued[u] = true;
        self.cur_prio[u] = prio;
        self.cur_seq[u] = seq;
        self.heap.push(QueueEntry { prio, seq, node: NodeRef::Point(u) });
    }

    pub(crate) fn push_region(&mut self, r: RegionId, prio: f64) {
        let seq = self.next_seq();
        self.heap.push(QueueEntry { prio, seq, node: NodeRef::Region(r) });
    }

    /// True when this popped entry is the point's current one.
    pub(crate) fn entry_current(&self, u: PointId, seq: u64) -> bool {
        self.p_stamp[u] == self.generation && self.enqueued[u] && self.cur_seq[u] == seq
    }

    pub(crate) fn stats(&self) -> (u64, u64, u64) {
        (self.regions_checked, self.regions_pruned, self.points_eliminated)
    }
}
