use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::ambit::{general_overlap, CrossDistanceMatrix, LinearAmbit, QueryAmbit};
use crate::error::{invalid_input, invalid_state, Result};
use crate::metrics::{CountedMetric, Point, PointId, PointPayload};
use crate::sprawl::graph::{AesaHeuristic, RegionId, SprawlGraph};
use crate::sprawl::state::{Hit, NodeRef, SearchReport, TraversalState};
use crate::EPSILON;

/// Observer for traversal internals, used by instrumented tests.
pub trait TraceSink {
    fn region_evaluated(&mut self, _region: RegionId, _overlap: bool) {}
    fn point_visited(&mut self, _point: PointId, _distance: f64) {}
}

/// The default sink: observes nothing.
pub struct NoTrace;

impl TraceSink for NoTrace {}

/// Queue policy for kNN traversal.
///
/// `LowerBound` is the real rule: regions are ordered by their clamped lower
/// bound, points by the best bound known for them (minimum over discovering
/// regions, raised by failed eliminations), ties in insertion order. `Fifo`
/// ignores bounds for ordering (pure insertion order) and exists to measure
/// how much the priority rule matters; results stay exact either way.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PriorityRule {
    #[default]
    LowerBound,
    Fifo,
}

/// Exact range search: every point `u` with `δ(q, u) ≤ s`.
pub fn range_search(
    graph: &SprawlGraph,
    metric: &CountedMetric,
    query: &Point,
    radius: f64,
) -> Result<SearchReport> {
    let mut state = TraversalState::new();
    state.reset_for(graph);
    range_search_in(graph, metric, query, radius, &mut state, &mut NoTrace)
}

/// Range search continuing the state's current generation (no implicit
/// reset), so callers may pre-eliminate points or attach a trace sink.
pub fn range_search_in<T: TraceSink>(
    graph: &SprawlGraph,
    metric: &CountedMetric,
    query: &Point,
    radius: f64,
    state: &mut TraversalState,
    trace: &mut T,
) -> Result<SearchReport> {
    check_search(graph, metric, &query.payload)?;
    if radius < 0.0 {
        return Err(invalid_input("search radius must be nonnegative"));
    }
    state.prepare(graph);
    let before = metric.calls();
    let mut results = Vec::new();
    if graph.aesa().is_some() {
        aesa_search(graph, metric, query, AesaMode::Range(radius), state, trace, &mut results)?;
    } else {
        let mut cursor = RangeCursor { graph, metric, query, radius, state, trace, results: &mut results };
        for i in 0..graph.roots().len() {
            let root = graph.roots()[i];
            if !cursor.state.is_black(root) {
                cursor.visit_point(root)?;
            }
        }
    }
    Ok(finish(results, metric.calls() - before, state))
}

struct RangeCursor<'a, T: TraceSink> {
    graph: &'a SprawlGraph,
    metric: &'a CountedMetric,
    query: &'a Point,
    radius: f64,
    state: &'a mut TraversalState,
    trace: &'a mut T,
    results: &'a mut Vec<Hit>,
}

impl<T: TraceSink> RangeCursor<'_, T> {
    fn visit_point(&mut self, u: PointId) -> Result<()> {
        let d = self.metric.distance(self.query, &self.graph.point(u).point)?;
        self.state.memoize(u, d);
        self.state.set_black(u);
        self.trace.point_visited(u, d);
        if d <= self.radius {
            self.results.push(Hit { id: u, value: d });
        }
        let n_children = self.graph.point(u).children.len();
        for i in 0..n_children {
            let r = self.graph.point(u).children[i];
            let parents = self.graph.region(r).ambit.focus_count();
            if self.state.count_parent(r, parents) {
                self.visit_region(r)?;
            }
        }
        Ok(())
    }

    fn visit_region(&mut self, r: RegionId) -> Result<()> {
        let z: Vec<f64> = {
            let region = self.graph.region(r);
            region.ambit.foci().iter().map(|&f| self.state.memoized(f)).collect()
        };
        let region = self.graph.region(r);
        let overlap = region.ambit.ball_overlap(&z, self.radius)?;
        let lb = region.ambit.lower_bound(&z);
        self.state.mark_evaluated(r, lb);
        self.trace.region_evaluated(r, overlap);
        if overlap {
            // Negative children of an overlapping region are left alone.
            let n_pos = self.graph.region(r).positive.len();
            for i in 0..n_pos {
                let v = self.graph.region(r).positive[i];
                if !self.state.is_black(v) {
                    self.visit_point(v)?;
                }
            }
        } else {
            self.state.count_pruned_once(r);
            let n_neg = self.graph.region(r).negative.len();
            for i in 0..n_neg {
                let v = self.graph.region(r).negative[i];
                self.state.eliminate(v);
            }
        }
        Ok(())
    }
}

/// Max-heap entry for the running top-k: worst candidate on top, ties broken
/// toward larger ids so equal-distance smaller ids survive.
#[derive(Debug, Clone, Copy, PartialEq)]
struct TopEntry {
    dist: f64,
    id: PointId,
}

impl Eq for TopEntry {}

impl PartialOrd for TopEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for TopEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist.total_cmp(&other.dist).then_with(|| self.id.cmp(&other.id))
    }
}

fn current_radius(top: &BinaryHeap<TopEntry>, k: usize) -> f64 {
    if top.len() == k {
        top.peek().map_or(f64::INFINITY, |e| e.dist)
    } else {
        f64::INFINITY
    }
}

fn offer(top: &mut BinaryHeap<TopEntry>, k: usize, dist: f64, id: PointId) {
    let entry = TopEntry { dist, id };
    if top.len() < k {
        top.push(entry);
    } else if let Some(&worst) = top.peek() {
        if entry < worst {
            top.pop();
            top.push(entry);
        }
    }
}

/// Exact k-nearest-neighbor search: best-first traversal with a shrinking
/// radius; the result's distance multiset equals the brute-force top k
/// (ties resolved toward smaller ids).
pub fn knn_search(
    graph: &SprawlGraph,
    metric: &CountedMetric,
    query: &Point,
    k: usize,
    rule: PriorityRule,
) -> Result<SearchReport> {
    let mut state = TraversalState::new();
    state.reset_for(graph);
    knn_search_in(graph, metric, query, k, rule, &mut state, &mut NoTrace)
}

pub fn knn_search_in<T: TraceSink>(
    graph: &SprawlGraph,
    metric: &CountedMetric,
    query: &Point,
    k: usize,
    rule: PriorityRule,
    state: &mut TraversalState,
    trace: &mut T,
) -> Result<SearchReport> {
    check_search(graph, metric, &query.payload)?;
    if k == 0 {
        return Err(invalid_input("k must be at least 1"));
    }
    state.prepare(graph);
    let before = metric.calls();
    let mut results = Vec::new();
    if graph.aesa().is_some() {
        aesa_search(graph, metric, query, AesaMode::Knn(k), state, trace, &mut results)?;
        return Ok(finish(results, metric.calls() - before, state));
    }

    let mut top: BinaryHeap<TopEntry> = BinaryHeap::new();
    for &root in graph.roots() {
        if !state.is_black(root) {
            let prio = point_priority(state, root, rule);
            state.push_point(root, prio);
        }
    }
    while let Some(entry) = state.heap.pop() {
        match entry.node {
            NodeRef::Point(u) => {
                if !state.entry_current(u, entry.seq) || state.is_black(u) {
                    continue;
                }
                let s = current_radius(&top, k);
                if state.bound[u] > s + EPSILON {
                    // The best containment-backed bound already exceeds the
                    // current radius: prune without a distance computation.
                    state.set_black(u);
                    state.points_eliminated += 1;
                    continue;
                }
                let d = metric.distance(query, &graph.point(u).point)?;
                state.memoize(u, d);
                state.set_black(u);
                trace.point_visited(u, d);
                offer(&mut top, k, d, u);
                let n_children = graph.point(u).children.len();
                for i in 0..n_children {
                    let r = graph.point(u).children[i];
                    let parents = graph.region(r).ambit.focus_count();
                    if state.count_parent(r, parents) {
                        complete_region(graph, r, state, trace, &top, k, rule);
                    }
                }
            }
            NodeRef::Region(r) => {
                let s = current_radius(&top, k);
                if state.lb[r] > s + EPSILON {
                    state.count_pruned_once(r);
                    continue;
                }
                let n_pos = graph.region(r).positive.len();
                for i in 0..n_pos {
                    let v = graph.region(r).positive[i];
                    if state.is_black(v) {
                        continue;
                    }
                    let lb = state.lb[r];
                    let contained = graph.region(r).contained;
                    discover_point(state, v, lb, contained, rule);
                }
            }
        }
    }
    results.extend(top.into_iter().map(|e| Hit { id: e.id, value: e.dist }));
    Ok(finish(results, metric.calls() - before, state))
}

/// A region's counter just completed during a point visit: compute its lower
/// bound once, act on elimination edges immediately, and queue it for
/// discovery if it has positive children.
fn complete_region<T: TraceSink>(
    graph: &SprawlGraph,
    r: RegionId,
    state: &mut TraversalState,
    trace: &mut T,
    top: &BinaryHeap<TopEntry>,
    k: usize,
    rule: PriorityRule,
) {
    let z: Vec<f64> = {
        let region = graph.region(r);
        region.ambit.foci().iter().map(|&f| state.memoized(f)).collect()
    };
    let region = graph.region(r);
    let lb = region.ambit.lower_bound(&z);
    state.mark_evaluated(r, lb);
    let s = current_radius(top, k);
    let overlap = lb <= s + EPSILON;
    trace.region_evaluated(r, overlap);
    if !region.negative.is_empty() {
        if !overlap {
            state.count_pruned_once(r);
            let n_neg = region.negative.len();
            for i in 0..n_neg {
                state.eliminate(graph.region(r).negative[i]);
            }
        } else if region.contained {
            // Failed elimination: the bound still tightens the children.
            let n_neg = region.negative.len();
            for i in 0..n_neg {
                let v = graph.region(r).negative[i];
                if !state.is_black(v) {
                    raise_bound(state, v, lb, rule);
                }
            }
        }
    }
    if !graph.region(r).positive.is_empty() {
        let prio = if rule == PriorityRule::Fifo { 0.0 } else { lb };
        state.push_region(r, prio);
    }
}

fn point_priority(state: &mut TraversalState, u: PointId, rule: PriorityRule) -> f64 {
    if rule == PriorityRule::Fifo {
        return 0.0;
    }
    let (bound, disc, _acc, _enq, _prio, _seq) = state.point_state(u);
    let disc = if disc.is_finite() { disc } else { 0.0 };
    bound.max(disc)
}

fn requeue_if_changed(state: &mut TraversalState, u: PointId, rule: PriorityRule) {
    let new_prio = point_priority(state, u, rule);
    let (_b, _d, _a, enqueued, cur_prio, _seq) = state.point_state(u);
    if enqueued && cur_prio == new_prio {
        return;
    }
    if enqueued {
        state.push_point(u, new_prio);
    }
}

fn discover_point(state: &mut TraversalState, v: PointId, lb: f64, contained: bool, rule: PriorityRule) {
    let (_b, disc, _a, enqueued, cur_prio, _seq) = state.point_state(v);
    state.disc[v] = disc.min(lb);
    if contained && lb > state.bound[v] {
        state.bound[v] = lb;
    }
    let prio = point_priority(state, v, rule);
    if !enqueued || cur_prio != prio {
        state.push_point(v, prio);
    }
}

fn raise_bound(state: &mut TraversalState, v: PointId, lb: f64, rule: PriorityRule) {
    let (bound, _d, _a, _enq, _prio, _seq) = state.point_state(v);
    if lb > bound {
        state.bound[v] = lb;
        requeue_if_changed(state, v, rule);
    }
}

/// Exact search with an arbitrary linear ambit as the query: returns every
/// point whose query-pivot vector satisfies the query's constraints. Region
/// pruning uses the general overlap bound over the cross-distance matrix.
pub fn ambit_search(
    graph: &SprawlGraph,
    metric: &CountedMetric,
    query: &QueryAmbit,
) -> Result<SearchReport> {
    let mut state = TraversalState::new();
    state.reset_for(graph);
    ambit_search_in(graph, metric, query, &mut state, &mut NoTrace)
}

pub fn ambit_search_in<T: TraceSink>(
    graph: &SprawlGraph,
    metric: &CountedMetric,
    query: &QueryAmbit,
    state: &mut TraversalState,
    trace: &mut T,
) -> Result<SearchReport> {
    for focus in query.foci() {
        check_search(graph, metric, focus)?;
    }
    state.prepare(graph);
    state.ensure_memo_width(graph.points().len(), query.focus_count());
    let before = metric.calls();
    let mut results = Vec::new();
    if graph.aesa().is_some() {
        aesa_ambit(graph, metric, query, state, trace, &mut results)?;
    } else {
        let mut cursor = AmbitCursor { graph, metric, query, state, trace, results: &mut results };
        for i in 0..graph.roots().len() {
            let root = graph.roots()[i];
            if !cursor.state.is_black(root) {
                cursor.visit_point(root)?;
            }
        }
    }
    Ok(finish(results, metric.calls() - before, state))
}

struct AmbitCursor<'a, T: TraceSink> {
    graph: &'a SprawlGraph,
    metric: &'a CountedMetric,
    query: &'a QueryAmbit,
    state: &'a mut TraversalState,
    trace: &'a mut T,
    results: &'a mut Vec<Hit>,
}

impl<T: TraceSink> AmbitCursor<'_, T> {
    fn visit_point(&mut self, u: PointId) -> Result<()> {
        let payload = &self.graph.point(u).point.payload;
        let dists = self
            .query
            .foci()
            .iter()
            .map(|f| self.metric.distance_payload(f, payload))
            .collect::<Result<Vec<f64>>>()?;
        self.state.memoize_multi(u, &dists);
        self.state.set_black(u);
        self.trace.point_visited(u, dists[0]);
        if self.query.member(&dists)? {
            self.results.push(Hit { id: u, value: self.query.remoteness(&dists) });
        }
        let n_children = self.graph.point(u).children.len();
        for i in 0..n_children {
            let r = self.graph.point(u).children[i];
            let parents = self.graph.region(r).ambit.focus_count();
            if self.state.count_parent(r, parents) {
                self.visit_region(r)?;
            }
        }
        Ok(())
    }

    fn visit_region(&mut self, r: RegionId) -> Result<()> {
        let qm = self.query.focus_count();
        let cross: Vec<f64> = {
            let region = self.graph.region(r);
            region
                .ambit
                .foci()
                .iter()
                .flat_map(|&f| self.state.memoized_multi(f).iter().copied())
                .collect()
        };
        let region = self.graph.region(r);
        let z = CrossDistanceMatrix::new(region.ambit.focus_count(), qm, cross)?;
        let overlap = general_overlap(&region.ambit, self.query, &z)?;
        self.state.mark_evaluated(r, 0.0);
        self.trace.region_evaluated(r, overlap);
        if overlap {
            let n_pos = self.graph.region(r).positive.len();
            for i in 0..n_pos {
                let v = self.graph.region(r).positive[i];
                if !self.state.is_black(v) {
                    self.visit_point(v)?;
                }
            }
        } else {
            self.state.count_pruned_once(r);
            let n_neg = self.graph.region(r).negative.len();
            for i in 0..n_neg {
                let v = self.graph.region(r).negative[i];
                self.state.eliminate(v);
            }
        }
        Ok(())
    }
}

enum AesaMode {
    Range(f64),
    Knn(usize),
}

/// Search over the virtual full-matrix sprawl: visit candidates in heuristic
/// order, and after each visit eliminate every remaining candidate whose
/// pivot bound exceeds the current radius.
fn aesa_search<T: TraceSink>(
    graph: &SprawlGraph,
    metric: &CountedMetric,
    query: &Point,
    mode: AesaMode,
    state: &mut TraversalState,
    trace: &mut T,
    results: &mut Vec<Hit>,
) -> Result<()> {
    let table = graph.aesa().expect("aesa table");
    let n = graph.points().len();
    let mut top: BinaryHeap<TopEntry> = BinaryHeap::new();
    let radius = |top: &BinaryHeap<TopEntry>| match mode {
        AesaMode::Range(s) => s,
        AesaMode::Knn(k) => current_radius(top, k),
    };
    let mut visited = vec![false; n];
    let mut visits = 0usize;
    loop {
        let alive_any = (0..n).any(|v| !state.is_black(v));
        let u = if visits < table.pivot_order.len() {
            // Preselected-pivot phase: visit in the fixed order even when the
            // pivot itself is already eliminated; its distance still filters.
            if !alive_any {
                break;
            }
            table.pivot_order[visits]
        } else {
            let s = radius(&top);
            match select_candidate(graph, state, table.heuristic, s) {
                Some(u) => u,
                None => break,
            }
        };
        if visited[u] {
            visits += 1;
            continue;
        }
        visited[u] = true;
        visits += 1;
        let d = metric.distance(query, &graph.point(u).point)?;
        state.memoize(u, d);
        state.set_black(u);
        trace.point_visited(u, d);
        match mode {
            AesaMode::Range(s) => {
                if d <= s {
                    results.push(Hit { id: u, value: d });
                }
            }
            AesaMode::Knn(k) => offer(&mut top, k, d, u),
        }
        let s = radius(&top);
        for v in 0..n {
            if v == u || state.is_black(v) {
                continue;
            }
            let lb = (d - table.get(u, v)).abs();
            state.regions_checked += 1;
            if lb > s + EPSILON {
                state.set_black(v);
                state.points_eliminated += 1;
                state.regions_pruned += 1;
            } else {
                let (bound, _d, acc, _e, _p, _s) = state.point_state(v);
                state.bound[v] = bound.max(lb);
                state.acc[v] = acc + lb;
            }
        }
    }
    if let AesaMode::Knn(_) = mode {
        results.extend(top.into_iter().map(|e| Hit { id: e.id, value: e.dist }));
    }
    Ok(())
}

/// Next unvisited candidate by ascending heuristic value, smallest id on
/// ties; candidates whose max bound exceeds the current radius are
/// eliminated on the spot (the radius may have shrunk since they were last
/// filtered).
fn select_candidate(
    graph: &SprawlGraph,
    state: &mut TraversalState,
    heuristic: AesaHeuristic,
    s: f64,
) -> Option<PointId> {
    let n = graph.points().len();
    loop {
        let mut best: Option<(f64, PointId)> = None;
        for v in 0..n {
            if state.is_black(v) {
                continue;
            }
            let (bound, _d, acc, _e, _p, _s) = state.point_state(v);
            let h = match heuristic {
                AesaHeuristic::LbSum => acc,
                AesaHeuristic::LbMax => bound,
            };
            if best.is_none_or(|(bh, _)| h < bh) {
                best = Some((h, v));
            }
        }
        let (_, v) = best?;
        let (bound, ..) = state.point_state(v);
        if bound > s + EPSILON {
            state.set_black(v);
            state.points_eliminated += 1;
            continue;
        }
        return Some(v);
    }
}

/// Ambit queries over the virtual full-matrix sprawl: visit candidates in id
/// order; each visited point's stored distances act as zero-width shells that
/// may eliminate the remaining candidates via the general overlap bound.
fn aesa_ambit<T: TraceSink>(
    graph: &SprawlGraph,
    metric: &CountedMetric,
    query: &QueryAmbit,
    state: &mut TraversalState,
    trace: &mut T,
    results: &mut Vec<Hit>,
) -> Result<()> {
    let table = graph.aesa().expect("aesa table");
    let n = graph.points().len();
    let qm = query.focus_count();
    for u in 0..n {
        if state.is_black(u) {
            continue;
        }
        let payload = &graph.point(u).point.payload;
        let dists = query
            .foci()
            .iter()
            .map(|f| metric.distance_payload(f, payload))
            .collect::<Result<Vec<f64>>>()?;
        state.memoize_multi(u, &dists);
        state.set_black(u);
        trace.point_visited(u, dists[0]);
        if query.member(&dists)? {
            results.push(Hit { id: u, value: query.remoteness(&dists) });
        }
        let z = CrossDistanceMatrix::new(1, qm, dists.clone())?;
        for v in 0..n {
            if v == u || state.is_black(v) {
                continue;
            }
            let sphere = LinearAmbit::sphere(u, table.get(u, v))?;
            state.regions_checked += 1;
            if !general_overlap(&sphere, query, &z)? {
                state.set_black(v);
                state.points_eliminated += 1;
                state.regions_pruned += 1;
            }
        }
    }
    Ok(())
}

fn check_search(graph: &SprawlGraph, metric: &CountedMetric, payload: &PointPayload) -> Result<()> {
    if !graph.is_validated() {
        return Err(invalid_state("graph must pass validation before searching"));
    }
    if metric.kind() != graph.metric() {
        return Err(invalid_input(format!(
            "metric {} does not match the graph's {}",
            metric.kind(),
            graph.metric()
        )));
    }
    let vector_query = matches!(payload, PointPayload::Vector(_));
    if vector_query != graph.metric().is_vector() {
        return Err(invalid_input(format!(
            "{} query payload does not suit metric {}",
            payload.kind_name(),
            graph.metric()
        )));
    }
    if let (PointPayload::Vector(q), Some(first)) = (payload, graph.points().first()) {
        if let PointPayload::Vector(p) = &first.point.payload {
            if q.len() != p.len() {
                return Err(invalid_input(format!(
                    "query dimension {} does not match dataset dimension {}",
                    q.len(),
                    p.len()
                )));
            }
        }
    }
    Ok(())
}

fn finish(mut results: Vec<Hit>, distance_count: u64, state: &TraversalState) -> SearchReport {
    results.sort_by(|a, b| a.value.total_cmp(&b.value).then_with(|| a.id.cmp(&b.id)));
    let (regions_checked, regions_pruned, points_eliminated) = state.stats();
    SearchReport {
        results,
        distance_count,
        regions_checked,
        regions_pruned,
        points_eliminated,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::MetricKind;
    use crate::sprawl::graph::{PointNode, RegionNode};

    fn vec_point(id: usize, coords: &[f64]) -> Point {
        Point::vector(id, coords.to_vec())
    }

    fn graph_from(
        coords: &[&[f64]],
        regions: Vec<RegionNode>,
        children: &[(usize, usize)], // (point, region) focus edges
        roots: Vec<usize>,
    ) -> SprawlGraph {
        let mut points: Vec<PointNode> = coords
            .iter()
            .enumerate()
            .map(|(i, c)| PointNode { point: vec_point(i, c), children: Vec::new() })
            .collect();
        for &(p, r) in children {
            points[p].children.push(r);
        }
        let mut g = SprawlGraph::from_parts(
            MetricKind::Euclidean,
            points,
            regions,
            roots,
            None,
            0,
        )
        .unwrap();
        let report = g.validate();
        assert!(report.passed(), "fixture invalid: {:?}", report.issues);
        g
    }

    fn ball_region(focus: usize, r: f64, positive: Vec<usize>) -> RegionNode {
        RegionNode {
            ambit: LinearAmbit::ball(focus, r),
            positive,
            negative: Vec::new(),
            contained: true,
        }
    }

    #[test]
    fn empty_graph_empty_result() {
        let mut g =
            SprawlGraph::from_parts(MetricKind::Euclidean, vec![], vec![], vec![], None, 0)
                .unwrap();
        assert!(g.validate().passed());
        let m = CountedMetric::new(MetricKind::Euclidean);
        let report = range_search(&g, &m, &vec_point(0, &[0.0, 0.0]), 1.0).unwrap();
        assert!(report.results.is_empty());
        assert_eq!(report.distance_count, 0);
    }

    #[test]
    fn single_root_hit() {
        let g = graph_from(&[&[0.0, 0.0]], vec![], &[], vec![0]);
        let m = CountedMetric::new(MetricKind::Euclidean);
        let report = range_search(&g, &m, &vec_point(0, &[0.3, 0.0]), 0.5).unwrap();
        assert_eq!(report.result_ids(), vec![0]);
        assert_eq!(report.distance_count, 1);
    }

    fn mini_ball_tree() -> SprawlGraph {
        // Root p0 with a covering ball over p1 and p2.
        graph_from(
            &[&[0.0, 0.0], &[1.0, 0.0], &[-1.0, 0.0]],
            vec![ball_region(0, 1.0, vec![1, 2])],
            &[(0, 0)],
            vec![0],
        )
    }

    #[test]
    fn ball_tree_descends_on_overlap() {
        let g = mini_ball_tree();
        let m = CountedMetric::new(MetricKind::Euclidean);
        let report = range_search(&g, &m, &vec_point(0, &[0.9, 0.0]), 0.2).unwrap();
        assert_eq!(report.result_ids(), vec![1]);
        assert_eq!(report.distance_count, 3);
        assert_eq!(report.regions_checked, 1);
        assert_eq!(report.regions_pruned, 0);
    }

    #[test]
    fn ball_tree_prunes_far_query() {
        let g = mini_ball_tree();
        let m = CountedMetric::new(MetricKind::Euclidean);
        let report = range_search(&g, &m, &vec_point(0, &[5.0, 0.0]), 0.5).unwrap();
        assert!(report.results.is_empty());
        assert_eq!(report.distance_count, 1);
        assert_eq!(report.regions_pruned, 1);
    }

    fn elimination_fixture() -> SprawlGraph {
        // Pivot p0 owns a zero-width shell at δ(p0, p1) = 3 that may
        // eliminate p1; both are roots, pivot first.
        let mut points = vec![
            PointNode { point: vec_point(0, &[0.0, 0.0]), children: vec![0] },
            PointNode { point: vec_point(1, &[3.0, 0.0]), children: vec![] },
        ];
        points[1].children.clear();
        let regions = vec![RegionNode {
            ambit: LinearAmbit::sphere(0, 3.0).unwrap(),
            positive: vec![],
            negative: vec![1],
            contained: true,
        }];
        let mut g = SprawlGraph::from_parts(
            MetricKind::Euclidean,
            points,
            regions,
            vec![0, 1],
            None,
            0,
        )
        .unwrap();
        assert!(g.validate().passed());
        g
    }

    #[test]
    fn negative_edge_eliminates_on_miss() {
        let g = elimination_fixture();
        let m = CountedMetric::new(MetricKind::Euclidean);
        let report = range_search(&g, &m, &vec_point(0, &[0.0, 0.0]), 1.0).unwrap();
        assert_eq!(report.result_ids(), vec![0]);
        assert_eq!(report.distance_count, 1);
        assert_eq!(report.points_eliminated, 1);
    }

    #[test]
    fn negative_edge_spared_on_overlap() {
        let g = elimination_fixture();
        let m = CountedMetric::new(MetricKind::Euclidean);
        let report = range_search(&g, &m, &vec_point(0, &[2.5, 0.0]), 1.0).unwrap();
        assert_eq!(report.result_ids(), vec![1]);
        assert_eq!(report.distance_count, 2);
        assert_eq!(report.points_eliminated, 0);
    }

    #[test]
    fn region_may_discover_and_eliminate() {
        // One ball region with a positive edge to p1 and a negative one to
        // p2; overlapping queries leave p2 to its own root visit, misses
        // eliminate it.
        let points = vec![
            PointNode { point: vec_point(0, &[0.0, 0.0]), children: vec![0] },
            PointNode { point: vec_point(1, &[0.5, 0.0]), children: vec![] },
            PointNode { point: vec_point(2, &[0.8, 0.0]), children: vec![] },
        ];
        let regions = vec![RegionNode {
            ambit: LinearAmbit::ball(0, 1.0),
            positive: vec![1],
            negative: vec![2],
            contained: true,
        }];
        let mut g = SprawlGraph::from_parts(
            MetricKind::Euclidean,
            points,
            regions,
            vec![0, 2],
            None,
            0,
        )
        .unwrap();
        assert!(g.validate().passed());
        let m = CountedMetric::new(MetricKind::Euclidean);
        // Overlap: all three visited.
        let report = range_search(&g, &m, &vec_point(0, &[0.4, 0.0]), 0.5).unwrap();
        let mut ids = report.result_ids();
        ids.sort();
        assert_eq!(ids, vec![0, 1, 2]);
        assert_eq!(report.distance_count, 3);
        // Miss: p1 pruned (never discovered), p2 eliminated.
        let report = range_search(&g, &m, &vec_point(0, &[9.0, 0.0]), 0.5).unwrap();
        assert!(report.results.is_empty());
        assert_eq!(report.distance_count, 1);
        assert_eq!(report.points_eliminated, 1);
    }

    #[test]
    fn manual_elimination_skips_root() {
        let g = elimination_fixture();
        let m = CountedMetric::new(MetricKind::Euclidean);
        let mut state = TraversalState::new();
        state.reset_for(&g);
        state.eliminate(1);
        let report =
            range_search_in(&g, &m, &vec_point(0, &[2.5, 0.0]), 1.0, &mut state, &mut NoTrace)
                .unwrap();
        assert!(report.results.is_empty());
        assert_eq!(report.distance_count, 1);
        // Eliminating everything up front leaves nothing to visit.
        state.reset();
        state.eliminate(0);
        state.eliminate(1);
        let report =
            range_search_in(&g, &m, &vec_point(0, &[2.5, 0.0]), 1.0, &mut state, &mut NoTrace)
                .unwrap();
        assert!(report.results.is_empty());
        assert_eq!(report.distance_count, 0);
    }

    #[test]
    fn repeated_search_is_deterministic() {
        let g = mini_ball_tree();
        let m = CountedMetric::new(MetricKind::Euclidean);
        let mut state = TraversalState::new();
        let q = vec_point(0, &[0.9, 0.0]);
        state.reset_for(&g);
        let a = range_search_in(&g, &m, &q, 0.2, &mut state, &mut NoTrace).unwrap();
        state.reset();
        let b = range_search_in(&g, &m, &q, 0.2, &mut state, &mut NoTrace).unwrap();
        assert_eq!(a, b);
        // Two different queries back to back, same state.
        state.reset();
        let c = range_search_in(&g, &m, &vec_point(0, &[5.0, 0.0]), 0.5, &mut state, &mut NoTrace)
            .unwrap();
        assert_eq!(c.distance_count, 1);
    }

    #[test]
    fn unvalidated_graph_is_rejected() {
        let g = SprawlGraph::from_parts(
            MetricKind::Euclidean,
            vec![PointNode { point: vec_point(0, &[0.0]), children: vec![] }],
            vec![],
            vec![0],
            None,
            0,
        )
        .unwrap();
        let m = CountedMetric::new(MetricKind::Euclidean);
        let err = range_search(&g, &m, &vec_point(0, &[0.0]), 1.0);
        assert!(matches!(err, Err(crate::Error::InvalidState(_))));
    }

    #[test]
    fn metric_and_payload_mismatches_are_rejected() {
        let g = mini_ball_tree();
        let m1 = CountedMetric::new(MetricKind::Manhattan);
        assert!(range_search(&g, &m1, &vec_point(0, &[0.0, 0.0]), 1.0).is_err());
        let m2 = CountedMetric::new(MetricKind::Euclidean);
        assert!(range_search(&g, &m2, &Point::string(0, "oops"), 1.0).is_err());
        assert!(range_search(&g, &m2, &vec_point(0, &[0.0, 0.0, 0.0]), 1.0).is_err());
        assert!(range_search(&g, &m2, &vec_point(0, &[0.0, 0.0]), -1.0).is_err());
    }

    struct CountingTrace {
        region_events: Vec<(usize, bool)>,
    }

    impl TraceSink for CountingTrace {
        fn region_evaluated(&mut self, region: RegionId, overlap: bool) {
            self.region_events.push((region, overlap));
        }
    }

    #[test]
    fn region_evaluated_exactly_once() {
        // Two foci sharing one region: the region fires only when both
        // parents have been visited, and only once.
        let points = vec![
            PointNode { point: vec_point(0, &[0.0, 0.0]), children: vec![0] },
            PointNode { point: vec_point(1, &[1.0, 0.0]), children: vec![0] },
            PointNode { point: vec_point(2, &[0.5, 0.0]), children: vec![] },
        ];
        let regions = vec![RegionNode {
            ambit: LinearAmbit::new(vec![0, 1], vec![1.0, 1.0], vec![2.0]).unwrap(),
            positive: vec![2],
            negative: vec![],
            contained: true,
        }];
        let mut g = SprawlGraph::from_parts(
            MetricKind::Euclidean,
            points,
            regions,
            vec![0, 1],
            None,
            0,
        )
        .unwrap();
        assert!(g.validate().passed());
        let m = CountedMetric::new(MetricKind::Euclidean);
        let mut state = TraversalState::new();
        state.reset_for(&g);
        let mut trace = CountingTrace { region_events: vec![] };
        let report =
            range_search_in(&g, &m, &vec_point(0, &[0.2, 0.0]), 0.4, &mut state, &mut trace)
                .unwrap();
        assert_eq!(trace.region_events.len(), 1);
        assert!(trace.region_events[0].1);
        assert_eq!(report.result_ids(), vec![0, 2]);
        assert_eq!(report.distance_count, 3);
    }

    #[test]
    fn knn_on_mini_tree_matches_brute_force() {
        let g = mini_ball_tree();
        let m = CountedMetric::new(MetricKind::Euclidean);
        let q = vec_point(0, &[0.6, 0.0]);
        let report = knn_search(&g, &m, &q, 2, PriorityRule::LowerBound).unwrap();
        assert_eq!(report.result_ids(), vec![1, 0]); // sorted by distance
        assert_eq!(report.results[0].id, 1); // d = 0.4 < 0.6
        let all = knn_search(&g, &m, &q, 3, PriorityRule::LowerBound).unwrap();
        assert_eq!(all.results.len(), 3);
        let more_than_n = knn_search(&g, &m, &q, 10, PriorityRule::LowerBound).unwrap();
        assert_eq!(more_than_n.results.len(), 3);
        assert!(knn_search(&g, &m, &q, 0, PriorityRule::LowerBound).is_err());
    }

    #[test]
    fn knn_fifo_is_exact_too() {
        let g = mini_ball_tree();
        let m = CountedMetric::new(MetricKind::Euclidean);
        let q = vec_point(0, &[0.6, 0.0]);
        let a = knn_search(&g, &m, &q, 2, PriorityRule::LowerBound).unwrap();
        let b = knn_search(&g, &m, &q, 2, PriorityRule::Fifo).unwrap();
        assert_eq!(a.result_ids(), b.result_ids());
    }

    #[test]
    fn knn_ties_prefer_smaller_ids() {
        // p1 and p2 are equidistant from the query.
        let g = mini_ball_tree();
        let m = CountedMetric::new(MetricKind::Euclidean);
        let q = vec_point(0, &[0.0, 2.0]);
        let report = knn_search(&g, &m, &q, 2, PriorityRule::LowerBound).unwrap();
        assert_eq!(report.result_ids(), vec![0, 1]);
    }

    #[test]
    fn ambit_ball_query_equals_range_search() {
        let g = mini_ball_tree();
        let m = CountedMetric::new(MetricKind::Euclidean);
        let q = vec_point(0, &[0.9, 0.0]);
        let range = range_search(&g, &m, &q, 0.2).unwrap();
        let query = QueryAmbit::ball(q.payload.clone(), 0.2);
        let ambit = ambit_search(&g, &m, &query).unwrap();
        assert_eq!(range.result_ids(), ambit.result_ids());
        assert_eq!(range.distance_count, ambit.distance_count);
    }

    #[test]
    fn ambit_hyperplane_query() {
        let g = mini_ball_tree();
        let m = CountedMetric::new(MetricKind::Euclidean);
        // Closer to (1, 0) than to (-1, 0): exactly p1, and p0 on the tie.
        let query = QueryAmbit::hyperplane(
            PointPayload::Vector(vec![1.0, 0.0]),
            PointPayload::Vector(vec![-1.0, 0.0]),
        );
        let report = ambit_search(&g, &m, &query).unwrap();
        let mut ids = report.result_ids();
        ids.sort();
        assert_eq!(ids, vec![0, 1]);
    }
}

#[cfg(test)]
mod knn_tie_tests {
    use super::*;
    use crate::metrics::MetricKind;
    use crate::sprawl::graph::PointNode;

    #[test]
    fn duplicate_distances_resolve_to_smaller_ids() {
        // Four points all at distance 1 from the origin plus one farther.
        let coords: [&[f64]; 5] =
            [&[1.0, 0.0], &[0.0, 1.0], &[-1.0, 0.0], &[0.0, -1.0], &[3.0, 0.0]];
        let points: Vec<PointNode> = coords
            .iter()
            .enumerate()
            .map(|(i, c)| PointNode { point: Point::vector(i, c.to_vec()), children: vec![] })
            .collect();
        let mut g = SprawlGraph::from_parts(
            MetricKind::Euclidean,
            points,
            vec![],
            (0..5).collect(),
            None,
            0,
        )
        .unwrap();
        assert!(g.validate().passed());
        let m = CountedMetric::new(MetricKind::Euclidean);
        let q = Point::vector(0, vec![0.0, 0.0]);
        let report = knn_search(&g, &m, &q, 3, PriorityRule::LowerBound).unwrap();
        let values: Vec<f64> = report.results.iter().map(|h| h.value).collect();
        assert_eq!(values, vec![1.0, 1.0, 1.0]);
        assert_eq!(report.result_ids(), vec![0, 1, 2]);
    }

    #[test]
    fn concurrent_queries_share_one_graph() {
        let points: Vec<PointNode> = (0..50)
            .map(|i| PointNode {
                point: Point::vector(i, vec![i as f64 * 0.02, 0.0]),
                children: vec![],
            })
            .collect();
        let mut g = SprawlGraph::from_parts(
            MetricKind::Euclidean,
            points,
            vec![],
            (0..50).collect(),
            None,
            0,
        )
        .unwrap();
        assert!(g.validate().passed());
        let g = &g;
        std::thread::scope(|scope| {
            for t in 0..4 {
                scope.spawn(move || {
                    // Each thread owns its state and counter.
                    let m = CountedMetric::new(MetricKind::Euclidean);
                    let q = Point::vector(0, vec![t as f64 * 0.1, 0.0]);
                    let report = range_search(g, &m, &q, 0.05).unwrap();
                    assert_eq!(report.distance_count, 50);
                    assert_eq!(m.calls(), 50);
                });
            }
        });
    }
}
