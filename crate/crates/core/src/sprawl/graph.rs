use crate::ambit::LinearAmbit;
use crate::error::{invalid_input, Result};
use crate::metrics::{MetricKind, Point, PointId};

/// Identifier of a region node within a graph.
pub type RegionId = usize;

/// A data point plus the ordered list of regions it parameterizes.
#[derive(Debug, Clone)]
pub struct PointNode {
    pub point: Point,
    /// Regions having this point among their foci, in traversal order.
    pub children: Vec<RegionId>,
}

/// A region node: its ambit (whose foci double as the parent list), the
/// points it discovers, and the points it may eliminate.
#[derive(Debug, Clone)]
pub struct RegionNode {
    pub ambit: LinearAmbit,
    /// Discovered when the region overlaps the query.
    pub positive: Vec<PointId>,
    /// Eliminated when the region does not overlap the query.
    pub negative: Vec<PointId>,
    /// True when every child (positive and negative) is known to lie inside
    /// the ambit, making the region's lower bound valid for those points.
    /// Builders set this; the only shipped exception is the cross-tree link
    /// from an excluded-middle shell to the next tree's root.
    pub contained: bool,
}

/// Selection heuristic for the full-matrix family: order candidates by the
/// sum or the max of the lower bounds accumulated so far.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AesaHeuristic {
    #[default]
    LbSum,
    LbMax,
}

impl AesaHeuristic {
    pub fn name(self) -> &'static str {
        match self {
            AesaHeuristic::LbSum => "lb_sum",
            AesaHeuristic::LbMax => "lb_max",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "lb_sum" => Ok(AesaHeuristic::LbSum),
            "lb_max" => Ok(AesaHeuristic::LbMax),
            other => Err(invalid_input(format!("unknown heuristic {other:?}"))),
        }
    }
}

/// The complete half-matrix of pairwise distances, standing in for the n²
/// zero-width shell regions (one per ordered pair) that the full-matrix
/// indexes would otherwise materialize. The search loop treats rows as
/// virtual elimination regions; behavior is defined to be indistinguishable
/// from the materialized graph.
#[derive(Debug, Clone)]
pub struct AesaTable {
    n: usize,
    /// Packed upper triangle: entry (i, j) with i < j at
    /// `i * (2n - i - 1) / 2 + (j - i - 1)`.
    dists: Vec<f64>,
    pub heuristic: AesaHeuristic,
    /// Forced visit order for the first `pivot_order.len()` selections
    /// (empty for the classic behavior).
    pub pivot_order: Vec<PointId>,
}

impl AesaTable {
    pub fn new(
        n: usize,
        dists: Vec<f64>,
        heuristic: AesaHeuristic,
        pivot_order: Vec<PointId>,
    ) -> Result<Self> {
        if dists.len() != n.saturating_sub(1) * n / 2 {
            return Err(invalid_input(format!(
                "distance table has {} entries, expected {}",
                dists.len(),
                n.saturating_sub(1) * n / 2
            )));
        }
        if pivot_order.iter().any(|&p| p >= n) {
            return Err(invalid_input("pivot order references unknown point"));
        }
        Ok(AesaTable { n, dists, heuristic, pivot_order })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dists(&self) -> &[f64] {
        &self.dists
    }

    /// Stored distance between two distinct points.
    pub fn get(&self, i: PointId, j: PointId) -> f64 {
        debug_assert!(i != j);
        let (lo, hi) = if i < j { (i, j) } else { (j, i) };
        self.dists[lo * (2 * self.n - lo - 1) / 2 + (hi - lo - 1)]
    }
}

/// An immutable, validated sprawl: the single structure behind every index
/// built by this crate.
#[derive(Debug, Clone)]
pub struct SprawlGraph {
    metric: MetricKind,
    points: Vec<PointNode>,
    regions: Vec<RegionNode>,
    roots: Vec<PointId>,
    aesa: Option<AesaTable>,
    build_distances: u64,
    pub(crate) validated: bool,
}

impl SprawlGraph {
    /// Assemble a graph from parts. Index ranges are checked here; run
    /// [`validate`](Self::validate) before searching.
    pub fn from_parts(
        metric: MetricKind,
        points: Vec<PointNode>,
        regions: Vec<RegionNode>,
        roots: Vec<PointId>,
        aesa: Option<AesaTable>,
        build_distances: u64,
    ) -> Result<Self> {
        let n = points.len();
        let k = regions.len();
        for (i, p) in points.iter().enumerate() {
            if p.point.id != i {
                return Err(invalid_input(format!(
                    "point at slot {i} carries id {}",
                    p.point.id
                )));
            }
            if let Some(&r) = p.children.iter().find(|&&r| r >= k) {
                return Err(invalid_input(format!("point {i} references region {r} of {k}")));
            }
        }
        for (r, region) in regions.iter().enumerate() {
            for &u in region
                .ambit
                .foci()
                .iter()
                .chain(&region.positive)
                .chain(&region.negative)
            {
                if u >= n {
                    return Err(invalid_input(format!("region {r} references point {u} of {n}")));
                }
            }
        }
        if let Some(&u) = roots.iter().find(|&&u| u >= n) {
            return Err(invalid_input(format!("root {u} out of range")));
        }
        if let Some(table) = &aesa {
            if table.len() != n {
                return Err(invalid_input("distance table size does not match point count"));
            }
        }
        Ok(SprawlGraph {
            metric,
            points,
            regions,
            roots,
            aesa,
            build_distances,
            validated: false,
        })
    }

    pub fn metric(&self) -> MetricKind {
        self.metric
    }

    pub fn points(&self) -> &[PointNode] {
        &self.points
    }

    pub fn regions(&self) -> &[RegionNode] {
        &self.regions
    }

    pub fn roots(&self) -> &[PointId] {
        &self.roots
    }

    pub fn aesa(&self) -> Option<&AesaTable> {
        self.aesa.as_ref()
    }

    /// Distance computations spent constructing the index. Query counters
    /// never include these.
    pub fn build_distances(&self) -> u64 {
        self.build_distances
    }

    pub fn is_validated(&self) -> bool {
        self.validated
    }

    pub fn point(&self, id: PointId) -> &PointNode {
        &self.points[id]
    }

    pub fn region(&self, id: RegionId) -> &RegionNode {
        &self.regions[id]
    }
}
