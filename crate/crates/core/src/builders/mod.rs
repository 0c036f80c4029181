//! Builders: each classic metric index expressed as a sprawl configuration.
//!
//! Every builder consumes `(data, metric, params)` and emits a validated
//! [`SprawlGraph`]; the `seed` in [`BuildParams`] fully determines the
//! construction. Distance computations spent at build time are tallied on
//! the graph as `build_distances`, separate from any query counter.

mod bk;
mod forest;
mod pivot;
mod select;
mod trees;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ambit::LinearAmbit;
use crate::error::{invalid_input, invalid_state, Result};
use crate::metrics::{CountedMetric, MetricKind, Point, PointId};
use crate::sprawl::{AesaHeuristic, AesaTable, PointNode, RegionId, RegionNode, SprawlGraph};

pub use bk::build_bk_tree;
pub use forest::build_vp_forest;
pub use pivot::{build_aesa, build_laesa, build_pm_tree};
pub use trees::{build_ball_tree, build_bs_tree, build_gh_tree, build_gnat, build_m_tree,
    build_vp_tree, voronoi_node_regions};

/// How a LAESA table is wired into the graph: spheres that eliminate, or
/// per-object cut regions that discover.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LaesaMode {
    #[default]
    Eliminate,
    Discover,
}

impl LaesaMode {
    pub fn name(self) -> &'static str {
        match self {
            LaesaMode::Eliminate => "eliminate",
            LaesaMode::Discover => "discover",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "eliminate" => Ok(LaesaMode::Eliminate),
            "discover" => Ok(LaesaMode::Discover),
            other => Err(invalid_input(format!("unknown laesa mode {other:?}"))),
        }
    }
}

/// Construction knobs shared by all builders; each builder reads the ones
/// it cares about.
#[derive(Debug, Clone)]
pub struct BuildParams {
    /// Fanout for multiway trees (ball tree, M-tree, GNAT).
    pub arity: usize,
    /// Subtrees at most this large become direct children of the enclosing
    /// region.
    pub leaf_capacity: usize,
    /// Pivots for LAESA, the PM-tree, and the PiAESA preselection order.
    pub pivot_count: usize,
    /// Half-width ρ of the excluded middle in the VP forest.
    pub shell_width: f64,
    pub seed: u64,
    /// Candidate-selection heuristic for the full-matrix family.
    pub heuristic: AesaHeuristic,
    pub laesa_mode: LaesaMode,
    /// Number of preselected-pivot visits before classic selection resumes.
    pub piaesa_switch: usize,
    /// Adapt VP radii to cover only each subtree (versus the shared median).
    pub vp_tight: bool,
}

impl Default for BuildParams {
    fn default() -> Self {
        BuildParams {
            arity: 2,
            leaf_capacity: 1,
            pivot_count: 8,
            shell_width: 0.05,
            seed: 0,
            heuristic: AesaHeuristic::LbSum,
            laesa_mode: LaesaMode::Eliminate,
            piaesa_switch: 0,
            vp_tight: true,
        }
    }
}

impl BuildParams {
    pub fn with_seed(seed: u64) -> Self {
        BuildParams { seed, ..Default::default() }
    }

    fn check(&self) -> Result<()> {
        if self.arity < 2 {
            return Err(invalid_input("arity must be at least 2"));
        }
        if self.leaf_capacity < 1 {
            return Err(invalid_input("leaf capacity must be at least 1"));
        }
        if self.shell_width < 0.0 {
            return Err(invalid_input("shell width must be nonnegative"));
        }
        Ok(())
    }

    /// Compact `k=v` rendering for reports (no commas, CSV-safe).
    pub fn describe(&self) -> String {
        format!(
            "arity={};leaf={};pivots={};rho={};seed={};heuristic={};mode={};switch={};tight={}",
            self.arity,
            self.leaf_capacity,
            self.pivot_count,
            self.shell_width,
            self.seed,
            self.heuristic.name(),
            self.laesa_mode.name(),
            self.piaesa_switch,
            self.vp_tight
        )
    }
}

/// The index structures this crate can emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexKind {
    /// No regions at all: the linear-scan baseline.
    Linear,
    BsTree,
    BallTree,
    VpTree,
    BkTree,
    Gnat,
    GhTree,
    MTree,
    Laesa,
    Aesa,
    PmTree,
    VpForest,
}

impl IndexKind {
    pub const ALL: [IndexKind; 12] = [
        IndexKind::Linear,
        IndexKind::BsTree,
        IndexKind::BallTree,
        IndexKind::VpTree,
        IndexKind::BkTree,
        IndexKind::Gnat,
        IndexKind::GhTree,
        IndexKind::MTree,
        IndexKind::Laesa,
        IndexKind::Aesa,
        IndexKind::PmTree,
        IndexKind::VpForest,
    ];

    pub fn name(self) -> &'static str {
        match self {
            IndexKind::Linear => "linear",
            IndexKind::BsTree => "bs-tree",
            IndexKind::BallTree => "ball-tree",
            IndexKind::VpTree => "vp-tree",
            IndexKind::BkTree => "bk-tree",
            IndexKind::Gnat => "gnat",
            IndexKind::GhTree => "gh-tree",
            IndexKind::MTree => "m-tree",
            IndexKind::Laesa => "laesa",
            IndexKind::Aesa => "aesa",
            IndexKind::PmTree => "pm-tree",
            IndexKind::VpForest => "vp-forest",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| invalid_input(format!("unknown index kind {s:?}")))
    }
}

impl std::fmt::Display for IndexKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Build any index kind over `data` with the given metric and parameters.
pub fn build_index(
    kind: IndexKind,
    data: &[Point],
    metric: MetricKind,
    params: &BuildParams,
) -> Result<SprawlGraph> {
    match kind {
        IndexKind::Linear => build_linear(data, metric, params),
        IndexKind::BsTree => build_bs_tree(data, metric, params),
        IndexKind::BallTree => build_ball_tree(data, metric, params),
        IndexKind::VpTree => build_vp_tree(data, metric, params),
        IndexKind::BkTree => build_bk_tree(data, metric, params),
        IndexKind::Gnat => build_gnat(data, metric, params),
        IndexKind::GhTree => build_gh_tree(data, metric, params),
        IndexKind::MTree => build_m_tree(data, metric, params),
        IndexKind::Laesa => build_laesa(data, metric, params),
        IndexKind::Aesa => build_aesa(data, metric, params),
        IndexKind::PmTree => build_pm_tree(data, metric, params),
        IndexKind::VpForest => build_vp_forest(data, metric, params),
    }
}

/// The scan baseline: every point is a root, nothing prunes anything.
pub fn build_linear(data: &[Point], metric: MetricKind, params: &BuildParams) -> Result<SprawlGraph> {
    params.check()?;
    let b = Builder::new(data, metric, params)?;
    let roots = (0..data.len()).collect();
    b.finish(roots, None)
}

/// Shared construction scaffolding: owns the counted metric, the node
/// arrays, and the seeded generator.
pub(crate) struct Builder<'a> {
    pub data: &'a [Point],
    pub metric: CountedMetric,
    pub params: &'a BuildParams,
    pub points: Vec<PointNode>,
    pub regions: Vec<RegionNode>,
    pub rng: ChaCha8Rng,
}

impl<'a> Builder<'a> {
    pub fn new(data: &'a [Point], metric: MetricKind, params: &'a BuildParams) -> Result<Self> {
        for (i, p) in data.iter().enumerate() {
            if p.id != i {
                return Err(invalid_input(format!(
                    "dataset ids must be dense: slot {i} holds id {}",
                    p.id
                )));
            }
        }
        Ok(Builder {
            data,
            metric: CountedMetric::new(metric),
            params,
            points: data
                .iter()
                .map(|p| PointNode { point: p.clone(), children: Vec::new() })
                .collect(),
            regions: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(params.seed),
        })
    }

    pub fn dist(&self, a: PointId, b: PointId) -> Result<f64> {
        self.metric.distance(&self.data[a], &self.data[b])
    }

    /// Add a region, wiring it into each focus's child list in focus order.
    pub fn add_region(
        &mut self,
        ambit: LinearAmbit,
        positive: Vec<PointId>,
        negative: Vec<PointId>,
        contained: bool,
    ) -> RegionId {
        let id = self.regions.len();
        for &f in ambit.foci() {
            self.points[f].children.push(id);
        }
        self.regions.push(RegionNode { ambit, positive, negative, contained });
        id
    }

    pub fn finish(self, roots: Vec<PointId>, aesa: Option<AesaTable>) -> Result<SprawlGraph> {
        let build_distances = self.metric.calls();
        let mut graph = SprawlGraph::from_parts(
            self.metric.kind(),
            self.points,
            self.regions,
            roots,
            aesa,
            build_distances,
        )?;
        let report = graph.validate();
        if !report.passed() {
            return Err(invalid_state(format!(
                "builder produced an invalid graph: {}",
                report
                    .issues
                    .iter()
                    .map(|i| i.to_string())
                    .collect::<Vec<_>>()
                    .join("; ")
            )));
        }
        Ok(graph)
    }
}
