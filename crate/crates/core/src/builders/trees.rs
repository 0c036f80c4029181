//! Tree-shaped indexes: covering-ball trees, vantage-point trees,
//! hyperplane trees, and multi-shell cut-region trees.

use crate::ambit::LinearAmbit;
use crate::error::{invalid_input, Result};
use crate::metrics::{MetricKind, Point, PointId};
use crate::sprawl::SprawlGraph;

use super::{BuildParams, Builder};

/// Region layout for the shared ball/M recursion.
#[derive(Clone, Copy, PartialEq)]
pub(crate) enum BallStyle {
    /// One covering ball per node, all child entries under it.
    CoveringBall,
    /// One tight shell per child subtree around the routing point.
    PerChildShell,
}

/// Binary tree of covering balls: each internal point owns one ball whose
/// radius is the maximum distance to anything below it.
pub fn build_bs_tree(data: &[Point], metric: MetricKind, params: &BuildParams) -> Result<SprawlGraph> {
    let forced = BuildParams { arity: 2, ..params.clone() };
    ball_like(data, metric, &forced, BallStyle::CoveringBall)
}

/// The multiway generalization of the covering-ball tree.
pub fn build_ball_tree(data: &[Point], metric: MetricKind, params: &BuildParams) -> Result<SprawlGraph> {
    ball_like(data, metric, params, BallStyle::CoveringBall)
}

/// Ball-tree topology, but each child subtree is pre-filtered by a tight
/// [min, max] shell around the routing point instead of one shared ball.
pub fn build_m_tree(data: &[Point], metric: MetricKind, params: &BuildParams) -> Result<SprawlGraph> {
    ball_like(data, metric, params, BallStyle::PerChildShell)
}

fn ball_like(
    data: &[Point],
    metric: MetricKind,
    params: &BuildParams,
    style: BallStyle,
) -> Result<SprawlGraph> {
    params.check()?;
    if data.is_empty() {
        return Err(invalid_input("dataset must be nonempty"));
    }
    let mut b = Builder::new(data, metric, params)?;
    let root = rng_pick(&mut b, data.len());
    let rest: Vec<PointId> = (0..data.len()).filter(|&u| u != root).collect();
    ball_subtree(&mut b, root, &rest, style, &mut None)?;
    b.finish(vec![root], None)
}

/// Recursion shared by the covering-ball and per-child-shell styles; when
/// `edges` is provided, records every (child entry, subtree) pair for
/// callers that decorate the tree further.
pub(crate) fn ball_subtree(
    b: &mut Builder,
    center: PointId,
    set: &[PointId],
    style: BallStyle,
    edges: &mut Option<&mut Vec<(PointId, Vec<PointId>)>>,
) -> Result<()> {
    if set.is_empty() {
        return Ok(());
    }
    if set.len() <= b.params.leaf_capacity {
        let bounds = span(b, center, set)?;
        let ambit = match style {
            BallStyle::CoveringBall => LinearAmbit::ball(center, bounds.1),
            BallStyle::PerChildShell => LinearAmbit::shell(center, bounds.0, bounds.1)?,
        };
        b.add_region(ambit, set.to_vec(), Vec::new(), true);
        if let Some(edges) = edges {
            for &u in set {
                edges.push((u, vec![u]));
            }
        }
        return Ok(());
    }
    let seeds = b.max_min_seeds(set, b.params.arity, center)?;
    let parts = b.partition(set, &seeds)?;
    match style {
        BallStyle::CoveringBall => {
            let radius = span(b, center, set)?.1;
            let mut children = Vec::new();
            for (seed, part) in seeds.iter().zip(&parts) {
                if part.len() <= b.params.leaf_capacity {
                    children.extend_from_slice(part);
                } else {
                    children.push(*seed);
                }
            }
            b.add_region(LinearAmbit::ball(center, radius), children, Vec::new(), true);
        }
        BallStyle::PerChildShell => {
            for (seed, part) in seeds.iter().zip(&parts) {
                if part.is_empty() {
                    continue;
                }
                let bounds = span(b, center, part)?;
                let ambit = LinearAmbit::shell(center, bounds.0, bounds.1)?;
                let children = if part.len() <= b.params.leaf_capacity {
                    part.clone()
                } else {
                    vec![*seed]
                };
                b.add_region(ambit, children, Vec::new(), true);
            }
        }
    }
    for (seed, part) in seeds.iter().zip(&parts) {
        if part.len() <= b.params.leaf_capacity {
            if let Some(edges) = edges {
                for &u in part {
                    edges.push((u, vec![u]));
                }
            }
            continue;
        }
        if let Some(edges) = edges {
            edges.push((*seed, part.clone()));
        }
        let sub: Vec<PointId> = part.iter().copied().filter(|&u| u != *seed).collect();
        ball_subtree(b, *seed, &sub, style, edges)?;
    }
    Ok(())
}

/// Tight [min, max] of distances from `from` over `set`.
pub(crate) fn span(b: &Builder, from: PointId, set: &[PointId]) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for &u in set {
        let d = b.dist(from, u)?;
        lo = lo.min(d);
        hi = hi.max(d);
    }
    Ok((lo, hi))
}

pub(crate) fn rng_pick(b: &mut Builder, n: usize) -> PointId {
    use rand::Rng;
    b.rng.gen_range(0..n)
}

/// Vantage-point tree: every internal vantage splits the remaining points at
/// the lower-median distance (ties inside) into a ball and an inverted ball.
/// With `vp_tight` (the default) the outside radius shrinks to the nearest
/// outside point; the inside radius is the median either way, since the
/// median point attains it.
pub fn build_vp_tree(data: &[Point], metric: MetricKind, params: &BuildParams) -> Result<SprawlGraph> {
    params.check()?;
    if data.is_empty() {
        return Err(invalid_input("dataset must be nonempty"));
    }
    let mut b = Builder::new(data, metric, params)?;
    let root = rng_pick(&mut b, data.len());
    let rest: Vec<PointId> = (0..data.len()).filter(|&u| u != root).collect();
    vp_subtree(&mut b, root, &rest)?;
    b.finish(vec![root], None)
}

fn vp_subtree(b: &mut Builder, vantage: PointId, set: &[PointId]) -> Result<()> {
    if set.is_empty() {
        return Ok(());
    }
    if set.len() <= b.params.leaf_capacity {
        let radius = span(b, vantage, set)?.1;
        b.add_region(LinearAmbit::ball(vantage, radius), set.to_vec(), Vec::new(), true);
        return Ok(());
    }
    let mut dists: Vec<(f64, PointId)> = Vec::with_capacity(set.len());
    for &u in set {
        dists.push((b.dist(vantage, u)?, u));
    }
    dists.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    let r_med = dists[(dists.len() - 1) / 2].0;
    let inside: Vec<PointId> = dists.iter().filter(|&&(d, _)| d <= r_med).map(|&(_, u)| u).collect();
    let outside: Vec<PointId> = dists.iter().filter(|&&(d, _)| d > r_med).map(|&(_, u)| u).collect();
    let r_out = if b.params.vp_tight {
        dists.iter().find(|&&(d, _)| d > r_med).map_or(r_med, |&(d, _)| d)
    } else {
        r_med
    };
    vp_branch(b, vantage, LinearAmbit::ball(vantage, r_med), &inside)?;
    if !outside.is_empty() {
        vp_branch(b, vantage, LinearAmbit::inverted_ball(vantage, r_out), &outside)?;
    }
    Ok(())
}

fn vp_branch(b: &mut Builder, vantage: PointId, ambit: LinearAmbit, part: &[PointId]) -> Result<()> {
    if part.len() <= b.params.leaf_capacity {
        b.add_region(ambit, part.to_vec(), Vec::new(), true);
        return Ok(());
    }
    let next = b.farthest(vantage, part)?;
    b.add_region(ambit, vec![next], Vec::new(), true);
    let sub: Vec<PointId> = part.iter().copied().filter(|&u| u != next).collect();
    vp_subtree(b, next, &sub)
}

/// Generalized hyperplane tree: each internal node picks two far foci and
/// splits by which focus is closer (ties left); both half-space regions have
/// both foci as parents.
pub fn build_gh_tree(data: &[Point], metric: MetricKind, params: &BuildParams) -> Result<SprawlGraph> {
    params.check()?;
    if data.is_empty() {
        return Err(invalid_input("dataset must be nonempty"));
    }
    let mut b = Builder::new(data, metric, params)?;
    let anchor = rng_pick(&mut b, data.len());
    let all: Vec<PointId> = (0..data.len()).collect();
    let roots = gh_node(&mut b, &all, anchor)?;
    b.finish(roots, None)
}

fn gh_node(b: &mut Builder, set: &[PointId], anchor: PointId) -> Result<Vec<PointId>> {
    if set.len() <= b.params.leaf_capacity.max(2) {
        return Ok(set.to_vec());
    }
    let foci = b.max_min_seeds(set, 2, anchor)?;
    let (f1, f2) = (foci[0], foci[1]);
    let mut left = Vec::new();
    let mut right = Vec::new();
    for &u in set {
        if u == f1 || u == f2 {
            continue;
        }
        if b.dist(f1, u)? <= b.dist(f2, u)? {
            left.push(u);
        } else {
            right.push(u);
        }
    }
    let left_entries = gh_node(b, &left, f1)?;
    let right_entries = gh_node(b, &right, f2)?;
    if !left_entries.is_empty() {
        let ambit = LinearAmbit::new(vec![f1, f2], vec![1.0, -1.0], vec![0.0])?;
        b.add_region(ambit, left_entries, Vec::new(), true);
    }
    if !right_entries.is_empty() {
        let ambit = LinearAmbit::new(vec![f1, f2], vec![-1.0, 1.0], vec![0.0])?;
        b.add_region(ambit, right_entries, Vec::new(), true);
    }
    Ok(vec![f1, f2])
}

/// Multi-shell cut-region tree: every node spreads `arity` split points;
/// each subtree's region records tight [min, max] distance bands to *all*
/// split points (2·arity rows over arity foci).
pub fn build_gnat(data: &[Point], metric: MetricKind, params: &BuildParams) -> Result<SprawlGraph> {
    params.check()?;
    if data.is_empty() {
        return Err(invalid_input("dataset must be nonempty"));
    }
    let mut b = Builder::new(data, metric, params)?;
    let anchor = rng_pick(&mut b, data.len());
    let all: Vec<PointId> = (0..data.len()).collect();
    let roots = gnat_node(&mut b, &all, anchor)?;
    b.finish(roots, None)
}

fn gnat_node(b: &mut Builder, set: &[PointId], anchor: PointId) -> Result<Vec<PointId>> {
    if set.len() <= b.params.leaf_capacity || set.len() == 1 {
        return Ok(set.to_vec());
    }
    let splits = b.max_min_seeds(set, b.params.arity, anchor)?;
    let remaining: Vec<PointId> = set.iter().copied().filter(|u| !splits.contains(u)).collect();
    if remaining.is_empty() {
        return Ok(splits);
    }
    let parts = b.partition(&remaining, &splits)?;
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            continue;
        }
        let mut bounds = Vec::with_capacity(splits.len());
        for &s in &splits {
            bounds.push(span(b, s, part)?);
        }
        let entries = gnat_node(b, part, splits[i])?;
        let ambit = LinearAmbit::cut(splits.clone(), &bounds)?;
        b.add_region(ambit, entries, Vec::new(), true);
    }
    Ok(splits)
}

/// One Voronoi-cell region per focus: the cell of focus `i` is the
/// conjunction of `x_i - x_j ≤ 0` over all competitors. This is the
/// hyperplane-based alternative to the cut regions above.
pub fn voronoi_node_regions(foci: &[PointId]) -> Result<Vec<LinearAmbit>> {
    if foci.len() < 2 {
        return Err(invalid_input("voronoi node needs at least two foci"));
    }
    (0..foci.len())
        .map(|i| LinearAmbit::voronoi_cell(foci.to_vec(), i))
        .collect()
}
