//! Pivot-table structures: elimination tables (LAESA and the full-matrix
//! family) and the pivot-decorated ball tree (PM-tree).

use crate::ambit::LinearAmbit;
use crate::error::{invalid_input, Result};
use crate::metrics::{MetricKind, Point, PointId};
use crate::sprawl::{AesaTable, SprawlGraph};

use super::trees::{ball_subtree, rng_pick, span, BallStyle};
use super::{BuildParams, Builder, LaesaMode};

/// Pivot table over `pivot_count` max-min pivots.
///
/// In `Eliminate` mode every (pivot, object) pair becomes a zero-width shell
/// with a negative edge to the object; pivots are roots first, objects after.
/// In `Discover` mode each object instead sits behind one cut region with
/// all pivots as parents. Both modes implement the same `|x - z| ≤ s` filter
/// and produce identical result sets and distance counts.
pub fn build_laesa(data: &[Point], metric: MetricKind, params: &BuildParams) -> Result<SprawlGraph> {
    params.check()?;
    if data.is_empty() {
        return Err(invalid_input("dataset must be nonempty"));
    }
    if params.pivot_count > data.len() {
        return Err(invalid_input(format!(
            "pivot count {} exceeds dataset size {}",
            params.pivot_count,
            data.len()
        )));
    }
    let mut b = Builder::new(data, metric, params)?;
    if params.pivot_count == 0 {
        // No pivots, no filter: degenerates to the linear scan.
        return b.finish((0..data.len()).collect(), None);
    }
    let all: Vec<PointId> = (0..data.len()).collect();
    let anchor = rng_pick(&mut b, data.len());
    let pivots = b.max_min_seeds(&all, params.pivot_count, anchor)?;
    let objects: Vec<PointId> = all.iter().copied().filter(|u| !pivots.contains(u)).collect();
    match params.laesa_mode {
        LaesaMode::Eliminate => {
            for &p in &pivots {
                for &u in &objects {
                    let x = b.dist(p, u)?;
                    b.add_region(LinearAmbit::sphere(p, x)?, Vec::new(), vec![u], true);
                }
            }
            let mut roots = pivots.clone();
            roots.extend(&objects);
            b.finish(roots, None)
        }
        LaesaMode::Discover => {
            for &u in &objects {
                let mut bounds = Vec::with_capacity(pivots.len());
                for &p in &pivots {
                    let x = b.dist(p, u)?;
                    bounds.push((x, x));
                }
                let ambit = LinearAmbit::cut(pivots.clone(), &bounds)?;
                b.add_region(ambit, vec![u], Vec::new(), true);
            }
            b.finish(pivots, None)
        }
    }
}

/// Full-matrix index: every pairwise distance is stored at build time
/// (n(n-1)/2 computations, excluded from query counters) and queries whittle
/// the candidate set down via the table. `piaesa_switch > 0` prefixes the
/// traversal with that many preselected max-min pivots.
pub fn build_aesa(data: &[Point], metric: MetricKind, params: &BuildParams) -> Result<SprawlGraph> {
    params.check()?;
    if data.is_empty() {
        return Err(invalid_input("dataset must be nonempty"));
    }
    let mut b = Builder::new(data, metric, params)?;
    let n = data.len();
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            dists.push(b.dist(i, j)?);
        }
    }
    let pivot_order = if params.piaesa_switch > 0 {
        let all: Vec<PointId> = (0..n).collect();
        let anchor = rng_pick(&mut b, n);
        b.max_min_seeds(&all, params.piaesa_switch.min(n), anchor)?
    } else {
        Vec::new()
    };
    let table = AesaTable::new(n, dists, params.heuristic, pivot_order)?;
    b.finish((0..n).collect(), Some(table))
}

/// Ball tree plus global pivots: every tree edge gets, per pivot, a tight
/// shell around the pivot covering that subtree, with a negative edge to the
/// subtree's root. Pivot roots come before the tree root, so their shells
/// can eliminate subtrees before the tree is entered.
pub fn build_pm_tree(data: &[Point], metric: MetricKind, params: &BuildParams) -> Result<SprawlGraph> {
    params.check()?;
    if data.is_empty() {
        return Err(invalid_input("dataset must be nonempty"));
    }
    if params.pivot_count > data.len() {
        return Err(invalid_input(format!(
            "pivot count {} exceeds dataset size {}",
            params.pivot_count,
            data.len()
        )));
    }
    let mut b = Builder::new(data, metric, params)?;
    let root = rng_pick(&mut b, data.len());
    let rest: Vec<PointId> = (0..data.len()).filter(|&u| u != root).collect();
    let mut edges: Vec<(PointId, Vec<PointId>)> = vec![(root, (0..data.len()).collect())];
    {
        let mut sink = Some(&mut edges);
        ball_subtree(&mut b, root, &rest, BallStyle::CoveringBall, &mut sink)?;
    }
    if params.pivot_count == 0 {
        return b.finish(vec![root], None);
    }
    let all: Vec<PointId> = (0..data.len()).collect();
    let anchor = rng_pick(&mut b, data.len());
    let pivots = b.max_min_seeds(&all, params.pivot_count, anchor)?;
    for &g in &pivots {
        for (child, subtree) in &edges {
            let (lo, hi) = span(&b, g, subtree)?;
            let ambit = LinearAmbit::shell(g, lo, hi)?;
            b.add_region(ambit, Vec::new(), vec![*child], true);
        }
    }
    let mut roots = pivots.clone();
    roots.push(root);
    b.finish(roots, None)
}
