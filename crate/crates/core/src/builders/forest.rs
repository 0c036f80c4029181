//! Excluded-middle vantage point forest: VP-style trees whose middle shells
//! defer their points to the next tree, linked by making each shell region's
//! single child the next tree's root.

use crate::ambit::LinearAmbit;
use crate::error::{invalid_input, Result};
use crate::metrics::{MetricKind, Point, PointId};
use crate::sprawl::{RegionId, SprawlGraph};

use super::trees::{ball_subtree, rng_pick, span, BallStyle};
use super::{BuildParams, Builder};

/// Trees the forest may grow before the residue falls back to a ball tree.
const MAX_TREES: usize = 64;

/// Build the forest with excluded-middle half-width `params.shell_width`.
///
/// Each node splits at the lower-median distance `r` into an inner ball of
/// radius `r - ρ`, a deferred shell `[r - ρ, r + ρ]`, and an outer inverted
/// ball of radius `r + ρ`; shell points feed the next tree. For query radii
/// below ρ, at most one of the inner and outer regions can overlap.
pub fn build_vp_forest(data: &[Point], metric: MetricKind, params: &BuildParams) -> Result<SprawlGraph> {
    params.check()?;
    if data.is_empty() {
        return Err(invalid_input("dataset must be nonempty"));
    }
    let rho = params.shell_width;
    let mut b = Builder::new(data, metric, params)?;
    let first_root = rng_pick(&mut b, data.len());
    let mut current: Vec<PointId> = (0..data.len()).collect();
    let mut root = first_root;
    let mut forest_root = first_root;
    let mut pending_shells: Vec<RegionId> = Vec::new();
    let mut trees = 0usize;
    loop {
        if trees > 0 {
            // Every shell of the previous tree leads to this tree's root.
            for &r in &pending_shells {
                b.regions[r].positive.push(root);
            }
            pending_shells.clear();
        } else {
            forest_root = root;
        }
        trees += 1;
        let rest: Vec<PointId> = current.iter().copied().filter(|&u| u != root).collect();
        let mut deferred: Vec<PointId> = Vec::new();
        if trees == MAX_TREES {
            // Residue cap: finish with a plain ball tree, deferring nothing.
            ball_subtree(&mut b, root, &rest, BallStyle::CoveringBall, &mut None)?;
        } else {
            forest_node(&mut b, root, &rest, rho, &mut deferred, &mut pending_shells)?;
        }
        if deferred.is_empty() {
            debug_assert!(pending_shells.is_empty());
            break;
        }
        root = b.farthest(root, &deferred)?;
        current = deferred;
    }
    b.finish(vec![forest_root], None)
}

fn forest_node(
    b: &mut Builder,
    vantage: PointId,
    set: &[PointId],
    rho: f64,
    deferred: &mut Vec<PointId>,
    shells: &mut Vec<RegionId>,
) -> Result<()> {
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
    let mut inner = Vec::new();
    let mut banded = Vec::new();
    let mut outer = Vec::new();
    for &(d, u) in &dists {
        if d <= r_med - rho {
            inner.push(u);
        } else if d >= r_med + rho {
            outer.push(u);
        } else {
            banded.push(u);
        }
    }
    if !inner.is_empty() {
        forest_branch(b, vantage, LinearAmbit::ball(vantage, r_med - rho), &inner, rho, deferred, shells)?;
    }
    if !banded.is_empty() {
        // The shell's single child is patched to the next tree's root, which
        // generally lies outside this shell.
        let ambit = LinearAmbit::shell(vantage, (r_med - rho).max(0.0), r_med + rho)?;
        let id = b.add_region(ambit, Vec::new(), Vec::new(), false);
        shells.push(id);
        deferred.extend(&banded);
    }
    if !outer.is_empty() {
        forest_branch(b, vantage, LinearAmbit::inverted_ball(vantage, r_med + rho), &outer, rho, deferred, shells)?;
    }
    Ok(())
}

fn forest_branch(
    b: &mut Builder,
    vantage: PointId,
    ambit: LinearAmbit,
    part: &[PointId],
    rho: f64,
    deferred: &mut Vec<PointId>,
    shells: &mut Vec<RegionId>,
) -> Result<()> {
    if part.len() <= b.params.leaf_capacity {
        b.add_region(ambit, part.to_vec(), Vec::new(), true);
        return Ok(());
    }
    let next = b.farthest(vantage, part)?;
    b.add_region(ambit, vec![next], Vec::new(), true);
    let sub: Vec<PointId> = part.iter().copied().filter(|&u| u != next).collect();
    forest_node(b, next, &sub, rho, deferred, shells)
}
