//! Burkhard–Keller tree: branching by exact distance from each node, one
//! zero-width shell region per occupied child distance.

use std::collections::BTreeMap;

use crate::ambit::LinearAmbit;
use crate::error::{invalid_input, Result};
use crate::metrics::{MetricKind, Point, PointId};
use crate::sprawl::SprawlGraph;

use super::{BuildParams, Builder};

/// Classic insertion in id order; requires an integer-valued metric so
/// distances can key the child slots exactly.
pub fn build_bk_tree(data: &[Point], metric: MetricKind, params: &BuildParams) -> Result<SprawlGraph> {
    params.check()?;
    if data.is_empty() {
        return Err(invalid_input("dataset must be nonempty"));
    }
    if !metric.is_discrete() {
        return Err(invalid_input(format!(
            "bk-tree needs an integer-valued metric, got {metric}"
        )));
    }
    let mut b = Builder::new(data, metric, params)?;
    let root: PointId = 0;
    let mut children: Vec<BTreeMap<u64, PointId>> = vec![BTreeMap::new(); data.len()];
    for u in 1..data.len() {
        let mut at = root;
        loop {
            let d = b.dist(at, u)?;
            debug_assert_eq!(d.fract(), 0.0);
            let key = d as u64;
            match children[at].get(&key) {
                Some(&next) => at = next,
                None => {
                    children[at].insert(key, u);
                    break;
                }
            }
        }
    }
    for (p, slots) in children.iter().enumerate() {
        for (&d, &child) in slots {
            let ambit = LinearAmbit::sphere(p, d as f64)?;
            b.add_region(ambit, vec![child], Vec::new(), true);
        }
    }
    b.finish(vec![root], None)
}
