//! Deterministic point selection: farthest-point (max-min) sampling.

use crate::error::Result;
use crate::metrics::PointId;

use super::Builder;

impl Builder<'_> {
    /// The candidate farthest from `from`; ties broken toward smaller ids.
    pub fn farthest(&self, from: PointId, candidates: &[PointId]) -> Result<PointId> {
        let mut best = (f64::NEG_INFINITY, usize::MAX);
        for &u in candidates {
            let d = self.dist(from, u)?;
            if d > best.0 || (d == best.0 && u < best.1) {
                best = (d, u);
            }
        }
        Ok(best.1)
    }

    /// Max-min sample of `count` points: start with the candidate farthest
    /// from `anchor`, then repeatedly take the candidate maximizing the
    /// minimum distance to those already chosen.
    pub fn max_min_seeds(
        &self,
        candidates: &[PointId],
        count: usize,
        anchor: PointId,
    ) -> Result<Vec<PointId>> {
        let count = count.min(candidates.len());
        if count == 0 {
            return Ok(Vec::new());
        }
        let mut chosen = Vec::with_capacity(count);
        let mut min_dist: Vec<f64> = vec![f64::INFINITY; candidates.len()];
        chosen.push(self.farthest(anchor, candidates)?);
        while chosen.len() < count {
            let last = *chosen.last().unwrap();
            let mut best = (f64::NEG_INFINITY, usize::MAX, usize::MAX);
            for (slot, &u) in candidates.iter().enumerate() {
                if chosen.contains(&u) {
                    continue;
                }
                let d = self.dist(last, u)?;
                if d < min_dist[slot] {
                    min_dist[slot] = d;
                }
                if min_dist[slot] > best.0 || (min_dist[slot] == best.0 && u < best.1) {
                    best = (min_dist[slot], u, slot);
                }
            }
            chosen.push(best.1);
        }
        Ok(chosen)
    }

    /// Assign each member of `set` to its nearest seed (ties toward the
    /// earlier seed); parts keep `set` order. A seed always lands in its own
    /// part, even when another seed carries an identical payload.
    pub fn partition(&self, set: &[PointId], seeds: &[PointId]) -> Result<Vec<Vec<PointId>>> {
        let mut parts: Vec<Vec<PointId>> = vec![Vec::new(); seeds.len()];
        for &u in set {
            if let Some(own) = seeds.iter().position(|&s| s == u) {
                parts[own].push(u);
                continue;
            }
            let mut best = (f64::INFINITY, 0usize);
            for (i, &s) in seeds.iter().enumerate() {
                let d = self.dist(s, u)?;
                if d < best.0 {
                    best = (d, i);
                }
            }
            parts[best.1].push(u);
        }
        Ok(parts)
    }
}
