use std::collections::HashMap;
use std::fmt;

use crate::metrics::PointId;
use crate::sprawl::graph::{RegionId, SprawlGraph};

/// One structural defect found by [`SprawlGraph::validate`].
#[derive(Debug, Clone)]
pub enum ValidationIssue {
    /// An edge or focus references a node outside the graph.
    BrokenReference(String),
    /// A region's focus list and the points' child lists disagree.
    ParentChildMismatch { region: RegionId, detail: String },
    /// The positive-edge subgraph contains a cycle.
    PositiveCycle { detail: String },
    /// A point can never be discovered from the roots.
    UnreachablePoint { point: PointId },
    /// A point stored below a region falls outside its ambit.
    ContainmentViolation { region: RegionId, point: PointId, detail: String },
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationIssue::BrokenReference(d) => write!(f, "broken reference: {d}"),
            ValidationIssue::ParentChildMismatch { region, detail } => {
                write!(f, "region {region}: parent/focus mismatch: {detail}")
            }
            ValidationIssue::PositiveCycle { detail } => write!(f, "positive cycle: {detail}"),
            ValidationIssue::UnreachablePoint { point } => {
                write!(f, "point {point} unreachable from the roots")
            }
            ValidationIssue::ContainmentViolation { region, point, detail } => {
                write!(f, "region {region} does not contain point {point}: {detail}")
            }
        }
    }
}

/// Diagnostic outcome of graph validation.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
    /// False when the positive subgraph is not tree-like (some point has
    /// several discovering regions), in which case the containment audit is
    /// skipped rather than failed.
    pub containment_audited: bool,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.issues.is_empty()
    }
}

impl SprawlGraph {
    /// Check bipartite reference integrity, positive-edge acyclicity,
    /// parent/focus agreement, structural reachability from the roots, and
    /// (for tree-like graphs) that every point stored below a region is a
    /// member of its ambit. A passing graph is marked searchable.
    pub fn validate(&mut self) -> ValidationReport {
        let mut report = ValidationReport::default();
        self.check_references(&mut report);
        self.check_parent_lists(&mut report);
        self.check_acyclic(&mut report);
        self.check_reachability(&mut report);
        self.check_containment(&mut report);
        self.validated = report.passed();
        report
    }

    fn check_references(&self, report: &mut ValidationReport) {
        let n = self.points().len();
        let k = self.regions().len();
        for (u, p) in self.points().iter().enumerate() {
            for &r in &p.children {
                if r >= k {
                    report.issues.push(ValidationIssue::BrokenReference(format!(
                        "point {u} lists region {r} of {k}"
                    )));
                }
            }
        }
        for (r, region) in self.regions().iter().enumerate() {
            for &u in region
                .ambit
                .foci()
                .iter()
                .chain(&region.positive)
                .chain(&region.negative)
            {
                if u >= n {
                    report.issues.push(ValidationIssue::BrokenReference(format!(
                        "region {r} lists point {u} of {n}"
                    )));
                }
            }
        }
        for &u in self.roots() {
            if u >= n {
                report.issues.push(ValidationIssue::BrokenReference(format!(
                    "root {u} of {n}"
                )));
            }
        }
    }

    /// A region's parents are exactly its foci: each focus must list the
    /// region once per occurrence, and nothing else may list it.
    fn check_parent_lists(&self, report: &mut ValidationReport) {
        let n = self.points().len();
        let k = self.regions().len();
        // (point, region) edge multiplicities from both directions.
        let mut from_children: HashMap<(PointId, RegionId), isize> = HashMap::new();
        for (u, p) in self.points().iter().enumerate() {
            for &r in &p.children {
                if r < k {
                    *from_children.entry((u, r)).or_insert(0) += 1;
                }
            }
        }
        for (r, region) in self.regions().iter().enumerate() {
            for &f in region.ambit.foci() {
                if f < n {
                    *from_children.entry((f, r)).or_insert(0) -= 1;
                }
            }
        }
        let mut mismatches: Vec<((PointId, RegionId), isize)> = from_children
            .into_iter()
            .filter(|&(_, delta)| delta != 0)
            .collect();
        mismatches.sort_unstable();
        for ((u, r), delta) in mismatches {
            report.issues.push(ValidationIssue::ParentChildMismatch {
                region: r,
                detail: format!(
                    "point {u} lists it {} more time(s) than the foci require",
                    delta
                ),
            });
        }
    }

    /// Depth-first cycle check over positive edges only
    /// (point → child region, region → positive child point).
    fn check_acyclic(&self, report: &mut ValidationReport) {
        let n = self.points().len();
        let k = self.regions().len();
        let total = n + k;
        // 0 = white, 1 = on stack, 2 = done. Region node r is n + r.
        let mut color = vec![0u8; total];
        for start in 0..total {
            if color[start] != 0 {
                continue;
            }
            // Iterative DFS; stack holds (node, next-edge-index).
            let mut stack = vec![(start, 0usize)];
            color[start] = 1;
            while let Some(&mut (node, ref mut idx)) = stack.last_mut() {
                let next = self.positive_edge(node, *idx, n);
                *idx += 1;
                match next {
                    None => {
                        color[node] = 2;
                        stack.pop();
                    }
                    Some(succ) if succ >= total => {} // dangling, reported elsewhere
                    Some(succ) => match color[succ] {
                        0 => {
                            color[succ] = 1;
                            stack.push((succ, 0));
                        }
                        1 => {
                            report.issues.push(ValidationIssue::PositiveCycle {
                                detail: format!(
                                    "{} reaches {} which is on the current path",
                                    describe(node, n),
                                    describe(succ, n)
                                ),
                            });
                            return;
                        }
                        _ => {}
                    },
                }
            }
        }
    }

    fn positive_edge(&self, node: usize, idx: usize, n: usize) -> Option<usize> {
        if node < n {
            self.points()[node].children.get(idx).map(|&r| n + r)
        } else {
            self.regions()[node - n].positive.get(idx).copied()
        }
    }

    /// Fixpoint reachability mirroring the runtime gate: a region fires once
    /// all of its parents are reachable; firing makes its positive children
    /// reachable. Every point must end up reachable.
    fn check_reachability(&self, report: &mut ValidationReport) {
        let n = self.points().len();
        let k = self.regions().len();
        let mut point_ok = vec![false; n];
        let mut counts = vec![0usize; k];
        let mut queue: Vec<PointId> = Vec::new();
        for &root in self.roots() {
            if root < n && !point_ok[root] {
                point_ok[root] = true;
                queue.push(root);
            }
        }
        while let Some(u) = queue.pop() {
            for &r in &self.points()[u].children {
                if r >= k {
                    continue;
                }
                counts[r] += 1;
                if counts[r] == self.regions()[r].ambit.focus_count() {
                    for &v in &self.regions()[r].positive {
                        if v < n && !point_ok[v] {
                            point_ok[v] = true;
                            queue.push(v);
                        }
                    }
                }
            }
        }
        for (u, ok) in point_ok.iter().enumerate() {
            if !ok {
                report.issues.push(ValidationIssue::UnreachablePoint { point: u });
            }
        }
    }

    /// For tree-like graphs (each point discovered by at most one region),
    /// recompute each region's descendant set and verify membership of every
    /// descendant, reported per region.
    fn check_containment(&self, report: &mut ValidationReport) {
        let n = self.points().len();
        let mut in_degree = vec![0usize; n];
        for region in self.regions() {
            for &v in &region.positive {
                if v < n {
                    in_degree[v] += 1;
                }
            }
        }
        if in_degree.iter().any(|&d| d > 1) || !report.passed() {
            report.containment_audited = false;
            return;
        }
        report.containment_audited = true;
        let metric = self.metric();
        for (r, region) in self.regions().iter().enumerate() {
            // Collect all points below this region via positive edges.
            let mut below: Vec<PointId> = Vec::new();
            let mut stack: Vec<PointId> = region.positive.clone();
            while let Some(u) = stack.pop() {
                below.push(u);
                for &child in &self.points()[u].children {
                    stack.extend(self.regions()[child].positive.iter().copied());
                }
            }
            for u in below {
                let x: Vec<f64> = region
                    .ambit
                    .foci()
                    .iter()
                    .map(|&f| {
                        metric
                            .eval(&self.points()[f].point.payload, &self.points()[u].point.payload)
                            .unwrap_or(f64::NAN)
                    })
                    .collect();
                match region.ambit.member(&x) {
                    Ok(true) => {}
                    _ => {
                        report.issues.push(ValidationIssue::ContainmentViolation {
                            region: r,
                            point: u,
                            detail: format!("pivot vector {x:?}"),
                        });
                    }
                }
            }
        }
    }
}

fn describe(node: usize, n: usize) -> String {
    if node < n {
        format!("point {node}")
    } else {
        format!("region {}", node - n)
    }
}
