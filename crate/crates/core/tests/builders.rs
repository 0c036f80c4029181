//! Structural audits per builder: region shapes, tight bounds, topology
//! counts, and the pairing properties between related structures.

use sprawl::ambit::LinearAmbit;
use sprawl::bench::oracle_range;
use sprawl::builders::{
    build_aesa, build_ball_tree, build_bk_tree, build_bs_tree, build_gh_tree, build_gnat,
    build_index, build_laesa, build_m_tree, build_pm_tree, build_vp_forest, build_vp_tree,
    voronoi_node_regions, BuildParams, IndexKind,
};
use sprawl::dataset::GeneratorSpec;
use sprawl::metrics::{CountedMetric, MetricKind, Point, PointId, PointPayload};
use sprawl::sprawl::{
    range_search, range_search_in, RegionId, SprawlGraph, TraceSink, TraversalState,
};
use sprawl::EPSILON;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pts(coords: &[(f64, f64)]) -> Vec<Point> {
    coords
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| Point::vector(i, vec![x, y]))
        .collect()
}

fn uniform(n: usize, seed: u64) -> Vec<Point> {
    GeneratorSpec::Uniform { dim: 2, n, seed }.generate().unwrap().points
}

/// All points below a region via positive edges (tree-shaped graphs).
fn descendants(g: &SprawlGraph, region: RegionId) -> Vec<PointId> {
    let mut out = Vec::new();
    let mut stack: Vec<PointId> = g.region(region).positive.clone();
    while let Some(u) = stack.pop() {
        out.push(u);
        for &r in &g.point(u).children {
            stack.extend(g.region(r).positive.iter().copied());
        }
    }
    out
}

fn raw_dist(g: &SprawlGraph, a: PointId, b: PointId) -> f64 {
    g.metric()
        .eval(&g.point(a).point.payload, &g.point(b).point.payload)
        .unwrap()
}

#[test]
fn bs_tree_singleton_has_no_regions() {
    let data = pts(&[(0.5, 0.5)]);
    let g = build_bs_tree(&data, MetricKind::Euclidean, &BuildParams::with_seed(0)).unwrap();
    assert_eq!(g.points().len(), 1);
    assert_eq!(g.regions().len(), 0);
    assert_eq!(g.roots(), &[0]);
}

#[test]
fn bs_tree_balanced_seven_point_count() {
    // Two far clusters sized 4 and 3; seed 0 roots the tree inside the
    // 4-cluster, so both branches hold three points and the recursion
    // produces exactly three ball regions for seven point nodes.
    let data = pts(&[
        (0.0, 0.0),
        (1.0, 0.0),
        (2.0, 0.0),
        (3.0, 0.0),
        (100.0, 0.0),
        (101.0, 0.0),
        (102.0, 0.0),
    ]);
    let g = build_bs_tree(&data, MetricKind::Euclidean, &BuildParams::with_seed(0)).unwrap();
    assert_eq!(g.roots(), &[3]);
    assert_eq!(g.points().len(), 7);
    assert_eq!(g.regions().len(), 3);
}

#[test]
fn bs_tree_covering_radius_is_tight() {
    let data = uniform(80, 1);
    let g = build_bs_tree(&data, MetricKind::Euclidean, &BuildParams::with_seed(2)).unwrap();
    for r in 0..g.regions().len() {
        let region = g.region(r);
        assert_eq!(region.ambit.coeffs(), &[1.0]);
        let focus = region.ambit.foci()[0];
        let radius = region.ambit.radii()[0];
        let below = descendants(&g, r);
        assert!(!below.is_empty());
        let max = below
            .iter()
            .map(|&u| raw_dist(&g, focus, u))
            .fold(0.0f64, f64::max);
        assert_eq!(radius, max, "covering radius must equal the subtree max");
    }
}

#[test]
fn ball_tree_arity_two_matches_bs_tree() {
    let data = uniform(90, 3);
    let params = BuildParams::with_seed(4);
    let bs = build_bs_tree(&data, MetricKind::Euclidean, &params).unwrap();
    let ball = build_ball_tree(&data, MetricKind::Euclidean, &params).unwrap();
    assert_eq!(format!("{bs:?}"), format!("{ball:?}"));
}

#[test]
fn ball_tree_arity_bound_and_coverage() {
    let data = uniform(100, 5);
    let params = BuildParams { arity: 4, ..BuildParams::with_seed(6) };
    let g = build_ball_tree(&data, MetricKind::Euclidean, &params).unwrap();
    let mut discovered = vec![0usize; data.len()];
    for r in g.regions() {
        assert!(r.positive.len() <= 4);
        for &u in &r.positive {
            discovered[u] += 1;
        }
    }
    for &root in g.roots() {
        discovered[root] += 1;
    }
    assert!(discovered.iter().all(|&c| c == 1), "each point discovered exactly once");
}

#[test]
fn vp_tree_regions_cover_their_branches() {
    let data = uniform(150, 7);
    for tight in [true, false] {
        let params = BuildParams { vp_tight: tight, ..BuildParams::with_seed(8) };
        let g = build_vp_tree(&data, MetricKind::Euclidean, &params).unwrap();
        let mut saw_outside = false;
        for r in 0..g.regions().len() {
            let region = g.region(r);
            let focus = region.ambit.foci()[0];
            let below = descendants(&g, r);
            match region.ambit.coeffs() {
                [1.0] => {
                    let radius = region.ambit.radii()[0];
                    for &u in &below {
                        assert!(raw_dist(&g, focus, u) <= radius + EPSILON);
                    }
                }
                [-1.0] => {
                    saw_outside = true;
                    let radius = -region.ambit.radii()[0];
                    let mut min = f64::INFINITY;
                    for &u in &below {
                        let d = raw_dist(&g, focus, u);
                        assert!(d >= radius - EPSILON);
                        min = min.min(d);
                    }
                    if tight {
                        assert_eq!(min, radius, "tight outside radius equals nearest point");
                    }
                }
                other => panic!("unexpected vp row {other:?}"),
            }
        }
        assert!(saw_outside);
    }
}

#[test]
fn bk_tree_two_points_single_shell() {
    let data = vec![Point::string(0, "abc"), Point::string(1, "abcxyz")];
    let g = build_bk_tree(&data, MetricKind::Levenshtein, &BuildParams::with_seed(0)).unwrap();
    assert_eq!(g.regions().len(), 1);
    let region = g.region(0);
    assert_eq!(region.ambit.foci(), &[0]);
    assert_eq!(region.ambit.radii(), &[-3.0, 3.0]);
    assert_eq!(region.positive, vec![1]);
}

#[test]
fn bk_tree_word_shells_match_edit_distances() {
    let data = vec![
        Point::string(0, "book"),
        Point::string(1, "books"),
        Point::string(2, "cake"),
    ];
    let g = build_bk_tree(&data, MetricKind::Levenshtein, &BuildParams::with_seed(0)).unwrap();
    assert_eq!(g.roots(), &[0]);
    let mut radii: Vec<(f64, PointId)> = g
        .regions()
        .iter()
        .map(|r| (r.ambit.radii()[1], r.positive[0]))
        .collect();
    radii.sort_by(|a, b| a.0.total_cmp(&b.0));
    assert_eq!(radii, vec![(1.0, 1), (4.0, 2)]);
}

#[test]
fn bk_tree_rejects_continuous_metrics() {
    let data = uniform(5, 0);
    assert!(build_bk_tree(&data, MetricKind::Euclidean, &BuildParams::with_seed(0)).is_err());
}

#[test]
fn bk_tree_handles_duplicate_payloads() {
    let data = vec![
        Point::string(0, "same"),
        Point::string(1, "same"),
        Point::string(2, "same"),
        Point::string(3, "other"),
    ];
    let g = build_bk_tree(&data, MetricKind::Levenshtein, &BuildParams::with_seed(0)).unwrap();
    let counted = CountedMetric::new(MetricKind::Levenshtein);
    let report = range_search(&g, &counted, &Point::string(0, "same"), 0.0).unwrap();
    let mut ids = report.result_ids();
    ids.sort_unstable();
    assert_eq!(ids, vec![0, 1, 2]);
}

#[test]
fn gnat_regions_have_cut_shape() {
    let data = uniform(120, 9);
    let params = BuildParams { arity: 2, ..BuildParams::with_seed(10) };
    let g = build_gnat(&data, MetricKind::Euclidean, &params).unwrap();
    assert!(!g.regions().is_empty());
    for region in g.regions() {
        assert_eq!(region.ambit.focus_count(), 2);
        assert_eq!(region.ambit.row_count(), 4);
    }
}

#[test]
fn gnat_bounds_are_tight() {
    let data = uniform(100, 11);
    let params = BuildParams { arity: 3, ..BuildParams::with_seed(12) };
    let g = build_gnat(&data, MetricKind::Euclidean, &params).unwrap();
    for r in 0..g.regions().len() {
        let region = g.region(r);
        let below = descendants(&g, r);
        let m = region.ambit.focus_count();
        for (j, &focus) in region.ambit.foci().iter().enumerate() {
            let lo = -region.ambit.radii()[2 * j];
            let hi = region.ambit.radii()[2 * j + 1];
            let mut true_lo = f64::INFINITY;
            let mut true_hi = 0.0f64;
            for &u in &below {
                let d = raw_dist(&g, focus, u);
                true_lo = true_lo.min(d);
                true_hi = true_hi.max(d);
            }
            assert_eq!((lo, hi), (true_lo, true_hi), "focus {j} of {m} has loose bounds");
        }
    }
}

#[test]
fn gh_tree_partition_respects_the_hyperplane() {
    let data = uniform(140, 13);
    let g = build_gh_tree(&data, MetricKind::Euclidean, &BuildParams::with_seed(14)).unwrap();
    let mut saw_left = false;
    for r in 0..g.regions().len() {
        let region = g.region(r);
        let foci = region.ambit.foci().to_vec();
        let below = descendants(&g, r);
        match region.ambit.coeffs() {
            [1.0, -1.0] => {
                saw_left = true;
                for &u in &below {
                    assert!(raw_dist(&g, foci[0], u) <= raw_dist(&g, foci[1], u));
                }
            }
            [-1.0, 1.0] => {
                for &u in &below {
                    assert!(raw_dist(&g, foci[1], u) <= raw_dist(&g, foci[0], u));
                }
            }
            other => panic!("unexpected gh row {other:?}"),
        }
    }
    assert!(saw_left);
}

#[test]
fn gh_overlap_is_the_classic_bound() {
    // For a = [1, -1], r = 0: overlap iff z1 - z2 <= 2s.
    let region = LinearAmbit::hyperplane(0, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..5000 {
        let z1: f64 = rng.gen_range(0.0..2.0);
        let z2: f64 = rng.gen_range(0.0..2.0);
        let s: f64 = rng.gen_range(0.0..1.0);
        assert_eq!(
            region.ball_overlap(&[z1, z2], s).unwrap(),
            z1 - z2 <= 2.0 * s + EPSILON
        );
    }
}

#[test]
fn voronoi_node_shapes_and_partition() {
    let regions = voronoi_node_regions(&[0, 1, 2]).unwrap();
    assert_eq!(regions.len(), 3);
    for cell in &regions {
        assert_eq!(cell.row_count(), 2);
        assert_eq!(cell.focus_count(), 3);
    }
    // Every point lands in exactly one cell under ties-to-lowest-index.
    let data = uniform(200, 16);
    let foci = [4usize, 77, 150];
    let metric = MetricKind::Euclidean;
    for p in &data {
        let x: Vec<f64> = foci
            .iter()
            .map(|&f| metric.eval(&data[f].payload, &p.payload).unwrap())
            .collect();
        let members: Vec<usize> = (0..3)
            .filter(|&i| {
                // Strict assignment: i wins ties only against later indices.
                (0..3).all(|j| {
                    if j < i {
                        x[i] < x[j]
                    } else {
                        x[i] <= x[j]
                    }
                })
            })
            .collect();
        assert_eq!(members.len(), 1, "point must fall in exactly one strict cell");
        // The ambit cells are closed, so the strict winner is a member.
        assert!(regions[members[0]].member(&x).unwrap());
    }
    // Overlap is the pairwise conjunction of z_i - z_j <= 2s.
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..2000 {
        let z = [
            rng.gen_range(0.0..2.0),
            rng.gen_range(0.0..2.0),
            rng.gen_range(0.0..2.0),
        ];
        let s = rng.gen_range(0.0..0.8);
        let expected = z[0] - z[1] <= 2.0 * s + EPSILON && z[0] - z[2] <= 2.0 * s + EPSILON;
        assert_eq!(regions[0].ball_overlap(&z, s).unwrap(), expected);
    }
}

#[test]
fn m_tree_shell_bounds_are_tight() {
    let data = uniform(120, 18);
    let params = BuildParams { arity: 3, ..BuildParams::with_seed(19) };
    let g = build_m_tree(&data, MetricKind::Euclidean, &params).unwrap();
    for r in 0..g.regions().len() {
        let region = g.region(r);
        assert_eq!(region.ambit.row_count(), 2, "m-tree regions are shells");
        let focus = region.ambit.foci()[0];
        let lo = -region.ambit.radii()[0];
        let hi = region.ambit.radii()[1];
        let below = descendants(&g, r);
        let mut true_lo = f64::INFINITY;
        let mut true_hi = 0.0f64;
        for &u in &below {
            let d = raw_dist(&g, focus, u);
            true_lo = true_lo.min(d);
            true_hi = true_hi.max(d);
        }
        assert_eq!((lo, hi), (true_lo, true_hi));
    }
}

#[test]
fn m_tree_never_costs_more_than_ball_tree() {
    let data = uniform(300, 20);
    let params = BuildParams { arity: 4, ..BuildParams::with_seed(21) };
    let metric = MetricKind::Euclidean;
    let ball = build_ball_tree(&data, metric, &params).unwrap();
    let mtree = build_m_tree(&data, metric, &params).unwrap();
    let counted = CountedMetric::new(metric);
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..40 {
        let q = Point::vector(0, vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)]);
        let s = rng.gen_range(0.01..0.2);
        let a = range_search(&ball, &counted, &q, s).unwrap();
        let b = range_search(&mtree, &counted, &q, s).unwrap();
        assert_eq!(a.results, b.results);
        assert!(
            b.distance_count <= a.distance_count,
            "shells must not cost more than the shared ball"
        );
    }
}

#[test]
fn laesa_zero_pivots_is_linear_scan() {
    let data = uniform(50, 23);
    let params = BuildParams { pivot_count: 0, ..BuildParams::with_seed(24) };
    let g = build_laesa(&data, MetricKind::Euclidean, &params).unwrap();
    assert_eq!(g.regions().len(), 0);
    assert_eq!(g.roots().len(), 50);
    let counted = CountedMetric::new(MetricKind::Euclidean);
    let q = Point::vector(0, vec![0.4, 0.4]);
    let report = range_search(&g, &counted, &q, 0.1).unwrap();
    assert_eq!(report.distance_count, 50);
}

#[test]
fn laesa_pivot_count_bounds() {
    let data = uniform(10, 25);
    let params = BuildParams { pivot_count: 11, ..BuildParams::with_seed(26) };
    assert!(build_laesa(&data, MetricKind::Euclidean, &params).is_err());
}

#[test]
fn laesa_filters_on_clustered_data() {
    let data = GeneratorSpec::Clusters { dim: 2, n: 400, c: 8, sigma: 0.01, seed: 27 }
        .generate()
        .unwrap()
        .points;
    let metric = MetricKind::Euclidean;
    let params = BuildParams { pivot_count: 16, ..BuildParams::with_seed(28) };
    let g = build_laesa(&data, metric, &params).unwrap();
    let counted = CountedMetric::new(metric);
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let mut total = 0u64;
    let queries = 30;
    for _ in 0..queries {
        let base = &data[rng.gen_range(0..data.len())];
        let PointPayload::Vector(v) = &base.payload else { unreachable!() };
        let q = Point::vector(0, v.iter().map(|&x| x + rng.gen_range(-0.01..0.01)).collect());
        let report = range_search(&g, &counted, &q, 0.05).unwrap();
        let mut ids = report.result_ids();
        ids.sort_unstable();
        assert_eq!(ids, oracle_range(&data, metric, &q.payload, 0.05).unwrap());
        total += report.distance_count;
    }
    let mean = total as f64 / queries as f64;
    assert!(
        mean < data.len() as f64,
        "pivot filter should beat the scan on tight clusters, got mean {mean}"
    );
}

#[test]
fn aesa_singleton_and_build_cost() {
    let data = uniform(60, 30);
    let g = build_aesa(&data, MetricKind::Euclidean, &BuildParams::with_seed(31)).unwrap();
    assert_eq!(g.build_distances(), 60 * 59 / 2);
    let single = pts(&[(0.1, 0.2)]);
    let g1 = build_aesa(&single, MetricKind::Euclidean, &BuildParams::with_seed(0)).unwrap();
    let counted = CountedMetric::new(MetricKind::Euclidean);
    let report = range_search(&g1, &counted, &Point::vector(0, vec![0.0, 0.0]), 1.0).unwrap();
    assert_eq!(report.distance_count, 1);
    assert_eq!(report.result_ids(), vec![0]);
}

#[test]
fn pm_tree_zero_pivots_equals_ball_tree() {
    let data = uniform(200, 32);
    let params = BuildParams { arity: 4, pivot_count: 0, ..BuildParams::with_seed(33) };
    let metric = MetricKind::Euclidean;
    let ball = build_ball_tree(&data, metric, &params).unwrap();
    let pm = build_pm_tree(&data, metric, &params).unwrap();
    assert_eq!(format!("{ball:?}"), format!("{pm:?}"));
}

#[test]
fn pm_tree_shells_are_tight_and_sound() {
    let data = uniform(150, 34);
    let params = BuildParams { arity: 3, pivot_count: 4, ..BuildParams::with_seed(35) };
    let metric = MetricKind::Euclidean;
    let g = build_pm_tree(&data, metric, &params).unwrap();
    // Pivot shells are the regions with negative children: check each bound
    // against the recomputed span of the subtree its target roots.
    let mut audited = 0;
    for region in g.regions() {
        if region.negative.is_empty() {
            continue;
        }
        audited += 1;
        let focus = region.ambit.foci()[0];
        let lo = -region.ambit.radii()[0];
        let hi = region.ambit.radii()[1];
        let target = region.negative[0];
        // The subtree of `target`: itself plus positive descendants.
        let mut subtree = vec![target];
        let mut stack = vec![target];
        while let Some(u) = stack.pop() {
            for &r in &g.point(u).children {
                for &v in &g.region(r).positive {
                    // Skip cross links: pm shells have no positive children.
                    subtree.push(v);
                    stack.push(v);
                }
            }
        }
        let mut true_lo = f64::INFINITY;
        let mut true_hi = 0.0f64;
        for &u in &subtree {
            let d = raw_dist(&g, focus, u);
            true_lo = true_lo.min(d);
            true_hi = true_hi.max(d);
        }
        // The stored bound covers a superset recorded at build; it must at
        // least contain the recomputed span.
        assert!(lo <= true_lo + EPSILON && true_hi <= hi + EPSILON);
    }
    assert!(audited > 0);
}

#[test]
fn vp_forest_zero_width_is_single_tree() {
    let data = uniform(200, 36);
    let params = BuildParams { shell_width: 0.0, ..BuildParams::with_seed(37) };
    let g = build_vp_forest(&data, MetricKind::Euclidean, &params).unwrap();
    assert!(
        g.regions().iter().all(|r| r.ambit.row_count() == 1),
        "zero-width shells defer nothing on continuous data"
    );
}

#[test]
fn vp_forest_links_shells_to_next_tree() {
    let data = uniform(300, 38);
    let params = BuildParams { shell_width: 0.05, ..BuildParams::with_seed(39) };
    let g = build_vp_forest(&data, MetricKind::Euclidean, &params).unwrap();
    let shells: Vec<&sprawl::sprawl::RegionNode> =
        g.regions().iter().filter(|r| r.ambit.row_count() == 2).collect();
    assert!(!shells.is_empty(), "a 5% excluded middle must defer something");
    for shell in &shells {
        assert_eq!(shell.positive.len(), 1, "each shell leads to one next-tree root");
        assert!(!shell.contained);
    }
}

struct BranchTrace<'a> {
    graph: &'a SprawlGraph,
    overlapping: Vec<RegionId>,
}

impl TraceSink for BranchTrace<'_> {
    fn region_evaluated(&mut self, region: RegionId, overlap: bool) {
        if overlap && self.graph.region(region).ambit.row_count() == 1 {
            self.overlapping.push(region);
        }
    }
}

#[test]
fn vp_forest_single_branch_property() {
    let rho = 0.05;
    let data = uniform(400, 40);
    let params = BuildParams { shell_width: rho, ..BuildParams::with_seed(41) };
    let g = build_vp_forest(&data, MetricKind::Euclidean, &params).unwrap();
    let counted = CountedMetric::new(MetricKind::Euclidean);
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut state = TraversalState::new();
    for _ in 0..60 {
        let q = Point::vector(0, vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)]);
        state.reset_for(&g);
        let mut trace = BranchTrace { graph: &g, overlapping: Vec::new() };
        range_search_in(&g, &counted, &q, 0.02, &mut state, &mut trace).unwrap();
        // Group single-row overlaps by focus: at most one of {inner, outer}
        // per vantage may overlap when s < rho.
        let mut per_focus: std::collections::HashMap<PointId, (u32, u32)> =
            std::collections::HashMap::new();
        for r in trace.overlapping {
            let region = g.region(r);
            let focus = region.ambit.foci()[0];
            let entry = per_focus.entry(focus).or_insert((0, 0));
            if region.ambit.coeffs()[0] > 0.0 {
                entry.0 += 1;
            } else {
                entry.1 += 1;
            }
        }
        for (focus, (inner, outer)) in per_focus {
            assert!(
                inner == 0 || outer == 0,
                "vantage {focus} had both inner and outer overlap with s < rho"
            );
        }
    }
}

#[test]
fn unified_dispatch_covers_every_kind() {
    let data = uniform(40, 43);
    let words = GeneratorSpec::Words { n: 40, min_len: 3, max_len: 7, seed: 44 }
        .generate()
        .unwrap()
        .points;
    for kind in IndexKind::ALL {
        let (points, metric) = if kind == IndexKind::BkTree {
            (&words, MetricKind::Levenshtein)
        } else {
            (&data, MetricKind::Euclidean)
        };
        let params = BuildParams { arity: 3, pivot_count: 5, ..BuildParams::with_seed(45) };
        let g = build_index(kind, points, metric, &params)
            .unwrap_or_else(|e| panic!("{kind}: {e}"));
        assert!(g.is_validated());
        assert_eq!(g.points().len(), 40);
    }
}

#[test]
fn vp_forest_leaf_ball_on_tiny_input() {
    let data = pts(&[(0.0, 0.0), (1.0, 0.0)]);
    let params = BuildParams { shell_width: 0.1, ..BuildParams::with_seed(0) };
    let g = build_vp_forest(&data, MetricKind::Euclidean, &params).unwrap();
    let counted = CountedMetric::new(MetricKind::Euclidean);
    let report = range_search(&g, &counted, &Point::vector(0, vec![0.5, 0.0]), 0.6).unwrap();
    let mut ids = report.result_ids();
    ids.sort_unstable();
    assert_eq!(ids, vec![0, 1]);
}
