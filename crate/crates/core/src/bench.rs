//! Benchmark harness: linear-scan oracles, seeded workloads, the bench
//! runner, and report emission. Distance computations are the primary
//! metric; wall time is informational only.

use std::io::Write;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ambit::QueryAmbit;
use crate::builders::{build_index, BuildParams, IndexKind};
use crate::dataset::Dataset;
use crate::error::{invalid_input, Error, Result};
use crate::metrics::{CountedMetric, MetricKind, Point, PointId, PointPayload};
use crate::sprawl::{
    ambit_search_in, knn_search_in, range_search_in, NoTrace, PriorityRule, SearchReport,
    SprawlGraph, TraversalState,
};

/// One query of a workload.
#[derive(Debug, Clone, PartialEq)]
pub enum WorkQuery {
    Range { payload: PointPayload, radius: f64 },
    Knn { payload: PointPayload, k: usize },
    Ambit(QueryAmbit),
}

impl WorkQuery {
    pub fn mode(&self) -> String {
        match self {
            WorkQuery::Range { radius, .. } => format!("range({radius})"),
            WorkQuery::Knn { k, .. } => format!("knn({k})"),
            WorkQuery::Ambit(q) => format!("ambit({}x{})", q.radii().len(), q.focus_count()),
        }
    }
}

/// A seeded list of queries, homogeneous with the dataset's payload kind.
#[derive(Debug, Clone)]
pub struct Workload {
    pub queries: Vec<WorkQuery>,
    pub seed: u64,
}

/// Workload shape: how many queries of each mode to generate.
#[derive(Debug, Clone)]
pub struct WorkloadSpec {
    pub range_count: usize,
    /// Target fraction of the dataset a range query returns.
    pub selectivity: f64,
    pub knn_count: usize,
    pub k: usize,
    pub hyperplane_count: usize,
    pub ellipse_count: usize,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        WorkloadSpec {
            range_count: 100,
            selectivity: 0.01,
            knn_count: 50,
            k: 10,
            hyperplane_count: 0,
            ellipse_count: 0,
        }
    }
}

impl WorkloadSpec {
    /// Parse forms like `range(100,0.01),knn(50,10),hyperplane(20),ellipse(20)`.
    pub fn parse(s: &str) -> Result<Self> {
        let mut spec = WorkloadSpec {
            range_count: 0,
            knn_count: 0,
            ..Default::default()
        };
        // Split on commas outside parentheses.
        let mut clauses = Vec::new();
        let mut depth = 0usize;
        let mut start = 0usize;
        for (i, c) in s.char_indices() {
            match c {
                '(' => depth += 1,
                ')' => depth = depth.saturating_sub(1),
                ',' if depth == 0 => {
                    clauses.push(&s[start..i]);
                    start = i + 1;
                }
                _ => {}
            }
        }
        clauses.push(&s[start..]);
        for clause in clauses {
            let joined = clause.trim();
            if joined.is_empty() {
                continue;
            }
            let open = joined
                .find('(')
                .ok_or_else(|| invalid_input(format!("bad workload clause {joined:?}")))?;
            if !joined.ends_with(')') {
                return Err(invalid_input(format!("bad workload clause {joined:?}")));
            }
            let args: Vec<&str> = joined[open + 1..joined.len() - 1].split(',').collect();
            match (&joined[..open], args.len()) {
                ("range", 2) => {
                    spec.range_count = parse_num(args[0])?;
                    spec.selectivity = parse_float(args[1])?;
                }
                ("knn", 2) => {
                    spec.knn_count = parse_num(args[0])?;
                    spec.k = parse_num(args[1])?;
                }
                ("hyperplane", 1) => spec.hyperplane_count = parse_num(args[0])?,
                ("ellipse", 1) => spec.ellipse_count = parse_num(args[0])?,
                _ => return Err(invalid_input(format!("bad workload clause {joined:?}"))),
            }
        }
        Ok(spec)
    }
}

fn parse_num(s: &str) -> Result<usize> {
    s.trim().parse().map_err(|_| invalid_input(format!("bad number {s:?}")))
}

fn parse_float(s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| invalid_input(format!("bad number {s:?}")))
}

/// Draw a query object "near" the dataset: a random point jittered per
/// coordinate (vectors) or mutated by one or two random edits (strings).
fn query_payload(data: &[Point], rng: &mut ChaCha8Rng, spread: &[f64]) -> PointPayload {
    let base = &data[rng.gen_range(0..data.len())].payload;
    match base {
        PointPayload::Vector(v) => {
            let coords = v
                .iter()
                .zip(spread)
                .map(|(&x, &s)| x + rng.gen_range(-s..=s))
                .collect();
            PointPayload::Vector(coords)
        }
        PointPayload::Bytes(b) => {
            let mut word = b.clone();
            for _ in 0..rng.gen_range(1..=2usize) {
                let c = rng.gen_range(b'a'..=b'z');
                match rng.gen_range(0..3) {
                    0 if !word.is_empty() => {
                        let i = rng.gen_range(0..word.len());
                        word[i] = c;
                    }
                    1 => {
                        let i = rng.gen_range(0..=word.len());
                        word.insert(i, c);
                    }
                    _ if word.len() > 1 => {
                        let i = rng.gen_range(0..word.len());
                        word.remove(i);
                    }
                    _ => {}
                }
            }
            PointPayload::Bytes(word)
        }
    }
}

/// Per-dimension jitter scale: 5% of the coordinate spread.
fn spread_of(data: &[Point]) -> Vec<f64> {
    let Some(PointPayload::Vector(first)) = data.first().map(|p| &p.payload) else {
        return Vec::new();
    };
    let dim = first.len();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for p in data {
        if let PointPayload::Vector(v) = &p.payload {
            for j in 0..dim {
                lo[j] = lo[j].min(v[j]);
                hi[j] = hi[j].max(v[j]);
            }
        }
    }
    lo.iter().zip(&hi).map(|(&l, &h)| 0.05 * (h - l).max(f64::MIN_POSITIVE)).collect()
}

/// The empirical distance quantile hitting the target selectivity, pooled
/// over every (query, data point) pair.
fn calibrate_radius<F>(pool_size: usize, selectivity: f64, mut dist_at: F) -> f64
where
    F: FnMut(usize) -> f64,
{
    let mut pool: Vec<f64> = (0..pool_size).map(&mut dist_at).collect();
    pool.sort_by(f64::total_cmp);
    let idx = ((pool.len() as f64 * selectivity) as usize).min(pool.len().saturating_sub(1));
    pool[idx]
}

/// Generate a seeded workload over `data`, calibrating radii by sampling.
pub fn generate_workload(
    data: &Dataset,
    metric: MetricKind,
    spec: &WorkloadSpec,
    seed: u64,
) -> Result<Workload> {
    if data.is_empty() {
        return Err(invalid_input("cannot build a workload over an empty dataset"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spread = spread_of(&data.points);
    let mut queries = Vec::new();

    if spec.range_count > 0 {
        let payloads: Vec<PointPayload> =
            (0..spec.range_count).map(|_| query_payload(&data.points, &mut rng, &spread)).collect();
        let n = data.len();
        let radius = calibrate_radius(payloads.len() * n, spec.selectivity, |i| {
            metric
                .eval(&payloads[i / n], &data.points[i % n].payload)
                .unwrap_or(f64::INFINITY)
        });
        for payload in payloads {
            queries.push(WorkQuery::Range { payload, radius });
        }
    }
    for _ in 0..spec.knn_count {
        let payload = query_payload(&data.points, &mut rng, &spread);
        queries.push(WorkQuery::Knn { payload, k: spec.k });
    }
    for _ in 0..spec.hyperplane_count {
        let a = query_payload(&data.points, &mut rng, &spread);
        let b = query_payload(&data.points, &mut rng, &spread);
        queries.push(WorkQuery::Ambit(QueryAmbit::hyperplane(a, b)));
    }
    if spec.ellipse_count > 0 {
        let pairs: Vec<(PointPayload, PointPayload)> = (0..spec.ellipse_count)
            .map(|_| {
                (
                    query_payload(&data.points, &mut rng, &spread),
                    query_payload(&data.points, &mut rng, &spread),
                )
            })
            .collect();
        let n = data.len();
        let radius = calibrate_radius(pairs.len() * n, spec.selectivity, |i| {
            let (a, b) = &pairs[i / n];
            let u = &data.points[i % n].payload;
            metric.eval(a, u).unwrap_or(f64::INFINITY) + metric.eval(b, u).unwrap_or(f64::INFINITY)
        });
        for (a, b) in pairs {
            queries.push(WorkQuery::Ambit(QueryAmbit::ellipse(a, b, radius)));
        }
    }
    Ok(Workload { queries, seed })
}

/// Ground truth by exhaustive scan: ids with `δ(q, u) ≤ s`, ascending id.
pub fn oracle_range(data: &[Point], metric: MetricKind, q: &PointPayload, s: f64) -> Result<Vec<PointId>> {
    let mut out = Vec::new();
    for p in data {
        if metric.eval(q, &p.payload)? <= s {
            out.push(p.id);
        }
    }
    Ok(out)
}

/// Ground truth top-k by exhaustive scan, sorted by (distance, id).
pub fn oracle_knn(
    data: &[Point],
    metric: MetricKind,
    q: &PointPayload,
    k: usize,
) -> Result<Vec<(PointId, f64)>> {
    let mut all: Vec<(PointId, f64)> = data
        .iter()
        .map(|p| Ok((p.id, metric.eval(q, &p.payload)?)))
        .collect::<Result<_>>()?;
    all.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    all.truncate(k);
    Ok(all)
}

/// Ground truth for an ambit query: ids whose query-pivot vector is a member.
pub fn oracle_ambit(data: &[Point], metric: MetricKind, q: &QueryAmbit) -> Result<Vec<PointId>> {
    let mut out = Vec::new();
    for p in data {
        let x: Vec<f64> = q
            .foci()
            .iter()
            .map(|f| metric.eval(f, &p.payload))
            .collect::<Result<_>>()?;
        if q.member(&x)? {
            out.push(p.id);
        }
    }
    Ok(out)
}

/// Does a search report agree with the oracle for this query?
pub fn verify_report(
    data: &[Point],
    metric: MetricKind,
    query: &WorkQuery,
    report: &SearchReport,
) -> Result<bool> {
    match query {
        WorkQuery::Range { payload, radius } => {
            let mut got = report.result_ids();
            got.sort_unstable();
            Ok(got == oracle_range(data, metric, payload, *radius)?)
        }
        WorkQuery::Knn { payload, k } => {
            let expected = oracle_knn(data, metric, payload, *k)?;
            if report.results.len() != expected.len() {
                return Ok(false);
            }
            // Distance multisets must agree exactly; the id tie-break makes
            // the id sequences comparable too.
            Ok(report
                .results
                .iter()
                .zip(&expected)
                .all(|(hit, &(id, d))| hit.id == id && hit.value == d))
        }
        WorkQuery::Ambit(q) => {
            let mut got = report.result_ids();
            got.sort_unstable();
            Ok(got == oracle_ambit(data, metric, q)?)
        }
    }
}

/// One benchmark measurement: a (builder, query) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub builder: String,
    pub params: String,
    pub query: usize,
    pub mode: String,
    pub result_size: usize,
    pub distance_count: u64,
    pub build_distances: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub correct: Option<bool>,
    pub wall_time_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

/// Run every query of the workload against the graph, one record per query.
pub fn run_queries(
    graph: &SprawlGraph,
    data: &[Point],
    workload: &Workload,
    builder_name: &str,
    params_desc: &str,
    verify: bool,
) -> Vec<BenchRecord> {
    let metric = CountedMetric::new(graph.metric());
    let mut state = TraversalState::new();
    state.reset_for(graph);
    let mut records = Vec::with_capacity(workload.queries.len());
    for (qi, query) in workload.queries.iter().enumerate() {
        state.reset();
        metric.reset();
        let started = Instant::now();
        let outcome = match query {
            WorkQuery::Range { payload, radius } => {
                let q = Point { id: 0, payload: payload.clone() };
                range_search_in(graph, &metric, &q, *radius, &mut state, &mut NoTrace)
            }
            WorkQuery::Knn { payload, k } => {
                let q = Point { id: 0, payload: payload.clone() };
                knn_search_in(graph, &metric, &q, *k, PriorityRule::LowerBound, &mut state, &mut NoTrace)
            }
            WorkQuery::Ambit(q) => ambit_search_in(graph, &metric, q, &mut state, &mut NoTrace),
        };
        let wall_time_ms = started.elapsed().as_secs_f64() * 1e3;
        let mut record = BenchRecord {
            builder: builder_name.to_string(),
            params: params_desc.to_string(),
            query: qi,
            mode: query.mode(),
            result_size: 0,
            distance_count: 0,
            build_distances: graph.build_distances(),
            correct: None,
            wall_time_ms,
            error: None,
        };
        match outcome {
            Ok(report) => {
                record.result_size = report.results.len();
                record.distance_count = report.distance_count;
                if verify {
                    record.correct = match verify_report(data, graph.metric(), query, &report) {
                        Ok(ok) => Some(ok),
                        Err(e) => {
                            record.error = Some(e.to_string());
                            Some(false)
                        }
                    };
                }
            }
            Err(e) => {
                record.error = Some(e.to_string());
                if verify {
                    record.correct = Some(false);
                }
            }
        }
        records.push(record);
    }
    records
}

/// Build each configured index over the dataset and run the workload;
/// failures are recorded per record and the run continues.
pub fn run_bench(
    data: &Dataset,
    metric: MetricKind,
    configs: &[(IndexKind, BuildParams)],
    workload: &Workload,
    verify: bool,
) -> Vec<BenchRecord> {
    let mut records = Vec::new();
    for (kind, params) in configs {
        match build_index(*kind, &data.points, metric, params) {
            Ok(graph) => {
                records.extend(run_queries(
                    &graph,
                    &data.points,
                    workload,
                    kind.name(),
                    &params.describe(),
                    verify,
                ));
            }
            Err(e) => {
                records.push(BenchRecord {
                    builder: kind.name().to_string(),
                    params: params.describe(),
                    query: 0,
                    mode: "build".to_string(),
                    result_size: 0,
                    distance_count: 0,
                    build_distances: 0,
                    correct: if verify { Some(false) } else { None },
                    wall_time_ms: 0.0,
                    error: Some(e.to_string()),
                });
            }
        }
    }
    records
}

/// Per-builder distance-count aggregates appended to every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub builder: String,
    pub queries: usize,
    pub mean_distances: f64,
    pub median_distances: f64,
}

pub fn summarize(records: &[BenchRecord]) -> Vec<SummaryRow> {
    let mut order: Vec<&str> = Vec::new();
    for r in records {
        if !order.contains(&r.builder.as_str()) {
            order.push(&r.builder);
        }
    }
    order
        .into_iter()
        .map(|name| {
            let mut counts: Vec<u64> = records
                .iter()
                .filter(|r| r.builder == name && r.error.is_none())
                .map(|r| r.distance_count)
                .collect();
            counts.sort_unstable();
            let n = counts.len();
            let mean = if n == 0 {
                0.0
            } else {
                counts.iter().sum::<u64>() as f64 / n as f64
            };
            let median = match n {
                0 => 0.0,
                _ if n % 2 == 1 => counts[n / 2] as f64,
                _ => (counts[n / 2 - 1] + counts[n / 2]) as f64 / 2.0,
            };
            SummaryRow {
                builder: name.to_string(),
                queries: n,
                mean_distances: mean,
                median_distances: median,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Jsonl,
    Csv,
}

impl ReportFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(ReportFormat::Jsonl),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(invalid_input(format!("unknown report format {other:?}"))),
        }
    }
}

const CSV_HEADER: &str =
    "builder,params,query,mode,result_size,distance_count,build_distances,correct,wall_time_ms,error";

/// Write records in the chosen format, followed by the summary block.
pub fn emit_report<W: Write>(records: &[BenchRecord], format: ReportFormat, out: &mut W) -> Result<()> {
    let summary = summarize(records);
    match format {
        ReportFormat::Jsonl => {
            for r in records {
                let line = serde_json::to_string(r)
                    .map_err(|e| Error::InvalidInput(format!("serialize record: {e}")))?;
                writeln!(out, "{line}")?;
            }
            for s in &summary {
                let line = serde_json::to_string(&serde_json::json!({ "summary": s }))
                    .map_err(|e| Error::InvalidInput(format!("serialize summary: {e}")))?;
                writeln!(out, "{line}")?;
            }
        }
        ReportFormat::Csv => {
            writeln!(out, "{CSV_HEADER}")?;
            for r in records {
                debug_assert!(!r.mode.contains(','));
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{}",
                    r.builder,
                    r.params,
                    r.query,
                    r.mode,
                    r.result_size,
                    r.distance_count,
                    r.build_distances,
                    r.correct.map_or(String::new(), |c| c.to_string()),
                    r.wall_time_ms,
                    r.error.as_deref().unwrap_or("").replace(',', ";"),
                )?;
            }
            for s in &summary {
                writeln!(
                    out,
                    "# summary,{},{},{},{}",
                    s.builder, s.queries, s.mean_distances, s.median_distances
                )?;
            }
        }
    }
    Ok(())
}

/// Parse a report back into records (summary lines are skipped).
pub fn parse_report(text: &str, format: ReportFormat) -> Result<Vec<BenchRecord>> {
    let mut records = Vec::new();
    match format {
        ReportFormat::Jsonl => {
            for (lineno, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let value: serde_json::Value =
                    serde_json::from_str(line).map_err(|e| Error::Parse {
                        line: lineno + 1,
                        msg: e.to_string(),
                    })?;
                if value.get("summary").is_some() {
                    continue;
                }
                let record: BenchRecord =
                    serde_json::from_value(value).map_err(|e| Error::Parse {
                        line: lineno + 1,
                        msg: e.to_string(),
                    })?;
                records.push(record);
            }
        }
        ReportFormat::Csv => {
            for (lineno, line) in text.lines().enumerate() {
                if lineno == 0 || line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let cols: Vec<&str> = line.split(',').collect();
                if cols.len() != 10 {
                    return Err(Error::Parse {
                        line: lineno + 1,
                        msg: format!("expected 10 columns, got {}", cols.len()),
                    });
                }
                let parse_err = |msg: String| Error::Parse { line: lineno + 1, msg };
                records.push(BenchRecord {
                    builder: cols[0].to_string(),
                    params: cols[1].to_string(),
                    query: cols[2].parse().map_err(|e| parse_err(format!("query: {e}")))?,
                    mode: cols[3].to_string(),
                    result_size: cols[4]
                        .parse()
                        .map_err(|e| parse_err(format!("result_size: {e}")))?,
                    distance_count: cols[5]
                        .parse()
                        .map_err(|e| parse_err(format!("distance_count: {e}")))?,
                    build_distances: cols[6]
                        .parse()
                        .map_err(|e| parse_err(format!("build_distances: {e}")))?,
                    correct: match cols[7] {
                        "" => None,
                        "true" => Some(true),
                        "false" => Some(false),
                        other => return Err(parse_err(format!("correct: {other:?}"))),
                    },
                    wall_time_ms: cols[8]
                        .parse()
                        .map_err(|e| parse_err(format!("wall_time_ms: {e}")))?,
                    error: if cols[9].is_empty() { None } else { Some(cols[9].to_string()) },
                });
            }
        }
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::GeneratorSpec;

    fn tiny_data() -> Dataset {
        Dataset::from_points(
            vec![
                Point::vector(0, vec![0.0, 0.0]),
                Point::vector(1, vec![1.0, 0.0]),
                Point::vector(2, vec![2.0, 0.0]),
                Point::vector(3, vec![3.0, 0.0]),
            ],
            "fixture",
        )
        .unwrap()
    }

    #[test]
    fn oracle_range_trivia() {
        let data = tiny_data();
        let q = PointPayload::Vector(vec![0.0, 0.0]);
        // s = 0 returns exactly the coincident points.
        assert_eq!(oracle_range(&data.points, MetricKind::Euclidean, &q, 0.0).unwrap(), vec![0]);
        // An effectively unbounded radius returns everything.
        assert_eq!(
            oracle_range(&data.points, MetricKind::Euclidean, &q, f64::MAX).unwrap(),
            vec![0, 1, 2, 3]
        );
    }

    #[test]
    fn oracle_knn_takes_closest_by_distance_then_id() {
        let data = tiny_data();
        let q = PointPayload::Vector(vec![0.9, 0.0]);
        let top = oracle_knn(&data.points, MetricKind::Euclidean, &q, 2).unwrap();
        assert_eq!(top.iter().map(|&(id, _)| id).collect::<Vec<_>>(), vec![1, 0]);
        let all = oracle_knn(&data.points, MetricKind::Euclidean, &q, 10).unwrap();
        assert_eq!(all.len(), 4);
    }

    #[test]
    fn linear_scan_costs_exactly_n() {
        let data = GeneratorSpec::Uniform { dim: 2, n: 120, seed: 3 }.generate().unwrap();
        let workload = generate_workload(
            &data,
            MetricKind::Euclidean,
            &WorkloadSpec { range_count: 5, knn_count: 5, ..Default::default() },
            9,
        )
        .unwrap();
        let records = run_bench(
            &data,
            MetricKind::Euclidean,
            &[(IndexKind::Linear, BuildParams::with_seed(0))],
            &workload,
            true,
        );
        assert_eq!(records.len(), 10);
        for r in &records {
            assert_eq!(r.distance_count, 120);
            assert_eq!(r.correct, Some(true));
            assert!(r.error.is_none());
        }
    }

    #[test]
    fn failed_builds_are_recorded_not_fatal() {
        let data = GeneratorSpec::Uniform { dim: 2, n: 30, seed: 4 }.generate().unwrap();
        let workload = generate_workload(
            &data,
            MetricKind::Euclidean,
            &WorkloadSpec { range_count: 2, knn_count: 0, ..Default::default() },
            1,
        )
        .unwrap();
        // bk-tree rejects continuous metrics; the run must continue.
        let records = run_bench(
            &data,
            MetricKind::Euclidean,
            &[
                (IndexKind::BkTree, BuildParams::with_seed(0)),
                (IndexKind::Linear, BuildParams::with_seed(0)),
            ],
            &workload,
            false,
        );
        assert_eq!(records.len(), 3);
        assert!(records[0].error.is_some());
        assert!(records[1].error.is_none());
    }

    #[test]
    fn report_round_trip_both_formats() {
        let data = GeneratorSpec::Uniform { dim: 2, n: 60, seed: 5 }.generate().unwrap();
        let workload = generate_workload(
            &data,
            MetricKind::Euclidean,
            &WorkloadSpec { range_count: 3, knn_count: 2, ..Default::default() },
            2,
        )
        .unwrap();
        let records = run_bench(
            &data,
            MetricKind::Euclidean,
            &[(IndexKind::VpTree, BuildParams::with_seed(1))],
            &workload,
            true,
        );
        for format in [ReportFormat::Jsonl, ReportFormat::Csv] {
            let mut buf = Vec::new();
            emit_report(&records, format, &mut buf).unwrap();
            let parsed = parse_report(std::str::from_utf8(&buf).unwrap(), format).unwrap();
            assert_eq!(parsed, records);
        }
    }

    #[test]
    fn empty_report_has_summary_only() {
        let mut buf = Vec::new();
        emit_report(&[], ReportFormat::Jsonl, &mut buf).unwrap();
        assert!(buf.is_empty());
        let parsed = parse_report("", ReportFormat::Jsonl).unwrap();
        assert!(parsed.is_empty());
    }

    #[test]
    fn summary_mean_matches_recomputation() {
        let data = GeneratorSpec::Uniform { dim: 2, n: 90, seed: 6 }.generate().unwrap();
        let workload = generate_workload(
            &data,
            MetricKind::Euclidean,
            &WorkloadSpec { range_count: 7, knn_count: 0, ..Default::default() },
            3,
        )
        .unwrap();
        let records = run_bench(
            &data,
            MetricKind::Euclidean,
            &[(IndexKind::BallTree, BuildParams { arity: 3, ..BuildParams::with_seed(2) })],
            &workload,
            false,
        );
        let summary = summarize(&records);
        assert_eq!(summary.len(), 1);
        let mean =
            records.iter().map(|r| r.distance_count).sum::<u64>() as f64 / records.len() as f64;
        assert_eq!(summary[0].mean_distances, mean);
        assert_eq!(summary[0].queries, 7);
    }

    #[test]
    fn workload_spec_parsing() {
        let spec = WorkloadSpec::parse("range(100,0.01),knn(50,10),hyperplane(5),ellipse(4)").unwrap();
        assert_eq!(spec.range_count, 100);
        assert_eq!(spec.selectivity, 0.01);
        assert_eq!(spec.knn_count, 50);
        assert_eq!(spec.k, 10);
        assert_eq!(spec.hyperplane_count, 5);
        assert_eq!(spec.ellipse_count, 4);
        assert!(WorkloadSpec::parse("range(100)").is_err());
        assert!(WorkloadSpec::parse("nope(1,2)").is_err());
    }

    #[test]
    fn workloads_are_seed_deterministic() {
        let data = GeneratorSpec::Clusters { dim: 2, n: 150, c: 4, sigma: 0.05, seed: 8 }
            .generate()
            .unwrap();
        let spec = WorkloadSpec { range_count: 6, knn_count: 4, hyperplane_count: 2, ellipse_count: 2, ..Default::default() };
        let a = generate_workload(&data, MetricKind::Euclidean, &spec, 11).unwrap();
        let b = generate_workload(&data, MetricKind::Euclidean, &spec, 11).unwrap();
        assert_eq!(a.queries, b.queries);
        let c = generate_workload(&data, MetricKind::Euclidean, &spec, 12).unwrap();
        assert_ne!(a.queries, c.queries);
    }

    #[test]
    fn calibrated_selectivity_is_roughly_hit() {
        let data = GeneratorSpec::Uniform { dim: 2, n: 500, seed: 9 }.generate().unwrap();
        let spec = WorkloadSpec { range_count: 40, knn_count: 0, selectivity: 0.01, ..Default::default() };
        let workload = generate_workload(&data, MetricKind::Euclidean, &spec, 13).unwrap();
        let mut total = 0usize;
        for q in &workload.queries {
            if let WorkQuery::Range { payload, radius } = q {
                total += oracle_range(&data.points, MetricKind::Euclidean, payload, *radius)
                    .unwrap()
                    .len();
            }
        }
        let mean = total as f64 / 40.0;
        let target = 0.01 * 500.0;
        assert!(
            mean > target * 0.3 && mean < target * 3.0,
            "mean selectivity {mean} too far from target {target}"
        );
    }
}
