//! Benchmark CLI: build, persist, query, validate, and benchmark metric
//! indexes, reporting exact distance-computation counts.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sprawl::ambit::QueryAmbit;
use sprawl::bench::{
    emit_report, generate_workload, run_bench, summarize, verify_report, ReportFormat, WorkQuery,
    WorkloadSpec,
};
use sprawl::builders::{build_index, BuildParams, IndexKind, LaesaMode};
use sprawl::dataset::Dataset;
use sprawl::io::{load_index_file, save_index_file};
use sprawl::metrics::{CountedMetric, MetricKind, Point, PointPayload};
use sprawl::sprawl::{
    ambit_search, knn_search, range_search, PriorityRule, SearchReport, SprawlGraph,
};

#[derive(Parser)]
#[command(name = "sprawl", version, about = "Exact metric-index benchmarks over sprawls of ambits")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build an index over a dataset and write it to a file.
    Build(BuildArgs),
    /// Run one query against a saved index.
    Query(QueryArgs),
    /// Benchmark several index kinds over a generated workload.
    Bench(BenchArgs),
    /// Structurally validate a saved index.
    Validate(ValidateArgs),
}

#[derive(Args, Clone)]
struct ParamArgs {
    /// Fanout for multiway trees.
    #[arg(long, default_value_t = 2)]
    arity: usize,
    /// Leaf capacity: subtrees this small become direct children.
    #[arg(long = "leaf-cap", default_value_t = 1)]
    leaf_cap: usize,
    /// Pivot count for laesa / pm-tree / piaesa preselection.
    #[arg(long, default_value_t = 8)]
    pivots: usize,
    /// Excluded-middle half-width for the vp-forest.
    #[arg(long, default_value_t = 0.05)]
    rho: f64,
    /// Construction seed; fully determines the build.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Candidate heuristic for the full-matrix family: lb_sum | lb_max.
    #[arg(long, default_value = "lb_sum")]
    heuristic: String,
    /// laesa wiring: eliminate | discover.
    #[arg(long = "laesa-mode", default_value = "eliminate")]
    laesa_mode: String,
    /// Preselected-pivot visits before classic full-matrix selection.
    #[arg(long = "piaesa-switch", default_value_t = 0)]
    piaesa_switch: usize,
    /// Use the shared median radius on both vp branches instead of tight radii.
    #[arg(long = "loose-vp")]
    loose_vp: bool,
}

impl ParamArgs {
    fn to_params(&self) -> Result<BuildParams, sprawl::Error> {
        Ok(BuildParams {
            arity: self.arity,
            leaf_capacity: self.leaf_cap,
            pivot_count: self.pivots,
            shell_width: self.rho,
            seed: self.seed,
            heuristic: sprawl::sprawl::AesaHeuristic::parse(&self.heuristic)?,
            laesa_mode: LaesaMode::parse(&self.laesa_mode)?,
            piaesa_switch: self.piaesa_switch,
            vp_tight: !self.loose_vp,
        })
    }
}

#[derive(Args)]
struct BuildArgs {
    /// Index kind (linear, bs-tree, ball-tree, vp-tree, bk-tree, gnat,
    /// gh-tree, m-tree, laesa, aesa, pm-tree, vp-forest).
    #[arg(long)]
    index: String,
    /// Dataset file (csv vectors / one string per line) or generator spec
    /// like uniform(2,1000,42), clusters(2,1000,10,0.02,42), words(500,3,8,42).
    #[arg(long)]
    data: String,
    /// Metric: l2, l1, levenshtein, hamming.
    #[arg(long, default_value = "l2")]
    metric: String,
    #[command(flatten)]
    params: ParamArgs,
    /// Output index file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct QueryArgs {
    /// Saved index file.
    #[arg(long = "in")]
    input: PathBuf,
    /// range | knn | ambit.
    #[arg(long)]
    mode: String,
    /// Search radius (range mode).
    #[arg(long)]
    radius: Option<f64>,
    /// Neighbor count (knn mode).
    #[arg(short, long)]
    k: Option<usize>,
    /// Query payload: comma-separated floats or a raw string.
    #[arg(long)]
    query: Option<String>,
    /// Ambit query spec: ball:<q>:<s> | hyperplane:<q>:<q'> | ellipse:<q>:<q'>:<r>.
    #[arg(long = "query-spec")]
    query_spec: Option<String>,
    /// Check the result against a linear scan of the stored points.
    #[arg(long)]
    verify: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated index kinds.
    #[arg(long)]
    indexes: String,
    /// Dataset file or generator spec.
    #[arg(long)]
    data: String,
    #[arg(long, default_value = "l2")]
    metric: String,
    /// Workload spec, e.g. range(100,0.01),knn(50,10),hyperplane(20).
    #[arg(long, default_value = "range(100,0.01),knn(50,10)")]
    workload: String,
    /// Seed for query generation (independent of the build seed).
    #[arg(long = "workload-seed", default_value_t = 1)]
    workload_seed: u64,
    #[command(flatten)]
    params: ParamArgs,
    /// Verify every record against the linear-scan oracle.
    #[arg(long)]
    verify: bool,
    /// Report destination (stdout if omitted).
    #[arg(long)]
    report: Option<PathBuf>,
    /// jsonl | csv.
    #[arg(long, default_value = "jsonl")]
    format: String,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long = "in")]
    input: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(ok) => {
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<bool, sprawl::Error> {
    match cli.cmd {
        Cmd::Build(args) => {
            let kind = IndexKind::parse(&args.index)?;
            let metric = MetricKind::parse(&args.metric)?;
            let data = Dataset::load(&args.data, metric.is_vector())?;
            let params = args.params.to_params()?;
            let graph = build_index(kind, &data.points, metric, &params)?;
            save_index_file(&graph, &args.out)?;
            println!(
                "built {kind} over {} points ({} regions, {} build distances) -> {}",
                graph.points().len(),
                graph.regions().len(),
                graph.build_distances(),
                args.out.display()
            );
            Ok(true)
        }
        Cmd::Query(args) => {
            let mut graph = load_index_file(&args.input)?;
            let report = graph.validate();
            if !report.passed() {
                return Err(sprawl::Error::InvalidState(format!(
                    "index failed validation with {} issues",
                    report.issues.len()
                )));
            }
            query_cmd(&graph, &args)
        }
        Cmd::Bench(args) => bench_cmd(&args),
        Cmd::Validate(args) => {
            let mut graph = load_index_file(&args.input)?;
            let report = graph.validate();
            for issue in &report.issues {
                println!("issue: {issue}");
            }
            println!(
                "validate: {} ({} points, {} regions, containment {})",
                if report.passed() { "pass" } else { "FAIL" },
                graph.points().len(),
                graph.regions().len(),
                if report.containment_audited { "audited" } else { "skipped" },
            );
            Ok(report.passed())
        }
    }
}

fn parse_payload(s: &str, vectors: bool) -> Result<PointPayload, sprawl::Error> {
    if vectors {
        let coords = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|e| sprawl::Error::InvalidInput(format!("bad coordinate {t:?}: {e}")))
            })
            .collect::<Result<Vec<f64>, _>>()?;
        Ok(PointPayload::Vector(coords))
    } else {
        Ok(PointPayload::from_str_payload(s))
    }
}

fn parse_query_spec(s: &str, vectors: bool) -> Result<QueryAmbit, sprawl::Error> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        ["ball", q, r] => {
            let radius = r
                .parse::<f64>()
                .map_err(|e| sprawl::Error::InvalidInput(format!("bad radius {r:?}: {e}")))?;
            Ok(QueryAmbit::ball(parse_payload(q, vectors)?, radius))
        }
        ["hyperplane", q, counter] => Ok(QueryAmbit::hyperplane(
            parse_payload(q, vectors)?,
            parse_payload(counter, vectors)?,
        )),
        ["ellipse", a, b, r] => {
            let radius = r
                .parse::<f64>()
                .map_err(|e| sprawl::Error::InvalidInput(format!("bad radius {r:?}: {e}")))?;
            Ok(QueryAmbit::ellipse(
                parse_payload(a, vectors)?,
                parse_payload(b, vectors)?,
                radius,
            ))
        }
        _ => Err(sprawl::Error::InvalidInput(format!(
            "query spec {s:?} is not ball:<q>:<s>, hyperplane:<q>:<q'>, or ellipse:<q>:<q'>:<r>"
        ))),
    }
}

fn query_cmd(graph: &SprawlGraph, args: &QueryArgs) -> Result<bool, sprawl::Error> {
    let metric = CountedMetric::new(graph.metric());
    let vectors = graph.metric().is_vector();
    let data: Vec<Point> = graph.points().iter().map(|n| n.point.clone()).collect();
    let (report, work): (SearchReport, WorkQuery) = match args.mode.as_str() {
        "range" => {
            let radius = args
                .radius
                .ok_or_else(|| sprawl::Error::InvalidInput("range mode needs --radius".into()))?;
            let payload = parse_payload(
                args.query.as_deref().ok_or_else(|| {
                    sprawl::Error::InvalidInput("range mode needs --query".into())
                })?,
                vectors,
            )?;
            let q = Point { id: 0, payload: payload.clone() };
            (
                range_search(graph, &metric, &q, radius)?,
                WorkQuery::Range { payload, radius },
            )
        }
        "knn" => {
            let k = args
                .k
                .ok_or_else(|| sprawl::Error::InvalidInput("knn mode needs -k".into()))?;
            let payload = parse_payload(
                args.query.as_deref().ok_or_else(|| {
                    sprawl::Error::InvalidInput("knn mode needs --query".into())
                })?,
                vectors,
            )?;
            let q = Point { id: 0, payload: payload.clone() };
            (
                knn_search(graph, &metric, &q, k, PriorityRule::LowerBound)?,
                WorkQuery::Knn { payload, k },
            )
        }
        "ambit" => {
            let spec = args.query_spec.as_deref().ok_or_else(|| {
                sprawl::Error::InvalidInput("ambit mode needs --query-spec".into())
            })?;
            let query = parse_query_spec(spec, vectors)?;
            (
                ambit_search(graph, &metric, &query)?,
                WorkQuery::Ambit(query),
            )
        }
        other => {
            return Err(sprawl::Error::InvalidInput(format!(
                "unknown mode {other:?} (range | knn | ambit)"
            )))
        }
    };
    for hit in &report.results {
        println!("{}\t{}", hit.id, hit.value);
    }
    println!(
        "# {} results, {} distances, {} regions checked, {} pruned, {} eliminated",
        report.results.len(),
        report.distance_count,
        report.regions_checked,
        report.regions_pruned,
        report.points_eliminated
    );
    if args.verify {
        let ok = verify_report(&data, graph.metric(), &work, &report)?;
        println!("# verify: {}", if ok { "ok" } else { "MISMATCH" });
        return Ok(ok);
    }
    Ok(true)
}

fn bench_cmd(args: &BenchArgs) -> Result<bool, sprawl::Error> {
    let metric = MetricKind::parse(&args.metric)?;
    let data = Dataset::load(&args.data, metric.is_vector())?;
    let params = args.params.to_params()?;
    let configs: Vec<(IndexKind, BuildParams)> = args
        .indexes
        .split(',')
        .map(|name| IndexKind::parse(name.trim()).map(|k| (k, params.clone())))
        .collect::<Result<_, _>>()?;
    let spec = WorkloadSpec::parse(&args.workload)?;
    let workload = generate_workload(&data, metric, &spec, args.workload_seed)?;
    let records = run_bench(&data, metric, &configs, &workload, args.verify);
    let format = ReportFormat::parse(&args.format)?;
    match &args.report {
        Some(path) => {
            let mut file = std::fs::File::create(path)?;
            emit_report(&records, format, &mut file)?;
        }
        None => {
            let mut out = std::io::stdout();
            emit_report(&records, format, &mut out)?;
        }
    }
    for row in summarize(&records) {
        eprintln!(
            "# {}: {} queries, mean {:.1} / median {:.1} distances",
            row.builder, row.queries, row.mean_distances, row.median_distances
        );
    }
    let failures = records
        .iter()
        .filter(|r| r.error.is_some() || r.correct == Some(false))
        .count();
    if failures > 0 {
        eprintln!("# {failures} records failed");
    }
    Ok(failures == 0)
}
