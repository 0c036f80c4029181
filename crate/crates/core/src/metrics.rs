//! Metrics over points, with exact distance-call accounting.
//!
//! Every search and benchmark in this crate is costed in *distance
//! computations*, so the metric itself carries the counter: one
//! [`CountedMetric`] per in-flight query or benchmark run, never shared
//! between concurrent searches.

use std::cell::Cell;
use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid_input, Result};

/// Identifier of a point within a dataset: dense, contiguous `0..n`.
pub type PointId = usize;

/// The raw content of a point: a fixed-dimension vector or a byte string.
#[derive(Debug, Clone, PartialEq)]
pub enum PointPayload {
    Vector(Vec<f64>),
    Bytes(Vec<u8>),
}

impl PointPayload {
    pub fn from_str_payload(s: &str) -> Self {
        PointPayload::Bytes(s.as_bytes().to_vec())
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            PointPayload::Vector(v) => Some(v.len()),
            PointPayload::Bytes(_) => None,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            PointPayload::Vector(_) => "vector",
            PointPayload::Bytes(_) => "string",
        }
    }
}

/// A dataset element: payload plus its dense identifier.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub id: PointId,
    pub payload: PointPayload,
}

impl Point {
    pub fn vector(id: PointId, coords: Vec<f64>) -> Self {
        Point { id, payload: PointPayload::Vector(coords) }
    }

    pub fn string(id: PointId, s: &str) -> Self {
        Point { id, payload: PointPayload::from_str_payload(s) }
    }
}

/// The concrete distance functions shipped with the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    /// L2 over float vectors.
    Euclidean,
    /// L1 over float vectors.
    Manhattan,
    /// Unit-cost edit distance over byte strings.
    Levenshtein,
    /// Positional mismatch count over equal-length byte strings.
    Hamming,
}

impl MetricKind {
    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Euclidean => "l2",
            MetricKind::Manhattan => "l1",
            MetricKind::Levenshtein => "levenshtein",
            MetricKind::Hamming => "hamming",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "l2" | "euclidean" => Ok(MetricKind::Euclidean),
            "l1" | "manhattan" => Ok(MetricKind::Manhattan),
            "levenshtein" => Ok(MetricKind::Levenshtein),
            "hamming" => Ok(MetricKind::Hamming),
            other => Err(invalid_input(format!("unknown metric {other:?}"))),
        }
    }

    /// True for metrics whose values are always integers (BK-trees need this).
    pub fn is_discrete(self) -> bool {
        matches!(self, MetricKind::Levenshtein | MetricKind::Hamming)
    }

    /// True when the metric operates on vector payloads.
    pub fn is_vector(self) -> bool {
        matches!(self, MetricKind::Euclidean | MetricKind::Manhattan)
    }

    /// Evaluate the distance without touching any counter.
    ///
    /// This is the raw kernel behind [`CountedMetric::distance`]; oracles and
    /// structural audits use it directly so they never pollute query counters.
    pub fn eval(self, a: &PointPayload, b: &PointPayload) -> Result<f64> {
        match (self, a, b) {
            (MetricKind::Euclidean, PointPayload::Vector(x), PointPayload::Vector(y)) => {
                check_dims(x, y)?;
                Ok(x.iter()
                    .zip(y)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt())
            }
            (MetricKind::Manhattan, PointPayload::Vector(x), PointPayload::Vector(y)) => {
                check_dims(x, y)?;
                Ok(x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum())
            }
            (MetricKind::Levenshtein, PointPayload::Bytes(x), PointPayload::Bytes(y)) => {
                Ok(levenshtein(x, y) as f64)
            }
            (MetricKind::Hamming, PointPayload::Bytes(x), PointPayload::Bytes(y)) => {
                if x.len() != y.len() {
                    return Err(invalid_input(format!(
                        "hamming distance requires equal lengths, got {} and {}",
                        x.len(),
                        y.len()
                    )));
                }
                Ok(x.iter().zip(y).filter(|(a, b)| a != b).count() as f64)
            }
            _ => Err(invalid_input(format!(
                "metric {} cannot compare {} and {} payloads",
                self.name(),
                a.kind_name(),
                b.kind_name()
            ))),
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn check_dims(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(invalid_input(format!(
            "dimension mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    Ok(())
}

/// Unit-cost edit distance, two-row dynamic program.
fn levenshtein(a: &[u8], b: &[u8]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// A metric bundled with an exact invocation counter.
///
/// The counter is the benchmark currency: it advances by exactly one per
/// [`distance`](CountedMetric::distance) call and only resets explicitly.
/// Interior mutability keeps call sites immutable, at the cost of `!Sync`;
/// concurrent searches each own their own `CountedMetric`.
#[derive(Debug)]
pub struct CountedMetric {
    kind: MetricKind,
    calls: Cell<u64>,
}

impl CountedMetric {
    pub fn new(kind: MetricKind) -> Self {
        CountedMetric { kind, calls: Cell::new(0) }
    }

    pub fn kind(&self) -> MetricKind {
        self.kind
    }

    /// δ(u, v), counting one call.
    pub fn distance(&self, u: &Point, v: &Point) -> Result<f64> {
        self.calls.set(self.calls.get() + 1);
        self.kind.eval(&u.payload, &v.payload)
    }

    /// Same as [`distance`](Self::distance) but over bare payloads.
    pub fn distance_payload(&self, u: &PointPayload, v: &PointPayload) -> Result<f64> {
        self.calls.set(self.calls.get() + 1);
        self.kind.eval(u, v)
    }

    /// Calls since construction or the last [`reset`](Self::reset).
    pub fn calls(&self) -> u64 {
        self.calls.get()
    }

    pub fn reset(&self) {
        self.calls.set(0);
    }
}

/// Which metric axiom a sampled triple violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxiomKind {
    Symmetry,
    Identity,
    Triangle,
}

/// First violating sample found by [`check_axioms`], with the offending values.
#[derive(Debug, Clone)]
pub struct AxiomViolation {
    pub axiom: AxiomKind,
    /// Indices into the sample slice: (u, v, w); w is meaningful for Triangle.
    pub witness: (usize, usize, usize),
    pub values: Vec<f64>,
}

/// Outcome of a randomized metric-axiom audit.
#[derive(Debug, Clone)]
pub struct AxiomReport {
    pub trials: usize,
    pub violation: Option<AxiomViolation>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

/// Sample triples from `sample` and verify symmetry, identity on equal
/// payloads, and the triangle inequality within an absolute 1e-9 tolerance.
///
/// Generic over the distance function so test fixtures can audit
/// deliberately broken distances (e.g. squared Euclidean).
pub fn check_axioms<F>(dist: F, sample: &[Point], trials: usize, seed: u64) -> AxiomReport
where
    F: Fn(&Point, &Point) -> f64,
{
    const TOL: f64 = 1e-9;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = sample.len();
    assert!(n > 0, "axiom check needs a nonempty sample");
    for trial in 0..trials {
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        let k = rng.gen_range(0..n);
        let (u, v, w) = (&sample[i], &sample[j], &sample[k]);
        let duv = dist(u, v);
        let dvu = dist(v, u);
        if duv != dvu {
            return AxiomReport {
                trials: trial + 1,
                violation: Some(AxiomViolation {
                    axiom: AxiomKind::Symmetry,
                    witness: (i, j, k),
                    values: vec![duv, dvu],
                }),
            };
        }
        if u.payload == v.payload && duv != 0.0 {
            return AxiomReport {
                trials: trial + 1,
                violation: Some(AxiomViolation {
                    axiom: AxiomKind::Identity,
                    witness: (i, j, k),
                    values: vec![duv],
                }),
            };
        }
        let duw = dist(u, w);
        let dwv = dist(w, v);
        if duv > duw + dwv + TOL {
            return AxiomReport {
                trials: trial + 1,
                violation: Some(AxiomViolation {
                    axiom: AxiomKind::Triangle,
                    witness: (i, j, k),
                    values: vec![duv, duw, dwv],
                }),
            };
        }
    }
    AxiomReport { trials, violation: None }
}
