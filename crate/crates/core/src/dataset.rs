//! Dataset ingestion and synthesis: CSV/line files plus seeded generators.

use std::fmt;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid_input, Error, Result};
use crate::metrics::{Point, PointPayload};

/// A homogeneous point collection with dense ids and a provenance string
/// (file path or generator spec).
#[derive(Debug, Clone)]
pub struct Dataset {
    pub points: Vec<Point>,
    pub provenance: String,
}

impl Dataset {
    pub fn from_points(points: Vec<Point>, provenance: impl Into<String>) -> Result<Self> {
        let ds = Dataset { points, provenance: provenance.into() };
        ds.check_homogeneous()?;
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_vector(&self) -> bool {
        matches!(self.points.first(), Some(Point { payload: PointPayload::Vector(_), .. }))
    }

    pub fn dim(&self) -> Option<usize> {
        self.points.first().and_then(|p| p.payload.dim())
    }

    fn check_homogeneous(&self) -> Result<()> {
        let Some(first) = self.points.first() else { return Ok(()) };
        let dim = first.payload.dim();
        for (i, p) in self.points.iter().enumerate() {
            if p.id != i {
                return Err(invalid_input(format!("point at slot {i} has id {}", p.id)));
            }
            if p.payload.dim() != dim {
                return Err(invalid_input(format!(
                    "point {i} breaks payload homogeneity (dim {:?} vs {:?})",
                    p.payload.dim(),
                    dim
                )));
            }
        }
        Ok(())
    }

    /// Load from a file (one comma-separated vector or one string per line)
    /// or synthesize from a generator spec such as `uniform(2,1000,42)`.
    pub fn load(path_or_spec: &str, vectors: bool) -> Result<Self> {
        if GeneratorSpec::looks_like(path_or_spec) {
            GeneratorSpec::parse(path_or_spec)?.generate()
        } else if vectors {
            Self::from_vector_file(path_or_spec)
        } else {
            Self::from_string_file(path_or_spec)
        }
    }

    pub fn from_vector_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(&path)?;
        let mut points = Vec::new();
        let mut dim = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let coords: Vec<f64> = line
                .split(',')
                .map(|t| {
                    t.trim().parse::<f64>().map_err(|e| Error::Parse {
                        line: lineno + 1,
                        msg: format!("bad float {t:?}: {e}"),
                    })
                })
                .collect::<Result<_>>()?;
            if coords.iter().any(|c| !c.is_finite()) {
                return Err(Error::Parse { line: lineno + 1, msg: "non-finite coordinate".into() });
            }
            match dim {
                None => dim = Some(coords.len()),
                Some(d) if d != coords.len() => {
                    return Err(Error::Parse {
                        line: lineno + 1,
                        msg: format!("dimension {} does not match {}", coords.len(), d),
                    });
                }
                _ => {}
            }
            points.push(Point::vector(points.len(), coords));
        }
        Dataset::from_points(points, path.as_ref().display().to_string())
    }

    pub fn from_string_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(&path)?;
        let points = text
            .lines()
            .filter(|l| !l.is_empty())
            .enumerate()
            .map(|(i, l)| Point::string(i, l))
            .collect();
        Dataset::from_points(points, path.as_ref().display().to_string())
    }
}

/// Seeded synthetic datasets.
#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorSpec {
    /// `uniform(dim,n,seed)`: n points uniform in the unit cube.
    Uniform { dim: usize, n: usize, seed: u64 },
    /// `clusters(dim,n,c,sigma,seed)`: n points in c Gaussian blobs with
    /// per-coordinate deviation sigma around uniform centers.
    Clusters { dim: usize, n: usize, c: usize, sigma: f64, seed: u64 },
    /// `words(n,min_len,max_len,seed)`: n distinct lowercase pseudo-words.
    Words { n: usize, min_len: usize, max_len: usize, seed: u64 },
}

impl GeneratorSpec {
    pub fn looks_like(s: &str) -> bool {
        s.contains('(') && s.ends_with(')')
    }

    pub fn parse(s: &str) -> Result<Self> {
        let open = s.find('(').ok_or_else(|| invalid_input("generator spec needs arguments"))?;
        if !s.ends_with(')') {
            return Err(invalid_input("generator spec must end with ')'"));
        }
        let name = &s[..open];
        let args: Vec<&str> = s[open + 1..s.len() - 1].split(',').map(str::trim).collect();
        let num = |i: usize| -> Result<usize> {
            args.get(i)
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| invalid_input(format!("bad argument {i} in {s:?}")))
        };
        let float = |i: usize| -> Result<f64> {
            args.get(i)
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| invalid_input(format!("bad argument {i} in {s:?}")))
        };
        let seed = |i: usize| -> Result<u64> {
            args.get(i)
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| invalid_input(format!("bad argument {i} in {s:?}")))
        };
        match (name, args.len()) {
            ("uniform", 3) => Ok(GeneratorSpec::Uniform { dim: num(0)?, n: num(1)?, seed: seed(2)? }),
            ("clusters", 5) => Ok(GeneratorSpec::Clusters {
                dim: num(0)?,
                n: num(1)?,
                c: num(2)?,
                sigma: float(3)?,
                seed: seed(4)?,
            }),
            ("words", 4) => Ok(GeneratorSpec::Words {
                n: num(0)?,
                min_len: num(1)?,
                max_len: num(2)?,
                seed: seed(3)?,
            }),
            _ => Err(invalid_input(format!("unknown generator spec {s:?}"))),
        }
    }

    pub fn generate(&self) -> Result<Dataset> {
        let points = match *self {
            GeneratorSpec::Uniform { dim, n, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..n)
                    .map(|i| Point::vector(i, (0..dim).map(|_| rng.gen_range(0.0..1.0)).collect()))
                    .collect()
            }
            GeneratorSpec::Clusters { dim, n, c, sigma, seed } => {
                if c == 0 {
                    return Err(invalid_input("clusters generator needs c >= 1"));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let centers: Vec<Vec<f64>> = (0..c)
                    .map(|_| (0..dim).map(|_| rng.gen_range(0.0..1.0)).collect())
                    .collect();
                (0..n)
                    .map(|i| {
                        let center = &centers[rng.gen_range(0..c)];
                        let coords = center
                            .iter()
                            .map(|&m| m + sigma * standard_normal(&mut rng))
                            .collect();
                        Point::vector(i, coords)
                    })
                    .collect()
            }
            GeneratorSpec::Words { n, min_len, max_len, seed } => {
                if min_len == 0 || max_len < min_len {
                    return Err(invalid_input("words generator needs 1 <= min_len <= max_len"));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut seen = std::collections::HashSet::new();
                let mut points = Vec::with_capacity(n);
                while points.len() < n {
                    let len = rng.gen_range(min_len..=max_len);
                    let word: String =
                        (0..len).map(|_| rng.gen_range(b'a'..=b'z') as char).collect();
                    if seen.insert(word.clone()) {
                        points.push(Point::string(points.len(), &word));
                    }
                }
                points
            }
        };
        Dataset::from_points(points, self.to_string())
    }
}

impl fmt::Display for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            GeneratorSpec::Uniform { dim, n, seed } => write!(f, "uniform({dim},{n},{seed})"),
            GeneratorSpec::Clusters { dim, n, c, sigma, seed } => {
                write!(f, "clusters({dim},{n},{c},{sigma},{seed})")
            }
            GeneratorSpec::Words { n, min_len, max_len, seed } => {
                write!(f, "words({n},{min_len},{max_len},{seed})")
            }
        }
    }
}

/// Box–Muller standard normal draw.
fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
