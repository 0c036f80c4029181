//! Linear ambits: regions (and queries) defined over pivot space.
//!
//! An ambit is a coefficient matrix `A` (k rows, one per constraint; m
//! columns, one per focus) and a radius vector `r`. A point `u` with pivot
//! vector `x = [δ(u, p_1), …, δ(u, p_m)]` is a member iff `A·x ≤ r` row-wise.
//! Balls, inverted balls, shells, spheres, half-spaces, Voronoi cells,
//! ellipses and hyperbolas are all instances.
//!
//! All geometric inequalities carry a +1e-9 slack applied in the permissive
//! direction: an overlap test may claim intersection where there is none
//! (costing distance computations) but never the reverse.

use crate::error::{invalid_input, Result};
use crate::metrics::{PointId, PointPayload};
use crate::EPSILON;

/// Radius used to mean "unbounded" in stored ambits.
pub const UNBOUNDED: f64 = f64::MAX;

/// A region over pivot space: foci (parent point ids), a k×m coefficient
/// matrix in row-major order, and k radii.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearAmbit {
    foci: Vec<PointId>,
    coeffs: Vec<f64>,
    radii: Vec<f64>,
}

impl LinearAmbit {
    /// Build from raw parts. `coeffs` is row-major with `radii.len()` rows
    /// and `foci.len()` columns; every row needs at least one nonzero entry.
    pub fn new(foci: Vec<PointId>, coeffs: Vec<f64>, radii: Vec<f64>) -> Result<Self> {
        let m = foci.len();
        let k = radii.len();
        if m == 0 || k == 0 {
            return Err(invalid_input("ambit needs at least one focus and one row"));
        }
        if coeffs.len() != k * m {
            return Err(invalid_input(format!(
                "coefficient matrix has {} entries, expected {}x{}",
                coeffs.len(),
                k,
                m
            )));
        }
        for (i, row) in coeffs.chunks(m).enumerate() {
            if row.iter().all(|&a| a == 0.0) {
                return Err(invalid_input(format!("row {i} is all zeros")));
            }
        }
        Ok(LinearAmbit { foci, coeffs, radii })
    }

    /// Ball around `focus`: `x ≤ radius`.
    pub fn ball(focus: PointId, radius: f64) -> Self {
        LinearAmbit { foci: vec![focus], coeffs: vec![1.0], radii: vec![radius] }
    }

    /// Complement of a ball: `x ≥ radius`, encoded as `-x ≤ -radius`.
    pub fn inverted_ball(focus: PointId, radius: f64) -> Self {
        LinearAmbit { foci: vec![focus], coeffs: vec![-1.0], radii: vec![-radius] }
    }

    /// Shell `r_lo ≤ x ≤ r_hi` around `focus`, as the two-row column form.
    pub fn shell(focus: PointId, r_lo: f64, r_hi: f64) -> Result<Self> {
        if !(0.0 <= r_lo && r_lo <= r_hi) {
            return Err(invalid_input(format!(
                "shell bounds must satisfy 0 <= lo <= hi, got [{r_lo}, {r_hi}]"
            )));
        }
        Ok(LinearAmbit {
            foci: vec![focus],
            coeffs: vec![-1.0, 1.0],
            radii: vec![-r_lo, r_hi],
        })
    }

    /// Zero-width shell: exactly the points at distance `x` from `focus`.
    pub fn sphere(focus: PointId, x: f64) -> Result<Self> {
        Self::shell(focus, x, x)
    }

    /// Half-space of points closer to `near` than to `far`: `x_1 - x_2 ≤ 0`.
    pub fn hyperplane(near: PointId, far: PointId) -> Self {
        LinearAmbit { foci: vec![near, far], coeffs: vec![1.0, -1.0], radii: vec![0.0] }
    }

    /// Shifted half-space `x_1 - x_2 ≤ radius` (a metric hyperbola).
    pub fn hyperbola(near: PointId, far: PointId, radius: f64) -> Self {
        LinearAmbit { foci: vec![near, far], coeffs: vec![1.0, -1.0], radii: vec![radius] }
    }

    /// Generalized ellipse `x_1 + x_2 ≤ radius`.
    pub fn ellipse(f1: PointId, f2: PointId, radius: f64) -> Self {
        LinearAmbit { foci: vec![f1, f2], coeffs: vec![1.0, 1.0], radii: vec![radius] }
    }

    /// Cut region: a [lo, hi] distance band per focus, intersected.
    pub fn cut(foci: Vec<PointId>, bounds: &[(f64, f64)]) -> Result<Self> {
        let m = foci.len();
        if bounds.len() != m || m == 0 {
            return Err(invalid_input("cut region needs one bound pair per focus"));
        }
        let mut coeffs = Vec::with_capacity(2 * m * m);
        let mut radii = Vec::with_capacity(2 * m);
        for (j, &(lo, hi)) in bounds.iter().enumerate() {
            if !(0.0 <= lo && lo <= hi) {
                return Err(invalid_input(format!(
                    "cut bounds must satisfy 0 <= lo <= hi, got [{lo}, {hi}]"
                )));
            }
            let mut low_row = vec![0.0; m];
            low_row[j] = -1.0;
            coeffs.extend_from_slice(&low_row);
            radii.push(-lo);
            let mut high_row = vec![0.0; m];
            high_row[j] = 1.0;
            coeffs.extend_from_slice(&high_row);
            radii.push(hi);
        }
        Ok(LinearAmbit { foci, coeffs, radii })
    }

    /// The Voronoi cell of focus `winner` against the remaining foci:
    /// one `x_winner - x_j ≤ 0` row per competitor.
    pub fn voronoi_cell(foci: Vec<PointId>, winner: usize) -> Result<Self> {
        let m = foci.len();
        if m < 2 || winner >= m {
            return Err(invalid_input("voronoi cell needs >= 2 foci and a valid winner"));
        }
        let mut coeffs = Vec::with_capacity((m - 1) * m);
        let mut radii = Vec::with_capacity(m - 1);
        for j in 0..m {
            if j == winner {
                continue;
            }
            let mut row = vec![0.0; m];
            row[winner] = 1.0;
            row[j] = -1.0;
            coeffs.extend_from_slice(&row);
            radii.push(0.0);
        }
        Ok(LinearAmbit { foci, coeffs, radii })
    }

    pub fn foci(&self) -> &[PointId] {
        &self.foci
    }

    pub fn focus_count(&self) -> usize {
        self.foci.len()
    }

    pub fn row_count(&self) -> usize {
        self.radii.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.foci.len();
        &self.coeffs[i * m..(i + 1) * m]
    }

    /// `A·x ≤ r` row-wise, i.e. is a point with pivot vector `x` inside.
    pub fn member(&self, x: &[f64]) -> Result<bool> {
        self.check_len(x)?;
        Ok(rows_member(&self.coeffs, &self.radii, x))
    }

    /// Conservative overlap test against a ball query with pivot vector `z`
    /// and radius `s`: every row must satisfy `a·z ≤ r + ‖a‖₁·s`.
    pub fn ball_overlap(&self, z: &[f64], s: f64) -> Result<bool> {
        self.check_len(z)?;
        if s < 0.0 {
            return Err(invalid_input("query radius must be nonnegative"));
        }
        Ok(rows_ball_overlap(&self.coeffs, &self.radii, z, s))
    }

    /// Largest per-row normalized slack `(a·z - r) / ‖a‖₁`, clamped to 0.
    ///
    /// For any point `u` in the region, this is a lower bound on `δ(q, u)`
    /// when `z` is the query's pivot vector; `ball_overlap` holds exactly
    /// when this bound is ≤ `s` (up to the shared slack).
    pub fn lower_bound(&self, z: &[f64]) -> f64 {
        debug_assert_eq!(z.len(), self.foci.len());
        let m = self.foci.len();
        let mut lb: f64 = 0.0;
        for (row, &r) in self.coeffs.chunks(m).zip(&self.radii) {
            let az: f64 = row.iter().zip(z).map(|(a, zi)| a * zi).sum();
            let norm: f64 = row.iter().map(|a| a.abs()).sum();
            lb = lb.max((az - r) / norm);
        }
        lb
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.foci.len() {
            return Err(invalid_input(format!(
                "pivot vector has length {}, ambit has {} foci",
                x.len(),
                self.foci.len()
            )));
        }
        Ok(())
    }
}

pub(crate) fn rows_member(coeffs: &[f64], radii: &[f64], x: &[f64]) -> bool {
    let m = x.len();
    coeffs.chunks(m).zip(radii).all(|(row, &r)| {
        let ax: f64 = row.iter().zip(x).map(|(a, xi)| a * xi).sum();
        ax <= r + EPSILON
    })
}

pub(crate) fn rows_ball_overlap(coeffs: &[f64], radii: &[f64], z: &[f64], s: f64) -> bool {
    let m = z.len();
    coeffs.chunks(m).zip(radii).all(|(row, &r)| {
        let az: f64 = row.iter().zip(z).map(|(a, zi)| a * zi).sum();
        let norm: f64 = row.iter().map(|a| a.abs()).sum();
        az <= r + norm * s + EPSILON
    })
}

/// A query in ambit form: same geometry as [`LinearAmbit`] but anchored to
/// free-standing query objects rather than graph point nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryAmbit {
    foci: Vec<PointPayload>,
    coeffs: Vec<f64>,
    radii: Vec<f64>,
}

impl QueryAmbit {
    pub fn new(foci: Vec<PointPayload>, coeffs: Vec<f64>, radii: Vec<f64>) -> Result<Self> {
        let m = foci.len();
        let k = radii.len();
        if m == 0 || k == 0 {
            return Err(invalid_input("query ambit needs at least one focus and one row"));
        }
        if coeffs.len() != k * m {
            return Err(invalid_input(format!(
                "coefficient matrix has {} entries, expected {}x{}",
                coeffs.len(),
                k,
                m
            )));
        }
        for (i, row) in coeffs.chunks(m).enumerate() {
            if row.iter().all(|&a| a == 0.0) {
                return Err(invalid_input(format!("row {i} is all zeros")));
            }
        }
        Ok(QueryAmbit { foci, coeffs, radii })
    }

    /// The plain ball query `δ(q, u) ≤ s`.
    pub fn ball(q: PointPayload, s: f64) -> Self {
        QueryAmbit { foci: vec![q], coeffs: vec![1.0], radii: vec![s] }
    }

    /// Objects closer to `example` than to `counterexample`.
    pub fn hyperplane(example: PointPayload, counterexample: PointPayload) -> Self {
        QueryAmbit { foci: vec![example, counterexample], coeffs: vec![1.0, -1.0], radii: vec![0.0] }
    }

    /// Objects whose summed distance to the two prototypes is at most `radius`.
    pub fn ellipse(a: PointPayload, b: PointPayload, radius: f64) -> Self {
        QueryAmbit { foci: vec![a, b], coeffs: vec![1.0, 1.0], radii: vec![radius] }
    }

    pub fn foci(&self) -> &[PointPayload] {
        &self.foci
    }

    pub fn focus_count(&self) -> usize {
        self.foci.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// Is a point with query-pivot vector `x` (distances to the query foci,
    /// in focus order) part of the answer.
    pub fn member(&self, x: &[f64]) -> Result<bool> {
        if x.len() != self.foci.len() {
            return Err(invalid_input(format!(
                "pivot vector has length {}, query has {} foci",
                x.len(),
                self.foci.len()
            )));
        }
        Ok(rows_member(&self.coeffs, &self.radii, x))
    }

    /// Row value of the first constraint, used as the reported "distance"
    /// of a hit in ambit-query results.
    pub fn remoteness(&self, x: &[f64]) -> f64 {
        let m = self.foci.len();
        self.coeffs[..m].iter().zip(x).map(|(a, xi)| a * xi).sum()
    }
}

/// Cross distances between region foci and query foci:
/// `z[i][j] = δ(p_i, q_j)`, row-major, `region_foci × query_foci`.
#[derive(Debug, Clone)]
pub struct CrossDistanceMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CrossDistanceMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(invalid_input(format!(
                "cross-distance matrix has {} entries, expected {}x{}",
                data.len(),
                rows,
                cols
            )));
        }
        if data.iter().any(|&d| d < 0.0) {
            return Err(invalid_input("distances must be nonnegative"));
        }
        Ok(CrossDistanceMatrix { rows, cols, data })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }
}

/// Conservative region-vs-query overlap for arbitrary linear ambits.
///
/// Each (region row `a`, query row `c`) pair is normalized to unit 1-norm
/// (radii scaled by the same factor) and tested with `a·Z·cᵗ ≤ r + s`. The
/// bound is only valid when at least one of the two normalized rows is
/// componentwise nonnegative; other pairs are skipped, i.e. treated as
/// overlapping. Returns false only when some admissible pair separates the
/// two ambits.
pub fn general_overlap(region: &LinearAmbit, query: &QueryAmbit, z: &CrossDistanceMatrix) -> Result<bool> {
    let m = region.focus_count();
    let n = query.focus_count();
    if z.rows != m || z.cols != n {
        return Err(invalid_input(format!(
            "cross-distance matrix is {}x{}, ambits need {}x{}",
            z.rows, z.cols, m, n
        )));
    }
    for (a_row, &r) in region.coeffs.chunks(m).zip(&region.radii) {
        let a_norm: f64 = a_row.iter().map(|a| a.abs()).sum();
        let a_nonneg = a_row.iter().all(|&a| a >= 0.0);
        for (c_row, &s) in query.coeffs.chunks(n).zip(&query.radii) {
            let c_norm: f64 = c_row.iter().map(|c| c.abs()).sum();
            let c_nonneg = c_row.iter().all(|&c| c >= 0.0);
            if !a_nonneg && !c_nonneg {
                continue;
            }
            // a·Z·cᵗ with both rows scaled to unit 1-norm.
            let mut azc = 0.0;
            for (i, &ai) in a_row.iter().enumerate() {
                if ai == 0.0 {
                    continue;
                }
                for (j, &cj) in c_row.iter().enumerate() {
                    azc += ai * z.get(i, j) * cj;
                }
            }
            azc /= a_norm * c_norm;
            if azc > r / a_norm + s / c_norm + EPSILON {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
