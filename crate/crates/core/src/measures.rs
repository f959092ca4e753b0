//! Discrete measures, cost construction, and measure transformations.
//!
//! A [`DiscreteMeasure`] is a finite set of support points in `R^d` with
//! nonnegative weights on the probability simplex. Weights within `1e-9` of
//! summing to one are silently renormalized (CSV round-off); anything further
//! off is a construction error. Duplicate support points are allowed and never
//! merged, so sample provenance survives transformations.
//!
//! All types here are immutable after construction and safe to share across
//! threads.

use crate::error::{Error, Result};
use std::io::BufRead;
use std::path::Path;

/// Tolerated drift of a weight vector from the simplex before construction fails.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Discrete probability measure: `n` support points in `R^d` with simplex weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Build a measure from points and weights.
    ///
    /// Weights must be nonnegative (tiny negative round-off below `1e-12` is
    /// clamped to zero) and sum to 1 within [`SIMPLEX_TOL`]; they are then
    /// renormalized to sum to 1 exactly.
    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        if points.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                got: weights.len(),
            });
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(Error::EmptyMeasure);
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite {
                    what: "coordinate",
                    index: i,
                });
            }
        }
        let mut weights = weights;
        for (i, w) in weights.iter_mut().enumerate() {
            if !w.is_finite() {
                return Err(Error::NonFinite {
                    what: "weight",
                    index: i,
                });
            }
            if *w < 0.0 {
                if *w > -1e-12 {
                    *w = 0.0;
                } else {
                    return Err(Error::Negative {
                        what: "weight",
                        index: i,
                        value: *w,
                    });
                }
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::WeightSum { sum });
        }
        // Renormalize only outside the 1e-12 band; a sum already that close is
        // kept bit-for-bit, which makes construction idempotent.
        if (sum - 1.0).abs() > 1e-12 {
            for w in weights.iter_mut() {
                *w /= sum;
            }
        }
        Ok(Self { points, weights })
    }

    /// Uniform weights over the given points.
    pub fn uniform(points: Vec<Vec<f64>>) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::EmptyMeasure);
        }
        Self::new(points, vec![1.0 / n as f64; n])
    }

    /// Convenience constructor for 1-D supports.
    pub fn uniform_1d(xs: &[f64]) -> Result<Self> {
        Self::uniform(xs.iter().map(|&x| vec![x]).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Parse the CSV sample format: one row per point, `d` numeric columns,
    /// optional final column named `weight`. A header row is required; absent
    /// weights mean uniform.
    pub fn from_csv_reader<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let header = match lines.next() {
            Some((_, line)) => line?,
            None => {
                return Err(Error::CsvParse {
                    line: 1,
                    msg: "missing header row".into(),
                })
            }
        };
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.is_empty() || cols.iter().all(|c| c.is_empty()) {
            return Err(Error::CsvParse {
                line: 1,
                msg: "empty header row".into(),
            });
        }
        let has_weight = cols
            .last()
            .map(|c| c.eq_ignore_ascii_case("weight"))
            .unwrap_or(false);
        let dim = cols.len() - usize::from(has_weight);
        if dim == 0 {
            return Err(Error::CsvParse {
                line: 1,
                msg: "no coordinate columns".into(),
            });
        }

        let mut points = Vec::new();
        let mut weights = Vec::new();
        for (idx, line) in lines {
            let line_no = idx + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != cols.len() {
                return Err(Error::CsvParse {
                    line: line_no,
                    msg: format!("expected {} fields, found {}", cols.len(), fields.len()),
                });
            }
            let mut point = Vec::with_capacity(dim);
            for field in &fields[..dim] {
                let v: f64 = field.parse().map_err(|_| Error::CsvParse {
                    line: line_no,
                    msg: format!("cannot parse `{field}` as a number"),
                })?;
                point.push(v);
            }
            points.push(point);
            if has_weight {
                let field = fields[dim];
                let w: f64 = field.parse().map_err(|_| Error::CsvParse {
                    line: line_no,
                    msg: format!("cannot parse weight `{field}` as a number"),
                })?;
                weights.push(w);
            }
        }
        if points.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        if has_weight {
            Self::new(points, weights)
        } else {
            Self::uniform(points)
        }
    }

    pub fn from_csv_path<P: AsRef<Path>>(path: P) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(std::io::BufReader::new(file))
    }
}

/// Cost specification: a power of the Euclidean distance, or an explicit matrix.
#[derive(Debug, Clone)]
pub enum CostSpec {
    /// `c(x, y) = |x - y|_2^p` with `p >= 1`.
    PowerDistance { p: f64 },
    /// A fixed, caller-supplied cost matrix.
    ExplicitMatrix(CostMatrix),
}

impl CostSpec {
    pub fn power(p: f64) -> Result<Self> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::InvalidParameter {
                name: "p",
                value: p,
                requirement: "power-distance exponent must satisfy p >= 1",
            });
        }
        Ok(Self::PowerDistance { p })
    }
}

/// N x M matrix of nonnegative, finite transport costs.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    n_rows: usize,
    n_cols: usize,
    entries: Vec<f64>,
}

impl CostMatrix {
    /// Validate and wrap a row-major cost matrix.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_rows = rows.len();
        if n_rows == 0 {
            return Err(Error::EmptyMeasure);
        }
        let n_cols = rows[0].len();
        if n_cols == 0 {
            return Err(Error::EmptyMeasure);
        }
        let mut entries = Vec::with_capacity(n_rows * n_cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::DimensionMismatch {
                    expected: n_cols,
                    got: row.len(),
                });
            }
            for (j, &c) in row.iter().enumerate() {
                if !c.is_finite() {
                    return Err(Error::NonFinite {
                        what: "cost",
                        index: i * n_cols + j,
                    });
                }
                if c < 0.0 {
                    return Err(Error::Negative {
                        what: "cost",
                        index: i * n_cols + j,
                        value: c,
                    });
                }
                entries.push(c);
            }
        }
        Ok(Self {
            n_rows,
            n_cols,
            entries,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n_cols + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Median entry; the solver's default smoothing scale.
    pub fn median(&self) -> f64 {
        let mut v = self.entries.clone();
        let mid = v.len() / 2;
        let (_, med, _) = v.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
        *med
    }

    pub fn max_entry(&self) -> f64 {
        self.entries.iter().cloned().fold(0.0, f64::max)
    }

    /// Column-major copy of the entries, for cache-friendly column passes.
    pub(crate) fn transposed_entries(&self) -> Vec<f64> {
        let mut t = vec![0.0; self.entries.len()];
        for i in 0..self.n_rows {
            for j in 0..self.n_cols {
                t[j * self.n_rows + i] = self.entries[i * self.n_cols + j];
            }
        }
        t
    }
}

/// Euclidean distance between two points of equal dimension.
fn euclidean(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn power_cost(x: &[f64], y: &[f64], p: f64) -> f64 {
    if p == 2.0 {
        x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
    } else if p == 1.0 {
        euclidean(x, y)
    } else {
        euclidean(x, y).powf(p)
    }
}

/// Build the N x M cost matrix `C[i][j] = c(x_i, y_j)` between the supports of
/// `p_measure` and `q_measure`.
pub fn build_cost(
    p_measure: &DiscreteMeasure,
    q_measure: &DiscreteMeasure,
    spec: &CostSpec,
) -> Result<CostMatrix> {
    match spec {
        CostSpec::PowerDistance { p } => {
            if !(*p >= 1.0) {
                return Err(Error::InvalidParameter {
                    name: "p",
                    value: *p,
                    requirement: "power-distance exponent must satisfy p >= 1",
                });
            }
            if p_measure.dim() != q_measure.dim() {
                return Err(Error::DimensionMismatch {
                    expected: p_measure.dim(),
                    got: q_measure.dim(),
                });
            }
            let rows = p_measure
                .points()
                .iter()
                .map(|x| {
                    q_measure
                        .points()
                        .iter()
                        .map(|y| power_cost(x, y, *p))
                        .collect()
                })
                .collect();
            CostMatrix::from_rows(rows)
        }
        CostSpec::ExplicitMatrix(m) => {
            if m.n_rows() != p_measure.len() {
                return Err(Error::DimensionMismatch {
                    expected: p_measure.len(),
                    got: m.n_rows(),
                });
            }
            if m.n_cols() != q_measure.len() {
                return Err(Error::DimensionMismatch {
                    expected: q_measure.len(),
                    got: m.n_cols(),
                });
            }
            Ok(m.clone())
        }
    }
}

/// Isometry of `R^d`: `x -> O x + s` with `O` orthogonal.
#[derive(Debug, Clone)]
pub struct IsometryMap {
    matrix: Vec<f64>, // d x d, row-major
    shift: Vec<f64>,
}

impl IsometryMap {
    /// Validates `O^T O = I` within `1e-10` on construction.
    pub fn new(matrix: Vec<Vec<f64>>, shift: Vec<f64>) -> Result<Self> {
        let d = shift.len();
        if matrix.len() != d || matrix.iter().any(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: matrix.len(),
            });
        }
        let mut flat = Vec::with_capacity(d * d);
        for row in &matrix {
            for &v in row {
                if !v.is_finite() {
                    return Err(Error::NonFinite {
                        what: "matrix entry",
                        index: flat.len(),
                    });
                }
                flat.push(v);
            }
        }
        let mut deviation: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let mut dot = 0.0;
                for k in 0..d {
                    dot += flat[k * d + i] * flat[k * d + j];
                }
                let target = if i == j { 1.0 } else { 0.0 };
                deviation = deviation.max((dot - target).abs());
            }
        }
        if deviation > 1e-10 {
            return Err(Error::NotOrthogonal { deviation });
        }
        Ok(Self {
            matrix: flat,
            shift,
        })
    }

    pub fn identity(d: usize) -> Self {
        let mut matrix = vec![0.0; d * d];
        for i in 0..d {
            matrix[i * d + i] = 1.0;
        }
        Self {
            matrix,
            shift: vec![0.0; d],
        }
    }

    pub fn translation(shift: Vec<f64>) -> Self {
        let d = shift.len();
        let mut id = Self::identity(d);
        id.shift = shift;
        id
    }

    pub fn rotation_2d(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self {
            matrix: vec![c, -s, s, c],
            shift: vec![0.0, 0.0],
        }
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim();
        debug_assert_eq!(x.len(), d);
        (0..d)
            .map(|i| {
                self.shift[i]
                    + (0..d)
                        .map(|k| self.matrix[i * d + k] * x[k])
                        .sum::<f64>()
            })
            .collect()
    }
}

/// Pushforward `T_# P`: map every support point by the isometry, keep weights.
pub fn pushforward(measure: &DiscreteMeasure, map: &IsometryMap) -> Result<DiscreteMeasure> {
    if measure.dim() != map.dim() {
        return Err(Error::DimensionMismatch {
            expected: map.dim(),
            got: measure.dim(),
        });
    }
    let points = measure.points().iter().map(|x| map.apply(x)).collect();
    DiscreteMeasure::new(points, measure.weights().to_vec())
}

/// Product measure `P1 x P2`: coordinate-concatenated points with weights
/// `a_i * a'_k`, ordered row-major in `(i, k)`.
pub fn product_measure(p1: &DiscreteMeasure, p2: &DiscreteMeasure) -> DiscreteMeasure {
    let mut points = Vec::with_capacity(p1.len() * p2.len());
    let mut weights = Vec::with_capacity(p1.len() * p2.len());
    for (x1, &w1) in p1.points().iter().zip(p1.weights()) {
        for (x2, &w2) in p2.points().iter().zip(p2.weights()) {
            let mut pt = Vec::with_capacity(x1.len() + x2.len());
            pt.extend_from_slice(x1);
            pt.extend_from_slice(x2);
            points.push(pt);
            weights.push(w1 * w2);
        }
    }
    DiscreteMeasure::new(points, weights).expect("product of valid measures is valid")
}
