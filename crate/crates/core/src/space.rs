//! Finite metric spaces and the ground costs built on them.

use std::fmt;

use crate::error::{OtError, Result};
use crate::scalar::{Extended, Scalar};

/// Order of the ℓ^p norm used to turn a point cloud into distances.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NormOrder {
    Finite(f64),
    Infinity,
}

impl NormOrder {
    pub fn new(p: f64) -> Result<Self> {
        if p == f64::INFINITY {
            Ok(NormOrder::Infinity)
        } else if p.is_finite() && p >= 1.0 {
            Ok(NormOrder::Finite(p))
        } else {
            Err(OtError::Parameter(format!("norm order must lie in [1, ∞], got {p}")))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricAxiom {
    Nonnegativity,
    ZeroDiagonal,
    /// `d(i, j) = 0` for `i ≠ j`.
    Separation,
    Symmetry,
    Triangle,
}

impl fmt::Display for MetricAxiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            MetricAxiom::Nonnegativity => "nonnegativity",
            MetricAxiom::ZeroDiagonal => "zero-diagonal",
            MetricAxiom::Separation => "separation",
            MetricAxiom::Symmetry => "symmetry",
            MetricAxiom::Triangle => "triangle",
        };
        f.write_str(name)
    }
}

/// One failed axiom. For [`MetricAxiom::Triangle`] the indices are
/// `(i, j, k)` with `d(i, k) > d(i, j) + d(j, k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricViolation<T> {
    pub axiom: MetricAxiom,
    pub indices: Vec<usize>,
    /// Amount by which the axiom fails.
    pub excess: T,
}

fn check_square<T: Scalar>(dist: &[Vec<T>]) -> Result<usize> {
    let n = dist.len();
    for (i, row) in dist.iter().enumerate() {
        if row.len() != n {
            return Err(OtError::Shape(format!("distance row {i} has {} entries, expected {n}", row.len())));
        }
        if let Some(j) = row.iter().position(|v| !v.is_finite_value()) {
            return Err(OtError::Data(format!("non-finite distance at ({i}, {j})")));
        }
    }
    Ok(n)
}

/// Checks every metric axiom within `tol`; the triangle check is the full O(n³) scan.
pub fn validate_metric<T: Scalar>(dist: &[Vec<T>], tol: &T) -> Result<Vec<MetricViolation<T>>> {
    let n = check_square(dist)?;
    let neg_tol = -tol.clone();
    let mut out = Vec::new();
    for i in 0..n {
        if !dist[i][i].abs_val().le_tol(&T::zero(), tol) {
            out.push(MetricViolation { axiom: MetricAxiom::ZeroDiagonal, indices: vec![i], excess: dist[i][i].abs_val() });
        }
        for j in 0..n {
            if i == j {
                continue;
            }
            if dist[i][j] < neg_tol {
                out.push(MetricViolation { axiom: MetricAxiom::Nonnegativity, indices: vec![i, j], excess: -dist[i][j].clone() });
            }
            if i < j {
                if dist[i][j].abs_val() <= *tol {
                    out.push(MetricViolation { axiom: MetricAxiom::Separation, indices: vec![i, j], excess: T::zero() });
                }
                let gap = (dist[i][j].clone() - dist[j][i].clone()).abs_val();
                if gap > *tol {
                    out.push(MetricViolation { axiom: MetricAxiom::Symmetry, indices: vec![i, j], excess: gap });
                }
            }
        }
    }
    for i in 0..n {
        for k in 0..n {
            if i == k {
                continue;
            }
            for j in 0..n {
                if j == i || j == k {
                    continue;
                }
                let detour = dist[i][j].clone() + dist[j][k].clone();
                if !dist[i][k].le_tol(&detour, tol) {
                    out.push(MetricViolation {
                        axiom: MetricAxiom::Triangle,
                        indices: vec![i, j, k],
                        excess: dist[i][k].clone() - detour,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Ground set with a validated distance matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteMetricSpace<T> {
    id: Option<String>,
    labels: Vec<String>,
    dist: Vec<Vec<T>>,
}

impl<T: Scalar> FiniteMetricSpace<T> {
    /// Builds a space, rejecting matrices that violate any axiom within `tol`.
    pub fn new(labels: Vec<String>, dist: Vec<Vec<T>>, tol: &T) -> Result<Self> {
        let n = check_square(&dist)?;
        if n == 0 {
            return Err(OtError::Domain("a metric space needs at least one point".into()));
        }
        if labels.len() != n {
            return Err(OtError::Shape(format!("{} labels for {n} points", labels.len())));
        }
        let report = validate_metric(&dist, tol)?;
        if let Some(v) = report.first() {
            return Err(OtError::Domain(format!(
                "{} axiom violated at {:?} ({} violations total)",
                v.axiom,
                v.indices,
                report.len()
            )));
        }
        Ok(Self { id: None, labels, dist })
    }

    /// Distances between points under the ℓ^p norm. Points must be pairwise distinct.
    pub fn from_point_cloud(points: &[Vec<T>], norm: NormOrder) -> Result<Self> {
        let first = points.first().ok_or_else(|| OtError::Domain("point cloud is empty".into()))?;
        let dim = first.len();
        if let Some(i) = points.iter().position(|p| p.len() != dim) {
            return Err(OtError::Shape(format!("point {i} has dimension {}, expected {dim}", points[i].len())));
        }
        if let Some((i, j)) = points.iter().flatten().position(|v| !v.is_finite_value()).map(|flat| (flat / dim.max(1), flat % dim.max(1))) {
            return Err(OtError::Data(format!("non-finite coordinate {j} of point {i}")));
        }
        let n = points.len();
        let mut dist = vec![vec![T::zero(); n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = lp_distance(&points[i], &points[j], norm);
                if d.is_zero() {
                    return Err(OtError::Domain(format!("points {i} and {j} coincide")));
                }
                dist[i][j] = d.clone();
                dist[j][i] = d;
            }
        }
        let labels = (0..n).map(|i| i.to_string()).collect();
        Ok(Self { id: None, labels, dist })
    }

    /// Evenly labelled points on the real line.
    pub fn on_line(coords: &[T]) -> Result<Self> {
        let points: Vec<Vec<T>> = coords.iter().map(|c| vec![c.clone()]).collect();
        Self::from_point_cloud(&points, NormOrder::Finite(1.0))
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = Some(id.into());
        self
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(OtError::Shape(format!("{} labels for {} points", labels.len(), self.len())));
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn id(&self) -> Option<&str> {
        self.id.as_deref()
    }

    pub fn len(&self) -> usize {
        self.dist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dist.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dist(&self, i: usize, j: usize) -> &T {
        &self.dist[i][j]
    }

    pub fn distances(&self) -> &[Vec<T>] {
        &self.dist
    }

    /// Smallest off-diagonal distance, `None` for a one-point space.
    pub fn min_positive_distance(&self) -> Option<T> {
        let n = self.len();
        (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| self.dist[i][j].clone())
            .reduce(T::min_val)
    }
}

fn lp_distance<T: Scalar>(a: &[T], b: &[T], norm: NormOrder) -> T {
    let diffs = a.iter().zip(b).map(|(x, y)| (x.clone() - y.clone()).abs_val());
    match norm {
        NormOrder::Infinity => diffs.fold(T::zero(), T::max_val),
        NormOrder::Finite(p) if p == 1.0 => diffs.sum(),
        NormOrder::Finite(p) => diffs.map(|d| d.pow_real(p)).sum::<T>().root_real(p),
    }
}

/// Lower-bound pair `(a1, a2)` with `c(i, j) ≥ a1[i] + a2[j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LowerBound<T> {
    pub a1: Vec<T>,
    pub a2: Vec<T>,
}

/// Pairwise transport costs, possibly `+∞` on forbidden cells.
#[derive(Clone, Debug, PartialEq)]
pub struct CostMatrix<T> {
    rows: usize,
    cols: usize,
    cells: Vec<Extended<T>>,
    lower_bound: Option<LowerBound<T>>,
}

impl<T: Scalar> CostMatrix<T> {
    pub fn new(cells: Vec<Vec<Extended<T>>>) -> Result<Self> {
        let rows = cells.len();
        let cols = cells.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 {
            return Err(OtError::Shape("cost matrix must be nonempty".into()));
        }
        if let Some(i) = cells.iter().position(|r| r.len() != cols) {
            return Err(OtError::Shape(format!("cost row {i} has {} entries, expected {cols}", cells[i].len())));
        }
        let flat: Vec<Extended<T>> = cells.into_iter().flatten().collect();
        if let Some(pos) = flat.iter().position(|c| c.finite().is_some_and(|v| !v.is_finite_value())) {
            return Err(OtError::Data(format!("invalid cost at ({}, {})", pos / cols, pos % cols)));
        }
        Ok(Self { rows, cols, cells: flat, lower_bound: None })
    }

    pub fn from_finite(cells: Vec<Vec<T>>) -> Result<Self> {
        Self::new(cells.into_iter().map(|r| r.into_iter().map(Extended::Finite).collect()).collect())
    }

    /// Attaches `(a1, a2)` after checking `c ≥ a1 ⊕ a2` on every finite cell
    /// (exactly in rational mode, within the float tolerance otherwise).
    pub fn with_lower_bound(mut self, a1: Vec<T>, a2: Vec<T>) -> Result<Self> {
        if a1.len() != self.rows || a2.len() != self.cols {
            return Err(OtError::Shape(format!(
                "lower bound has lengths ({}, {}), cost is {}x{}",
                a1.len(),
                a2.len(),
                self.rows,
                self.cols
            )));
        }
        if a1.iter().chain(&a2).any(|v| !v.is_finite_value()) {
            return Err(OtError::Data("lower bound entries must be finite".into()));
        }
        let tol = T::default_tol();
        for i in 0..self.rows {
            for j in 0..self.cols {
                if let Extended::Finite(c) = self.get(i, j) {
                    let h = a1[i].clone() + a2[j].clone();
                    if !h.le_tol(c, &tol) {
                        return Err(OtError::Domain(format!("cost at ({i}, {j}) is below a1[i] + a2[j]")));
                    }
                }
            }
        }
        self.lower_bound = Some(LowerBound { a1, a2 });
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Extended<T> {
        &self.cells[i * self.cols + j]
    }

    pub fn cells(&self) -> &[Extended<T>] {
        &self.cells
    }

    pub fn lower_bound(&self) -> Option<&LowerBound<T>> {
        self.lower_bound.as_ref()
    }

    pub fn has_forbidden_cells(&self) -> bool {
        self.cells.iter().any(Extended::is_infinite)
    }

    pub fn max_abs_finite(&self) -> T {
        self.cells.iter().filter_map(Extended::finite).map(Scalar::abs_val).fold(T::zero(), T::max_val)
    }

    /// Entrywise sum with a nonnegative finite matrix; the lower bound is kept.
    pub fn add_nonnegative(&self, extra: &[Vec<T>]) -> Result<Self> {
        if extra.len() != self.rows || extra.iter().any(|r| r.len() != self.cols) {
            return Err(OtError::Shape("added matrix does not match cost shape".into()));
        }
        if extra.iter().flatten().any(Scalar::is_negative_val) {
            return Err(OtError::Domain("added matrix has a negative entry".into()));
        }
        let cells = self
            .cells
            .iter()
            .zip(extra.iter().flatten())
            .map(|(c, e)| c.clone() + Extended::Finite(e.clone()))
            .collect();
        Ok(Self { cells, ..self.clone() })
    }

    pub fn to_rows(&self) -> Vec<Vec<Extended<T>>> {
        self.cells.chunks(self.cols).map(<[_]>::to_vec).collect()
    }
}

/// Ground cost `d^p`, with the zero lower-bound pair attached.
pub fn power_cost<T: Scalar>(space: &FiniteMetricSpace<T>, p: f64) -> Result<CostMatrix<T>> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(OtError::Parameter(format!("cost exponent must be finite and ≥ 1, got {p}")));
    }
    let n = space.len();
    let cells = space.distances().iter().map(|row| row.iter().map(|d| d.pow_real(p)).collect()).collect();
    CostMatrix::from_finite(cells)?.with_lower_bound(vec![T::zero(); n], vec![T::zero(); n])
}
