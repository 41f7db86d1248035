//! Transport plans: construction, marginal checks, tail bounds and restriction.

use std::fmt;

use crate::error::{OtError, Result};
use crate::measure::{DiscreteMeasure, TestFunction};
use crate::scalar::Scalar;

/// Nonnegative `rows × cols` joint mass matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportPlan<T> {
    rows: usize,
    cols: usize,
    mass: Vec<T>,
}

impl<T: Scalar> TransportPlan<T> {
    pub fn new(matrix: Vec<Vec<T>>) -> Result<Self> {
        let rows = matrix.len();
        let cols = matrix.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 {
            return Err(OtError::Shape("plan must be nonempty".into()));
        }
        if let Some(i) = matrix.iter().position(|r| r.len() != cols) {
            return Err(OtError::Shape(format!("plan row {i} has {} entries, expected {cols}", matrix[i].len())));
        }
        Self::from_flat(rows, cols, matrix.into_iter().flatten().collect())
    }

    pub fn from_flat(rows: usize, cols: usize, mass: Vec<T>) -> Result<Self> {
        if mass.len() != rows * cols || rows == 0 || cols == 0 {
            return Err(OtError::Shape(format!("{} entries for a {rows}x{cols} plan", mass.len())));
        }
        if let Some(pos) = mass.iter().position(|v| !v.is_finite_value() || v.is_negative_val()) {
            return Err(OtError::Domain(format!(
                "plan entry ({}, {}) is negative or not finite",
                pos / cols,
                pos % cols
            )));
        }
        Ok(Self { rows, cols, mass })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.mass[i * self.cols + j]
    }

    pub fn entries(&self) -> &[T] {
        &self.mass
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        self.mass.chunks(self.cols).map(<[T]>::to_vec).collect()
    }

    pub fn row_sums(&self) -> Vec<T> {
        self.mass.chunks(self.cols).map(|r| r.iter().cloned().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.cols];
        for row in self.mass.chunks(self.cols) {
            for (acc, v) in out.iter_mut().zip(row) {
                *acc += v.clone();
            }
        }
        out
    }

    pub fn total_mass(&self) -> T {
        self.mass.iter().cloned().sum()
    }

    /// Mass off the main diagonal (square plans on a shared space).
    pub fn off_diagonal_mass(&self) -> T {
        let mut total = T::zero();
        for i in 0..self.rows {
            for j in 0..self.cols {
                if i != j {
                    total += self.get(i, j).clone();
                }
            }
        }
        total
    }

    pub fn scale(&self, factor: &T) -> Self {
        Self { mass: self.mass.iter().map(|v| v.clone() * factor.clone()).collect(), ..self.clone() }
    }
}

/// Product coupling `μ1 ⊗ μ2`.
pub fn product_coupling<T: Scalar>(mu1: &DiscreteMeasure<T>, mu2: &DiscreteMeasure<T>) -> TransportPlan<T> {
    let mass = mu1
        .weights()
        .iter()
        .flat_map(|a| mu2.weights().iter().map(move |b| a.clone() * b.clone()))
        .collect();
    TransportPlan { rows: mu1.len(), cols: mu2.len(), mass }
}

/// Row and column sums as probability measures; fails if the plan does not carry unit mass.
pub fn marginals<T: Scalar>(plan: &TransportPlan<T>) -> Result<(DiscreteMeasure<T>, DiscreteMeasure<T>)> {
    Ok((DiscreteMeasure::new(plan.row_sums())?, DiscreteMeasure::new(plan.col_sums())?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MarginalConstraint {
    Row(usize),
    Column(usize),
    TotalMass,
}

impl fmt::Display for MarginalConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MarginalConstraint::Row(i) => write!(f, "row {i}"),
            MarginalConstraint::Column(j) => write!(f, "column {j}"),
            MarginalConstraint::TotalMass => f.write_str("total mass"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CouplingViolation<T> {
    pub constraint: MarginalConstraint,
    pub expected: T,
    pub actual: T,
}

impl<T: Scalar> CouplingViolation<T> {
    pub fn magnitude(&self) -> T {
        (self.actual.clone() - self.expected.clone()).abs_val()
    }
}

/// Outcome of [`is_coupling`]. Entries are nonnegative by construction of
/// [`TransportPlan`], so only marginal constraints can fail.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingReport<T> {
    pub violations: Vec<CouplingViolation<T>>,
}

impl<T: Scalar> CouplingReport<T> {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn worst(&self) -> Option<&CouplingViolation<T>> {
        self.violations.iter().reduce(|a, b| if b.magnitude() > a.magnitude() { b } else { a })
    }
}

fn check_shape<T: Scalar>(plan: &TransportPlan<T>, mu1: &DiscreteMeasure<T>, mu2: &DiscreteMeasure<T>) -> Result<()> {
    if plan.rows != mu1.len() || plan.cols != mu2.len() {
        return Err(OtError::Shape(format!(
            "plan is {}x{} but marginals have lengths {} and {}",
            plan.rows,
            plan.cols,
            mu1.len(),
            mu2.len()
        )));
    }
    Ok(())
}

pub fn is_coupling<T: Scalar>(
    plan: &TransportPlan<T>,
    mu1: &DiscreteMeasure<T>,
    mu2: &DiscreteMeasure<T>,
    tol: &T,
) -> Result<CouplingReport<T>> {
    check_shape(plan, mu1, mu2)?;
    let mut violations = Vec::new();
    let rows = plan.row_sums().into_iter().zip(mu1.weights()).enumerate();
    for (i, (actual, expected)) in rows {
        if !actual.eq_tol(expected, tol) {
            violations.push(CouplingViolation { constraint: MarginalConstraint::Row(i), expected: expected.clone(), actual });
        }
    }
    let cols = plan.col_sums().into_iter().zip(mu2.weights()).enumerate();
    for (j, (actual, expected)) in cols {
        if !actual.eq_tol(expected, tol) {
            violations.push(CouplingViolation { constraint: MarginalConstraint::Column(j), expected: expected.clone(), actual });
        }
    }
    let total = plan.total_mass();
    if !total.eq_tol(&T::one(), tol) {
        violations.push(CouplingViolation { constraint: MarginalConstraint::TotalMass, expected: T::one(), actual: total });
    }
    Ok(CouplingReport { violations })
}

/// Pairs `(1_{i}, 0)` and `(0, 1_{j})` for every row and column.
pub fn singleton_indicator_pairs<T: Scalar>(rows: usize, cols: usize) -> Vec<(TestFunction<T>, TestFunction<T>)> {
    let left = (0..rows).map(|i| (TestFunction::indicator(i, rows), TestFunction::zero(cols)));
    let right = (0..cols).map(|j| (TestFunction::zero(rows), TestFunction::indicator(j, cols)));
    left.chain(right).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestFunctionFailure<T> {
    pub pair: usize,
    pub plan_side: T,
    pub marginal_side: T,
}

/// Checks `Σ (φ1[i] + φ2[j]) π[i][j] = ∫φ1 dμ1 + ∫φ2 dμ2` for each pair.
pub fn verify_coupling_via_test_functions<T: Scalar>(
    plan: &TransportPlan<T>,
    mu1: &DiscreteMeasure<T>,
    mu2: &DiscreteMeasure<T>,
    pairs: &[(TestFunction<T>, TestFunction<T>)],
    tol: &T,
) -> Result<Vec<TestFunctionFailure<T>>> {
    check_shape(plan, mu1, mu2)?;
    let mut failures = Vec::new();
    for (k, (phi1, phi2)) in pairs.iter().enumerate() {
        if phi1.len() != plan.rows || phi2.len() != plan.cols {
            return Err(OtError::Shape(format!("test function pair {k} does not match the plan shape")));
        }
        let mut plan_side = T::zero();
        for i in 0..plan.rows {
            for j in 0..plan.cols {
                let m = plan.get(i, j);
                if !m.is_zero() {
                    plan_side += (phi1.values()[i].clone() + phi2.values()[j].clone()) * m.clone();
                }
            }
        }
        let marginal_side = mu1.integrate(phi1)? + mu2.integrate(phi2)?;
        if !plan_side.eq_tol(&marginal_side, tol) {
            failures.push(TestFunctionFailure { pair: k, plan_side, marginal_side });
        }
    }
    Ok(failures)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TailBound<T> {
    /// `π((K1 × K2)ᶜ)`.
    pub outside_mass: T,
    /// `μ1(K1ᶜ) + μ2(K2ᶜ)` with `μ1`, `μ2` the plan's marginals.
    pub marginal_tails: T,
    pub holds: bool,
}

/// Union bound `π((K1×K2)ᶜ) ≤ μ1(K1ᶜ) + μ2(K2ᶜ)`.
pub fn tail_mass_bound_check<T: Scalar>(plan: &TransportPlan<T>, k1: &[usize], k2: &[usize], tol: &T) -> Result<TailBound<T>> {
    let in1 = index_mask(k1, plan.rows)?;
    let in2 = index_mask(k2, plan.cols)?;
    let mut outside_mass = T::zero();
    for i in 0..plan.rows {
        for j in 0..plan.cols {
            if !(in1[i] && in2[j]) {
                outside_mass += plan.get(i, j).clone();
            }
        }
    }
    let tail = |sums: Vec<T>, mask: &[bool]| -> T { sums.into_iter().zip(mask).filter(|(_, &inside)| !inside).map(|(v, _)| v).sum() };
    let marginal_tails = tail(plan.row_sums(), &in1) + tail(plan.col_sums(), &in2);
    let holds = outside_mass.le_tol(&marginal_tails, tol);
    Ok(TailBound { outside_mass, marginal_tails, holds })
}

fn index_mask(indices: &[usize], size: usize) -> Result<Vec<bool>> {
    let mut mask = vec![false; size];
    for &i in indices {
        *mask.get_mut(i).ok_or(OtError::Index { index: i, size })? = true;
    }
    Ok(mask)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Restriction<T> {
    /// `π̃ / Z`.
    pub plan: TransportPlan<T>,
    /// Mass `Z` of the masked plan `π̃`.
    pub mass: T,
    pub mu1: DiscreteMeasure<T>,
    pub mu2: DiscreteMeasure<T>,
}

/// Keeps the cells selected by `mask` and renormalizes to unit mass.
pub fn restrict_and_normalize<T: Scalar>(plan: &TransportPlan<T>, mask: &[Vec<bool>]) -> Result<Restriction<T>> {
    if mask.len() != plan.rows || mask.iter().any(|r| r.len() != plan.cols) {
        return Err(OtError::Shape(format!("mask does not match the {}x{} plan", plan.rows, plan.cols)));
    }
    let kept: Vec<T> = plan
        .mass
        .iter()
        .zip(mask.iter().flatten())
        .map(|(v, &keep)| if keep { v.clone() } else { T::zero() })
        .collect();
    let z: T = kept.iter().cloned().sum();
    if !(z > T::zero()) {
        return Err(OtError::EmptyRestriction);
    }
    let normalized = TransportPlan { rows: plan.rows, cols: plan.cols, mass: kept.into_iter().map(|v| v / z.clone()).collect() };
    let mu1 = DiscreteMeasure::from_raw(normalized.row_sums());
    let mu2 = DiscreteMeasure::from_raw(normalized.col_sums());
    Ok(Restriction { plan: normalized, mass: z, mu1, mu2 })
}
