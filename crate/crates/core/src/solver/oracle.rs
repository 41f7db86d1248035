//! Brute-force reference solvers, independent of the simplex code path.

use itertools::Itertools;

use super::{cost_of_plan, OTSolution};
use crate::coupling::TransportPlan;
use crate::error::{OtError, Result};
use crate::measure::{mass_tol, DiscreteMeasure};
use crate::scalar::{Extended, Scalar};
use crate::space::CostMatrix;

pub const PERMUTATION_ORACLE_MAX: usize = 8;
pub const BASIS_ORACLE_MAX: usize = 10;

fn check_cost_shape<T: Scalar>(mu1: &DiscreteMeasure<T>, mu2: &DiscreteMeasure<T>, c: &CostMatrix<T>) -> Result<()> {
    if c.rows() != mu1.len() || c.cols() != mu2.len() {
        return Err(OtError::Shape(format!(
            "cost is {}x{} but measures have lengths {} and {}",
            c.rows(),
            c.cols(),
            mu1.len(),
            mu2.len()
        )));
    }
    Ok(())
}

fn is_uniform<T: Scalar>(mu: &DiscreteMeasure<T>) -> bool {
    let w = T::one() / T::from_int(mu.len() as i64);
    let tol = mass_tol::<T>();
    mu.weights().iter().all(|x| x.eq_tol(&w, &tol))
}

/// Minimum over all `n!` permutation plans. Valid for uniform marginals of equal size `n ≤ 8`.
pub fn oracle_permutation<T: Scalar>(mu: &DiscreteMeasure<T>, nu: &DiscreteMeasure<T>, c: &CostMatrix<T>) -> Result<OTSolution<T>> {
    check_cost_shape(mu, nu, c)?;
    let n = mu.len();
    if n != nu.len() || !is_uniform(mu) || !is_uniform(nu) {
        return Err(OtError::Parameter("permutation oracle needs two uniform measures of equal size".into()));
    }
    if n > PERMUTATION_ORACLE_MAX {
        return Err(OtError::Parameter(format!("permutation oracle limited to n ≤ {PERMUTATION_ORACLE_MAX}, got {n}")));
    }
    let mass = T::one() / T::from_int(n as i64);
    let mut best: Option<(Extended<T>, Vec<usize>)> = None;
    let mut evaluated = 0;
    for perm in (0..n).permutations(n) {
        evaluated += 1;
        let total: Extended<T> = perm.iter().enumerate().map(|(i, &j)| c.get(i, j).clone()).sum();
        if best.as_ref().is_none_or(|(b, _)| total < *b) {
            best = Some((total, perm));
        }
    }
    let (_, perm) = best.expect("at least one permutation");
    let mut flat = vec![T::zero(); n * n];
    for (i, &j) in perm.iter().enumerate() {
        flat[i * n + j] = mass.clone();
    }
    let plan = TransportPlan::from_flat(n, n, flat)?;
    let optimal_cost = cost_of_plan(&plan, c)?;
    Ok(OTSolution { plan, optimal_cost, iterations: evaluated, mode: T::MODE, infeasibility: None })
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// False if `a` and `b` were already connected.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

/// Flows on a spanning tree of cells, found by peeling leaves. `None` if any flow is negative.
fn tree_flows<T: Scalar>(cells: &[usize], rows: usize, cols: usize, supply: &[T], demand: &[T]) -> Option<Vec<T>> {
    let nodes = rows + cols;
    let mut residual: Vec<T> = supply.iter().chain(demand).cloned().collect();
    let mut degree = vec![0usize; nodes];
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    for (k, &cell) in cells.iter().enumerate() {
        let (r, cl) = (cell / cols, rows + cell % cols);
        degree[r] += 1;
        degree[cl] += 1;
        incident[r].push(k);
        incident[cl].push(k);
    }
    let mut used = vec![false; cells.len()];
    let mut flows = vec![T::zero(); cells.len()];
    let mut stack: Vec<usize> = (0..nodes).filter(|&v| degree[v] == 1).collect();
    let tol = mass_tol::<T>();
    while let Some(v) = stack.pop() {
        if degree[v] != 1 {
            continue;
        }
        let k = *incident[v].iter().find(|&&k| !used[k])?;
        used[k] = true;
        let cell = cells[k];
        let other = if v < rows { rows + cell % cols } else { cell / cols };
        let x = residual[v].clone();
        if x < -tol.clone() {
            return None;
        }
        residual[other] -= x.clone();
        residual[v] = T::zero();
        flows[k] = if x.is_negative_val() { T::zero() } else { x };
        degree[v] = 0;
        degree[other] -= 1;
        if degree[other] == 1 {
            stack.push(other);
        }
    }
    Some(flows)
}

/// Minimum over every basic feasible solution: spanning trees of `rows + cols − 1`
/// cells whose unique tree flow is nonnegative. Requires `rows + cols ≤ 10`.
pub fn oracle_basis_enumeration<T: Scalar>(mu1: &DiscreteMeasure<T>, mu2: &DiscreteMeasure<T>, c: &CostMatrix<T>) -> Result<OTSolution<T>> {
    check_cost_shape(mu1, mu2, c)?;
    let (rows, cols) = (mu1.len(), mu2.len());
    if rows + cols > BASIS_ORACLE_MAX {
        return Err(OtError::Parameter(format!("basis oracle limited to n + m ≤ {BASIS_ORACLE_MAX}, got {}", rows + cols)));
    }
    let basis_size = rows + cols - 1;
    let mut best: Option<(Extended<T>, Vec<usize>, Vec<T>)> = None;
    let mut evaluated = 0;
    for cells in (0..rows * cols).combinations(basis_size) {
        let mut dsu = DisjointSet::new(rows + cols);
        if !cells.iter().all(|&cell| dsu.union(cell / cols, rows + cell % cols)) {
            continue;
        }
        let Some(flows) = tree_flows(&cells, rows, cols, mu1.weights(), mu2.weights()) else { continue };
        evaluated += 1;
        let total: Extended<T> = cells.iter().zip(&flows).map(|(&cell, x)| c.cells()[cell].times_mass(x)).sum();
        if best.as_ref().is_none_or(|(b, _, _)| total < *b) {
            best = Some((total, cells, flows));
        }
    }
    let (_, cells, flows) = best.ok_or_else(|| OtError::Precondition("no basic feasible solution found".into()))?;
    let mut flat = vec![T::zero(); rows * cols];
    for (cell, x) in cells.into_iter().zip(flows) {
        flat[cell] = x;
    }
    let plan = TransportPlan::from_flat(rows, cols, flat)?;
    let optimal_cost = cost_of_plan(&plan, c)?;
    Ok(OTSolution { plan, optimal_cost, iterations: evaluated, mode: T::MODE, infeasibility: None })
}
