//! The discrete Kantorovich problem: minimize `Σ c[i][j] π[i][j]` over all
//! couplings `π` of two measures.
//!
//! [`solve_kantorovich`] runs the transportation simplex. The oracles in
//! [`oracle`] enumerate the vertices of the transportation polytope directly
//! and serve as references.

mod maxflow;
pub mod oracle;
mod simplex;

pub use maxflow::InfeasibilityCut;
pub use oracle::{oracle_basis_enumeration, oracle_permutation};

use crate::coupling::{product_coupling, restrict_and_normalize, TransportPlan};
use crate::error::{OtError, Result};
use crate::measure::{DiscreteMeasure, TestFunction};
use crate::scalar::{Extended, NumericMode, Scalar};
use crate::space::CostMatrix;

#[derive(Clone, Debug, PartialEq)]
pub struct OTSolution<T> {
    pub plan: TransportPlan<T>,
    /// Cost of `plan`, re-evaluated from the cost matrix.
    pub optimal_cost: Extended<T>,
    /// Simplex pivots, or candidates evaluated by an oracle.
    pub iterations: usize,
    pub mode: NumericMode,
    /// Present when no coupling has finite cost.
    pub infeasibility: Option<InfeasibilityCut<T>>,
}

impl<T: Scalar> OTSolution<T> {
    pub fn is_feasible(&self) -> bool {
        self.infeasibility.is_none()
    }
}

fn check_plan_shape<T: Scalar>(plan: &TransportPlan<T>, c: &CostMatrix<T>) -> Result<()> {
    if plan.rows() != c.rows() || plan.cols() != c.cols() {
        return Err(OtError::Shape(format!(
            "plan is {}x{}, cost is {}x{}",
            plan.rows(),
            plan.cols(),
            c.rows(),
            c.cols()
        )));
    }
    Ok(())
}

/// `Σ c[i][j] π[i][j]`, with `0·∞ = 0` and any mass on a `+∞` cell giving `+∞`.
pub fn cost_of_plan<T: Scalar>(plan: &TransportPlan<T>, c: &CostMatrix<T>) -> Result<Extended<T>> {
    check_plan_shape(plan, c)?;
    Ok(c.cells().iter().zip(plan.entries()).map(|(cost, m)| cost.times_mass(m)).sum())
}

#[derive(Clone, Debug, PartialEq)]
pub struct LowerBoundCheck<T> {
    /// `∫a1 dμ1 + ∫a2 dμ2`, equal to `Σ (a1 ⊕ a2) dπ` for every coupling `π`.
    pub bound: T,
    pub cost: Extended<T>,
    pub holds: bool,
}

pub fn check_lower_bound<T: Scalar>(
    c: &CostMatrix<T>,
    mu1: &DiscreteMeasure<T>,
    mu2: &DiscreteMeasure<T>,
    plan: &TransportPlan<T>,
) -> Result<LowerBoundCheck<T>> {
    let lb = c.lower_bound().ok_or_else(|| OtError::Parameter("cost matrix carries no lower-bound pair".into()))?;
    let bound = mu1.integrate(&TestFunction::new(lb.a1.clone())?)? + mu2.integrate(&TestFunction::new(lb.a2.clone())?)?;
    let cost = cost_of_plan(plan, c)?;
    let holds = Extended::Finite(bound.clone()).le_tol(&cost, &T::default_tol());
    Ok(LowerBoundCheck { bound, cost, holds })
}

/// Optimal coupling of `mu1` and `mu2` under `c`.
///
/// `+∞` cells are forbidden. When every coupling must use one, the result has
/// `optimal_cost = +∞`, the product coupling as its plan, and a violated cut.
pub fn solve_kantorovich<T: Scalar>(mu1: &DiscreteMeasure<T>, mu2: &DiscreteMeasure<T>, c: &CostMatrix<T>) -> Result<OTSolution<T>> {
    if c.rows() != mu1.len() || c.cols() != mu2.len() {
        return Err(OtError::Shape(format!(
            "cost is {}x{} but measures have lengths {} and {}",
            c.rows(),
            c.cols(),
            mu1.len(),
            mu2.len()
        )));
    }
    if c.has_forbidden_cells() {
        if let Some(cut) = maxflow::finite_support_cut(mu1.weights(), mu2.weights(), c) {
            let plan = product_coupling(mu1, mu2);
            let optimal_cost = cost_of_plan(&plan, c)?;
            return Ok(OTSolution { plan, optimal_cost, iterations: 0, mode: T::MODE, infeasibility: Some(cut) });
        }
    }
    let outcome = simplex::transportation_simplex(mu1.weights(), mu2.weights(), c)?;
    if outcome.forbidden_mass > T::default_tol() {
        return Err(OtError::Precondition(format!(
            "simplex left {} mass on forbidden cells after feasibility was established",
            outcome.forbidden_mass.render()
        )));
    }
    let plan = TransportPlan::from_flat(c.rows(), c.cols(), outcome.flows)?;
    let optimal_cost = cost_of_plan(&plan, c)?;
    Ok(OTSolution { plan, optimal_cost, iterations: outcome.iterations, mode: T::MODE, infeasibility: None })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RestrictionCheck<T> {
    /// Mass `Z` of the restricted plan before renormalizing.
    pub mass: T,
    pub restricted_cost: Extended<T>,
    pub resolved_cost: Extended<T>,
    pub holds: bool,
}

/// Restricts an optimal plan to `mask`, renormalizes, and re-solves between the
/// new marginals. The restricted plan must already be optimal there.
///
/// Optimality of `solution` is not checked; a suboptimal input can yield `holds = false`.
pub fn verify_restriction_optimality<T: Scalar>(
    solution: &OTSolution<T>,
    mask: &[Vec<bool>],
    c: &CostMatrix<T>,
    tol: &T,
) -> Result<RestrictionCheck<T>> {
    let restriction = restrict_and_normalize(&solution.plan, mask)?;
    let restricted_cost = cost_of_plan(&restriction.plan, c)?;
    let resolved_cost = solve_kantorovich(&restriction.mu1, &restriction.mu2, c)?.optimal_cost;
    let holds = restricted_cost.eq_tol(&resolved_cost, tol);
    Ok(RestrictionCheck { mass: restriction.mass, restricted_cost, resolved_cost, holds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::is_coupling;
    use crate::scalar::Rational;
    use crate::space::{power_cost, FiniteMetricSpace};

    fn q(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    fn measure(w: &[(i64, i64)]) -> DiscreteMeasure<Rational> {
        DiscreteMeasure::new(w.iter().map(|&(n, d)| q(n, d)).collect()).unwrap()
    }

    fn costs(rows: &[&[i64]]) -> CostMatrix<Rational> {
        CostMatrix::from_finite(rows.iter().map(|r| r.iter().map(|&v| q(v, 1)).collect()).collect()).unwrap()
    }

    fn fin(n: i64, d: i64) -> Extended<Rational> {
        Extended::Finite(q(n, d))
    }

    fn unit_pair() -> CostMatrix<Rational> {
        costs(&[&[0, 1], &[1, 0]])
    }

    #[test]
    fn plan_costs() {
        let p = TransportPlan::new(vec![vec![q(0, 1), q(1, 1)], vec![q(0, 1), q(0, 1)]]).unwrap();
        assert_eq!(cost_of_plan(&p, &costs(&[&[0, 0], &[0, 0]])).unwrap(), fin(0, 1));
        assert_eq!(cost_of_plan(&p, &unit_pair()).unwrap(), fin(1, 1));
        let diag = TransportPlan::new(vec![vec![q(1, 2), q(0, 1)], vec![q(0, 1), q(1, 2)]]).unwrap();
        let with_inf = CostMatrix::new(vec![vec![fin(0, 1), Extended::PosInf], vec![fin(0, 1), fin(0, 1)]]).unwrap();
        assert_eq!(cost_of_plan(&diag, &with_inf).unwrap(), fin(0, 1));
        assert!(cost_of_plan(&p, &with_inf).unwrap().is_infinite());
        assert!(matches!(cost_of_plan(&p, &costs(&[&[0]])), Err(OtError::Shape(_))));
    }

    #[test]
    fn lower_bounds() {
        let h = measure(&[(1, 2), (1, 2)]);
        let prod = product_coupling(&h, &h);
        let c = unit_pair().with_lower_bound(vec![q(0, 1); 2], vec![q(0, 1); 2]).unwrap();
        let check = check_lower_bound(&c, &h, &h, &prod).unwrap();
        assert_eq!((check.bound, check.cost, check.holds), (q(0, 1), fin(1, 2), true));

        let c = unit_pair().with_lower_bound(vec![q(-1, 1); 2], vec![q(0, 1); 2]).unwrap();
        let check = check_lower_bound(&c, &h, &h, &prod).unwrap();
        assert_eq!(check.bound, q(-1, 1));
        assert!(check.holds);

        assert!(matches!(check_lower_bound(&unit_pair(), &h, &h, &prod), Err(OtError::Parameter(_))));
    }

    #[test]
    fn small_problems() {
        let s = solve_kantorovich(&measure(&[(1, 1), (0, 1)]), &measure(&[(0, 1), (1, 1)]), &unit_pair()).unwrap();
        assert_eq!(s.optimal_cost, fin(1, 1));

        let h = measure(&[(1, 2), (1, 2)]);
        let s = solve_kantorovich(&h, &h, &unit_pair()).unwrap();
        assert_eq!(s.optimal_cost, fin(0, 1));
        assert_eq!(s.plan.off_diagonal_mass(), q(0, 1));

        let nu = measure(&[(1, 4), (3, 4)]);
        let s = solve_kantorovich(&h, &nu, &unit_pair()).unwrap();
        assert_eq!(s.optimal_cost, fin(1, 4));
        assert!(is_coupling(&s.plan, &h, &nu, &q(0, 1)).unwrap().is_valid());
    }

    #[test]
    fn degenerate_and_rectangular() {
        // Equal partial sums force zero-flow basic cells in the north-west start.
        let mu = measure(&[(1, 4), (1, 4), (1, 4), (1, 4)]);
        let nu = measure(&[(1, 2), (1, 2)]);
        let c = costs(&[&[3, 0], &[2, 0], &[0, 5], &[0, 1]]);
        let s = solve_kantorovich(&mu, &nu, &c).unwrap();
        let oracle = oracle_basis_enumeration(&mu, &nu, &c).unwrap();
        assert_eq!(s.optimal_cost, oracle.optimal_cost);
        assert_eq!(s.optimal_cost, fin(0, 1));
    }

    #[test]
    fn negative_costs_are_allowed() {
        let h = measure(&[(1, 2), (1, 2)]);
        let c = costs(&[&[-3, 1], &[1, -5]]);
        assert_eq!(solve_kantorovich(&h, &h, &c).unwrap().optimal_cost, fin(-4, 1));
    }

    #[test]
    fn forbidden_cells() {
        let h = measure(&[(1, 2), (1, 2)]);
        // Only the anti-diagonal is allowed.
        let c = CostMatrix::new(vec![vec![Extended::PosInf, fin(1, 1)], vec![fin(2, 1), Extended::PosInf]]).unwrap();
        let s = solve_kantorovich(&h, &h, &c).unwrap();
        assert_eq!(s.optimal_cost, fin(3, 2));
        assert!(s.is_feasible());

        let all_inf = CostMatrix::new(vec![vec![Extended::PosInf; 2]; 2]).unwrap();
        let s = solve_kantorovich(&h, &h, &all_inf).unwrap();
        assert!(s.optimal_cost.is_infinite());
        let cut = s.infeasibility.unwrap();
        assert!(cut.row_mass > cut.reachable_col_mass);

        // Row 0 can only reach column 0, which cannot absorb its mass.
        let mu = measure(&[(3, 4), (1, 4)]);
        let c = CostMatrix::new(vec![vec![fin(0, 1), Extended::PosInf], vec![fin(0, 1), fin(0, 1)]]).unwrap();
        let s = solve_kantorovich(&mu, &h, &c).unwrap();
        let cut = s.infeasibility.unwrap();
        assert_eq!(cut.rows, vec![0]);
        assert_eq!(cut.reachable_cols, vec![0]);
        assert_eq!((cut.row_mass, cut.reachable_col_mass), (q(3, 4), q(1, 2)));
    }

    #[test]
    fn oracles_on_small_cases() {
        let one = measure(&[(1, 1)]);
        let c = costs(&[&[7]]);
        assert_eq!(oracle_permutation(&one, &one, &c).unwrap().optimal_cost, fin(7, 1));
        let b = oracle_basis_enumeration(&one, &one, &c).unwrap();
        assert_eq!(b.plan.entries(), &[q(1, 1)]);

        let h = measure(&[(1, 2), (1, 2)]);
        let p = oracle_permutation(&h, &h, &unit_pair()).unwrap();
        assert_eq!(p.optimal_cost, fin(0, 1));
        assert_eq!(p.plan.off_diagonal_mass(), q(0, 1));

        let line = FiniteMetricSpace::on_line(&[q(0, 1), q(1, 1), q(2, 1), q(3, 1)]).unwrap();
        let c = power_cost(&line, 1.0).unwrap();
        let left = measure(&[(1, 3), (1, 3), (1, 3), (0, 1)]);
        let right = measure(&[(0, 1), (1, 3), (1, 3), (1, 3)]);
        assert_eq!(solve_kantorovich(&left, &left, &c).unwrap().optimal_cost, fin(0, 1));
        assert_eq!(solve_kantorovich(&left, &right, &c).unwrap().optimal_cost, fin(1, 1));

        let nu = measure(&[(1, 4), (3, 4)]);
        assert_eq!(oracle_basis_enumeration(&h, &nu, &unit_pair()).unwrap().optimal_cost, fin(1, 4));
        let zero = costs(&[&[0, 0], &[0, 0]]);
        assert_eq!(oracle_basis_enumeration(&h, &nu, &zero).unwrap().optimal_cost, fin(0, 1));

        assert!(matches!(oracle_permutation(&h, &nu, &unit_pair()), Err(OtError::Parameter(_))));
        let big = DiscreteMeasure::<Rational>::uniform(9).unwrap();
        let big_c = CostMatrix::from_finite(vec![vec![q(0, 1); 9]; 9]).unwrap();
        assert!(matches!(oracle_permutation(&big, &big, &big_c), Err(OtError::Parameter(_))));
        let six = DiscreteMeasure::<Rational>::uniform(6).unwrap();
        let six_c = CostMatrix::from_finite(vec![vec![q(0, 1); 6]; 6]).unwrap();
        assert!(matches!(oracle_basis_enumeration(&six, &six, &six_c), Err(OtError::Parameter(_))));
    }

    #[test]
    fn permutation_oracle_on_three_points() {
        // Six permutations enumerated by hand: identity costs 0 against itself,
        // and shifting {0,1,2} to {1,2,3} costs 1 per atom.
        let third = DiscreteMeasure::<Rational>::uniform(3).unwrap();
        let same = costs(&[&[0, 1, 2], &[1, 0, 1], &[2, 1, 0]]);
        assert_eq!(oracle_permutation(&third, &third, &same).unwrap().optimal_cost, fin(0, 1));
        let shifted = costs(&[&[1, 2, 3], &[0, 1, 2], &[1, 0, 1]]);
        assert_eq!(oracle_permutation(&third, &third, &shifted).unwrap().optimal_cost, fin(1, 1));
        assert_eq!(solve_kantorovich(&third, &third, &shifted).unwrap().optimal_cost, fin(1, 1));
    }

    #[test]
    fn restriction_optimality() {
        let h = measure(&[(1, 2), (1, 2)]);
        let c = unit_pair();
        let s = solve_kantorovich(&h, &h, &c).unwrap();
        let all = vec![vec![true; 2]; 2];
        let r = verify_restriction_optimality(&s, &all, &c, &q(0, 1)).unwrap();
        assert_eq!((r.restricted_cost.clone(), r.resolved_cost.clone()), (s.optimal_cost.clone(), s.optimal_cost.clone()));
        let corner = vec![vec![true, false], vec![false, false]];
        let r = verify_restriction_optimality(&s, &corner, &c, &q(0, 1)).unwrap();
        assert_eq!((r.restricted_cost, r.resolved_cost, r.holds), (fin(0, 1), fin(0, 1), true));

        let none = vec![vec![false; 2]; 2];
        assert_eq!(verify_restriction_optimality(&s, &none, &c, &q(0, 1)), Err(OtError::EmptyRestriction));
    }

    #[test]
    fn restriction_on_three_point_line() {
        let line = FiniteMetricSpace::on_line(&[q(0, 1), q(1, 1), q(2, 1)]).unwrap();
        let c = power_cost(&line, 1.0).unwrap();
        let mu = measure(&[(1, 3), (1, 3), (1, 3)]);
        let nu = measure(&[(1, 2), (0, 1), (1, 2)]);
        let s = solve_kantorovich(&mu, &nu, &c).unwrap();
        let rows01 = vec![vec![true; 3], vec![true; 3], vec![false; 3]];
        let r = verify_restriction_optimality(&s, &rows01, &c, &q(0, 1)).unwrap();
        assert!(r.holds);
        let restricted = restrict_and_normalize(&s.plan, &rows01).unwrap();
        let oracle = oracle_basis_enumeration(&restricted.mu1, &restricted.mu2, &c).unwrap();
        assert_eq!(r.resolved_cost, oracle.optimal_cost);
    }

    #[test]
    fn float_mode_agrees() {
        let mu = DiscreteMeasure::new(vec![0.5, 0.5]).unwrap();
        let nu = DiscreteMeasure::new(vec![0.25, 0.75]).unwrap();
        let c = CostMatrix::from_finite(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let s = solve_kantorovich(&mu, &nu, &c).unwrap();
        assert!((s.optimal_cost.to_f64() - 0.25).abs() < 1e-12);
        assert_eq!(s.mode, NumericMode::Float);
    }
}
