//! Wasserstein-p distances, gluing of plans, and the metric-axiom suite.

use std::fmt;

use crate::coupling::TransportPlan;
use crate::error::{OtError, Result};
use crate::measure::{measures_equal, DiscreteMeasure, EqualityMode};
use crate::scalar::Scalar;
use crate::solver::{cost_of_plan, solve_kantorovich};
use crate::space::{power_cost, CostMatrix, FiniteMetricSpace};

#[derive(Clone, Debug, PartialEq)]
pub struct WassersteinParams<T> {
    pub p: f64,
    pub tol: T,
}

impl<T: Scalar> WassersteinParams<T> {
    pub fn new(p: f64, tol: T) -> Result<Self> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(OtError::Parameter(format!("order p must be finite and ≥ 1, got {p}")));
        }
        if tol.is_negative_val() {
            return Err(OtError::Parameter("tolerance must be nonnegative".into()));
        }
        Ok(Self { p, tol })
    }

    /// Order `p` with the mode's default tolerance.
    pub fn order(p: f64) -> Result<Self> {
        Self::new(p, T::default_tol())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WassersteinDistance<T> {
    /// `W_p = C^{1/p}`.
    pub value: T,
    /// Optimal cost `C` under `d^p`.
    pub transport_cost: T,
    pub plan: TransportPlan<T>,
}

fn check_on_space<T: Scalar>(mu: &DiscreteMeasure<T>, space: &FiniteMetricSpace<T>) -> Result<()> {
    let id_clash = matches!((mu.space_id(), space.id()), (Some(a), Some(b)) if a != b);
    if mu.len() != space.len() || id_clash {
        return Err(OtError::Domain(format!(
            "measure on {} points{} does not live on space of {} points{}",
            mu.len(),
            mu.space_id().map(|s| format!(" ({s})")).unwrap_or_default(),
            space.len(),
            space.id().map(|s| format!(" ({s})")).unwrap_or_default(),
        )));
    }
    Ok(())
}

fn distance_for_cost<T: Scalar>(mu1: &DiscreteMeasure<T>, mu2: &DiscreteMeasure<T>, cost: &CostMatrix<T>, p: f64) -> Result<WassersteinDistance<T>> {
    let solution = solve_kantorovich(mu1, mu2, cost)?;
    let transport_cost = solution
        .optimal_cost
        .into_finite()
        .ok_or_else(|| OtError::Precondition("distance cost is infinite".into()))?;
    Ok(WassersteinDistance { value: transport_cost.root_real(p), transport_cost, plan: solution.plan })
}

/// `W_p(μ1, μ2)` and an optimal plan under the cost `d^p`.
pub fn wasserstein_distance<T: Scalar>(
    mu1: &DiscreteMeasure<T>,
    mu2: &DiscreteMeasure<T>,
    space: &FiniteMetricSpace<T>,
    params: &WassersteinParams<T>,
) -> Result<WassersteinDistance<T>> {
    check_on_space(mu1, space)?;
    check_on_space(mu2, space)?;
    distance_for_cost(mu1, mu2, &power_cost(space, params.p)?, params.p)
}

/// Three-coordinate plan `π123`.
#[derive(Clone, Debug, PartialEq)]
pub struct GluedPlan<T> {
    dims: (usize, usize, usize),
    mass: Vec<T>,
}

impl<T: Scalar> GluedPlan<T> {
    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> &T {
        let (_, n2, n3) = self.dims;
        &self.mass[(i * n2 + j) * n3 + k]
    }

    pub fn total_mass(&self) -> T {
        self.mass.iter().cloned().sum()
    }

    fn marginal(&self, keep: impl Fn(usize, usize, usize) -> (usize, usize), shape: (usize, usize)) -> TransportPlan<T> {
        let (n1, n2, n3) = self.dims;
        let mut out = vec![T::zero(); shape.0 * shape.1];
        for i in 0..n1 {
            for j in 0..n2 {
                for k in 0..n3 {
                    let (a, b) = keep(i, j, k);
                    out[a * shape.1 + b] += self.get(i, j, k).clone();
                }
            }
        }
        TransportPlan::from_flat(shape.0, shape.1, out).expect("marginal of a nonnegative tensor")
    }

    pub fn marginal_12(&self) -> TransportPlan<T> {
        let (n1, n2, _) = self.dims;
        self.marginal(|i, j, _| (i, j), (n1, n2))
    }

    pub fn marginal_23(&self) -> TransportPlan<T> {
        let (_, n2, n3) = self.dims;
        self.marginal(|_, j, k| (j, k), (n2, n3))
    }
}

/// Outer marginal `π13(i, k) = Σ_j π123(i, j, k)`.
pub fn glued_marginal_13<T: Scalar>(g: &GluedPlan<T>) -> TransportPlan<T> {
    let (n1, _, n3) = g.dims;
    g.marginal(|i, _, k| (i, k), (n1, n3))
}

/// Glues two plans sharing a middle marginal `μ2` by conditional independence:
/// `π123(i, j, k) = π12(i, j) π23(j, k) / μ2(j)`, and zero where `μ2(j) = 0`.
pub fn glue<T: Scalar>(pi12: &TransportPlan<T>, pi23: &TransportPlan<T>, tol: &T) -> Result<GluedPlan<T>> {
    if pi12.cols() != pi23.rows() {
        return Err(OtError::Shape(format!(
            "middle dimensions differ: {} columns vs {} rows",
            pi12.cols(),
            pi23.rows()
        )));
    }
    let left = pi12.col_sums();
    let right = pi23.row_sums();
    let worst = left
        .iter()
        .zip(&right)
        .map(|(a, b)| (a.clone() - b.clone()).abs_val())
        .enumerate()
        .reduce(|best, cur| if cur.1 > best.1 { cur } else { best });
    if let Some((index, gap)) = worst {
        if gap > *tol {
            return Err(OtError::Glue { index, left: left[index].render(), right: right[index].render() });
        }
    }
    let (n1, n2, n3) = (pi12.rows(), pi12.cols(), pi23.cols());
    let mut mass = vec![T::zero(); n1 * n2 * n3];
    for j in 0..n2 {
        let middle = &left[j];
        if middle.is_zero() {
            continue;
        }
        for i in 0..n1 {
            let a = pi12.get(i, j);
            if a.is_zero() {
                continue;
            }
            let scaled = a.clone() / middle.clone();
            for k in 0..n3 {
                mass[(i * n2 + j) * n3 + k] = scaled.clone() * pi23.get(j, k).clone();
            }
        }
    }
    Ok(GluedPlan { dims: (n1, n2, n3), mass })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TriangleWitness<T> {
    pub w13: T,
    pub w12: T,
    pub w23: T,
    /// `(Σ d^p dπ13)^{1/p}` for the outer marginal of the glued optimal plans.
    pub glued_cost_13: T,
    pub holds: bool,
}

/// Constructive triangle inequality: `W13 ≤ glued cost ≤ W12 + W23`.
pub fn triangle_witness<T: Scalar>(
    mu1: &DiscreteMeasure<T>,
    mu2: &DiscreteMeasure<T>,
    mu3: &DiscreteMeasure<T>,
    space: &FiniteMetricSpace<T>,
    params: &WassersteinParams<T>,
) -> Result<TriangleWitness<T>> {
    for mu in [mu1, mu2, mu3] {
        check_on_space(mu, space)?;
    }
    let cost = power_cost(space, params.p)?;
    let d12 = distance_for_cost(mu1, mu2, &cost, params.p)?;
    let d23 = distance_for_cost(mu2, mu3, &cost, params.p)?;
    let d13 = distance_for_cost(mu1, mu3, &cost, params.p)?;
    let glued = glue(&d12.plan, &d23.plan, &params.tol)?;
    let pi13 = glued_marginal_13(&glued);
    let glued_cost = cost_of_plan(&pi13, &cost)?
        .into_finite()
        .ok_or_else(|| OtError::Precondition("glued plan has infinite cost".into()))?;
    let glued_cost_13 = glued_cost.root_real(params.p);
    let tol = &params.tol;
    let holds = d13.value.le_tol(&glued_cost_13, tol) && glued_cost_13.le_tol(&(d12.value.clone() + d23.value.clone()), tol);
    Ok(TriangleWitness { w13: d13.value, w12: d12.value, w23: d23.value, glued_cost_13, holds })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WassersteinAxiom {
    Nonnegativity,
    Symmetry,
    Identity,
    Discernibility,
    Triangle,
}

impl fmt::Display for WassersteinAxiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            WassersteinAxiom::Nonnegativity => "nonnegativity",
            WassersteinAxiom::Symmetry => "symmetry",
            WassersteinAxiom::Identity => "identity",
            WassersteinAxiom::Discernibility => "discernibility",
            WassersteinAxiom::Triangle => "triangle",
        };
        f.write_str(name)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AxiomOutcome {
    pub axiom: WassersteinAxiom,
    pub checked: usize,
    /// Index tuples that fail the axiom.
    pub failures: Vec<Vec<usize>>,
}

impl AxiomOutcome {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricSuiteReport<T> {
    /// `distances[i][j] = W_p(measures[i], measures[j])`, both orders solved separately.
    pub distances: Vec<Vec<T>>,
    pub axioms: Vec<AxiomOutcome>,
}

impl<T: Scalar> MetricSuiteReport<T> {
    pub fn passed(&self) -> bool {
        self.axioms.iter().all(AxiomOutcome::passed)
    }

    pub fn outcome(&self, axiom: WassersteinAxiom) -> Option<&AxiomOutcome> {
        self.axioms.iter().find(|a| a.axiom == axiom)
    }
}

/// Checks every metric axiom of `W_p` over all pairs and ordered triples of `measures`.
///
/// Discernibility: whenever `W_p(μ, ν) ≤ tol`, the optimal plan's off-diagonal mass
/// and the weight difference must both be within `tol / min_distance`.
pub fn metric_axiom_suite<T: Scalar>(
    measures: &[DiscreteMeasure<T>],
    space: &FiniteMetricSpace<T>,
    params: &WassersteinParams<T>,
) -> Result<MetricSuiteReport<T>> {
    if measures.len() < 2 {
        return Err(OtError::Parameter("metric suite needs at least two measures".into()));
    }
    for mu in measures {
        check_on_space(mu, space)?;
    }
    let cost = power_cost(space, params.p)?;
    let k = measures.len();
    let mut distances = vec![vec![T::zero(); k]; k];
    let mut plans = Vec::with_capacity(k * k);
    for a in 0..k {
        for b in 0..k {
            let d = distance_for_cost(&measures[a], &measures[b], &cost, params.p)?;
            distances[a][b] = d.value;
            plans.push(d.plan);
        }
    }
    let tol = &params.tol;
    let weight_tol = match space.min_positive_distance() {
        Some(dmin) if !dmin.is_zero() => tol.clone() / dmin,
        _ => tol.clone(),
    };
    let neg_tol = -tol.clone();

    let mut nonneg = AxiomOutcome { axiom: WassersteinAxiom::Nonnegativity, checked: 0, failures: vec![] };
    let mut symmetry = AxiomOutcome { axiom: WassersteinAxiom::Symmetry, checked: 0, failures: vec![] };
    let mut identity = AxiomOutcome { axiom: WassersteinAxiom::Identity, checked: 0, failures: vec![] };
    let mut discern = AxiomOutcome { axiom: WassersteinAxiom::Discernibility, checked: 0, failures: vec![] };
    let mut triangle = AxiomOutcome { axiom: WassersteinAxiom::Triangle, checked: 0, failures: vec![] };

    for a in 0..k {
        for b in 0..k {
            let w = &distances[a][b];
            nonneg.checked += 1;
            if *w < neg_tol {
                nonneg.failures.push(vec![a, b]);
            }
            if a == b {
                identity.checked += 1;
                if !w.le_tol(&T::zero(), tol) {
                    identity.failures.push(vec![a]);
                }
                continue;
            }
            if a < b {
                symmetry.checked += 1;
                if !w.eq_tol(&distances[b][a], tol) {
                    symmetry.failures.push(vec![a, b]);
                }
            }
            discern.checked += 1;
            if w.le_tol(&T::zero(), tol) {
                let off_diagonal = plans[a * k + b].off_diagonal_mass();
                let equal = measures_equal(&measures[a], &measures[b], EqualityMode::Weights, &weight_tol)?;
                if !equal || !off_diagonal.le_tol(&T::zero(), &weight_tol) {
                    discern.failures.push(vec![a, b]);
                }
            }
        }
    }
    for a in 0..k {
        for b in 0..k {
            for c in 0..k {
                if a == b || b == c || a == c {
                    continue;
                }
                triangle.checked += 1;
                let detour = distances[a][b].clone() + distances[b][c].clone();
                if !distances[a][c].le_tol(&detour, tol) {
                    triangle.failures.push(vec![a, b, c]);
                }
            }
        }
    }
    Ok(MetricSuiteReport { distances, axioms: vec![nonneg, symmetry, identity, discern, triangle] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{is_coupling, product_coupling};
    use crate::scalar::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    fn measure(w: &[(i64, i64)]) -> DiscreteMeasure<Rational> {
        DiscreteMeasure::new(w.iter().map(|&(n, d)| q(n, d)).collect()).unwrap()
    }

    fn unit_pair() -> FiniteMetricSpace<Rational> {
        FiniteMetricSpace::on_line(&[q(0, 1), q(1, 1)]).unwrap()
    }

    fn exact(p: f64) -> WassersteinParams<Rational> {
        WassersteinParams::new(p, q(0, 1)).unwrap()
    }

    #[test]
    fn distances() {
        let s = unit_pair();
        let h = measure(&[(1, 2), (1, 2)]);
        for p in [1.0, 2.0, 3.0] {
            assert_eq!(wasserstein_distance(&h, &h, &s, &exact(p)).unwrap().value, q(0, 1));
            let d0 = DiscreteMeasure::dirac(0, 2).unwrap();
            let d1 = DiscreteMeasure::dirac(1, 2).unwrap();
            assert_eq!(wasserstein_distance(&d0, &d1, &s, &exact(p)).unwrap().value, q(1, 1));
        }
        let nu = measure(&[(1, 4), (3, 4)]);
        assert_eq!(wasserstein_distance(&h, &nu, &s, &exact(1.0)).unwrap().value, q(1, 4));
        // p = 2: cost 1/4, root 1/2 is exact.
        assert_eq!(wasserstein_distance(&h, &nu, &s, &exact(2.0)).unwrap().value, q(1, 2));

        let line = FiniteMetricSpace::on_line(&[q(0, 1), q(1, 2), q(1, 1)]).unwrap();
        let ends = measure(&[(1, 2), (0, 1), (1, 2)]);
        let mid = DiscreteMeasure::dirac(1, 3).unwrap();
        assert_eq!(wasserstein_distance(&ends, &mid, &line, &exact(1.0)).unwrap().value, q(1, 2));
    }

    #[test]
    fn distance_rejects_foreign_measures() {
        let s = unit_pair().with_id("pair");
        let m = measure(&[(1, 3), (1, 3), (1, 3)]);
        assert!(matches!(wasserstein_distance(&m, &m, &s, &exact(1.0)), Err(OtError::Domain(_))));
        let other = measure(&[(1, 2), (1, 2)]).with_space("elsewhere");
        assert!(matches!(wasserstein_distance(&other, &other, &s, &exact(1.0)), Err(OtError::Domain(_))));
        assert!(WassersteinParams::new(0.5, q(0, 1)).is_err());
    }

    #[test]
    fn glue_of_diagonals() {
        let diag = TransportPlan::new(vec![vec![q(1, 2), q(0, 1)], vec![q(0, 1), q(1, 2)]]).unwrap();
        let g = glue(&diag, &diag, &q(0, 1)).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    let expected = if i == j && j == k { q(1, 2) } else { q(0, 1) };
                    assert_eq!(*g.get(i, j, k), expected);
                }
            }
        }
        assert_eq!(glued_marginal_13(&g), diag);
    }

    #[test]
    fn glue_of_products() {
        let h = measure(&[(1, 2), (1, 2)]);
        let prod = product_coupling(&h, &h);
        let g = glue(&prod, &prod, &q(0, 1)).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    assert_eq!(*g.get(i, j, k), q(1, 8));
                }
            }
        }
        assert_eq!(g.marginal_12(), prod);
        assert_eq!(g.marginal_23(), prod);
        let p13 = glued_marginal_13(&g);
        assert_eq!(p13, prod);
        assert!(is_coupling(&p13, &h, &h, &q(0, 1)).unwrap().is_valid());
    }

    #[test]
    fn glue_with_zero_middle_atom() {
        let pi12 = TransportPlan::new(vec![vec![q(1, 2), q(0, 1), q(0, 1)], vec![q(0, 1), q(0, 1), q(1, 2)]]).unwrap();
        let pi23 = TransportPlan::new(vec![vec![q(1, 4), q(1, 4)], vec![q(0, 1), q(0, 1)], vec![q(1, 2), q(0, 1)]]).unwrap();
        let g = glue(&pi12, &pi23, &q(0, 1)).unwrap();
        for i in 0..2 {
            for k in 0..2 {
                assert_eq!(*g.get(i, 1, k), q(0, 1));
            }
        }
        assert_eq!(g.marginal_12(), pi12);
        assert_eq!(g.marginal_23(), pi23);
    }

    #[test]
    fn glue_mismatch_names_worst_index() {
        let pi12 = TransportPlan::new(vec![vec![q(1, 2), q(1, 4), q(1, 4)]]).unwrap();
        let pi23 = TransportPlan::new(vec![vec![q(3, 8)], vec![q(1, 8)], vec![q(1, 2)]]).unwrap();
        match glue(&pi12, &pi23, &q(0, 1)) {
            Err(OtError::Glue { index, .. }) => assert_eq!(index, 2),
            other => panic!("expected glue error, got {other:?}"),
        }
    }

    #[test]
    fn triangle_witnesses() {
        let s = unit_pair();
        let h = measure(&[(1, 2), (1, 2)]);
        let w = triangle_witness(&h, &h, &h, &s, &exact(1.0)).unwrap();
        assert_eq!((w.w12.clone(), w.w23.clone(), w.w13.clone(), w.glued_cost_13.clone()), (q(0, 1), q(0, 1), q(0, 1), q(0, 1)));
        assert!(w.holds);

        let nu = measure(&[(1, 4), (3, 4)]);
        let w = triangle_witness(&h, &h, &nu, &s, &exact(1.0)).unwrap();
        assert_eq!(w.w12, q(0, 1));
        assert_eq!(w.w13, w.w23);
        assert!(w.holds);
    }

    #[test]
    fn metric_suite_on_diracs() {
        let s = unit_pair();
        let list = vec![DiscreteMeasure::dirac(0, 2).unwrap(), DiscreteMeasure::dirac(1, 2).unwrap()];
        let report = metric_axiom_suite(&list, &s, &exact(1.0)).unwrap();
        assert!(report.passed());
        assert_eq!(report.distances, vec![vec![q(0, 1), q(1, 1)], vec![q(1, 1), q(0, 1)]]);

        let h = measure(&[(1, 2), (1, 2)]);
        let report = metric_axiom_suite(&[h.clone(), h], &s, &exact(2.0)).unwrap();
        assert!(report.passed());
        assert_eq!(report.distances[0][1], q(0, 1));
        assert_eq!(report.outcome(WassersteinAxiom::Discernibility).unwrap().checked, 2);

        assert!(metric_axiom_suite(&list[..1], &s, &exact(1.0)).is_err());
    }
}
