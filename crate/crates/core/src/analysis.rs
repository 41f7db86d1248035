//! Lower semicontinuity on finite spaces: Moreau–Yosida approximation,
//! narrow convergence of measure sequences and the liminf inequality for
//! transport costs.
//!
//! Finite sequences stand in for asymptotic statements. Conventions:
//! - a sequence "converges" when every element of its tail, the last
//!   `max(2, ⌈len/4⌉)` elements, lies within `tol` of the limit;
//! - `liminf` is the minimum over the last `⌈len/4⌉` elements.

use crate::coupling::TransportPlan;
use crate::error::{OtError, Result};
use crate::measure::{DiscreteMeasure, TestFunction};
use crate::scalar::{Extended, Scalar};
use crate::solver::cost_of_plan;
use crate::space::{CostMatrix, FiniteMetricSpace};

/// Function on a finite space with values in `ℝ ∪ {+∞}`, finite somewhere.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedFunction<T> {
    values: Vec<Extended<T>>,
}

impl<T: Scalar> ExtendedFunction<T> {
    pub fn new(values: Vec<Extended<T>>) -> Result<Self> {
        if !values.iter().any(Extended::is_finite) {
            return Err(OtError::Domain("function is +∞ everywhere".into()));
        }
        if values.iter().filter_map(Extended::finite).any(|v| !v.is_finite_value()) {
            return Err(OtError::Data("function value is not finite".into()));
        }
        Ok(Self { values })
    }

    pub fn from_finite(values: Vec<T>) -> Result<Self> {
        Self::new(values.into_iter().map(Extended::Finite).collect())
    }

    pub fn values(&self) -> &[Extended<T>] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn finite_range(&self) -> (T, T) {
        let mut finite = self.values.iter().filter_map(Extended::finite).cloned();
        let first = finite.next().expect("at least one finite value");
        finite.fold((first.clone(), first), |(lo, hi), v| (T::min_val(lo, v.clone()), T::max_val(hi, v)))
    }
}

fn check_len<T: Scalar>(f: &ExtendedFunction<T>, space: &FiniteMetricSpace<T>) -> Result<()> {
    if f.len() != space.len() {
        return Err(OtError::Shape(format!("function has {} values on a {}-point space", f.len(), space.len())));
    }
    Ok(())
}

/// `f_n(x) = min_z (f(z) + n·d(x, z))`; always finite.
pub fn moreau_yosida<T: Scalar>(f: &ExtendedFunction<T>, space: &FiniteMetricSpace<T>, n: u64) -> Result<Vec<T>> {
    check_len(f, space)?;
    if n == 0 {
        return Err(OtError::Parameter("Moreau–Yosida index must be positive".into()));
    }
    let slope = T::from_int(n as i64);
    Ok((0..space.len())
        .map(|x| {
            f.values
                .iter()
                .enumerate()
                .filter_map(|(z, fz)| fz.finite().map(|v| v.clone() + slope.clone() * space.dist(x, z).clone()))
                .reduce(T::min_val)
                .expect("f is finite somewhere")
        })
        .collect())
}

/// `(max f − min f) / min_distance` over finite values; past it `f_n = f` on finite points.
pub fn exactness_threshold<T: Scalar>(f: &ExtendedFunction<T>, space: &FiniteMetricSpace<T>) -> Result<T> {
    check_len(f, space)?;
    let (lo, hi) = f.finite_range();
    Ok(match space.min_positive_distance() {
        Some(dmin) if !dmin.is_zero() => (hi - lo) / dmin,
        _ => T::zero(),
    })
}

/// Smallest positive integer `≥ t`.
fn ceil_index<T: Scalar>(t: &T) -> u64 {
    let mut c = t.to_f64().ceil().max(1.0) as u64;
    while T::from_int(c as i64) < *t {
        c += 1;
    }
    while c > 1 && T::from_int(c as i64 - 1) >= *t {
        c -= 1;
    }
    c
}

#[derive(Clone, Debug, PartialEq)]
pub struct MoreauYosidaReport<T> {
    pub max_index: u64,
    pub threshold: T,
    /// `⌈threshold⌉`, at least 1.
    pub threshold_index: u64,
    /// `f_n ≤ f_{n+1}` for `n < max_index`.
    pub monotone: bool,
    /// `f_n ≤ f`.
    pub dominated: bool,
    /// `|f_n(x) − f_n(y)| ≤ n·d(x, y)`.
    pub lipschitz: bool,
    /// Pairs attaining the Lipschitz bound at `max_index`.
    pub lipschitz_tight_pairs: Vec<(usize, usize)>,
    /// `f_n = f` on finite points for `n = threshold_index` and `threshold_index + 1`.
    pub exact_past_threshold: bool,
    /// On `+∞` points, `f_n(x) ≥ min f + n·dist(x, finite points)` for every checked `n`.
    pub diverges_where_infinite: bool,
    /// `f_{max_index}` equals `f` on finite points (only meaningful once past the threshold).
    pub converged_at_max_index: bool,
}

impl<T> MoreauYosidaReport<T> {
    pub fn passed(&self) -> bool {
        self.monotone && self.dominated && self.lipschitz && self.exact_past_threshold && self.diverges_where_infinite
    }
}

/// Verifies the Moreau–Yosida properties for `n = 1..=max_index`, plus exactness past the threshold.
///
/// `f` only has to be bounded below, which on a finite space always holds;
/// negative values are accepted.
pub fn check_moreau_yosida_properties<T: Scalar>(
    f: &ExtendedFunction<T>,
    space: &FiniteMetricSpace<T>,
    max_index: u64,
) -> Result<MoreauYosidaReport<T>> {
    check_len(f, space)?;
    if max_index == 0 {
        return Err(OtError::Parameter("max index must be positive".into()));
    }
    let tol = T::default_tol();
    let size = space.len();
    let threshold = exactness_threshold(f, space)?;
    let threshold_index = ceil_index(&threshold);
    let (min_f, _) = f.finite_range();
    let gap_to_finite: Vec<Option<T>> = (0..size)
        .map(|x| {
            f.values[x].is_infinite().then(|| {
                (0..size)
                    .filter(|&z| f.values[z].is_finite())
                    .map(|z| space.dist(x, z).clone())
                    .reduce(T::min_val)
                    .expect("finite point exists")
            })
        })
        .collect();

    let matches_f = |fn_vals: &[T]| {
        fn_vals.iter().zip(&f.values).all(|(a, b)| match b {
            Extended::Finite(v) => a.eq_tol(v, &tol),
            Extended::PosInf => true,
        })
    };
    let diverges = |n: u64, fn_vals: &[T]| {
        let slope = T::from_int(n as i64);
        fn_vals.iter().zip(&gap_to_finite).all(|(v, gap)| match gap {
            Some(g) => (min_f.clone() + slope.clone() * g.clone()).le_tol(v, &tol),
            None => true,
        })
    };

    let mut monotone = true;
    let mut dominated = true;
    let mut lipschitz = true;
    let mut diverges_where_infinite = true;
    let mut previous: Option<Vec<T>> = None;
    let mut last = Vec::new();
    for n in 1..=max_index {
        let current = moreau_yosida(f, space, n)?;
        if let Some(prev) = &previous {
            monotone &= prev.iter().zip(&current).all(|(a, b)| a.le_tol(b, &tol));
        }
        dominated &= current.iter().zip(&f.values).all(|(a, b)| Extended::Finite(a.clone()).le_tol(b, &tol));
        let slope = T::from_int(n as i64);
        for x in 0..size {
            for y in (x + 1)..size {
                let diff = (current[x].clone() - current[y].clone()).abs_val();
                lipschitz &= diff.le_tol(&(slope.clone() * space.dist(x, y).clone()), &tol);
            }
        }
        diverges_where_infinite &= diverges(n, &current);
        previous = Some(current.clone());
        last = current;
    }

    let slope = T::from_int(max_index as i64);
    let mut lipschitz_tight_pairs = Vec::new();
    for x in 0..size {
        for y in (x + 1)..size {
            let diff = (last[x].clone() - last[y].clone()).abs_val();
            if diff.eq_tol(&(slope.clone() * space.dist(x, y).clone()), &tol) {
                lipschitz_tight_pairs.push((x, y));
            }
        }
    }

    let mut exact_past_threshold = true;
    for n in [threshold_index, threshold_index + 1] {
        let vals = moreau_yosida(f, space, n)?;
        exact_past_threshold &= matches_f(&vals);
        diverges_where_infinite &= diverges(n, &vals);
    }

    Ok(MoreauYosidaReport {
        max_index,
        threshold,
        threshold_index,
        monotone,
        dominated,
        lipschitz,
        lipschitz_tight_pairs,
        exact_past_threshold,
        diverges_where_infinite,
        converged_at_max_index: matches_f(&last),
    })
}

/// Nonempty ordered list of measures on one space.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasureSequence<T> {
    items: Vec<DiscreteMeasure<T>>,
}

impl<T: Scalar> MeasureSequence<T> {
    pub fn new(items: Vec<DiscreteMeasure<T>>) -> Result<Self> {
        let first = items.first().ok_or_else(|| OtError::Domain("measure sequence is empty".into()))?;
        if let Some(k) = items.iter().position(|m| !m.same_space(first)) {
            return Err(OtError::Domain(format!("sequence element {k} lives on a different space")));
        }
        Ok(Self { items })
    }

    pub fn items(&self) -> &[DiscreteMeasure<T>] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

fn convergence_tail(len: usize) -> usize {
    len.div_ceil(4).max(2).min(len)
}

#[derive(Clone, Debug, PartialEq)]
pub struct NarrowLimitReport<T> {
    pub tail_len: usize,
    /// Largest coordinate deviation from the limit over the tail.
    pub max_tail_deviation: T,
    pub last_deviation: T,
    pub converges: bool,
    /// The singleton-indicator integrals give the same verdict as the weights.
    pub test_functions_agree: bool,
}

/// On a finite space narrow convergence is coordinatewise convergence of weights.
pub fn narrow_limit_check<T: Scalar>(seq: &MeasureSequence<T>, limit: &DiscreteMeasure<T>, tol: &T) -> Result<NarrowLimitReport<T>> {
    if !seq.items[0].same_space(limit) {
        return Err(OtError::Domain("limit lives on a different space".into()));
    }
    let n = limit.len();
    let by_weights: Vec<T> = seq
        .items
        .iter()
        .map(|m| m.weights().iter().zip(limit.weights()).map(|(a, b)| (a.clone() - b.clone()).abs_val()).fold(T::zero(), T::max_val))
        .collect();
    let indicators: Vec<TestFunction<T>> = (0..n).map(|i| TestFunction::indicator(i, n)).collect();
    let mut by_integrals = Vec::with_capacity(seq.len());
    for m in &seq.items {
        let mut worst = T::zero();
        for phi in &indicators {
            worst = T::max_val(worst, (m.integrate(phi)? - limit.integrate(phi)?).abs_val());
        }
        by_integrals.push(worst);
    }
    let tail_len = convergence_tail(seq.len());
    let tail = seq.len() - tail_len;
    let verdict = |devs: &[T]| devs[tail..].iter().all(|d| *d <= *tol);
    let converges = verdict(&by_weights);
    let test_functions_agree = converges == verdict(&by_integrals);
    let max_tail_deviation = by_weights[tail..].iter().cloned().fold(T::zero(), T::max_val);
    let last_deviation = by_weights.last().cloned().expect("nonempty sequence");
    Ok(NarrowLimitReport { tail_len, max_tail_deviation, last_deviation, converges, test_functions_agree })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LiminfReport<T> {
    /// Number of final elements the liminf is taken over.
    pub tail_len: usize,
    pub liminf_value: Extended<T>,
    pub limit_value: Extended<T>,
    /// `limit_value ≤ liminf_value + tol`.
    pub holds: bool,
    pub strict: bool,
    /// With all-finite costs: `|liminf − limit|` is within the continuity bound
    /// `max|c| · ‖π_k − π‖₁` over the tail. `None` when some cost is `+∞`.
    pub equality: Option<bool>,
}

/// Lower semicontinuity of `π ↦ ∫ c dπ` along `plans → limit`.
///
/// `plans` must converge entrywise to `limit` (tail within `tol`); otherwise a
/// precondition error names the offending element and cell.
pub fn liminf_cost_check<T: Scalar>(
    plans: &[TransportPlan<T>],
    limit: &TransportPlan<T>,
    c: &CostMatrix<T>,
    tol: &T,
) -> Result<LiminfReport<T>> {
    if plans.is_empty() {
        return Err(OtError::Domain("plan sequence is empty".into()));
    }
    if let Some(k) = plans.iter().position(|p| p.rows() != limit.rows() || p.cols() != limit.cols()) {
        return Err(OtError::Shape(format!("plan {k} does not match the limit's shape")));
    }
    let conv_tail = plans.len() - convergence_tail(plans.len());
    for (k, plan) in plans.iter().enumerate().skip(conv_tail) {
        if let Some(pos) = plan.entries().iter().zip(limit.entries()).position(|(a, b)| !a.eq_tol(b, tol)) {
            return Err(OtError::Precondition(format!(
                "plan {k} differs from the limit at ({}, {}) beyond tolerance",
                pos / limit.cols(),
                pos % limit.cols()
            )));
        }
    }

    let tail_len = plans.len().div_ceil(4).max(1);
    let tail = &plans[plans.len() - tail_len..];
    let mut liminf_value = Extended::PosInf;
    for plan in tail {
        let cost = cost_of_plan(plan, c)?;
        if cost < liminf_value {
            liminf_value = cost;
        }
    }
    let limit_value = cost_of_plan(limit, c)?;
    let holds = limit_value.le_tol(&liminf_value, tol);
    let strict = !liminf_value.le_tol(&limit_value, tol);

    let equality = (!c.has_forbidden_cells()).then(|| {
        let scale = c.max_abs_finite();
        let bound = tail
            .iter()
            .map(|p| {
                let l1: T = p.entries().iter().zip(limit.entries()).map(|(a, b)| (a.clone() - b.clone()).abs_val()).sum();
                scale.clone() * l1
            })
            .fold(T::zero(), T::max_val);
        match (&liminf_value, &limit_value) {
            (Extended::Finite(a), Extended::Finite(b)) => a.eq_tol(b, &(bound + tol.clone())),
            _ => false,
        }
    });
    Ok(LiminfReport { tail_len, liminf_value, limit_value, holds, strict, equality })
}
