//! Seeded random instances. Every generator draws integers first and
//! normalizes, so the same seed yields the same instance in both numeric modes.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::coupling::TransportPlan;
use crate::measure::DiscreteMeasure;
use crate::scalar::{Rational, Scalar};
use crate::space::{validate_metric, CostMatrix, FiniteMetricSpace, NormOrder};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for instance `k` of a seeded batch, independent of scheduling order.
pub fn instance_rng(seed: u64, k: usize) -> SeededRng {
    rng(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(k as u64))
}

/// Integer weights in `1..=max_weight`, normalized. Each atom is zeroed with
/// probability `zero_prob`, but at least one atom stays positive.
pub fn random_weights<R: Rng>(rng: &mut R, n: usize, max_weight: i64, zero_prob: f64) -> Vec<i64> {
    assert!(n > 0 && max_weight > 0);
    let mut w: Vec<i64> = (0..n).map(|_| if rng.random_bool(zero_prob) { 0 } else { rng.random_range(1..=max_weight) }).collect();
    if w.iter().all(|&x| x == 0) {
        let k = rng.random_range(0..n);
        w[k] = rng.random_range(1..=max_weight);
    }
    w
}

/// Exact normalization: `w_i / Σ w`.
pub fn normalize<T: Scalar>(weights: &[i64]) -> Vec<T> {
    let total: i64 = weights.iter().sum();
    weights.iter().map(|&w| T::ratio(w, total)).collect()
}

pub fn random_measure<T: Scalar, R: Rng>(rng: &mut R, n: usize, max_weight: i64, zero_prob: f64) -> DiscreteMeasure<T> {
    DiscreteMeasure::new(normalize(&random_weights(rng, n, max_weight, zero_prob))).expect("normalized weights form a measure")
}

/// Integer cost matrix with entries in `lo..=hi`.
pub fn random_integer_costs<R: Rng>(rng: &mut R, rows: usize, cols: usize, lo: i64, hi: i64) -> Vec<Vec<i64>> {
    (0..rows).map(|_| (0..cols).map(|_| rng.random_range(lo..=hi)).collect()).collect()
}

pub fn cost_from_integers<T: Scalar>(costs: &[Vec<i64>]) -> CostMatrix<T> {
    CostMatrix::from_finite(costs.iter().map(|r| r.iter().map(|&c| T::from_int(c)).collect()).collect()).expect("rectangular integer costs")
}

pub fn random_cost<T: Scalar, R: Rng>(rng: &mut R, rows: usize, cols: usize, lo: i64, hi: i64) -> CostMatrix<T> {
    cost_from_integers(&random_integer_costs(rng, rows, cols, lo, hi))
}

/// Distinct integer points in `[0, range]^dim`.
pub fn random_points<R: Rng>(rng: &mut R, n: usize, dim: usize, range: i64) -> Vec<Vec<i64>> {
    let mut points: Vec<Vec<i64>> = Vec::with_capacity(n);
    while points.len() < n {
        let p: Vec<i64> = (0..dim).map(|_| rng.random_range(0..=range)).collect();
        if !points.contains(&p) {
            points.push(p);
        }
    }
    points
}

/// Point cloud with the given norm. ℓ² distances of integer points are
/// irrational in general; in rational mode they are approximated, and the
/// cloud is redrawn until the approximations satisfy the metric axioms exactly.
pub fn random_cloud<T: Scalar, R: Rng>(rng: &mut R, n: usize, dim: usize, range: i64, norm: NormOrder) -> FiniteMetricSpace<T> {
    loop {
        let points: Vec<Vec<T>> =
            random_points(rng, n, dim, range).into_iter().map(|p| p.into_iter().map(T::from_int).collect()).collect();
        let space = FiniteMetricSpace::from_point_cloud(&points, norm).expect("distinct points");
        if validate_metric(space.distances(), &T::zero()).map(|v| v.is_empty()).unwrap_or(false) {
            return space;
        }
    }
}

/// Random coupling with integer-proportional entries; some cells are zero
/// with probability `zero_prob`.
pub fn random_plan<T: Scalar, R: Rng>(rng: &mut R, rows: usize, cols: usize, max_weight: i64, zero_prob: f64) -> TransportPlan<T> {
    let w = random_weights(rng, rows * cols, max_weight, zero_prob);
    TransportPlan::from_flat(rows, cols, normalize(&w)).expect("normalized plan")
}

pub fn random_mask<R: Rng>(rng: &mut R, rows: usize, cols: usize, keep_prob: f64) -> Vec<Vec<bool>> {
    (0..rows).map(|_| (0..cols).map(|_| rng.random_bool(keep_prob)).collect()).collect()
}

/// Random subset of `0..n` as sorted indices.
pub fn random_subset<R: Rng>(rng: &mut R, n: usize, keep_prob: f64) -> Vec<usize> {
    (0..n).filter(|_| rng.random_bool(keep_prob)).collect()
}

/// Exact rational copy of a float measure built from the same integer weights.
pub fn rational_measure(weights: &[i64]) -> DiscreteMeasure<Rational> {
    DiscreteMeasure::new(normalize(weights)).expect("normalized weights form a measure")
}
