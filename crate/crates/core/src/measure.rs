//! Discrete probability measures, pushforwards and integration.

use crate::error::{OtError, Result};
use crate::scalar::{Scalar, FLOAT_MASS_TOL};

/// Probability weights on the points of a finite space.
///
/// Zero-weight points stay in the representation so that indices line up
/// across measures on the same space.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure<T> {
    space_id: Option<String>,
    weights: Vec<T>,
}

/// Mass tolerance for the mode: exact for rationals.
pub(crate) fn mass_tol<T: Scalar>() -> T {
    match T::MODE {
        crate::scalar::NumericMode::Rational => T::zero(),
        crate::scalar::NumericMode::Float => T::from_f64(FLOAT_MASS_TOL).unwrap_or_else(T::zero),
    }
}

impl<T: Scalar> DiscreteMeasure<T> {
    /// Validates nonnegativity and unit mass. Never renormalizes.
    pub fn new(weights: Vec<T>) -> Result<Self> {
        if weights.is_empty() {
            return Err(OtError::Domain("a measure needs at least one point".into()));
        }
        if let Some(i) = weights.iter().position(|w| !w.is_finite_value()) {
            return Err(OtError::Data(format!("weight {i} is not finite")));
        }
        if let Some(i) = weights.iter().position(Scalar::is_negative_val) {
            return Err(OtError::Domain(format!("weight {i} is negative ({})", weights[i].render())));
        }
        let total: T = weights.iter().cloned().sum();
        if !total.eq_tol(&T::one(), &mass_tol::<T>()) {
            return Err(OtError::Normalization { sum: total.render() });
        }
        Ok(Self { space_id: None, weights })
    }

    pub fn on_space(space_id: impl Into<String>, weights: Vec<T>) -> Result<Self> {
        Ok(Self::new(weights)?.with_space(space_id))
    }

    pub fn with_space(mut self, space_id: impl Into<String>) -> Self {
        self.space_id = Some(space_id.into());
        self
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(OtError::Domain("uniform measure on zero points".into()));
        }
        Self::new(vec![T::one() / T::from_int(n as i64); n])
    }

    pub fn dirac(i: usize, n: usize) -> Result<Self> {
        if i >= n {
            return Err(OtError::Index { index: i, size: n });
        }
        let mut weights = vec![T::zero(); n];
        weights[i] = T::one();
        Self::new(weights)
    }

    /// Empirical measure: `weights[i] = count(i) / len`.
    pub fn empirical_from_samples(samples: &[usize], n: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(OtError::Domain("empirical measure of an empty sample".into()));
        }
        let mut counts = vec![0i64; n];
        for &s in samples {
            *counts.get_mut(s).ok_or(OtError::Index { index: s, size: n })? += 1;
        }
        let total = samples.len() as i64;
        Self::new(counts.into_iter().map(|c| T::ratio(c, total)).collect())
    }

    pub fn space_id(&self) -> Option<&str> {
        self.space_id.as_deref()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> &T {
        &self.weights[i]
    }

    pub fn total_mass(&self) -> T {
        self.weights.iter().cloned().sum()
    }

    /// Mass of an index set; duplicate indices count once.
    pub fn mass_of(&self, indices: &[usize]) -> Result<T> {
        let mut seen = vec![false; self.len()];
        let mut total = T::zero();
        for &i in indices {
            let flag = seen.get_mut(i).ok_or(OtError::Index { index: i, size: self.len() })?;
            if !*flag {
                *flag = true;
                total += self.weights[i].clone();
            }
        }
        Ok(total)
    }

    /// Image measure under `map`: `result[j] = Σ_{map(i) = j} weights[i]`.
    pub fn pushforward(&self, map: &[usize], target_len: usize) -> Result<Self> {
        if map.len() != self.len() {
            return Err(OtError::Shape(format!("map has {} entries for {} points", map.len(), self.len())));
        }
        let mut out = vec![T::zero(); target_len];
        for (w, &j) in self.weights.iter().zip(map) {
            *out.get_mut(j).ok_or(OtError::Index { index: j, size: target_len })? += w.clone();
        }
        Ok(Self { space_id: None, weights: out })
    }

    pub fn integrate(&self, phi: &TestFunction<T>) -> Result<T> {
        if phi.len() != self.len() {
            return Err(OtError::Shape(format!("test function has {} values for {} points", phi.len(), self.len())));
        }
        Ok(self.weights.iter().zip(phi.values()).map(|(w, v)| w.clone() * v.clone()).sum())
    }

    /// Same underlying space: equal length and no conflicting space ids.
    pub fn same_space(&self, other: &Self) -> bool {
        self.len() == other.len()
            && match (self.space_id(), other.space_id()) {
                (Some(a), Some(b)) => a == b,
                _ => true,
            }
    }

    pub(crate) fn from_raw(weights: Vec<T>) -> Self {
        Self { space_id: None, weights }
    }
}

/// A function on the points of a finite space; every such function is
/// bounded and continuous.
#[derive(Clone, Debug, PartialEq)]
pub struct TestFunction<T> {
    values: Vec<T>,
}

impl<T: Scalar> TestFunction<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite_value()) {
            return Err(OtError::Data(format!("test function value {i} is not finite")));
        }
        Ok(Self { values })
    }

    pub fn zero(n: usize) -> Self {
        Self { values: vec![T::zero(); n] }
    }

    pub fn indicator(i: usize, n: usize) -> Self {
        let mut values = vec![T::zero(); n];
        values[i] = T::one();
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// `alpha · self + other`.
    pub fn affine(&self, alpha: &T, other: &Self) -> Result<Self> {
        if self.len() != other.len() {
            return Err(OtError::Shape("test functions differ in length".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| alpha.clone() * a.clone() + b.clone()).collect();
        Ok(Self { values })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EqualityMode {
    /// Compare weight vectors directly.
    Weights,
    /// Compare integrals of each singleton indicator.
    TestFunctions,
}

pub fn measures_equal<T: Scalar>(mu1: &DiscreteMeasure<T>, mu2: &DiscreteMeasure<T>, mode: EqualityMode, tol: &T) -> Result<bool> {
    if !mu1.same_space(mu2) {
        return Err(OtError::Domain("measures live on different spaces".into()));
    }
    match mode {
        EqualityMode::Weights => Ok(mu1.weights.iter().zip(&mu2.weights).all(|(a, b)| a.eq_tol(b, tol))),
        EqualityMode::TestFunctions => {
            let n = mu1.len();
            for i in 0..n {
                let phi = TestFunction::indicator(i, n);
                if !mu1.integrate(&phi)?.eq_tol(&mu2.integrate(&phi)?, tol) {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    fn qm(w: &[(i64, i64)]) -> DiscreteMeasure<Rational> {
        DiscreteMeasure::new(w.iter().map(|&(n, d)| q(n, d)).collect()).unwrap()
    }

    #[test]
    fn construction() {
        assert!(DiscreteMeasure::new(vec![q(1, 2), q(1, 2)]).is_ok());
        assert!(DiscreteMeasure::new(vec![q(1, 1), q(0, 1), q(0, 1)]).is_ok());
        assert!(matches!(DiscreteMeasure::new(vec![0.3, 0.3]), Err(OtError::Normalization { .. })));
        assert!(matches!(DiscreteMeasure::new(vec![q(3, 2), q(-1, 2)]), Err(OtError::Domain(_))));
        assert!(DiscreteMeasure::new(vec![0.1, 0.2, 0.7]).is_ok());
    }

    #[test]
    fn diracs() {
        assert_eq!(DiscreteMeasure::<Rational>::dirac(0, 2).unwrap().weights(), &[q(1, 1), q(0, 1)]);
        assert_eq!(DiscreteMeasure::<Rational>::dirac(1, 3).unwrap().weights(), &[q(0, 1), q(1, 1), q(0, 1)]);
        assert_eq!(DiscreteMeasure::<Rational>::dirac(3, 2), Err(OtError::Index { index: 3, size: 2 }));
    }

    #[test]
    fn empirical() {
        let m = DiscreteMeasure::<Rational>::empirical_from_samples(&[0, 0, 1, 1], 2).unwrap();
        assert_eq!(m.weights(), &[q(1, 2), q(1, 2)]);
        let m = DiscreteMeasure::<Rational>::empirical_from_samples(&[2], 3).unwrap();
        assert_eq!(m.weights(), &[q(0, 1), q(0, 1), q(1, 1)]);
        let m = DiscreteMeasure::<Rational>::empirical_from_samples(&[0, 1, 1, 1], 2).unwrap();
        assert_eq!(m.weights(), &[q(1, 4), q(3, 4)]);
        assert!(matches!(DiscreteMeasure::<Rational>::empirical_from_samples(&[], 2), Err(OtError::Domain(_))));
        assert!(matches!(DiscreteMeasure::<Rational>::empirical_from_samples(&[5], 2), Err(OtError::Index { .. })));
    }

    #[test]
    fn pushforwards() {
        let mu = qm(&[(1, 2), (1, 2)]);
        assert_eq!(mu.pushforward(&[0, 0], 2).unwrap().weights(), &[q(1, 1), q(0, 1)]);
        let mu = qm(&[(1, 1), (0, 1)]);
        assert_eq!(mu.pushforward(&[0, 1], 2).unwrap().weights(), mu.weights());
        let mu = qm(&[(1, 4), (1, 4), (1, 2)]);
        assert_eq!(mu.pushforward(&[1, 1, 0], 2).unwrap().weights(), &[q(1, 2), q(1, 2)]);
        assert!(matches!(mu.pushforward(&[1, 1, 2], 2), Err(OtError::Index { index: 2, size: 2 })));
    }

    #[test]
    fn integration() {
        let tf = |v: &[i64]| TestFunction::new(v.iter().map(|&x| q(x, 1)).collect()).unwrap();
        assert_eq!(qm(&[(1, 2), (1, 2)]).integrate(&tf(&[0, 1])).unwrap(), q(1, 2));
        assert_eq!(qm(&[(1, 1), (0, 1)]).integrate(&tf(&[7, -3])).unwrap(), q(7, 1));
        assert_eq!(qm(&[(1, 4), (3, 4)]).integrate(&tf(&[4, 0])).unwrap(), q(1, 1));
        assert!(matches!(qm(&[(1, 1)]).integrate(&tf(&[1, 2])), Err(OtError::Shape(_))));
    }

    #[test]
    fn equality_modes() {
        let z = q(0, 1);
        let half = qm(&[(1, 2), (1, 2)]);
        for mode in [EqualityMode::Weights, EqualityMode::TestFunctions] {
            assert!(measures_equal(&half, &half, mode, &z).unwrap());
            assert!(!measures_equal(&qm(&[(1, 1), (0, 1)]), &qm(&[(0, 1), (1, 1)]), mode, &z).unwrap());
            let third = qm(&[(1, 3), (1, 3), (1, 3)]);
            assert!(measures_equal(&third, &third, mode, &z).unwrap());
        }
        let other = half.clone().with_space("b");
        let mine = half.with_space("a");
        assert!(matches!(measures_equal(&mine, &other, EqualityMode::Weights, &z), Err(OtError::Domain(_))));
    }
}
