//! State distance: min-shift normalization onto a discrete distribution
//! followed by the 1-Wasserstein (earth mover's) distance on the ordered
//! support `0..d` with unit spacing.
//!
//! On a 1-D support the optimal coupling never needs to be built: the
//! transport cost equals the L1 distance between the two cumulative sums.

use crate::error::{check_dim, Error, Result};
use crate::scalar::Scalar;

/// Probability mass over the support points `0..len`.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution<T> {
    mass: Vec<T>,
}

impl<T: Scalar> Distribution<T> {
    /// Validates that `mass` is non-negative and sums to one.
    pub fn new(mass: Vec<T>) -> Result<Self> {
        if mass.is_empty() {
            return Err(Error::InvalidInput("empty distribution".into()));
        }
        if mass.iter().any(|m| !m.is_finite() || *m < T::zero()) {
            return Err(Error::InvalidInput(
                "mass must be finite and non-negative".into(),
            ));
        }
        let total: T = mass.iter().copied().sum();
        if (total - T::one()).abs() > T::lit(1e-9) {
            return Err(Error::InvalidInput(format!("mass sums to {total}, not 1")));
        }
        Ok(Self { mass })
    }

    pub fn mass(&self) -> &[T] {
        &self.mass
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }
}

/// Shifts `s` so its minimum is zero and rescales it to unit sum. A constant
/// vector maps to the uniform distribution.
pub fn normalize_to_distribution<T: Scalar>(s: &[T]) -> Result<Distribution<T>> {
    if s.is_empty() {
        return Err(Error::InvalidInput("empty state vector".into()));
    }
    if s.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(
            "state vector has non-finite entries".into(),
        ));
    }
    let min = s.iter().copied().fold(T::infinity(), T::min);
    let total: T = s.iter().map(|&x| x - min).sum();
    let mass = if total > T::zero() {
        s.iter().map(|&x| (x - min) / total).collect()
    } else {
        let u = T::one() / T::lit(s.len() as f64);
        vec![u; s.len()]
    };
    Ok(Distribution { mass })
}

/// 1-Wasserstein distance between two distributions on the same support.
pub fn wasserstein1<T: Scalar>(p: &Distribution<T>, q: &Distribution<T>) -> Result<T> {
    check_dim(p.len(), q.len())?;
    Ok(cdf_l1(p.mass.iter().copied(), q.mass.iter().copied()))
}

fn cdf_l1<T: Scalar>(p: impl Iterator<Item = T>, q: impl Iterator<Item = T>) -> T {
    let mut cp = T::zero();
    let mut cq = T::zero();
    let mut acc = T::zero();
    for (a, b) in p.zip(q) {
        cp += a;
        cq += b;
        acc += (cp - cq).abs();
    }
    acc
}

/// `Dis(s, s') = W1(P(s), P(s'))`.
///
/// Evaluated without allocating; agrees with composing
/// [`normalize_to_distribution`] and [`wasserstein1`].
pub fn state_distance<T: Scalar>(s: &[T], s_other: &[T]) -> Result<T> {
    check_dim(s.len(), s_other.len())?;
    let (min_a, sum_a) = shift_stats(s)?;
    let (min_b, sum_b) = shift_stats(s_other)?;
    let n = T::lit(s.len() as f64);
    let weight = |x: T, min: T, total: T| {
        if total > T::zero() {
            (x - min) / total
        } else {
            T::one() / n
        }
    };
    Ok(cdf_l1(
        s.iter().map(|&x| weight(x, min_a, sum_a)),
        s_other.iter().map(|&x| weight(x, min_b, sum_b)),
    ))
}

fn shift_stats<T: Scalar>(s: &[T]) -> Result<(T, T)> {
    if s.is_empty() {
        return Err(Error::InvalidInput("empty state vector".into()));
    }
    let mut min = T::infinity();
    for &x in s {
        if !x.is_finite() {
            return Err(Error::InvalidInput(
                "state vector has non-finite entries".into(),
            ));
        }
        min = min.min(x);
    }
    let total = s.iter().map(|&x| x - min).sum();
    Ok((min, total))
}
