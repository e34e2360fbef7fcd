use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Probability vector over `k` classes.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassDistribution<T> {
    probabilities: Vec<T>,
}

impl<T: Scalar> ClassDistribution<T> {
    /// Sum tolerance: 1e-9, widened for low-precision scalars.
    pub fn tolerance(k: usize) -> f64 {
        1e-9f64.max(16.0 * T::epsilon().as_f64() * k as f64)
    }

    pub fn new(probabilities: Vec<T>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::contract("distribution over zero classes"));
        }
        if probabilities.iter().any(|p| !p.is_finite() || *p < T::zero()) {
            return Err(Error::contract("distribution entries must be finite and nonnegative"));
        }
        let sum: f64 = probabilities.iter().map(|p| p.as_f64()).sum();
        if (sum - 1.0).abs() > Self::tolerance(probabilities.len()) {
            return Err(Error::contract(format!("distribution sums to {sum}")));
        }
        Ok(ClassDistribution { probabilities })
    }

    pub fn uniform(k: usize) -> Self {
        let p = T::one() / T::from_usize(k).unwrap();
        ClassDistribution {
            probabilities: vec![p; k],
        }
    }

    pub fn probabilities(&self) -> &[T] {
        &self.probabilities
    }

    pub fn num_classes(&self) -> usize {
        self.probabilities.len()
    }

    /// Index of the largest entry; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        argmax(&self.probabilities)
    }

    pub fn peak(&self) -> T {
        self.probabilities[self.argmax()]
    }
}

pub(crate) fn argmax<T: PartialOrd + Copy>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}
