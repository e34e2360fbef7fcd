use std::fmt;
use std::str::FromStr;

use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::imaging::Image;
use crate::rng::{seeded, shuffle};
use crate::scalar::Scalar;

/// Camera perspective. Each view gets its own model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum View {
    Dashboard,
    Rearview,
    Rightside,
}

impl View {
    pub const ALL: [View; 3] = [View::Dashboard, View::Rearview, View::Rightside];

    pub fn as_str(self) -> &'static str {
        match self {
            View::Dashboard => "dashboard",
            View::Rearview => "rearview",
            View::Rightside => "rightside",
        }
    }
}

impl fmt::Display for View {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for View {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dashboard" => Ok(View::Dashboard),
            "rearview" => Ok(View::Rearview),
            "rightside" => Ok(View::Rightside),
            other => Err(Error::contract(format!(
                "unknown view {other:?} (expected dashboard, rearview or rightside)"
            ))),
        }
    }
}

/// A composited, resized image with its class and the view it came from.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSample {
    pub image: Image,
    pub class_index: usize,
    pub view: View,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSplit<S> {
    pub train: Vec<S>,
    pub validation: Vec<S>,
    pub test: Vec<S>,
}

pub fn one_hot<T: Scalar>(class_index: usize, k: usize) -> Result<Tensor<T>> {
    if class_index >= k {
        return Err(Error::contract(format!("class {class_index} out of range for {k} classes")));
    }
    let mut v = vec![T::zero(); k];
    v[class_index] = T::one();
    Tensor::new(&[k], v)
}

/// Seeded shuffle, then `floor(0.15 n)` validation, `floor(0.15 n)` test, rest train.
pub fn split_dataset<S>(mut samples: Vec<S>, seed: u64) -> Result<DatasetSplit<S>> {
    let n = samples.len();
    if n < 3 {
        return Err(Error::contract(format!("cannot split {n} samples, need at least 3")));
    }
    shuffle(&mut samples, &mut seeded(seed));
    let n_val = n * 15 / 100;
    let n_test = n * 15 / 100;
    let test = samples.split_off(n - n_test);
    let validation = samples.split_off(n - n_test - n_val);
    Ok(DatasetSplit {
        train: samples,
        validation,
        test,
    })
}

/// Truncates every class to the size of the smallest one, keeping input order.
pub fn balance_by_truncation(samples: Vec<LabeledSample>, k: usize) -> Vec<LabeledSample> {
    let mut counts = vec![0usize; k];
    for s in &samples {
        if s.class_index < k {
            counts[s.class_index] += 1;
        }
    }
    let keep = counts.iter().copied().filter(|&c| c > 0).min().unwrap_or(0);
    let mut taken = vec![0usize; k];
    samples
        .into_iter()
        .filter(|s| {
            if s.class_index >= k || taken[s.class_index] >= keep {
                return false;
            }
            taken[s.class_index] += 1;
            true
        })
        .collect()
}
