//! Per-view prediction and threshold-elect-and-average fusion of three views.

use serde::{Deserialize, Serialize};

use crate::distribution::{argmax, ClassDistribution};
use crate::error::{Error, Result};
use crate::imaging::Image;
use crate::labels::class_label;
use crate::rng::seeded;
use crate::scalar::Scalar;
use crate::training::View;
use crate::vit::{forward, ModelParams, ViTConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct ViewPrediction<T> {
    pub view: View,
    pub distribution: ClassDistribution<T>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FusionConfig {
    pub threshold: f64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig { threshold: 0.5 }
    }
}

impl FusionConfig {
    pub fn new(threshold: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Error::Config(format!("threshold {threshold} outside [0, 1]")));
        }
        Ok(FusionConfig { threshold })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FusionResult<T> {
    pub class_index: usize,
    pub fused_probability: T,
    /// Views whose distributions were averaged, in canonical view order.
    pub contributing_views: Vec<View>,
    pub fallback_used: bool,
    pub distribution: ClassDistribution<T>,
}

/// Inference-mode forward pass for one view's model.
pub fn predict_view<T: Scalar>(model: &ModelParams<T>, sample: &Image, config: &ViTConfig, view: View) -> Result<ViewPrediction<T>> {
    // dropout is off, so the generator is never drawn from
    let distribution = forward(sample, model, config, &mut seeded(0), false)?;
    Ok(ViewPrediction { view, distribution })
}

/// Elects each view's peak, keeps views whose peak reaches the threshold (all three when none
/// does), averages their full distributions and takes the lowest-index argmax.
pub fn fuse<T: Scalar>(predictions: &[ViewPrediction<T>], config: &FusionConfig) -> Result<FusionResult<T>> {
    if predictions.len() != 3 {
        return Err(Error::contract(format!("three views required, got {}", predictions.len())));
    }
    FusionConfig::new(config.threshold)?;
    let mut ordered: Vec<&ViewPrediction<T>> = predictions.iter().collect();
    ordered.sort_by_key(|p| p.view);
    if ordered.windows(2).any(|w| w[0].view == w[1].view) {
        return Err(Error::contract("duplicate view in fusion input"));
    }
    let k = ordered[0].distribution.num_classes();
    if ordered.iter().any(|p| p.distribution.num_classes() != k) {
        return Err(Error::contract("views disagree on the number of classes"));
    }

    let mut selected: Vec<&ViewPrediction<T>> = ordered
        .iter()
        .copied()
        .filter(|p| p.distribution.peak().as_f64() >= config.threshold)
        .collect();
    let fallback_used = selected.is_empty();
    if fallback_used {
        selected = ordered;
    }
    let count = T::from_usize(selected.len()).expect("small count");
    let mean: Vec<T> = (0..k)
        .map(|c| selected.iter().map(|p| p.distribution.probabilities()[c]).fold(T::zero(), |a, b| a + b) / count)
        .collect();
    let class_index = argmax(&mean);
    Ok(FusionResult {
        class_index,
        fused_probability: mean[class_index],
        contributing_views: selected.iter().map(|p| p.view).collect(),
        fallback_used,
        distribution: ClassDistribution::new(mean)?,
    })
}

/// `{"view": ..., "probabilities": [...]}`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionDocument {
    pub view: String,
    pub probabilities: Vec<f64>,
}

impl DistributionDocument {
    pub fn from_prediction<T: Scalar>(p: &ViewPrediction<T>) -> Self {
        DistributionDocument {
            view: p.view.to_string(),
            probabilities: p.distribution.probabilities().iter().map(|v| v.as_f64()).collect(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn prediction(&self) -> Result<ViewPrediction<f64>> {
        Ok(ViewPrediction {
            view: self.view.parse()?,
            distribution: ClassDistribution::new(self.probabilities.clone())?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FusionDocument {
    pub class_index: usize,
    pub class_label: String,
    pub fused_probability: f64,
    pub contributing_views: Vec<String>,
    pub fallback_used: bool,
}

impl FusionDocument {
    pub fn from_result<T: Scalar>(r: &FusionResult<T>) -> Self {
        FusionDocument {
            class_index: r.class_index,
            class_label: class_label(r.distribution.num_classes(), r.class_index),
            fused_probability: r.fused_probability.as_f64(),
            contributing_views: r.contributing_views.iter().map(View::to_string).collect(),
            fallback_used: r.fallback_used,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }
}
