use indexmap::IndexMap;

use super::ViTConfig;
use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::rng::{seeded, truncated_normal, truncated_normal_scale};
use crate::scalar::Scalar;

/// Standard deviation of the truncated-normal weight initializer, whose support is ±2σ.
pub const INIT_STD: f64 = 0.02;

/// How a parameter is initialized.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamKind {
    Weight,
    Zero,
    One,
}

/// Trainable tensors keyed by name, in a fixed canonical order.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<T> {
    tensors: IndexMap<String, Tensor<T>>,
}

impl<T: Scalar> Default for ModelParams<T> {
    fn default() -> Self {
        ModelParams {
            tensors: IndexMap::new(),
        }
    }
}

impl<T: Scalar> ModelParams<T> {
    /// Canonical (name, shape, kind) layout for `config`.
    pub fn layout(config: &ViTConfig) -> Vec<(String, Vec<usize>, ParamKind)> {
        use ParamKind::*;
        let d = config.embed_dim;
        let h = config.mlp_hidden;
        let mut out = vec![
            ("patch_embed.weight".to_string(), vec![config.patch_dim(), d], Weight),
            ("patch_embed.bias".to_string(), vec![d], Zero),
            ("pos_embed".to_string(), vec![config.num_tokens(), d], Zero),
            ("cls_token".to_string(), vec![d], Zero),
        ];
        for b in 0..config.depth {
            let p = |s: &str| format!("blocks.{b}.{s}");
            out.extend([
                (p("norm1.gain"), vec![d], One),
                (p("norm1.bias"), vec![d], Zero),
                (p("attn.w_q"), vec![d, d], Weight),
                (p("attn.w_k"), vec![d, d], Weight),
                (p("attn.w_v"), vec![d, d], Weight),
                (p("attn.w_o"), vec![d, d], Weight),
                (p("norm2.gain"), vec![d], One),
                (p("norm2.bias"), vec![d], Zero),
                (p("mlp.fc1.weight"), vec![d, h], Weight),
                (p("mlp.fc1.bias"), vec![h], Zero),
                (p("mlp.fc2.weight"), vec![h, d], Weight),
                (p("mlp.fc2.bias"), vec![d], Zero),
            ]);
        }
        out.extend([
            ("norm.gain".to_string(), vec![d], One),
            ("norm.bias".to_string(), vec![d], Zero),
            ("head.weight".to_string(), vec![d, config.num_classes], Weight),
            ("head.bias".to_string(), vec![config.num_classes], Zero),
        ]);
        out
    }

    pub fn insert(&mut self, name: impl Into<String>, tensor: Tensor<T>) -> Result<()> {
        let name = name.into();
        if self.tensors.contains_key(&name) {
            return Err(Error::contract(format!("duplicate parameter name {name}")));
        }
        self.tensors.insert(name, tensor);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&Tensor<T>> {
        self.tensors
            .get(name)
            .ok_or_else(|| Error::contract(format!("missing parameter {name}")))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor<T>> {
        self.tensors
            .get_mut(name)
            .ok_or_else(|| Error::contract(format!("missing parameter {name}")))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor<T>)> {
        self.tensors.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor<T>)> {
        self.tensors.iter_mut().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn num_scalars(&self) -> usize {
        self.tensors.values().map(Tensor::numel).sum()
    }

    /// Checks names, order-independent presence and shapes against `config`.
    pub fn validate(&self, config: &ViTConfig) -> Result<()> {
        let layout = Self::layout(config);
        if layout.len() != self.tensors.len() {
            return Err(Error::contract(format!(
                "expected {} parameter tensors, found {}",
                layout.len(),
                self.tensors.len()
            )));
        }
        for (name, shape, _) in layout {
            let t = self.get(&name)?;
            if t.shape() != shape.as_slice() {
                return Err(Error::shape("params", format!("{name}: {:?} vs {shape:?}", t.shape())));
            }
            if !t.is_finite() {
                return Err(Error::NonFinite("params"));
            }
        }
        Ok(())
    }

    pub fn set_requires_grad(&mut self, on: bool) {
        self.tensors.values_mut().for_each(|t| t.set_requires_grad(on));
    }

    pub fn zero_grads(&mut self) {
        self.tensors.values_mut().for_each(Tensor::zero_grad);
    }
}

/// Truncated-normal weights (standard deviation 0.02 on support ±0.04); zero biases, positions and
/// CLS; unit layernorm gains. Deterministic in `seed`.
pub fn init_params<T: Scalar>(config: &ViTConfig, seed: u64) -> Result<ModelParams<T>> {
    config.validate()?;
    let mut rng = seeded(seed);
    let bound = 2.0 * INIT_STD;
    let scale = truncated_normal_scale(INIT_STD, bound);
    let mut params = ModelParams::default();
    for (name, shape, kind) in ModelParams::<T>::layout(config) {
        let tensor = match kind {
            ParamKind::Weight => {
                let n: usize = shape.iter().product();
                let vals: Vec<T> = (0..n)
                    .map(|_| T::lit(truncated_normal(&mut rng, scale, bound)))
                    .collect();
                Tensor::new(&shape, vals)?
            }
            ParamKind::Zero => Tensor::zeros(&shape),
            ParamKind::One => Tensor::full(&shape, T::one()),
        };
        params.insert(name, tensor)?;
    }
    Ok(params)
}
