use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::vit::ModelParams;

/// AdamW hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamW {
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamW {
    fn default() -> Self {
        AdamW {
            lr: 0.001,
            weight_decay: 0.0001,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second moments per parameter tensor (layout order) and the step count.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState<T> {
    pub hyper: AdamW,
    pub step: u64,
    first: Vec<Vec<T>>,
    second: Vec<Vec<T>>,
}

/// One AdamW update of a flat slice at (1-based) step `t`.
///
/// The decay factor `1 - lr * wd` multiplies the pre-step value; the
/// bias-corrected Adam displacement is then subtracted.
pub fn adamw_update<T: Scalar>(theta: &mut [T], grad: &[T], m: &mut [T], v: &mut [T], t: u64, hyper: &AdamW) {
    let b1 = T::lit(hyper.beta1);
    let b2 = T::lit(hyper.beta2);
    let one = T::one();
    let lr = T::lit(hyper.lr);
    let eps = T::lit(hyper.eps);
    let decay = one - T::lit(hyper.lr * hyper.weight_decay);
    let c1 = one - T::lit(hyper.beta1.powi(t as i32));
    let c2 = one - T::lit(hyper.beta2.powi(t as i32));
    for i in 0..theta.len() {
        let g = grad[i];
        m[i] = b1 * m[i] + (one - b1) * g;
        v[i] = b2 * v[i] + (one - b2) * g * g;
        let m_hat = m[i] / c1;
        let v_hat = v[i] / c2;
        theta[i] = theta[i] * decay - lr * m_hat / (v_hat.sqrt() + eps);
    }
}

impl<T: Scalar> OptimizerState<T> {
    pub fn new(params: &ModelParams<T>, hyper: AdamW) -> Self {
        let zeros = || params.iter().map(|(_, t)| vec![T::zero(); t.numel()]).collect();
        OptimizerState {
            hyper,
            step: 0,
            first: zeros(),
            second: zeros(),
        }
    }

    /// Applies one step; `grads` lists one gradient per parameter tensor in layout order.
    pub fn step(&mut self, params: &mut ModelParams<T>, grads: &[Vec<T>]) -> Result<()> {
        if params.len() != self.first.len() || grads.len() != self.first.len() {
            return Err(Error::contract(format!(
                "{} parameter tensors, {} gradients, {} moment slots",
                params.len(),
                grads.len(),
                self.first.len()
            )));
        }
        for (i, (name, t)) in params.iter().enumerate() {
            if grads[i].len() != t.numel() || self.first[i].len() != t.numel() {
                return Err(Error::contract(format!("gradient for {name} does not match its shape")));
            }
        }
        self.step += 1;
        for (i, (_, t)) in params.iter_mut().enumerate() {
            adamw_update(t.data_mut(), &grads[i], &mut self.first[i], &mut self.second[i], self.step, &self.hyper);
        }
        Ok(())
    }
}

/// Free-function form of [`OptimizerState::step`].
pub fn adamw_step<T: Scalar>(params: &mut ModelParams<T>, grads: &[Vec<T>], state: &mut OptimizerState<T>) -> Result<()> {
    state.step(params, grads)
}
