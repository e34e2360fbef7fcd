use super::{batch_logits, init_params, patchify, BoundParams, ModelParams, ViTConfig};
use crate::autodiff::{finite_diff_check, GradCheckReport, Tensor};
use crate::error::Result;
use crate::imaging::Image;
use crate::rng::{fork, seeded, standard_normal};
use crate::scalar::Scalar;
use rand::Rng;

/// Spread applied to every parameter so layernorms and attention sit away from
/// their degenerate all-equal initial state.
const PERTURBATION: f64 = 0.3;

/// Checks analytic gradients of mean softmax-cross-entropy over a small random
/// batch against central differences, for every parameter tensor of `config`.
pub fn gradient_check<T: Scalar>(
    config: &ViTConfig,
    seed: u64,
    batch: usize,
    h: f64,
    tol: f64,
) -> Result<GradCheckReport> {
    let mut rng = seeded(seed);
    let mut params: ModelParams<T> = init_params(config, rng.gen())?;
    let mut noise = fork(&mut rng);
    for (_, t) in params.iter_mut() {
        for v in t.data_mut() {
            *v += T::lit(PERTURBATION * standard_normal(&mut noise));
        }
    }

    let side = config.image_size;
    let mut patches = Vec::with_capacity(batch);
    let mut targets = vec![T::zero(); batch * config.num_classes];
    for b in 0..batch {
        let samples: Vec<u8> = (0..side * side * 3).map(|_| rng.gen()).collect();
        patches.push(patchify::<T>(&Image::new(side, side, samples)?, config)?);
        targets[b * config.num_classes + rng.gen_range(0..config.num_classes)] = T::one();
    }
    let targets = Tensor::new(&[batch, config.num_classes], targets)?;

    let named: Vec<(String, Tensor<T>)> = params.iter().map(|(n, t)| (n.to_string(), t.clone())).collect();
    let mut unused = seeded(0);
    finite_diff_check(&named, h, tol, |tape, vars| {
        let bound = BoundParams::from_vars(config, vars)?;
        let refs: Vec<&Tensor<T>> = patches.iter().collect();
        let z = batch_logits(tape, &refs, &bound, config, &mut unused, false)?;
        let p = tape.softmax(z)?;
        tape.cross_entropy(p, &targets)
    })
}
