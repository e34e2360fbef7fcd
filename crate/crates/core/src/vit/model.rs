use super::{ModelParams, ViTConfig, LAYERNORM_EPS};
use crate::autodiff::{Tape, Tensor, Var};
use crate::distribution::ClassDistribution;
use crate::error::{Error, Result};
use crate::imaging::Image;
use crate::rng::SeededRng;
use crate::scalar::Scalar;

/// Per-block parameter handles on a tape.
#[derive(Clone, Debug)]
pub struct BoundBlock {
    pub norm1_gain: Var,
    pub norm1_bias: Var,
    pub w_q: Var,
    pub w_k: Var,
    pub w_v: Var,
    pub w_o: Var,
    pub norm2_gain: Var,
    pub norm2_bias: Var,
    pub fc1_weight: Var,
    pub fc1_bias: Var,
    pub fc2_weight: Var,
    pub fc2_bias: Var,
}

/// All model parameters recorded on one tape, in canonical layout order.
#[derive(Clone, Debug)]
pub struct BoundParams {
    pub patch_weight: Var,
    pub patch_bias: Var,
    pub pos_embed: Var,
    pub cls_token: Var,
    pub blocks: Vec<BoundBlock>,
    pub norm_gain: Var,
    pub norm_bias: Var,
    pub head_weight: Var,
    pub head_bias: Var,
    vars: Vec<Var>,
}

impl BoundParams {
    /// Records `params` on `tape`; `trainable` selects tracked leaves over constants.
    pub fn bind<T: Scalar>(tape: &mut Tape<T>, params: &ModelParams<T>, config: &ViTConfig, trainable: bool) -> Result<Self> {
        params.validate(config)?;
        let vars: Vec<Var> = ModelParams::<T>::layout(config)
            .iter()
            .map(|(name, _, _)| {
                let t = params.get(name)?;
                Ok(if trainable { tape.param(t) } else { tape.constant(t.detached()) })
            })
            .collect::<Result<_>>()?;
        Self::from_vars(config, &vars)
    }

    /// Rebuilds handles from vars listed in `ModelParams::layout` order.
    pub fn from_vars(config: &ViTConfig, vars: &[Var]) -> Result<Self> {
        let expected = 8 + 12 * config.depth;
        if vars.len() != expected {
            return Err(Error::contract(format!("expected {expected} parameter vars, got {}", vars.len())));
        }
        let mut it = vars.iter().copied();
        let mut next = || it.next().expect("length checked");
        let (patch_weight, patch_bias, pos_embed, cls_token) = (next(), next(), next(), next());
        let blocks = (0..config.depth)
            .map(|_| BoundBlock {
                norm1_gain: next(),
                norm1_bias: next(),
                w_q: next(),
                w_k: next(),
                w_v: next(),
                w_o: next(),
                norm2_gain: next(),
                norm2_bias: next(),
                fc1_weight: next(),
                fc1_bias: next(),
                fc2_weight: next(),
                fc2_bias: next(),
            })
            .collect();
        Ok(BoundParams {
            patch_weight,
            patch_bias,
            pos_embed,
            cls_token,
            blocks,
            norm_gain: next(),
            norm_bias: next(),
            head_weight: next(),
            head_bias: next(),
            vars: vars.to_vec(),
        })
    }

    /// Vars in layout order (parallel to `ModelParams::layout`).
    pub fn vars(&self) -> &[Var] {
        &self.vars
    }
}

/// Splits an image into flattened windows, left-to-right then top-to-bottom.
/// Samples are scaled to [0, 1]; each row is the (row, col, channel) flattening
/// of one window.
pub fn patchify<T: Scalar>(image: &Image, config: &ViTConfig) -> Result<Tensor<T>> {
    config.validate()?;
    if image.height() != config.image_size || image.width() != config.image_size {
        return Err(Error::shape(
            "patchify",
            format!(
                "image {}x{} vs configured {}x{}",
                image.height(),
                image.width(),
                config.image_size,
                config.image_size
            ),
        ));
    }
    let (grid_r, grid_c) = config.grid();
    let (ph, pw) = (config.patch_height, config.patch_width);
    let full = T::lit(255.0);
    let src = image.samples();
    let w = image.width();
    let mut out = Vec::with_capacity(grid_r * grid_c * config.patch_dim());
    for gr in 0..grid_r {
        for gc in 0..grid_c {
            let (top, left) = (gr * config.stride_height, gc * config.stride_width);
            for r in top..top + ph {
                let start = (r * w + left) * 3;
                out.extend(src[start..start + pw * 3].iter().map(|&s| T::from_u8(s).unwrap() / full));
            }
        }
    }
    Tensor::new(&[grid_r * grid_c, config.patch_dim()], out)
}

/// Token sequence `[cls + pos_0; w·x_n + b + pos_n]`, shape `[num_patches + 1, D]`.
pub fn embed<T: Scalar>(tape: &mut Tape<T>, patches: Var, params: &BoundParams) -> Result<Var> {
    let z = tape.matmul(patches, params.patch_weight)?;
    let z = tape.add_row(z, params.patch_bias)?;
    let tokens = tape.concat_rows(&[params.cls_token, z])?;
    if tape.value(tokens).shape() != tape.value(params.pos_embed).shape() {
        return Err(Error::shape(
            "embed",
            format!(
                "{:?} tokens vs positional table {:?}",
                tape.value(tokens).shape(),
                tape.value(params.pos_embed).shape()
            ),
        ));
    }
    tape.add(tokens, params.pos_embed)
}

/// Scaled dot-product attention `softmax(Q·Kᵀ/√d_k)·V` over `[tokens × d_k]` inputs.
pub fn attention<T: Scalar>(tape: &mut Tape<T>, q: Var, k: Var, v: Var) -> Result<Var> {
    let d_k = tape.value(q).last_dim();
    let kt = tape.transpose(k)?;
    let scores = tape.matmul(q, kt)?;
    let scores = tape.scale(scores, T::one() / T::from_usize(d_k).unwrap().sqrt())?;
    let weights = tape.softmax(scores)?;
    tape.matmul(weights, v)
}

/// Multi-head self-attention. Head `j` uses columns `j*d_k..(j+1)*d_k` of the
/// fused projections; heads are concatenated in order and mixed by `w_o`.
pub fn mhsa<T: Scalar>(tape: &mut Tape<T>, x: Var, block: &BoundBlock, num_heads: usize) -> Result<Var> {
    let d = tape.value(block.w_q).last_dim();
    if num_heads == 0 || !d.is_multiple_of(num_heads) {
        return Err(Error::Config(format!("width {d} not divisible by {num_heads} heads")));
    }
    let d_k = d / num_heads;
    let q = tape.matmul(x, block.w_q)?;
    let k = tape.matmul(x, block.w_k)?;
    let v = tape.matmul(x, block.w_v)?;
    let mut heads = Vec::with_capacity(num_heads);
    for h in 0..num_heads {
        let qh = tape.slice_cols(q, h * d_k, d_k)?;
        let kh = tape.slice_cols(k, h * d_k, d_k)?;
        let vh = tape.slice_cols(v, h * d_k, d_k)?;
        heads.push(attention(tape, qh, kh, vh)?);
    }
    let joined = if num_heads == 1 { heads[0] } else { tape.concat_cols(&heads)? };
    tape.matmul(joined, block.w_o)
}

/// Pre-norm residual block: attention sublayer then GELU MLP sublayer.
pub fn encoder_block<T: Scalar>(
    tape: &mut Tape<T>,
    x: Var,
    block: &BoundBlock,
    config: &ViTConfig,
    rng: &mut SeededRng,
    training: bool,
) -> Result<Var> {
    let eps = T::lit(LAYERNORM_EPS);
    let rate = config.dropout_block;

    let h = tape.layernorm(x, block.norm1_gain, block.norm1_bias, eps)?;
    let a = mhsa(tape, h, block, config.num_heads)?;
    let a = tape.dropout(a, rate, training, rng)?;
    let x = tape.add(a, x)?;

    let h = tape.layernorm(x, block.norm2_gain, block.norm2_bias, eps)?;
    let f = tape.matmul(h, block.fc1_weight)?;
    let f = tape.add_row(f, block.fc1_bias)?;
    let f = tape.gelu(f)?;
    let f = tape.dropout(f, rate, training, rng)?;
    let f = tape.matmul(f, block.fc2_weight)?;
    let f = tape.add_row(f, block.fc2_bias)?;
    let f = tape.dropout(f, rate, training, rng)?;
    tape.add(f, x)
}

/// Class logits `[1 × k]` for one image's patch matrix. Only the CLS output feeds the head.
pub fn logits<T: Scalar>(
    tape: &mut Tape<T>,
    patches: Var,
    params: &BoundParams,
    config: &ViTConfig,
    rng: &mut SeededRng,
    training: bool,
) -> Result<Var> {
    let mut x = embed(tape, patches, params)?;
    for block in &params.blocks {
        x = encoder_block(tape, x, block, config, rng, training)?;
    }
    let cls = tape.slice_rows(x, 0, 1)?;
    let cls = tape.layernorm(cls, params.norm_gain, params.norm_bias, T::lit(LAYERNORM_EPS))?;
    let cls = tape.dropout(cls, config.dropout_head, training, rng)?;
    let out = tape.matmul(cls, params.head_weight)?;
    tape.add_row(out, params.head_bias)
}

/// Stacked logits `[batch × k]` for a batch of patch matrices.
pub fn batch_logits<T: Scalar>(
    tape: &mut Tape<T>,
    patches: &[&Tensor<T>],
    params: &BoundParams,
    config: &ViTConfig,
    rng: &mut SeededRng,
    training: bool,
) -> Result<Var> {
    let rows = patches
        .iter()
        .map(|p| {
            let v = tape.constant((*p).clone());
            logits(tape, v, params, config, rng, training)
        })
        .collect::<Result<Vec<_>>>()?;
    tape.concat_rows(&rows)
}

/// Class distribution for one composite image.
pub fn forward<T: Scalar>(
    image: &Image,
    params: &ModelParams<T>,
    config: &ViTConfig,
    rng: &mut SeededRng,
    training: bool,
) -> Result<ClassDistribution<T>> {
    let patches = patchify::<T>(image, config)?;
    forward_patches(&patches, params, config, rng, training)
}

/// Class distribution from an already patchified image.
pub fn forward_patches<T: Scalar>(
    patches: &Tensor<T>,
    params: &ModelParams<T>,
    config: &ViTConfig,
    rng: &mut SeededRng,
    training: bool,
) -> Result<ClassDistribution<T>> {
    let mut tape = Tape::new();
    let bound = BoundParams::bind(&mut tape, params, config, false)?;
    let x = tape.constant(patches.clone());
    let z = logits(&mut tape, x, &bound, config, rng, training)?;
    let p = tape.softmax(z)?;
    ClassDistribution::new(tape.value(p).data().to_vec())
}
