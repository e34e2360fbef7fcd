//! Vision transformer: patch embedding with a CLS token and learned positions,
//! pre-norm encoder blocks, and a softmax head on the CLS output.

mod config;
mod gradcheck;
mod model;
mod params;

pub use gradcheck::gradient_check;
pub use config::{ViTConfig, LAYERNORM_EPS};
pub use model::{
    attention, batch_logits, embed, encoder_block, forward, forward_patches, logits, mhsa, patchify, BoundBlock,
    BoundParams,
};
pub use params::{init_params, ModelParams, ParamKind, INIT_STD};
