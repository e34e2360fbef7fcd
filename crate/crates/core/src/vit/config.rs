use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const LAYERNORM_EPS: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViTConfig {
    pub image_size: usize,
    pub patch_height: usize,
    pub patch_width: usize,
    pub stride_height: usize,
    pub stride_width: usize,
    pub embed_dim: usize,
    pub num_heads: usize,
    pub depth: usize,
    pub mlp_hidden: usize,
    pub num_classes: usize,
    pub dropout_block: f64,
    pub dropout_head: f64,
}

impl Default for ViTConfig {
    fn default() -> Self {
        ViTConfig {
            image_size: 224,
            patch_height: 16,
            patch_width: 16,
            stride_height: 16,
            stride_width: 16,
            embed_dim: 256,
            num_heads: 4,
            depth: 4,
            mlp_hidden: 512,
            num_classes: 16,
            dropout_block: 0.25,
            dropout_head: 0.5,
        }
    }
}

impl ViTConfig {
    /// Square patches with stride equal to the patch size; MLP width `2 * embed_dim`.
    pub fn new(image_size: usize, patch: usize, embed_dim: usize, num_heads: usize, depth: usize, num_classes: usize) -> Self {
        ViTConfig {
            image_size,
            patch_height: patch,
            patch_width: patch,
            stride_height: patch,
            stride_width: patch,
            embed_dim,
            num_heads,
            depth,
            mlp_hidden: 2 * embed_dim,
            num_classes,
            ..ViTConfig::default()
        }
    }

    /// The smallest configuration used for gradient checking.
    pub fn tiny() -> Self {
        ViTConfig {
            mlp_hidden: 16,
            ..ViTConfig::new(16, 4, 8, 2, 1, 3)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("image_size", self.image_size),
            ("patch_height", self.patch_height),
            ("patch_width", self.patch_width),
            ("stride_height", self.stride_height),
            ("stride_width", self.stride_width),
            ("embed_dim", self.embed_dim),
            ("num_heads", self.num_heads),
            ("depth", self.depth),
            ("mlp_hidden", self.mlp_hidden),
            ("num_classes", self.num_classes),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be positive")));
        }
        for (axis, p, s) in [
            ("height", self.patch_height, self.stride_height),
            ("width", self.patch_width, self.stride_width),
        ] {
            if p > self.image_size || s > p || !(self.image_size - p).is_multiple_of(s) {
                return Err(Error::Config(format!(
                    "patch {axis} {p} with stride {s} does not tile a {} pixel image",
                    self.image_size
                )));
            }
        }
        if !self.embed_dim.is_multiple_of(self.num_heads) {
            return Err(Error::Config(format!(
                "embed_dim {} not divisible by {} heads",
                self.embed_dim, self.num_heads
            )));
        }
        for (name, rate) in [("dropout_block", self.dropout_block), ("dropout_head", self.dropout_head)] {
            if !(0.0..1.0).contains(&rate) {
                return Err(Error::Config(format!("{name} {rate} outside [0, 1)")));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> (usize, usize) {
        (
            (self.image_size - self.patch_height) / self.stride_height + 1,
            (self.image_size - self.patch_width) / self.stride_width + 1,
        )
    }

    pub fn num_patches(&self) -> usize {
        let (r, c) = self.grid();
        r * c
    }

    /// Flattened patch length `p1 * p2 * 3`.
    pub fn patch_dim(&self) -> usize {
        self.patch_height * self.patch_width * 3
    }

    pub fn head_dim(&self) -> usize {
        self.embed_dim / self.num_heads
    }

    pub fn num_tokens(&self) -> usize {
        self.num_patches() + 1
    }
}
