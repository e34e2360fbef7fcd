//! Raster images, landmark documents, skeleton rendering and compositing.

mod compose;
mod landmarks;
mod ppm;
mod skeleton;

pub use compose::{composite, resize_bilinear};
pub use landmarks::{BoneTopology, Landmark, LandmarkDocument, LandmarkSet, NUM_LANDMARKS};
pub use ppm::{read_ppm, write_ppm};
pub use skeleton::{render_skeleton, SkeletonStyle, VISIBILITY_FLOOR};

use crate::error::{Error, Result};

pub type Rgb = [u8; 3];

pub const BLACK: Rgb = [0, 0, 0];

/// Row-major 8-bit RGB raster.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Image {
    height: usize,
    width: usize,
    pixels: Vec<u8>,
}

impl Image {
    pub fn new(height: usize, width: usize, pixels: Vec<u8>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::contract(format!(
                "image dimensions must be positive, got {height}x{width}"
            )));
        }
        if pixels.len() != height * width * 3 {
            return Err(Error::contract(format!(
                "{height}x{width} image needs {} samples, got {}",
                height * width * 3,
                pixels.len()
            )));
        }
        Ok(Image {
            height,
            width,
            pixels,
        })
    }

    pub fn filled(height: usize, width: usize, color: Rgb) -> Result<Self> {
        let pixels = color.iter().copied().cycle().take(height * width * 3).collect();
        Image::new(height, width, pixels)
    }

    pub fn black(height: usize, width: usize) -> Result<Self> {
        Image::filled(height, width, BLACK)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn samples(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_samples(self) -> Vec<u8> {
        self.pixels
    }

    pub fn pixel(&self, row: usize, col: usize) -> Rgb {
        let i = (row * self.width + col) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn set_pixel(&mut self, row: usize, col: usize, color: Rgb) {
        let i = (row * self.width + col) * 3;
        self.pixels[i..i + 3].copy_from_slice(&color);
    }

    /// Sets the pixel if (row, col) lies on the canvas; otherwise a no-op.
    pub(crate) fn put_clipped(&mut self, row: i64, col: i64, color: Rgb) {
        if row >= 0 && col >= 0 && (row as usize) < self.height && (col as usize) < self.width {
            self.set_pixel(row as usize, col as usize, color);
        }
    }

    pub fn pixels(&self) -> impl Iterator<Item = Rgb> + '_ {
        self.pixels.chunks_exact(3).map(|c| [c[0], c[1], c[2]])
    }
}
