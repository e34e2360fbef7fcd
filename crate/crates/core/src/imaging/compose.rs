use super::{Image, BLACK};
use crate::error::{Error, Result};

/// Overlay pixels that are not pure black replace the base pixel.
pub fn composite(base: &Image, overlay: &Image) -> Result<Image> {
    if base.height() != overlay.height() || base.width() != overlay.width() {
        return Err(Error::contract(format!(
            "composite needs equal dimensions, got {}x{} and {}x{}",
            base.height(),
            base.width(),
            overlay.height(),
            overlay.width()
        )));
    }
    let mut samples = Vec::with_capacity(base.samples().len());
    for (b, o) in base.pixels().zip(overlay.pixels()) {
        samples.extend_from_slice(if o != BLACK { &o } else { &b });
    }
    Image::new(base.height(), base.width(), samples)
}

/// Corner-aligned bilinear resampling; samples rounded half-up.
pub fn resize_bilinear(image: &Image, out_height: usize, out_width: usize) -> Result<Image> {
    if out_height == 0 || out_width == 0 {
        return Err(Error::contract("resize target must be at least 1x1"));
    }
    if out_height == image.height() && out_width == image.width() {
        return Ok(image.clone());
    }
    let scale = |n_in: usize, n_out: usize| {
        if n_out > 1 {
            (n_in - 1) as f64 / (n_out - 1) as f64
        } else {
            0.0
        }
    };
    let sy = scale(image.height(), out_height);
    let sx = scale(image.width(), out_width);
    let src = image.samples();
    let w_in = image.width();
    let mut out = Vec::with_capacity(out_height * out_width * 3);
    for r in 0..out_height {
        let fy = r as f64 * sy;
        let y0 = (fy.floor() as usize).min(image.height() - 1);
        let y1 = (y0 + 1).min(image.height() - 1);
        let ty = fy - y0 as f64;
        for c in 0..out_width {
            let fx = c as f64 * sx;
            let x0 = (fx.floor() as usize).min(w_in - 1);
            let x1 = (x0 + 1).min(w_in - 1);
            let tx = fx - x0 as f64;
            for ch in 0..3 {
                let at = |y: usize, x: usize| src[(y * w_in + x) * 3 + ch] as f64;
                let top = at(y0, x0) * (1.0 - tx) + at(y0, x1) * tx;
                let bottom = at(y1, x0) * (1.0 - tx) + at(y1, x1) * tx;
                let v = top * (1.0 - ty) + bottom * ty;
                out.push((v + 0.5).floor().clamp(0.0, 255.0) as u8);
            }
        }
    }
    Image::new(out_height, out_width, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_image(h: usize, w: usize, seed: u64, black_rate: u64) -> Image {
        let mut state = seed | 1;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        let mut samples = Vec::new();
        for _ in 0..h * w {
            if next() % 100 < black_rate {
                samples.extend_from_slice(&[0, 0, 0]);
            } else {
                let v = next();
                samples.extend_from_slice(&[v as u8, (v >> 8) as u8, (v >> 16) as u8]);
            }
        }
        Image::new(h, w, samples).unwrap()
    }

    #[test]
    fn black_overlay_is_identity() {
        let base = random_image(6, 5, 11, 0);
        let out = composite(&base, &Image::black(6, 5).unwrap()).unwrap();
        assert_eq!(out, base);
    }

    #[test]
    fn colored_overlay_pixel_replaces_base() {
        let base = Image::filled(1, 1, [10, 20, 30]).unwrap();
        let overlay = Image::filled(1, 1, [255, 0, 0]).unwrap();
        assert_eq!(composite(&base, &overlay).unwrap().pixel(0, 0), [255, 0, 0]);
    }

    #[test]
    fn mismatched_dimensions_rejected() {
        let a = Image::black(2, 2).unwrap();
        let b = Image::black(2, 3).unwrap();
        assert!(matches!(composite(&a, &b), Err(Error::Contract(_))));
    }

    #[test]
    fn resize_checker_center_rounds_half_up() {
        let img = Image::new(
            2,
            2,
            vec![0, 0, 0, 255, 255, 255, 255, 255, 255, 0, 0, 0],
        )
        .unwrap();
        let out = resize_bilinear(&img, 3, 3).unwrap();
        assert_eq!(out.pixel(1, 1), [128, 128, 128]);
        assert_eq!(out.pixel(0, 0), [0, 0, 0]);
        assert_eq!(out.pixel(0, 2), [255, 255, 255]);
        assert_eq!(out.pixel(0, 1), [128, 128, 128]);
    }

    #[test]
    fn resize_identity_and_constant() {
        let img = random_image(7, 4, 5, 10);
        assert_eq!(resize_bilinear(&img, 7, 4).unwrap(), img);
        let flat = Image::filled(13, 9, [17, 200, 3]).unwrap();
        for (h, w) in [(1, 1), (5, 31), (26, 18)] {
            let out = resize_bilinear(&flat, h, w).unwrap();
            assert!(out.pixels().all(|p| p == [17, 200, 3]));
        }
    }

    proptest! {
        #[test]
        fn composite_semantics(h in 1usize..10, w in 1usize..10, s1 in any::<u64>(), s2 in any::<u64>()) {
            let base = random_image(h, w, s1, 10);
            let overlay = random_image(h, w, s2, 60);
            let out = composite(&base, &overlay).unwrap();
            for r in 0..h {
                for c in 0..w {
                    let (b, o, x) = (base.pixel(r, c), overlay.pixel(r, c), out.pixel(r, c));
                    if o == BLACK { prop_assert_eq!(x, b); } else { prop_assert_eq!(x, o); }
                }
            }
            prop_assert_eq!(composite(&out, &overlay).unwrap(), out);
        }
    }
}
