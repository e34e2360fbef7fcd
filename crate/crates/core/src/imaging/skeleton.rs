use super::{BoneTopology, Image, LandmarkSet, Rgb, BLACK};
use crate::error::{Error, Result};

/// Landmarks with visibility below this are not drawn.
pub const VISIBILITY_FLOOR: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SkeletonStyle {
    line_thickness: u32,
    joint_radius: u32,
    bone_color: Rgb,
    joint_color: Rgb,
}

impl SkeletonStyle {
    /// Black is reserved as the transparent overlay color, so neither color may be black.
    pub fn new(line_thickness: u32, joint_radius: u32, bone_color: Rgb, joint_color: Rgb) -> Result<Self> {
        if line_thickness < 1 {
            return Err(Error::contract("line thickness must be at least 1"));
        }
        if bone_color == BLACK || joint_color == BLACK {
            return Err(Error::contract("skeleton colors must not be black"));
        }
        Ok(SkeletonStyle {
            line_thickness,
            joint_radius,
            bone_color,
            joint_color,
        })
    }

    pub fn with_geometry(self, line_thickness: u32, joint_radius: u32) -> Result<Self> {
        SkeletonStyle::new(line_thickness, joint_radius, self.bone_color, self.joint_color)
    }

    pub fn line_thickness(&self) -> u32 {
        self.line_thickness
    }

    pub fn joint_radius(&self) -> u32 {
        self.joint_radius
    }

    pub fn bone_color(&self) -> Rgb {
        self.bone_color
    }

    pub fn joint_color(&self) -> Rgb {
        self.joint_color
    }
}

impl Default for SkeletonStyle {
    fn default() -> Self {
        SkeletonStyle {
            line_thickness: 2,
            joint_radius: 4,
            bone_color: [0, 255, 0],
            joint_color: [0, 0, 255],
        }
    }
}

fn stamp_disc(img: &mut Image, row: i64, col: i64, radius: i64, color: Rgb) {
    let r2 = radius * radius;
    for dr in -radius..=radius {
        for dc in -radius..=radius {
            if dr * dr + dc * dc <= r2 {
                img.put_clipped(row + dr, col + dc, color);
            }
        }
    }
}

/// Integer Bresenham walk from `a` to `b`, inclusive of both ends.
fn line_pixels(a: (i64, i64), b: (i64, i64), mut visit: impl FnMut(i64, i64)) {
    let (mut r, mut c) = a;
    let dc = (b.1 - c).abs();
    let dr = -(b.0 - r).abs();
    let step_c = if c < b.1 { 1 } else { -1 };
    let step_r = if r < b.0 { 1 } else { -1 };
    let mut err = dc + dr;
    loop {
        visit(r, c);
        if r == b.0 && c == b.1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dr {
            err += dr;
            c += step_c;
        }
        if e2 <= dc {
            err += dc;
            r += step_r;
        }
    }
}

/// Draws the pose skeleton on a black canvas: bones first, then joint discs.
pub fn render_skeleton(
    landmarks: &LandmarkSet,
    height: usize,
    width: usize,
    style: &SkeletonStyle,
    topology: &BoneTopology,
) -> Result<Image> {
    let mut img = Image::black(height, width)?;
    let to_pixel = |id: u8| -> Option<(i64, i64)> {
        let p = landmarks.get(id)?;
        if p.visibility < VISIBILITY_FLOOR {
            return None;
        }
        let row = (p.y * (height - 1) as f64).round() as i64;
        let col = (p.x * (width - 1) as f64).round() as i64;
        Some((row, col))
    };

    let half = (style.line_thickness / 2) as i64;
    for &(a, b) in topology.edges() {
        if let (Some(pa), Some(pb)) = (to_pixel(a), to_pixel(b)) {
            line_pixels(pa, pb, |r, c| stamp_disc(&mut img, r, c, half, style.bone_color));
        }
    }
    for p in landmarks.points() {
        if let Some((r, c)) = to_pixel(p.id) {
            stamp_disc(&mut img, r, c, style.joint_radius as i64, style.joint_color);
        }
    }
    Ok(img)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::Landmark;

    fn pt(id: u8, x: f64, y: f64) -> Landmark {
        Landmark {
            id,
            x,
            y,
            visibility: 1.0,
        }
    }

    #[test]
    fn empty_set_renders_black() {
        let img = render_skeleton(
            &LandmarkSet::default(),
            5,
            7,
            &SkeletonStyle::default(),
            &BoneTopology::default(),
        )
        .unwrap();
        assert!(img.samples().iter().all(|&s| s == 0));
    }

    #[test]
    fn single_joint_disc_matches_enumeration() {
        let style = SkeletonStyle::default().with_geometry(1, 1).unwrap();
        let set = LandmarkSet::new([pt(0, 0.5, 0.5)]).unwrap();
        let img = render_skeleton(&set, 9, 9, &style, &BoneTopology::default()).unwrap();
        for r in 0..9i64 {
            for c in 0..9i64 {
                let inside = (r - 4).pow(2) + (c - 4).pow(2) <= 1;
                let px = img.pixel(r as usize, c as usize);
                assert_eq!(px != BLACK, inside, "pixel ({r},{c})");
                if inside {
                    assert_eq!(px, style.joint_color());
                }
            }
        }
    }

    #[test]
    fn horizontal_bone_covers_every_column() {
        let style = SkeletonStyle::default().with_geometry(1, 0).unwrap();
        let set = LandmarkSet::new([pt(11, 0.0, 0.5), pt(12, 1.0, 0.5)]).unwrap();
        let (h, w) = (9, 31);
        let img = render_skeleton(&set, h, w, &style, &BoneTopology::default()).unwrap();
        // endpoints carry the joint color drawn over the bone
        for c in 0..w {
            let px = img.pixel(h / 2, c);
            if c == 0 || c == w - 1 {
                assert_eq!(px, style.joint_color());
            } else {
                assert_eq!(px, style.bone_color(), "column {c}");
            }
        }
        // d = 1 draws a single-pixel line
        assert!((0..w).all(|c| img.pixel(h / 2 - 1, c) == BLACK));
    }

    #[test]
    fn low_visibility_points_are_skipped() {
        let mut hidden = pt(11, 0.0, 0.5);
        hidden.visibility = 0.49;
        let set = LandmarkSet::new([hidden, pt(12, 1.0, 0.5)]).unwrap();
        let style = SkeletonStyle::default().with_geometry(1, 0).unwrap();
        let img = render_skeleton(&set, 5, 5, &style, &BoneTopology::default()).unwrap();
        let lit: Vec<_> = img.pixels().filter(|&p| p != BLACK).collect();
        assert_eq!(lit, vec![style.joint_color()]);
    }

    #[test]
    fn edge_points_clip_without_panicking() {
        let set = LandmarkSet::new([pt(0, 0.0, 0.0), pt(1, 1.0, 1.0)]).unwrap();
        let img = render_skeleton(&set, 3, 4, &SkeletonStyle::default(), &BoneTopology::default()).unwrap();
        assert_eq!(img.pixel(0, 0), SkeletonStyle::default().joint_color());
    }

    #[test]
    fn bresenham_endpoints_and_connectivity() {
        for &(a, b) in &[((0, 0), (3, 7)), ((5, 1), (0, 0)), ((2, 2), (2, 2)), ((0, 6), (6, 0))] {
            let mut pts = Vec::new();
            line_pixels(a, b, |r, c| pts.push((r, c)));
            assert_eq!(pts.first(), Some(&a));
            assert_eq!(pts.last(), Some(&b));
            for w in pts.windows(2) {
                assert!((w[0].0 - w[1].0).abs() <= 1 && (w[0].1 - w[1].1).abs() <= 1);
            }
        }
    }

    #[test]
    fn style_rejects_black_and_zero_thickness() {
        assert!(SkeletonStyle::new(0, 1, [1, 1, 1], [1, 1, 1]).is_err());
        assert!(SkeletonStyle::new(1, 1, BLACK, [1, 1, 1]).is_err());
        assert!(SkeletonStyle::new(1, 0, [1, 0, 0], [0, 1, 0]).is_ok());
    }
}
