use crate::error::{Error, Result};
use crate::imaging::{composite, render_skeleton, resize_bilinear, BoneTopology, Image, LandmarkSet, SkeletonStyle, NUM_LANDMARKS};
use crate::rng::{derive_seed, seeded, standard_normal, uniform, SeededRng};
use crate::vit::ViTConfig;

use super::dataset::{LabeledSample, View};

/// Per-coordinate landmark jitter in normalized units.
pub const JITTER_STD: f64 = 0.01;

#[derive(Clone, Debug)]
pub struct SyntheticConfig {
    pub num_classes: usize,
    pub per_class: usize,
    pub views: Vec<View>,
    pub seed: u64,
    pub style: SkeletonStyle,
    /// Output side length, equal to the model's input size.
    pub image_size: usize,
    /// Side length of the canvas the skeleton is drawn on before resizing.
    pub canvas_size: usize,
}

impl SyntheticConfig {
    pub fn new(num_classes: usize, per_class: usize, seed: u64, vit: &ViTConfig) -> Self {
        SyntheticConfig {
            num_classes,
            per_class,
            views: View::ALL.to_vec(),
            seed,
            style: SkeletonStyle::default(),
            image_size: vit.image_size,
            canvas_size: 4 * vit.image_size,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSample {
    pub sample: LabeledSample,
    /// The jittered landmarks the skeleton was drawn from.
    pub landmarks: LandmarkSet,
}

/// Head offset/tilt and (upper arm, forearm) directions in degrees, y pointing down.
struct Pose {
    head: (f64, f64, f64),
    right_arm: (f64, f64),
    left_arm: (f64, f64),
}

const fn pose(head: (f64, f64, f64), right_arm: (f64, f64), left_arm: (f64, f64)) -> Pose {
    Pose { head, right_arm, left_arm }
}

const POSES: [Pose; 16] = [
    pose((0.0, 0.0, 0.0), (100.0, -10.0), (80.0, 190.0)),
    pose((0.0, -0.01, -10.0), (110.0, -100.0), (80.0, 190.0)),
    pose((0.0, 0.0, 15.0), (145.0, -60.0), (80.0, 190.0)),
    pose((0.0, 0.0, -12.0), (100.0, -10.0), (50.0, 255.0)),
    pose((0.0, 0.03, 0.0), (95.0, -125.0), (85.0, 150.0)),
    pose((0.0, 0.05, 0.0), (80.0, 30.0), (80.0, 190.0)),
    pose((0.0, 0.05, 0.0), (100.0, -10.0), (100.0, 150.0)),
    pose((0.0, -0.02, 6.0), (195.0, -35.0), (80.0, 190.0)),
    pose((-0.05, 0.0, -8.0), (175.0, 160.0), (80.0, 190.0)),
    pose((0.02, 0.02, 0.0), (60.0, 5.0), (80.0, 190.0)),
    pose((-0.03, 0.07, -18.0), (120.0, 100.0), (80.0, 190.0)),
    pose((0.05, 0.07, 18.0), (55.0, 55.0), (80.0, 190.0)),
    pose((0.07, 0.0, 4.0), (100.0, -10.0), (70.0, 200.0)),
    pose((-0.07, -0.01, -22.0), (100.0, -10.0), (20.0, 20.0)),
    pose((0.0, -0.04, 0.0), (100.0, -10.0), (85.0, 270.0)),
    pose((0.0, 0.0, 0.0), (225.0, -45.0), (80.0, 190.0)),
];

/// Scale, rotation (degrees), horizontal factor (negative mirrors) and translation per view.
fn view_transform(view: View) -> (f64, f64, f64, (f64, f64)) {
    match view {
        View::Dashboard => (0.9, 0.0, 1.0, (0.0, 0.03)),
        View::Rearview => (0.8, 8.0, -1.0, (0.06, 0.05)),
        View::Rightside => (0.85, -10.0, 0.7, (-0.08, 0.02)),
    }
}

fn dir(deg: f64) -> (f64, f64) {
    let r = deg.to_radians();
    (r.cos(), r.sin())
}

fn canonical(pose: &Pose) -> [(f64, f64); NUM_LANDMARKS] {
    let mut p = [(0.0, 0.0); NUM_LANDMARKS];
    let face = [
        (0.0, 0.01),
        (0.02, -0.02),
        (0.035, -0.02),
        (0.05, -0.02),
        (-0.02, -0.02),
        (-0.035, -0.02),
        (-0.05, -0.02),
        (0.07, 0.0),
        (-0.07, 0.0),
        (0.02, 0.05),
        (-0.02, 0.05),
    ];
    let (dx, dy, tilt) = pose.head;
    let (c, s) = dir(tilt);
    for (i, (fx, fy)) in face.iter().enumerate() {
        p[i] = (0.5 + dx + c * fx - s * fy, 0.25 + dy + s * fx + c * fy);
    }
    p[11] = (0.62, 0.42);
    p[12] = (0.38, 0.42);
    p[23] = (0.58, 0.80);
    p[24] = (0.42, 0.80);
    // (shoulder, elbow, wrist, pinky, index, thumb)
    let arms = [(12, 14, 16, 18, 20, 22, pose.right_arm), (11, 13, 15, 17, 19, 21, pose.left_arm)];
    for (sh, el, wr, pinky, index, thumb, (upper, fore)) in arms {
        let (ux, uy) = dir(upper);
        p[el] = (p[sh].0 + 0.17 * ux, p[sh].1 + 0.17 * uy);
        let (fx, fy) = dir(fore);
        p[wr] = (p[el].0 + 0.15 * fx, p[el].1 + 0.15 * fy);
        for (id, len, off) in [(index, 0.04, 0.0), (pinky, 0.035, 25.0), (thumb, 0.03, -35.0)] {
            let (hx, hy) = dir(fore + off);
            p[id] = (p[wr].0 + len * hx, p[wr].1 + len * hy);
        }
    }
    p
}

/// Noise-free normalized landmark coordinates for a class seen from a view.
pub fn class_template(class_index: usize, view: View) -> Result<[(f64, f64); NUM_LANDMARKS]> {
    let pose = POSES
        .get(class_index)
        .ok_or_else(|| Error::contract(format!("no pose template for class {class_index} (max {})", POSES.len())))?;
    let (scale, angle, sx, (tx, ty)) = view_transform(view);
    let (c, s) = dir(angle);
    let mut pts = canonical(pose);
    for p in pts.iter_mut() {
        let x = sx * (p.0 - 0.5);
        let y = p.1 - 0.5;
        *p = (0.5 + scale * (c * x - s * y) + tx, 0.5 + scale * (s * x + c * y) + ty);
    }
    Ok(pts)
}

/// Adds independent N(0, σ²) noise to every coordinate.
pub fn jitter(template: &[(f64, f64)], sigma: f64, rng: &mut SeededRng) -> Vec<(f64, f64)> {
    template
        .iter()
        .map(|&(x, y)| (x + sigma * standard_normal(rng), y + sigma * standard_normal(rng)))
        .collect()
}

fn background(size: usize, rng: &mut SeededRng) -> Result<Image> {
    let base: Vec<f64> = (0..3).map(|_| 40.0 + 110.0 * uniform(rng)).collect();
    let fx = 2.0 + 4.0 * uniform(rng);
    let fy = 2.0 + 4.0 * uniform(rng);
    let phase = std::f64::consts::TAU * uniform(rng);
    let mut pixels = Vec::with_capacity(size * size * 3);
    let tau = std::f64::consts::TAU;
    for r in 0..size {
        for c in 0..size {
            let u = c as f64 / size as f64;
            let v = r as f64 / size as f64;
            let wave = 30.0 * (tau * fx * u + phase).sin() * (tau * fy * v).cos();
            for b in &base {
                let noise = 20.0 * (uniform(rng) - 0.5);
                pixels.push((b + wave + noise).round().clamp(1.0, 255.0) as u8);
            }
        }
    }
    Image::new(size, size, pixels)
}

fn generate_one(config: &SyntheticConfig, topology: &BoneTopology, view: View, class_index: usize, seed: u64) -> Result<SyntheticSample> {
    let mut rng = seeded(seed);
    let coords = jitter(&class_template(class_index, view)?, JITTER_STD, &mut rng);
    let landmarks = LandmarkSet::from_coords(&coords)?;
    let n = config.canvas_size;
    let skeleton = render_skeleton(&landmarks, n, n, &config.style, topology)?;
    let composed = composite(&background(n, &mut rng)?, &skeleton)?;
    let image = resize_bilinear(&composed, config.image_size, config.image_size)?;
    Ok(SyntheticSample {
        sample: LabeledSample { image, class_index, view },
        landmarks,
    })
}

/// Balanced synthetic composites ordered by view, then class, then sample.
pub fn gen_synthetic_dataset(config: &SyntheticConfig) -> Result<Vec<SyntheticSample>> {
    if config.per_class == 0 {
        return Err(Error::contract("per_class must be at least 1"));
    }
    if config.num_classes == 0 || config.num_classes > POSES.len() {
        return Err(Error::contract(format!(
            "synthetic generator supports 1..={} classes, got {}",
            POSES.len(),
            config.num_classes
        )));
    }
    if config.image_size == 0 || config.canvas_size == 0 {
        return Err(Error::contract("image and canvas sizes must be positive"));
    }
    let topology = BoneTopology::default();
    let mut out = Vec::with_capacity(config.views.len() * config.num_classes * config.per_class);
    for &view in &config.views {
        for class_index in 0..config.num_classes {
            for j in 0..config.per_class {
                let salt = ((view as u64) << 48) | ((class_index as u64) << 32) | j as u64;
                out.push(generate_one(config, &topology, view, class_index, derive_seed(config.seed, salt))?);
            }
        }
    }
    Ok(out)
}
