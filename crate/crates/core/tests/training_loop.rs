use pose_vit::training::{
    class_template, gen_synthetic_dataset, split_dataset, train, DatasetSplit, LabeledSample, SyntheticConfig, TrainConfig,
    View, JITTER_STD,
};
use pose_vit::vit::{init_params, ViTConfig};

fn small_vit(k: usize) -> ViTConfig {
    ViTConfig::new(16, 4, 8, 2, 1, k)
}

/// Nearest template in plain Euclidean distance over the 50 landmark coordinates.
fn nearest_template(points: &[(f64, f64)], view: View, k: usize) -> usize {
    let mut best = (f64::INFINITY, usize::MAX);
    for c in 0..k {
        let t = class_template(c, view).unwrap();
        let d: f64 = t.iter().zip(points).map(|(a, b)| (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sum();
        if d < best.0 {
            best = (d, c);
        }
    }
    best.1
}

#[test]
fn synthetic_templates_are_separable() {
    let vit = small_vit(16);
    let data = gen_synthetic_dataset(&SyntheticConfig::new(16, 20, 99, &vit)).unwrap();
    assert_eq!(JITTER_STD, 0.01);
    for s in &data {
        let pts: Vec<(f64, f64)> = s.landmarks.points().iter().map(|p| (p.x, p.y)).collect();
        assert_eq!(nearest_template(&pts, s.sample.view, 16), s.sample.class_index);
    }
    // margin: every pair of templates within a view is far apart relative to the jitter
    for view in View::ALL {
        for a in 0..16 {
            for b in a + 1..16 {
                let (ta, tb) = (class_template(a, view).unwrap(), class_template(b, view).unwrap());
                let d: f64 = ta.iter().zip(&tb).map(|(p, q)| (p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sum::<f64>().sqrt();
                assert!(d > 10.0 * JITTER_STD, "{view}: classes {a} and {b} only {d} apart");
            }
        }
    }
}

fn view_split(k: usize, per_class: usize, seed: u64, vit: &ViTConfig) -> DatasetSplit<LabeledSample> {
    let mut cfg = SyntheticConfig::new(k, per_class, seed, vit);
    cfg.views = vec![View::Dashboard];
    let samples = gen_synthetic_dataset(&cfg).unwrap().into_iter().map(|s| s.sample).collect();
    split_dataset(samples, seed).unwrap()
}

#[test]
fn single_sample_is_memorized() {
    let vit = small_vit(3);
    let mut split = view_split(3, 1, 4, &vit);
    split.train.truncate(1);
    let cfg = TrainConfig {
        epochs: 60,
        seed: 1,
        ..TrainConfig::default()
    };
    let report = train(init_params::<f64>(&vit, 1).unwrap(), &split, &cfg, &vit).unwrap();
    assert_eq!(report.epochs.last().unwrap().train_acc, 1.0);
}

#[test]
fn fixed_seed_gives_identical_curves() {
    let vit = small_vit(4);
    let split = view_split(4, 5, 8, &vit);
    let cfg = TrainConfig {
        epochs: 3,
        batch_size: 4,
        seed: 21,
        ..TrainConfig::default()
    };
    let a = train(init_params::<f64>(&vit, 2).unwrap(), &split, &cfg, &vit).unwrap();
    let b = train(init_params::<f64>(&vit, 2).unwrap(), &split, &cfg, &vit).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(a.best_params, b.best_params);
    let c = train(init_params::<f64>(&vit, 2).unwrap(), &split, &TrainConfig { seed: 22, ..cfg }, &vit).unwrap();
    assert_ne!(a.final_params, c.final_params);
}

/// Two flat-colour classes with per-pixel noise; trivially learnable.
fn colour_split(n_per_class: usize, vit: &ViTConfig) -> DatasetSplit<LabeledSample> {
    let mut rng = pose_vit::rng::seeded(17);
    let mut samples = Vec::new();
    for i in 0..2 * n_per_class {
        let class_index = i % 2;
        let base: [f64; 3] = if class_index == 0 { [200.0, 40.0, 40.0] } else { [40.0, 40.0, 200.0] };
        let n = vit.image_size;
        let pixels = (0..n * n * 3)
            .map(|j| (base[j % 3] + 40.0 * (pose_vit::rng::uniform(&mut rng) - 0.5)) as u8)
            .collect();
        samples.push(LabeledSample {
            image: pose_vit::imaging::Image::new(n, n, pixels).unwrap(),
            class_index,
            view: View::Dashboard,
        });
    }
    split_dataset(samples, 1).unwrap()
}

#[test]
fn first_epoch_lowers_the_loss() {
    let vit = small_vit(2);
    let split = colour_split(32, &vit);
    let init = init_params::<f64>(&vit, 5).unwrap();
    let before = pose_vit::training::evaluate(&init, &split.train, &vit).unwrap().loss;
    let cfg = TrainConfig {
        epochs: 1,
        batch_size: 4,
        seed: 5,
        ..TrainConfig::default()
    };
    let report = train(init, &split, &cfg, &vit).unwrap();
    assert!(report.epochs[0].train_loss < before, "{} !< {before}", report.epochs[0].train_loss);
}

#[test]
fn best_checkpoint_is_earliest_max_validation_epoch() {
    let vit = small_vit(4);
    let split = view_split(4, 6, 12, &vit);
    let cfg = TrainConfig {
        epochs: 6,
        batch_size: 8,
        seed: 3,
        ..TrainConfig::default()
    };
    let report = train(init_params::<f64>(&vit, 3).unwrap(), &split, &cfg, &vit).unwrap();
    let max = report.epochs.iter().map(|r| r.val_acc).fold(f64::MIN, f64::max);
    let first = report.epochs.iter().find(|r| r.val_acc == max).unwrap().epoch;
    assert_eq!(report.best_epoch, first);
    let csv = report.to_csv();
    assert!(csv.starts_with("epoch,train_loss,train_acc,val_loss,val_acc\n"));
    assert_eq!(csv.lines().count(), 7);
}

#[test]
fn mixed_views_are_rejected() {
    let vit = small_vit(2);
    let mut cfg = SyntheticConfig::new(2, 3, 1, &vit);
    cfg.views = vec![View::Dashboard, View::Rightside];
    let samples: Vec<_> = gen_synthetic_dataset(&cfg).unwrap().into_iter().map(|s| s.sample).collect();
    let split = DatasetSplit {
        train: samples.clone(),
        validation: vec![],
        test: vec![],
    };
    let err = train(init_params::<f64>(&vit, 0).unwrap(), &split, &TrainConfig::default(), &vit).unwrap_err();
    assert!(err.to_string().contains("rightside"), "{err}");

    let clean = DatasetSplit {
        train: samples[..6].to_vec(),
        validation: samples[6..].to_vec(),
        test: vec![],
    };
    assert!(train(init_params::<f64>(&vit, 0).unwrap(), &clean, &TrainConfig { epochs: 1, ..TrainConfig::default() }, &vit).is_err());
}

#[test]
fn empty_training_set_is_an_error() {
    let vit = small_vit(2);
    let split = DatasetSplit::<LabeledSample> {
        train: vec![],
        validation: vec![],
        test: vec![],
    };
    assert!(train(init_params::<f64>(&vit, 0).unwrap(), &split, &TrainConfig::default(), &vit).is_err());
}
