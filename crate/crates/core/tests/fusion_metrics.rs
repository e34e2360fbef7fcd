use pose_vit::checkpoint::{decode_checkpoint, encode_checkpoint};
use pose_vit::fusion::{fuse, predict_view, FusionConfig, ViewPrediction};
use pose_vit::imaging::Image;
use pose_vit::metrics::{compute_metrics, ConfusionMatrix};
use pose_vit::training::View;
use pose_vit::vit::{forward, init_params, ViTConfig};
use pose_vit::ClassDistribution;
use proptest::prelude::*;

fn distribution(raw: &[f64]) -> ClassDistribution<f64> {
    let s: f64 = raw.iter().sum();
    ClassDistribution::new(raw.iter().map(|v| v / s).collect()).unwrap()
}

fn triple(k: usize) -> impl Strategy<Value = Vec<ViewPrediction<f64>>> {
    prop::collection::vec(prop::collection::vec(0.001f64..1.0, k), 3).prop_map(|rows| {
        rows.iter()
            .zip(View::ALL)
            .map(|(r, view)| ViewPrediction {
                view,
                distribution: distribution(r),
            })
            .collect()
    })
}

fn any_triple() -> impl Strategy<Value = Vec<ViewPrediction<f64>>> {
    (2usize..12).prop_flat_map(triple)
}

proptest! {
    #[test]
    fn fused_distribution_is_valid(preds in any_triple(), tau in 0.0f64..=1.0) {
        let r = fuse(&preds, &FusionConfig::new(tau).unwrap()).unwrap();
        let sum: f64 = r.distribution.probabilities().iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-9);
        prop_assert!((0.0..=1.0).contains(&r.fused_probability));
        prop_assert!(!r.contributing_views.is_empty());
    }

    #[test]
    fn fusion_is_symmetric(preds in any_triple(), tau in 0.0f64..=1.0, perm in 0usize..6) {
        let orders = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let permuted: Vec<_> = orders[perm].iter().map(|&i| preds[i].clone()).collect();
        let cfg = FusionConfig::new(tau).unwrap();
        prop_assert_eq!(fuse(&preds, &cfg).unwrap(), fuse(&permuted, &cfg).unwrap());
    }

    #[test]
    fn raising_threshold_never_adds_views(preds in any_triple(), a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let r_lo = fuse(&preds, &FusionConfig::new(lo).unwrap()).unwrap();
        let r_hi = fuse(&preds, &FusionConfig::new(hi).unwrap()).unwrap();
        if !r_hi.fallback_used {
            prop_assert!(r_hi.contributing_views.iter().all(|v| r_lo.contributing_views.contains(v)));
        }
    }

    #[test]
    fn zero_threshold_is_the_plain_mean(preds in any_triple()) {
        let r = fuse(&preds, &FusionConfig::new(0.0).unwrap()).unwrap();
        let k = preds[0].distribution.num_classes();
        let mean: Vec<f64> = (0..k)
            .map(|c| (preds[0].distribution.probabilities()[c] + preds[1].distribution.probabilities()[c] + preds[2].distribution.probabilities()[c]) / 3.0)
            .collect();
        let mut best = 0;
        for c in 1..k {
            if mean[c] > mean[best] {
                best = c;
            }
        }
        prop_assert_eq!(r.class_index, best);
        prop_assert_eq!(r.distribution.probabilities(), mean.as_slice());
        prop_assert!(!r.fallback_used);
    }

    #[test]
    fn metric_identities(k in 2usize..8, counts in prop::collection::vec(0u64..50, 64)) {
        let m = ConfusionMatrix::from_counts(k, counts[..k * k].to_vec()).unwrap();
        prop_assume!(m.total() > 0);
        let met = compute_metrics(&m).unwrap();
        let tp: u64 = met.per_class.iter().map(|c| c.tp).sum();
        prop_assert_eq!(tp, m.trace());
        for (c, cm) in met.per_class.iter().enumerate() {
            prop_assert_eq!(cm.tp + cm.fn_, m.row_sum(c));
            prop_assert_eq!(cm.tp + cm.fp + cm.fn_ + cm.tn, m.total());
            if !cm.undefined.fpr {
                prop_assert!((cm.fpr + cm.specificity - 1.0).abs() < 1e-12);
            }
            if !cm.undefined.precision && !cm.undefined.recall && !cm.undefined.f1 {
                let h = 2.0 * cm.precision * cm.recall / (cm.precision + cm.recall);
                prop_assert!((cm.f1 - h).abs() < 1e-12);
            }
        }
        let within = |f: fn(&pose_vit::metrics::ClassMetrics) -> f64, avg: f64| {
            let lo = met.per_class.iter().map(f).fold(f64::INFINITY, f64::min);
            let hi = met.per_class.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
            lo - 1e-12 <= avg && avg <= hi + 1e-12
        };
        let a = met.macro_average;
        prop_assert!(within(|c| c.precision, a.precision));
        prop_assert!(within(|c| c.recall, a.recall));
        prop_assert!(within(|c| c.f1, a.f1));
        prop_assert!(within(|c| c.specificity, a.specificity));
        prop_assert!(within(|c| c.fpr, a.fpr));
        prop_assert!(within(|c| c.accuracy, a.accuracy));
    }

    #[test]
    fn any_single_byte_mutation_is_rejected(pos in any::<prop::sample::Index>(), flip in 1u8..=255) {
        let cfg = ViTConfig::tiny();
        let params = init_params::<f64>(&cfg, 2).unwrap();
        let mut bytes = encode_checkpoint(&params, &cfg).unwrap();
        let i = pos.index(bytes.len());
        bytes[i] ^= flip;
        prop_assert!(decode_checkpoint::<f64>(&bytes).is_err());
    }
}

#[test]
fn accumulate_reproduces_a_tabulated_matrix() {
    let pairs = [(0, 0), (0, 0), (0, 2), (1, 1), (1, 0), (2, 2), (2, 2), (2, 2), (2, 1)];
    let mut m = ConfusionMatrix::new(3);
    for (t, p) in pairs {
        m.accumulate(t, p).unwrap();
    }
    assert_eq!(m, ConfusionMatrix::from_counts(3, vec![2, 0, 1, 1, 1, 0, 0, 1, 3]).unwrap());
    assert_eq!(m.total(), pairs.len() as u64);
}

#[test]
fn perfect_diagonal_scores_one() {
    let m = ConfusionMatrix::from_counts(3, vec![4, 0, 0, 0, 5, 0, 0, 0, 6]).unwrap();
    for c in compute_metrics(&m).unwrap().per_class {
        assert_eq!((c.precision, c.recall, c.f1, c.specificity, c.accuracy, c.fpr), (1.0, 1.0, 1.0, 1.0, 1.0, 0.0));
    }
}

#[test]
fn predict_view_passes_forward_through() {
    let cfg = ViTConfig::tiny();
    let params = init_params::<f64>(&cfg, 4).unwrap();
    let img = Image::filled(16, 16, [10, 200, 30]).unwrap();
    let p = predict_view(&params, &img, &cfg, View::Rearview).unwrap();
    let direct = forward(&img, &params, &cfg, &mut pose_vit::rng::seeded(99), false).unwrap();
    assert_eq!(p.distribution, direct);
    assert_eq!(p, predict_view(&params, &img, &cfg, View::Rearview).unwrap());

    let mut zero_head = params.clone();
    zero_head.get_mut("head.weight").unwrap().data_mut().iter_mut().for_each(|v| *v = 0.0);
    let u = predict_view(&zero_head, &img, &cfg, View::Dashboard).unwrap();
    assert!(u.distribution.probabilities().iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));
}
