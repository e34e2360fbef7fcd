use std::fs;
use std::path::Path;
use std::process::Command;

use pose_vit::cli::dispatch;
use pose_vit::imaging::{composite, read_ppm, render_skeleton, write_ppm, BoneTopology, Image, LandmarkDocument, LandmarkSet, SkeletonStyle};

fn run(args: &[&str]) -> i32 {
    let mut argv = vec!["pose-vit"];
    argv.extend_from_slice(args);
    dispatch(argv)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_dist(path: &Path, view: &str, p: &[f64]) {
    let doc = serde_json::json!({ "view": view, "probabilities": p });
    fs::write(path, doc.to_string()).unwrap();
}

#[test]
fn compose_writes_the_composite() {
    let dir = tempfile::tempdir().unwrap();
    let img = Image::filled(20, 30, [90, 80, 70]).unwrap();
    let set = LandmarkSet::from_coords(&(0..25).map(|i| (i as f64 / 24.0, 0.5)).collect::<Vec<_>>()).unwrap();
    let (ip, lp, op) = (dir.path().join("in.ppm"), dir.path().join("in.json"), dir.path().join("out.ppm"));
    fs::write(&ip, write_ppm(&img)).unwrap();
    fs::write(&lp, LandmarkDocument::new(30, 20, &set).to_json()).unwrap();
    assert_eq!(run(&["compose", "--image", s(&ip), "--landmarks", s(&lp), "--out", s(&op)]), 0);
    let out = read_ppm(&fs::read(&op).unwrap()).unwrap();
    let expect = composite(&img, &render_skeleton(&set, 20, 30, &SkeletonStyle::default(), &BoneTopology::default()).unwrap()).unwrap();
    assert_eq!(out, expect);
    assert_ne!(run(&["compose", "--image", s(&ip), "--landmarks", s(&ip), "--out", s(&op)]), 0);
}

#[test]
fn fuse_needs_three_views() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a.json"), dir.path().join("b.json"), dir.path().join("c.json"));
    write_dist(&a, "dashboard", &[0.1, 0.9, 0.0]);
    write_dist(&b, "rearview", &[0.2, 0.8, 0.0]);
    write_dist(&c, "rightside", &[0.4, 0.3, 0.3]);

    let out = Command::new(env!("CARGO_BIN_EXE_pose-vit"))
        .args(["fuse", "--dash", s(&a), "--rear", s(&b)])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("three views required"));

    let res = dir.path().join("r.json");
    assert_eq!(run(&["fuse", "--dash", s(&a), "--rear", s(&b), "--side", s(&c), "--out", s(&res)]), 0);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&res).unwrap()).unwrap();
    assert_eq!(v["class_index"], 1);
    assert_eq!(v["class_label"], "class_1");
    assert!((v["fused_probability"].as_f64().unwrap() - 0.85).abs() < 1e-12);
    assert_eq!(v["contributing_views"], serde_json::json!(["dashboard", "rearview"]));
    assert_eq!(v["fallback_used"], false);

    // documents passed under the wrong flag
    assert_eq!(run(&["fuse", "--dash", s(&b), "--rear", s(&a), "--side", s(&c)]), 2);
    assert_eq!(run(&["fuse", "--dash", s(&a), "--rear", s(&b), "--side", s(&c), "--threshold", "2"]), 1);
}

#[test]
fn gradcheck_passes_with_seed_seven() {
    let out = Command::new(env!("CARGO_BIN_EXE_pose-vit"))
        .args(["gradcheck", "--seed", "7"])
        .output()
        .unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{text}");
    let groups: Vec<&str> = text.lines().filter(|l| l.contains("max_rel_err")).collect();
    assert_eq!(groups.len(), 20);
    for line in groups {
        let err: f64 = line.split_whitespace().nth(2).unwrap().parse().unwrap();
        assert!(err < 1e-4, "{line}");
    }
}

#[test]
fn unknown_subcommand_and_flag_are_usage_errors() {
    let out = Command::new(env!("CARGO_BIN_EXE_pose-vit")).arg("transmogrify").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    assert_eq!(run(&["train", "--data", "x", "--view", "roof", "--out", "y"]), 2);
}

const TRAIN_FLAGS: [&str; 16] = [
    "--view", "dashboard", "--epochs", "3", "--batch", "8", "--image-size", "16", "--patch", "4", "--embed-dim", "8", "--heads",
    "2", "--depth", "1",
];

fn train_run(data: &Path, dir: &Path, tag: &str, seed: &str) -> (Vec<u8>, Vec<u8>) {
    let ckpt = dir.join(format!("{tag}.pvnt"));
    let report = dir.join(format!("{tag}.csv"));
    let mut args = vec!["train", "--data", s(data), "--out", s(&ckpt), "--report", s(&report), "--seed", seed];
    args.extend_from_slice(&TRAIN_FLAGS);
    assert_eq!(run(&args), 0);
    (fs::read(&ckpt).unwrap(), fs::read(&report).unwrap())
}

#[test]
fn end_to_end_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    assert_eq!(run(&["gen-data", "--classes", "3", "--per-class", "5", "--out", s(&data), "--seed", "4", "--image-size", "16"]), 0);
    assert!(data.join("manifest.csv").exists());
    assert!(data.join("rightside/2").is_dir());

    let (ckpt_a, report_a) = train_run(&data, dir.path(), "a", "9");
    let (ckpt_b, report_b) = train_run(&data, dir.path(), "b", "9");
    assert_eq!(ckpt_a, ckpt_b);
    assert_eq!(report_a, report_b);
    let (ckpt_c, _) = train_run(&data, dir.path(), "c", "10");
    assert_ne!(ckpt_a, ckpt_c);
    let report = String::from_utf8(report_a).unwrap();
    assert_eq!(report.lines().next().unwrap(), "epoch,train_loss,train_acc,val_loss,val_acc");
    assert_eq!(report.lines().count(), 4);

    let ckpt = dir.path().join("a.pvnt");
    let (metrics, confusion) = (dir.path().join("m.csv"), dir.path().join("c.csv"));
    assert_eq!(
        run(&["eval", "--ckpt", s(&ckpt), "--data", s(&data), "--split", "test", "--view", "dashboard", "--metrics", s(&metrics), "--confusion", s(&confusion)]),
        0
    );
    let m = fs::read_to_string(&metrics).unwrap();
    assert_eq!(m.lines().count(), 5);
    assert!(m.lines().last().unwrap().starts_with("average,"));
    let c = fs::read_to_string(&confusion).unwrap();
    let total: u64 = c.lines().skip(1).flat_map(|l| l.split(',').skip(1).map(|v| v.parse::<u64>().unwrap())).sum();
    assert_eq!(total, 2); // floor(0.15 * 15)
    assert_eq!(run(&["eval", "--ckpt", s(&ckpt), "--data", s(&data), "--split", "val"]), 0);

    let image = data.join("dashboard/0/000000.ppm");
    let dist = dir.path().join("d.json");
    assert_eq!(run(&["infer", "--ckpt", s(&ckpt), "--image", s(&image), "--out", s(&dist)]), 0);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&dist).unwrap()).unwrap();
    assert_eq!(v["view"], "dashboard");
    let p: Vec<f64> = v["probabilities"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(p.len(), 3);
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    let lm = data.join("dashboard/0/000000.landmarks.json");
    assert_eq!(run(&["infer", "--ckpt", s(&ckpt), "--image", s(&image), "--landmarks", s(&lm), "--view", "rearview", "--out", s(&dist)]), 0);

    let mut bad = fs::read(&ckpt).unwrap();
    let mid = bad.len() / 2;
    bad[mid] ^= 0x10;
    let bad_path = dir.path().join("bad.pvnt");
    fs::write(&bad_path, bad).unwrap();
    assert_eq!(run(&["infer", "--ckpt", s(&bad_path), "--image", s(&image)]), 5);
    assert_eq!(run(&["infer", "--ckpt", s(&dir.path().join("missing.pvnt")), "--image", s(&image)]), 1);
}
