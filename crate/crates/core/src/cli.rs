//! Command-line surface. [`dispatch`] parses arguments, runs a subcommand and returns the exit code.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::checkpoint::{load_checkpoint, save_checkpoint};
use crate::error::Error;
use crate::fusion::{fuse, predict_view, DistributionDocument, FusionConfig, FusionDocument};
use crate::imaging::{composite, read_ppm, render_skeleton, resize_bilinear, write_ppm, BoneTopology, Image, LandmarkDocument, SkeletonStyle};
use crate::labels::class_label;
use crate::metrics::{compute_metrics, ConfusionMatrix};
use crate::rng::derive_seed;
use crate::training::{
    evaluate, gen_synthetic_dataset, load_view_samples, read_manifest, split_dataset, train, write_dataset, AdamW, LabeledSample,
    SyntheticConfig, TrainConfig, View,
};
use crate::vit::{gradient_check, init_params, ViTConfig};

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Lib(#[from] Error),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Lib(Error::Checkpoint(c)) => c.exit_code(),
            CliError::Lib(_) => 1,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "pose-vit", version, about = "Pose-skeleton vision transformer for driver action recognition")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic skeleton dataset for all three views.
    GenData(GenDataArgs),
    /// Draw a landmark skeleton over an image.
    Compose(ComposeArgs),
    /// Train one view's model.
    Train(TrainArgs),
    /// Score a checkpoint on a dataset split.
    Eval(EvalArgs),
    /// Predict the class distribution of one image.
    Infer(InferArgs),
    /// Fuse three per-view distributions into one action.
    Fuse(FuseArgs),
    /// Compare analytic and finite-difference gradients on a tiny model.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ViewArg {
    Dashboard,
    Rearview,
    Rightside,
}

impl From<ViewArg> for View {
    fn from(v: ViewArg) -> View {
        match v {
            ViewArg::Dashboard => View::Dashboard,
            ViewArg::Rearview => View::Rearview,
            ViewArg::Rightside => View::Rightside,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SplitArg {
    Train,
    Val,
    Test,
}

#[derive(Debug, Args)]
struct StyleArgs {
    /// Bone line thickness in pixels.
    #[arg(long, default_value_t = 2)]
    thickness: u32,
    /// Joint disc radius in pixels.
    #[arg(long, default_value_t = 4)]
    radius: u32,
}

impl StyleArgs {
    fn style(&self) -> CliResult<SkeletonStyle> {
        Ok(SkeletonStyle::default().with_geometry(self.thickness, self.radius)?)
    }
}

#[derive(Debug, Args)]
struct GenDataArgs {
    #[arg(long)]
    classes: usize,
    #[arg(long)]
    per_class: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 224)]
    image_size: usize,
    #[command(flatten)]
    style: StyleArgs,
}

#[derive(Debug, Args)]
struct ComposeArgs {
    #[arg(long)]
    image: PathBuf,
    #[arg(long)]
    landmarks: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    style: StyleArgs,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    view: ViewArg,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    #[arg(long, default_value_t = 32)]
    batch: usize,
    #[arg(long, default_value_t = 0.001)]
    lr: f64,
    #[arg(long, default_value_t = 0.0001)]
    wd: f64,
    #[arg(long, default_value_t = 4)]
    depth: usize,
    #[arg(long, default_value_t = 4)]
    heads: usize,
    #[arg(long, default_value_t = 256)]
    embed_dim: usize,
    /// Hidden width of each MLP block [default: twice the embedding dimension].
    #[arg(long)]
    mlp_hidden: Option<usize>,
    #[arg(long, default_value_t = 224)]
    image_size: usize,
    #[arg(long, default_value_t = 16)]
    patch: usize,
    /// Number of classes [default: one more than the largest class in the manifest].
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Seed of the train/validation/test partition.
    #[arg(long, default_value_t = 0)]
    split_seed: u64,
    /// Per-epoch CSV of losses and accuracies.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    ckpt: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    split: SplitArg,
    /// Restrict to one view [default: every view, each split separately].
    #[arg(long, value_enum)]
    view: Option<ViewArg>,
    #[arg(long, default_value_t = 0)]
    split_seed: u64,
    #[arg(long)]
    metrics: Option<PathBuf>,
    #[arg(long)]
    confusion: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct InferArgs {
    #[arg(long)]
    ckpt: PathBuf,
    #[arg(long)]
    image: PathBuf,
    /// Landmarks to draw over the image before prediction.
    #[arg(long)]
    landmarks: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// View recorded in the output document.
    #[arg(long, value_enum, default_value = "dashboard")]
    view: ViewArg,
    #[command(flatten)]
    style: StyleArgs,
}

#[derive(Debug, Args)]
struct FuseArgs {
    #[arg(long)]
    dash: Option<PathBuf>,
    #[arg(long)]
    rear: Option<PathBuf>,
    #[arg(long)]
    side: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    /// Central-difference step.
    #[arg(long, default_value_t = 1e-5)]
    step: f64,
    #[arg(long, default_value_t = 2)]
    batch: usize,
}

fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    Ok(fs::read(path).map_err(|e| Error::io(path, e))?)
}

fn read_text(path: &Path) -> CliResult<String> {
    Ok(fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    Ok(fs::write(path, bytes).map_err(|e| Error::io(path, e))?)
}

/// Writes to `path`, or stdout when absent.
fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => write_bytes(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn overlay(image: &Image, landmarks: &Path, style: &SkeletonStyle) -> CliResult<Image> {
    let set = LandmarkDocument::parse(&read_text(landmarks)?)?.landmark_set()?;
    let skeleton = render_skeleton(&set, image.height(), image.width(), style, &BoneTopology::default())?;
    Ok(composite(image, &skeleton)?)
}

fn gen_data(a: &GenDataArgs) -> CliResult<()> {
    let vit = ViTConfig {
        image_size: a.image_size,
        ..ViTConfig::default()
    };
    let mut cfg = SyntheticConfig::new(a.classes, a.per_class, a.seed, &vit);
    cfg.style = a.style.style()?;
    let samples = gen_synthetic_dataset(&cfg)?;
    let records = write_dataset(&a.out, &samples)?;
    println!("wrote {} samples to {}", records.len(), a.out.display());
    Ok(())
}

fn compose(a: &ComposeArgs) -> CliResult<()> {
    let image = read_ppm(&read_bytes(&a.image)?)?;
    let out = overlay(&image, &a.landmarks, &a.style.style()?)?;
    write_bytes(&a.out, &write_ppm(&out))
}

fn train_cmd(a: &TrainArgs) -> CliResult<()> {
    let view = View::from(a.view);
    let classes = match a.classes {
        Some(k) => k,
        None => read_manifest(&a.data)?
            .iter()
            .map(|r| r.class_index + 1)
            .max()
            .ok_or_else(|| CliError::Usage(format!("{} lists no samples", a.data.display())))?,
    };
    let mut vit = ViTConfig::new(a.image_size, a.patch, a.embed_dim, a.heads, a.depth, classes);
    if let Some(h) = a.mlp_hidden {
        vit.mlp_hidden = h;
    }
    vit.validate()?;
    let samples = load_view_samples(&a.data, Some(view), a.image_size)?;
    let split = split_dataset(samples, a.split_seed)?;
    let config = TrainConfig {
        batch_size: a.batch,
        epochs: a.epochs,
        seed: derive_seed(a.seed, 1),
        shuffle: true,
        optimizer: AdamW {
            lr: a.lr,
            weight_decay: a.wd,
            ..AdamW::default()
        },
        stop_at_train_accuracy: None,
    };
    let model = init_params::<f64>(&vit, derive_seed(a.seed, 0))?;
    let report = train(model, &split, &config, &vit)?;
    save_checkpoint(&report.best_params, &vit, &a.out)?;
    if let Some(path) = &a.report {
        write_bytes(path, report.to_csv().as_bytes())?;
    }
    let best = &report.epochs[report.best_epoch - 1];
    println!(
        "{view}: best epoch {} (train acc {:.4}, val acc {:.4}); checkpoint {}",
        best.epoch,
        best.train_acc,
        best.val_acc,
        a.out.display()
    );
    Ok(())
}

fn pick(split: crate::training::DatasetSplit<LabeledSample>, which: SplitArg) -> Vec<LabeledSample> {
    match which {
        SplitArg::Train => split.train,
        SplitArg::Val => split.validation,
        SplitArg::Test => split.test,
    }
}

fn eval_cmd(a: &EvalArgs) -> CliResult<()> {
    let (params, vit) = load_checkpoint::<f64>(&a.ckpt)?;
    let views: Vec<View> = match a.view {
        Some(v) => vec![v.into()],
        None => View::ALL.to_vec(),
    };
    let k = vit.num_classes;
    let mut matrix = ConfusionMatrix::new(k);
    for view in views {
        let samples = load_view_samples(&a.data, Some(view), vit.image_size)?;
        if samples.is_empty() {
            continue;
        }
        let part = pick(split_dataset(samples, a.split_seed)?, a.split);
        let result = evaluate(&params, &part, &vit)?;
        for (s, &p) in part.iter().zip(&result.predictions) {
            matrix.accumulate(s.class_index, p)?;
        }
    }
    let labels: Vec<String> = (0..k).map(|c| class_label(k, c)).collect();
    let metrics = compute_metrics(&matrix)?;
    let csv = metrics.to_csv(&labels);
    if let Some(path) = &a.confusion {
        write_bytes(path, matrix.to_csv(&labels).as_bytes())?;
    }
    match &a.metrics {
        Some(path) => write_bytes(path, csv.as_bytes())?,
        None => print!("{csv}"),
    }
    println!(
        "accuracy {:.4} over {} samples",
        matrix.trace() as f64 / matrix.total() as f64,
        matrix.total()
    );
    Ok(())
}

fn infer_cmd(a: &InferArgs) -> CliResult<()> {
    let (params, vit) = load_checkpoint::<f64>(&a.ckpt)?;
    let mut image = read_ppm(&read_bytes(&a.image)?)?;
    if let Some(lm) = &a.landmarks {
        image = overlay(&image, lm, &a.style.style()?)?;
    }
    if image.height() != vit.image_size || image.width() != vit.image_size {
        image = resize_bilinear(&image, vit.image_size, vit.image_size)?;
    }
    let prediction = predict_view(&params, &image, &vit, a.view.into())?;
    let mut json = DistributionDocument::from_prediction(&prediction).to_json();
    json.push('\n');
    emit(a.out.as_deref(), &json)
}

fn fuse_cmd(a: &FuseArgs) -> CliResult<()> {
    let (Some(dash), Some(rear), Some(side)) = (&a.dash, &a.rear, &a.side) else {
        return Err(CliError::Usage("three views required: pass --dash, --rear and --side".into()));
    };
    let mut predictions = Vec::with_capacity(3);
    for (path, expect) in [(dash, View::Dashboard), (rear, View::Rearview), (side, View::Rightside)] {
        let p = DistributionDocument::parse(&read_text(path)?)?.prediction()?;
        if p.view != expect {
            return Err(CliError::Usage(format!(
                "{} holds a {} distribution, expected {expect}",
                path.display(),
                p.view
            )));
        }
        predictions.push(p);
    }
    let config = FusionConfig::new(a.threshold)?;
    let result = fuse(&predictions, &config)?;
    let mut json = FusionDocument::from_result(&result).to_json();
    json.push('\n');
    emit(a.out.as_deref(), &json)
}

fn gradcheck_cmd(a: &GradcheckArgs) -> CliResult<bool> {
    let report = gradient_check::<f64>(&ViTConfig::tiny(), a.seed, a.batch, a.step, a.tol)?;
    for g in &report.groups {
        println!(
            "{:<28} max_rel_err {:.3e}  {}",
            g.name,
            g.max_rel_error,
            if g.passed { "ok" } else { "FAIL" }
        );
    }
    println!("worst {:.3e} (tolerance {:.1e})", report.worst(), report.tolerance);
    Ok(report.passed())
}

fn run(cli: Cli) -> CliResult<i32> {
    match &cli.command {
        Command::GenData(a) => gen_data(a)?,
        Command::Compose(a) => compose(a)?,
        Command::Train(a) => train_cmd(a)?,
        Command::Eval(a) => eval_cmd(a)?,
        Command::Infer(a) => infer_cmd(a)?,
        Command::Fuse(a) => fuse_cmd(a)?,
        Command::Gradcheck(a) => return Ok(if gradcheck_cmd(a)? { 0 } else { 1 }),
    }
    Ok(0)
}

/// Runs the command line in `argv` (program name first) and returns the process exit code.
pub fn dispatch<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(dispatch(["pose-vit", "frobnicate"]), 2);
        assert_eq!(dispatch(["pose-vit", "gradcheck", "--bogus"]), 2);
        assert_eq!(dispatch(["pose-vit", "fuse", "--dash", "a.json"]), 2);
        assert_eq!(dispatch(["pose-vit", "--help"]), 0);
    }

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
