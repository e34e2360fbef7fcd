//! Dataset preparation, the AdamW optimizer and the per-view training loop.

mod dataset;
mod optimizer;
mod storage;
mod synthetic;
mod trainer;

pub use dataset::{balance_by_truncation, one_hot, split_dataset, DatasetSplit, LabeledSample, View};
pub use optimizer::{adamw_step, adamw_update, AdamW, OptimizerState};
pub use storage::{load_view_samples, read_manifest, write_dataset, ManifestRecord, MANIFEST_FILE};
pub use synthetic::{class_template, gen_synthetic_dataset, jitter, SyntheticConfig, SyntheticSample, JITTER_STD};
pub use trainer::{evaluate, train, Evaluation, EpochRecord, TrainConfig, TrainingReport};
