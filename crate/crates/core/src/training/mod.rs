//! Staged training, weak-label handling, and pseudo-label generation.

mod clicks;
mod pipeline;
mod pseudo;
mod scheduler;
mod split;
mod stage;

pub use clicks::{click_count, click_pixel, sample_clicks};
pub use pipeline::{
    config_hash, model_from_state, prepare, run_pipeline, run_prepared, CompletedStage, PartitionGraph,
    PipelineCheckpoint, PipelineConfig, PipelineOutput, PipelineRun, PreparedData, RunControl, Sample,
    StageInput, StageReport, WeakSignal,
};
pub use pseudo::{generate_pseudo_labels, node_classes, project_to_pixels};
pub use scheduler::{replay, ReduceOnPlateau, SchedulerConfig, SchedulerStep};
pub use split::{split_weak_labels, SplitMask, SplitRole};
pub use stage::{
    infer_stage, train_stage, EpochRecord, PartitionInput, StageConfig, StageOutput, StageProgress, StageTrainer,
};
