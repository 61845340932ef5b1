//! Dataset ingestion, stratified N-fold cross-validation, report
//! generation, and the synthetic oriented-grating benchmark.

mod crossval;
mod dataset;
mod folds;
mod report;
mod synth;

pub use crossval::{cross_validate, extract_features, PipelineConfig};
pub use dataset::{load_manifest, Dataset, Sample};
pub use folds::{stratified_folds, subject_folds, FoldPlan};
pub use report::{EvaluationReport, ReportConfig};
pub use synth::{synth_dataset, SynthConfig};
