//! The end-to-end evaluation pipeline: encode, extract, train, test.

use rayon::prelude::*;

use crate::classifier::{train_ovo_svm, SvmConfig};
use crate::encoders::{encode, Method};
use crate::error::{Error, Result};
use crate::evaluation::dataset::Dataset;
use crate::evaluation::folds::{stratified_folds, subject_folds};
use crate::evaluation::report::{EvaluationReport, ReportConfig, PROTOCOL_CAVEAT};
use crate::features::{region_histograms, FeatureVector, Normalization, RegionGrid};
use crate::imaging::GrayImage;

/// Everything the pipeline needs besides the dataset and fold parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub method: Method,
    pub grid: RegionGrid,
    pub norm: Normalization,
    pub svm: SvmConfig,
    pub subject_independent: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            method: Method::Retrain,
            grid: RegionGrid::new(7, 6),
            norm: Normalization::Raw,
            svm: SvmConfig::default(),
            subject_independent: false,
        }
    }
}

/// Loads, encodes, and converts every dataset image into a feature vector.
/// Sample order is preserved; work runs on the rayon pool.
pub fn extract_features(
    dataset: &Dataset,
    method: Method,
    grid: RegionGrid,
    norm: Normalization,
) -> Result<Vec<FeatureVector>> {
    dataset
        .samples()
        .par_iter()
        .map(|sample| {
            let annotate = |e: Error| e.annotate(format!("sample {}", sample.path.display()));
            let img = GrayImage::load(&sample.path).map_err(annotate)?;
            let codes = encode(&img, method).map_err(annotate)?;
            region_histograms(&codes, grid, norm).map_err(annotate)
        })
        .collect()
}

/// Runs N-fold cross-validation: for each fold, trains on the other folds
/// (feature standardization fitted on that training data only) and tests on
/// the held-out fold. Returns per-fold accuracies and one confusion matrix
/// pooled over all folds; the pooled accuracy equals trace / total.
pub fn cross_validate(
    dataset: &Dataset,
    pipeline: &PipelineConfig,
    folds: usize,
    seed: u64,
) -> Result<EvaluationReport> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let features = extract_features(dataset, pipeline.method, pipeline.grid, pipeline.norm)?;
    let plan = if pipeline.subject_independent {
        subject_folds(dataset, folds, seed)?
    } else {
        stratified_folds(dataset, folds, seed)?
    };

    let labels: Vec<String> = dataset.samples().iter().map(|s| s.label.clone()).collect();

    // (sample index, predicted label) per fold, evaluated independently.
    let fold_outcomes: Vec<Vec<(usize, String)>> = (0..folds)
        .into_par_iter()
        .map(|fold| {
            let annotate = |e: Error| e.annotate(format!("fold {fold}"));
            let train_idx = plan.train_indices(fold);
            let test_idx = plan.test_indices(fold);
            let train_features: Vec<FeatureVector> =
                train_idx.iter().map(|&i| features[i].clone()).collect();
            let train_labels: Vec<String> = train_idx.iter().map(|&i| labels[i].clone()).collect();
            let model =
                train_ovo_svm(&train_features, &train_labels, &pipeline.svm).map_err(annotate)?;
            test_idx
                .into_iter()
                .map(|i| {
                    let predicted = model.predict(&features[i]).map_err(|e| {
                        e.annotate(format!(
                            "fold {fold}, sample {}",
                            dataset.samples()[i].path.display()
                        ))
                    })?;
                    Ok((i, predicted.to_string()))
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let class_count = dataset.class_names().len();
    let mut confusion = vec![vec![0u64; class_count]; class_count];
    let mut per_fold_accuracy = Vec::with_capacity(folds);
    for outcomes in &fold_outcomes {
        let mut correct = 0usize;
        for (i, predicted) in outcomes {
            let true_idx = dataset.class_index(&labels[*i]).expect("label is known");
            let pred_idx = dataset
                .class_index(predicted)
                .expect("prediction is a training label");
            confusion[true_idx][pred_idx] += 1;
            if true_idx == pred_idx {
                correct += 1;
            }
        }
        per_fold_accuracy.push(correct as f64 / outcomes.len() as f64);
    }

    let total: u64 = confusion.iter().flatten().sum();
    let trace: u64 = (0..class_count).map(|k| confusion[k][k]).sum();
    Ok(EvaluationReport {
        config: ReportConfig {
            method: pipeline.method.to_string(),
            grid: pipeline.grid.to_string(),
            norm: pipeline.norm.to_string(),
            folds,
            seed,
            svm_c: pipeline.svm.c,
            svm_epochs: pipeline.svm.epochs,
            svm_seed: pipeline.svm.seed,
            subject_independent: pipeline.subject_independent,
        },
        classes: dataset.class_names().to_vec(),
        per_fold_accuracy,
        mean_accuracy: trace as f64 / total as f64,
        total_predictions: total,
        correct_predictions: trace,
        confusion,
        caveat: PROTOCOL_CAVEAT.to_string(),
    })
}
