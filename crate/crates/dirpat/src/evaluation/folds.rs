//! Deterministic stratified fold assignment.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::evaluation::dataset::Dataset;

/// Per-sample fold assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    fold_count: usize,
    assignment: Vec<usize>,
}

impl FoldPlan {
    pub fn fold_count(&self) -> usize {
        self.fold_count
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn fold_of(&self, sample: usize) -> usize {
        self.assignment[sample]
    }

    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] != fold)
            .collect()
    }
}

/// Assigns samples to `fold_count` folds, stratified by class: within each
/// class the samples are shuffled by the seeded generator and dealt to folds
/// in cyclic order, so per-class fold counts differ by at most one. The
/// cyclic cursor runs on across classes, keeping every fold non-empty
/// whenever the dataset has at least `fold_count` samples.
pub fn stratified_folds(dataset: &Dataset, fold_count: usize, seed: u64) -> Result<FoldPlan> {
    if fold_count < 2 {
        return Err(Error::InvalidConfig(format!(
            "fold count must be at least 2, got {fold_count}"
        )));
    }
    if dataset.len() < fold_count {
        return Err(Error::TooFewSamples {
            total: dataset.len(),
            folds: fold_count,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0usize; dataset.len()];
    let mut cursor = 0usize;
    for class in dataset.class_names() {
        let mut members: Vec<usize> = dataset
            .samples()
            .iter()
            .enumerate()
            .filter(|(_, s)| &s.label == class)
            .map(|(i, _)| i)
            .collect();
        members.shuffle(&mut rng);
        for i in members {
            assignment[i] = cursor % fold_count;
            cursor += 1;
        }
    }
    Ok(FoldPlan {
        fold_count,
        assignment,
    })
}

/// Assigns whole subjects to folds so no subject appears in both the
/// training and test side of any fold. Requires a subject id on every
/// sample and at least `fold_count` distinct subjects.
pub fn subject_folds(dataset: &Dataset, fold_count: usize, seed: u64) -> Result<FoldPlan> {
    if fold_count < 2 {
        return Err(Error::InvalidConfig(format!(
            "fold count must be at least 2, got {fold_count}"
        )));
    }
    if !dataset.has_subjects() {
        return Err(Error::InvalidConfig(
            "subject-independent folds need a subject column in the manifest".into(),
        ));
    }
    let mut subjects: Vec<&str> = Vec::new();
    for sample in dataset.samples() {
        let subject = sample.subject.as_deref().unwrap();
        if !subjects.contains(&subject) {
            subjects.push(subject);
        }
    }
    if subjects.len() < fold_count {
        return Err(Error::TooFewSamples {
            total: subjects.len(),
            folds: fold_count,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    subjects.shuffle(&mut rng);
    let fold_of_subject = |subject: &str| {
        subjects.iter().position(|s| *s == subject).unwrap() % fold_count
    };
    let assignment = dataset
        .samples()
        .iter()
        .map(|s| fold_of_subject(s.subject.as_deref().unwrap()))
        .collect();
    Ok(FoldPlan {
        fold_count,
        assignment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::dataset::Sample;
    use std::path::PathBuf;

    fn dataset(labels: &[&str]) -> Dataset {
        let samples = labels
            .iter()
            .enumerate()
            .map(|(i, label)| Sample {
                path: PathBuf::from(format!("img{i}.pgm")),
                label: label.to_string(),
                subject: None,
            })
            .collect();
        Dataset::from_samples(samples).unwrap()
    }

    fn fold_sizes(plan: &FoldPlan) -> Vec<usize> {
        (0..plan.fold_count())
            .map(|f| plan.test_indices(f).len())
            .collect()
    }

    #[test]
    fn ten_samples_five_folds_deal_evenly() {
        let data = dataset(&["a"; 10]);
        let plan = stratified_folds(&data, 5, 1).unwrap();
        assert_eq!(fold_sizes(&plan), vec![2; 5]);
    }

    #[test]
    fn nine_samples_five_folds_leave_one_short() {
        let data = dataset(&["a"; 9]);
        let plan = stratified_folds(&data, 5, 1).unwrap();
        assert_eq!(fold_sizes(&plan), vec![2, 2, 2, 2, 1]);
    }

    #[test]
    fn same_seed_reproduces_the_assignment() {
        let data = dataset(&["a", "a", "b", "b", "b", "a", "b", "a", "a", "b"]);
        let one = stratified_folds(&data, 3, 99).unwrap();
        let two = stratified_folds(&data, 3, 99).unwrap();
        assert_eq!(one, two);
        let other_seed = stratified_folds(&data, 3, 100).unwrap();
        // Very likely a different deal; only the determinism is asserted.
        let _ = other_seed;
    }

    #[test]
    fn per_class_counts_differ_by_at_most_one() {
        let data = dataset(&["a", "b", "a", "b", "a", "b", "a", "a", "b", "a", "b", "a"]);
        let plan = stratified_folds(&data, 4, 3).unwrap();
        for class in data.class_names() {
            let mut counts = vec![0usize; 4];
            for (i, sample) in data.samples().iter().enumerate() {
                if &sample.label == class {
                    counts[plan.fold_of(i)] += 1;
                }
            }
            let max = counts.iter().max().unwrap();
            let min = counts.iter().min().unwrap();
            assert!(max - min <= 1, "class {class}: {counts:?}");
        }
    }

    #[test]
    fn small_classes_spread_and_folds_stay_nonempty() {
        // Two classes of three samples, five folds: every fold gets a sample.
        let data = dataset(&["a", "a", "a", "b", "b", "b"]);
        let plan = stratified_folds(&data, 5, 7).unwrap();
        for f in 0..5 {
            assert!(!plan.test_indices(f).is_empty(), "fold {f} empty");
        }
    }

    #[test]
    fn too_few_samples_is_an_error() {
        let data = dataset(&["a", "b", "a"]);
        assert!(matches!(
            stratified_folds(&data, 4, 0),
            Err(Error::TooFewSamples { total: 3, folds: 4 })
        ));
        assert!(matches!(
            stratified_folds(&data, 1, 0),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn each_sample_lands_in_exactly_one_fold() {
        let data = dataset(&["a", "b", "c", "a", "b", "c", "a", "b", "c", "a"]);
        let plan = stratified_folds(&data, 3, 5).unwrap();
        let mut seen = vec![0usize; data.len()];
        for f in 0..3 {
            for i in plan.test_indices(f) {
                seen[i] += 1;
            }
        }
        assert!(seen.iter().all(|&n| n == 1));
    }

    fn dataset_with_subjects(rows: &[(&str, &str)]) -> Dataset {
        let samples = rows
            .iter()
            .enumerate()
            .map(|(i, (label, subject))| Sample {
                path: PathBuf::from(format!("img{i}.pgm")),
                label: label.to_string(),
                subject: Some(subject.to_string()),
            })
            .collect();
        Dataset::from_samples(samples).unwrap()
    }

    #[test]
    fn subject_folds_keep_subjects_whole() {
        let data = dataset_with_subjects(&[
            ("a", "s1"),
            ("b", "s1"),
            ("a", "s2"),
            ("b", "s2"),
            ("a", "s3"),
            ("b", "s3"),
            ("a", "s4"),
            ("b", "s4"),
        ]);
        let plan = subject_folds(&data, 2, 11).unwrap();
        for subject in ["s1", "s2", "s3", "s4"] {
            let folds: Vec<usize> = data
                .samples()
                .iter()
                .enumerate()
                .filter(|(_, s)| s.subject.as_deref() == Some(subject))
                .map(|(i, _)| plan.fold_of(i))
                .collect();
            assert!(folds.windows(2).all(|w| w[0] == w[1]), "{subject}: {folds:?}");
        }
    }

    #[test]
    fn subject_folds_require_subjects() {
        let data = dataset(&["a", "b", "a", "b"]);
        assert!(matches!(
            subject_folds(&data, 2, 0),
            Err(Error::InvalidConfig(_))
        ));
    }
}
