//! Labeled image collections described by a CSV manifest.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// One labeled image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub path: PathBuf,
    pub label: String,
    pub subject: Option<String>,
}

/// A set of samples plus the class list in first-appearance order.
#[derive(Debug, Clone)]
pub struct Dataset {
    samples: Vec<Sample>,
    class_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset, deriving class names in first-appearance order.
    /// Paths must be distinct and the sample list non-empty.
    pub fn from_samples(samples: Vec<Sample>) -> Result<Dataset> {
        if samples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut seen = HashSet::new();
        for (i, sample) in samples.iter().enumerate() {
            if !seen.insert(&sample.path) {
                return Err(Error::MalformedRow {
                    row: i + 1,
                    reason: format!("duplicate path {}", sample.path.display()),
                });
            }
        }
        let mut class_names = Vec::new();
        for sample in &samples {
            if !class_names.contains(&sample.label) {
                class_names.push(sample.label.clone());
            }
        }
        Ok(Dataset {
            samples,
            class_names,
        })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.class_names.iter().position(|c| c == label)
    }

    /// True when every sample carries a subject id.
    pub fn has_subjects(&self) -> bool {
        self.samples.iter().all(|s| s.subject.is_some())
    }
}

/// Loads a `path,label[,subject]` manifest. Image paths resolve relative to
/// the manifest's directory and must exist.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    if !path.is_file() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::MalformedRow {
            row: 1,
            reason: e.to_string(),
        })?;

    let headers = reader
        .headers()
        .map_err(|e| Error::MalformedRow {
            row: 1,
            reason: e.to_string(),
        })?
        .clone();
    let columns: Vec<&str> = headers.iter().collect();
    let has_subject = match columns.as_slice() {
        ["path", "label"] => false,
        ["path", "label", "subject"] => true,
        other => {
            return Err(Error::MalformedRow {
                row: 1,
                reason: format!("header must be path,label[,subject], got {other:?}"),
            })
        }
    };

    let mut samples = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1; // 1-based data rows, header excluded
        let record = record.map_err(|e| Error::MalformedRow {
            row,
            reason: e.to_string(),
        })?;
        let raw_path = record.get(0).unwrap_or_default();
        let label = record.get(1).unwrap_or_default();
        if raw_path.is_empty() || label.is_empty() {
            return Err(Error::MalformedRow {
                row,
                reason: "path and label must be non-empty".into(),
            });
        }
        let resolved = {
            let p = PathBuf::from(raw_path);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };
        if !resolved.is_file() {
            return Err(Error::UnresolvablePath(resolved));
        }
        let subject = if has_subject {
            match record.get(2) {
                Some(s) if !s.is_empty() => Some(s.to_string()),
                _ => {
                    return Err(Error::MalformedRow {
                        row,
                        reason: "subject column present but empty".into(),
                    })
                }
            }
        } else {
            None
        };
        samples.push(Sample {
            path: resolved,
            label: label.to_string(),
            subject,
        });
    }

    match Dataset::from_samples(samples) {
        Err(Error::MalformedRow { row, reason }) => Err(Error::MalformedRow { row, reason }),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write_manifest(dir: &Path, body: &str, images: &[&str]) -> PathBuf {
        for name in images {
            let img = crate::imaging::GrayImage::from_fn(5, 5, |_, _| 128);
            img.save_pgm(dir.join(name)).unwrap();
        }
        let manifest = dir.join("manifest.csv");
        fs::write(&manifest, body).unwrap();
        manifest
    }

    #[test]
    fn two_row_manifest_loads_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = write_manifest(
            dir.path(),
            "path,label\na.pgm,happy\nb.pgm,sad\n",
            &["a.pgm", "b.pgm"],
        );
        let dataset = load_manifest(&manifest).unwrap();
        assert_eq!(dataset.len(), 2);
        assert_eq!(dataset.class_names(), ["happy", "sad"]);
        assert_eq!(dataset.samples()[0].label, "happy");
        assert!(!dataset.has_subjects());
    }

    #[test]
    fn empty_body_is_an_empty_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = write_manifest(dir.path(), "path,label\n", &[]);
        assert!(matches!(load_manifest(&manifest), Err(Error::EmptyDataset)));
    }

    #[test]
    fn duplicate_paths_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = write_manifest(
            dir.path(),
            "path,label\na.pgm,happy\na.pgm,sad\n",
            &["a.pgm"],
        );
        match load_manifest(&manifest) {
            Err(Error::MalformedRow { row, reason }) => {
                assert_eq!(row, 2);
                assert!(reason.contains("a.pgm"), "{reason}");
            }
            other => panic!("expected duplicate-path error, got {other:?}"),
        }
    }

    #[test]
    fn missing_image_is_unresolvable() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = write_manifest(dir.path(), "path,label\nghost.pgm,happy\n", &[]);
        assert!(matches!(
            load_manifest(&manifest),
            Err(Error::UnresolvablePath(_))
        ));
    }

    #[test]
    fn missing_manifest_and_bad_header_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_manifest(dir.path().join("none.csv")),
            Err(Error::MissingFile(_))
        ));
        let manifest = write_manifest(dir.path(), "file,cls\na.pgm,happy\n", &["a.pgm"]);
        assert!(matches!(
            load_manifest(&manifest),
            Err(Error::MalformedRow { row: 1, .. })
        ));
    }

    #[test]
    fn subject_column_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = write_manifest(
            dir.path(),
            "path,label,subject\na.pgm,happy,s01\nb.pgm,sad,s02\n",
            &["a.pgm", "b.pgm"],
        );
        let dataset = load_manifest(&manifest).unwrap();
        assert!(dataset.has_subjects());
        assert_eq!(dataset.samples()[1].subject.as_deref(), Some("s02"));
    }
}
