//! Evaluation results and their JSON / text / CSV renderings.

use serde::Serialize;

/// Echo of every knob that influenced a run, embedded in each report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportConfig {
    pub method: String,
    pub grid: String,
    pub norm: String,
    pub folds: usize,
    pub seed: u64,
    pub svm_c: f64,
    pub svm_epochs: usize,
    pub svm_seed: u64,
    pub subject_independent: bool,
}

/// Cross-validation outcome: per-fold accuracies, the pooled accuracy, and
/// one confusion matrix aggregated over all test folds (rows = true class,
/// columns = predicted class).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub config: ReportConfig,
    pub classes: Vec<String>,
    pub per_fold_accuracy: Vec<f64>,
    pub mean_accuracy: f64,
    pub total_predictions: u64,
    pub correct_predictions: u64,
    pub confusion: Vec<Vec<u64>>,
    pub caveat: String,
}

/// Fixed caveat embedded in every report.
pub(crate) const PROTOCOL_CAVEAT: &str = "Accuracy depends on fold count, seeding, histogram \
normalization, and any preprocessing applied to the input images; absolute numbers are \
protocol-sensitive and comparable only across identical configurations.";

impl EvaluationReport {
    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned human-readable rendering: fold table, pooled accuracy, and
    /// the confusion matrix.
    pub fn to_text(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        writeln!(out, "method {}  grid {}  norm {}  folds {}  seed {}",
            self.config.method, self.config.grid, self.config.norm,
            self.config.folds, self.config.seed)
            .unwrap();
        writeln!(out).unwrap();
        writeln!(out, "fold  accuracy").unwrap();
        for (f, acc) in self.per_fold_accuracy.iter().enumerate() {
            writeln!(out, "{f:>4}  {acc:.4}").unwrap();
        }
        writeln!(
            out,
            "\nmean accuracy: {:.4} ({}/{} correct)",
            self.mean_accuracy, self.correct_predictions, self.total_predictions
        )
        .unwrap();

        let width = self
            .classes
            .iter()
            .map(|c| c.len())
            .chain(std::iter::once(7))
            .max()
            .unwrap();
        writeln!(out, "\nconfusion matrix (rows = true, columns = predicted)").unwrap();
        write!(out, "{:>width$}", "").unwrap();
        for class in &self.classes {
            write!(out, "  {class:>width$}").unwrap();
        }
        writeln!(out).unwrap();
        for (class, row) in self.classes.iter().zip(&self.confusion) {
            write!(out, "{class:>width$}").unwrap();
            for count in row {
                write!(out, "  {count:>width$}").unwrap();
            }
            writeln!(out).unwrap();
        }
        out
    }

    /// Confusion matrix as CSV, predicted classes across the header.
    pub fn confusion_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("true\\predicted");
        for class in &self.classes {
            out.push(',');
            out.push_str(class);
        }
        out.push('\n');
        for (class, row) in self.classes.iter().zip(&self.confusion) {
            out.push_str(class);
            for count in row {
                out.push(',');
                out.push_str(&count.to_string());
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_report() -> EvaluationReport {
        EvaluationReport {
            config: ReportConfig {
                method: "RETRAIN".into(),
                grid: "7x6".into(),
                norm: "RAW".into(),
                folds: 2,
                seed: 42,
                svm_c: 1.0,
                svm_epochs: 100,
                svm_seed: 42,
                subject_independent: false,
            },
            classes: vec!["happy".into(), "sad".into()],
            per_fold_accuracy: vec![1.0, 0.5],
            mean_accuracy: 0.75,
            total_predictions: 4,
            correct_predictions: 3,
            confusion: vec![vec![2, 0], vec![1, 1]],
            caveat: PROTOCOL_CAVEAT.to_string(),
        }
    }

    #[test]
    fn json_contains_the_config_echo() {
        let json = sample_report().to_json_pretty();
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(value["config"]["method"], "RETRAIN");
        assert_eq!(value["config"]["grid"], "7x6");
        assert_eq!(value["mean_accuracy"], 0.75);
        assert_eq!(value["confusion"][1][0], 1);
        assert!(value["caveat"].as_str().unwrap().contains("protocol-sensitive"));
    }

    #[test]
    fn text_table_lists_folds_and_matrix() {
        let text = sample_report().to_text();
        assert!(text.contains("fold  accuracy"));
        assert!(text.contains("mean accuracy: 0.7500 (3/4 correct)"));
        assert!(text.contains("confusion matrix"));
        assert!(text.contains("happy"));
    }

    #[test]
    fn confusion_csv_shape() {
        let csv = sample_report().confusion_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "true\\predicted,happy,sad");
        assert_eq!(lines[1], "happy,2,0");
        assert_eq!(lines[2], "sad,1,1");
    }
}
