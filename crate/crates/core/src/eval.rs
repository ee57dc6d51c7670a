//! Stratified splitting, confusion matrices and the accuracy report.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{Classifier, ClassifierKind, LabeledDataset, OobEstimate};
use crate::error::{PqError, Result};
use crate::rng::{self, Domain};
use crate::signal_gen::DisturbanceClass;

const K: usize = DisturbanceClass::COUNT;

/// Per class: shuffle that class's rows with the stream keyed by
/// `(seed, class_code)`, take the first `train_per_class` for training and the
/// next `test_per_class` for testing. Output keeps class order.
pub fn split_dataset(
    rows: &LabeledDataset,
    train_per_class: usize,
    test_per_class: usize,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset)> {
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); K];
    for (i, r) in rows.rows.iter().enumerate() {
        by_class[r.label.index()].push(i);
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for class in DisturbanceClass::ALL {
        let idx = &mut by_class[class.index()];
        if idx.is_empty() {
            continue;
        }
        if idx.len() < train_per_class + test_per_class {
            return Err(PqError::InfeasibleSplit(format!(
                "{class} has {} rows, need {train_per_class} + {test_per_class}",
                idx.len()
            )));
        }
        let mut rng = rng::stream(Domain::Split, &[seed, class.code() as u64]);
        idx.shuffle(&mut rng);
        train.extend(idx[..train_per_class].iter().map(|&i| rows.rows[i]));
        test.extend(
            idx[train_per_class..train_per_class + test_per_class]
                .iter()
                .map(|&i| rows.rows[i]),
        );
    }
    if train.is_empty() && test.is_empty() {
        return Err(PqError::InfeasibleSplit("no rows to split".into()));
    }
    Ok((LabeledDataset::new(train), LabeledDataset::new(test)))
}

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; K]; K],
}

impl ConfusionMatrix {
    pub fn record(&mut self, truth: DisturbanceClass, predicted: DisturbanceClass) {
        self.counts[truth.index()][predicted.index()] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..K).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_total(&self, truth: DisturbanceClass) -> u64 {
        self.counts[truth.index()].iter().sum()
    }

    /// Overall accuracy in percent, `100 · trace / total`.
    pub fn overall_accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        100.0 * self.trace() as f64 / total as f64
    }

    /// Row-normalized percentages; empty rows are all zero.
    pub fn percentages(&self) -> [[f64; K]; K] {
        let mut out = [[0.0; K]; K];
        for (i, row) in self.counts.iter().enumerate() {
            let n: u64 = row.iter().sum();
            if n > 0 {
                for j in 0..K {
                    out[i][j] = 100.0 * row[j] as f64 / n as f64;
                }
            }
        }
        out
    }

    /// Percent correct per true class, `None` for classes absent from the test set.
    pub fn per_class_accuracy(&self) -> [Option<f64>; K] {
        std::array::from_fn(|i| {
            let n: u64 = self.counts[i].iter().sum();
            (n > 0).then(|| 100.0 * self.counts[i][i] as f64 / n as f64)
        })
    }

    pub fn off_diagonal(&self) -> u64 {
        self.total() - self.trace()
    }

    /// Off-diagonal counts whose true and predicted classes both lie in one
    /// of `groups`.
    pub fn off_diagonal_within(&self, groups: &[&[DisturbanceClass]]) -> u64 {
        let mut n = 0;
        for i in 0..K {
            for j in 0..K {
                if i == j {
                    continue;
                }
                let (a, b) = (DisturbanceClass::ALL[i], DisturbanceClass::ALL[j]);
                if groups.iter().any(|g| g.contains(&a) && g.contains(&b)) {
                    n += self.counts[i][j];
                }
            }
        }
        n
    }
}

pub fn evaluate<M: Classifier + Sync>(model: &M, test: &LabeledDataset) -> ConfusionMatrix {
    let predicted: Vec<DisturbanceClass> = test
        .rows
        .par_iter()
        .map(|r| model.predict_values(&r.x))
        .collect();
    let mut cm = ConfusionMatrix::default();
    for (r, p) in test.rows.iter().zip(predicted) {
        cm.record(r.label, p);
    }
    cm
}

/// Published overall accuracies, in percent.
pub fn reference_accuracy(kind: ClassifierKind) -> f64 {
    match kind {
        ClassifierKind::Knn => 90.36,
        ClassifierKind::Svm => 97.72,
        ClassifierKind::Forest => 99.54,
    }
}

/// Minimum acceptable overall accuracy, in percent.
pub fn accuracy_floor(kind: ClassifierKind) -> f64 {
    match kind {
        ClassifierKind::Knn => 85.0,
        ClassifierKind::Svm => 94.0,
        ClassifierKind::Forest => 97.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierResult {
    pub classifier: ClassifierKind,
    pub hyperparameters: serde_json::Value,
    pub counts: [[u64; K]; K],
    pub percentages: [[f64; K]; K],
    pub overall_accuracy: f64,
    pub per_class_accuracy: [Option<f64>; K],
}

impl ClassifierResult {
    pub fn new(classifier: ClassifierKind, hyperparameters: serde_json::Value, cm: &ConfusionMatrix) -> Self {
        ClassifierResult {
            classifier,
            hyperparameters,
            counts: cm.counts,
            percentages: cm.percentages(),
            overall_accuracy: cm.overall_accuracy(),
            per_class_accuracy: cm.per_class_accuracy(),
        }
    }

    pub fn matrix(&self) -> ConfusionMatrix {
        ConfusionMatrix { counts: self.counts }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmDiagnostics {
    pub machines: usize,
    pub max_equality_residual: f64,
    pub max_kkt_gap: f64,
    pub support_vectors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloorCheck {
    pub classifier: ClassifierKind,
    pub accuracy: f64,
    pub floor: f64,
    pub reference: f64,
    pub delta: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub floors: Vec<FloorCheck>,
    /// Strict RF > SVM > KNN among the classifiers present.
    pub ordering_ok: bool,
    pub pass: bool,
    pub violations: Vec<String>,
}

/// Floors, ordering and deltas against the published accuracies. Only the
/// classifiers present are checked.
pub fn compare_accuracies(accuracies: &[(ClassifierKind, f64)]) -> Comparison {
    let mut violations = Vec::new();
    let floors: Vec<FloorCheck> = ClassifierKind::ALL
        .iter()
        .filter_map(|&k| accuracies.iter().find(|(c, _)| *c == k))
        .map(|&(classifier, accuracy)| {
            let floor = accuracy_floor(classifier);
            let pass = accuracy >= floor;
            if !pass {
                violations.push(format!(
                    "{} accuracy {accuracy:.2}% below floor {floor:.2}%",
                    classifier.title()
                ));
            }
            FloorCheck {
                classifier,
                accuracy,
                floor,
                reference: reference_accuracy(classifier),
                delta: accuracy - reference_accuracy(classifier),
                pass,
            }
        })
        .collect();

    // ascending expected order: KNN < SVM < Forest
    let mut ordering_ok = true;
    for pair in floors.windows(2) {
        if pair[0].accuracy >= pair[1].accuracy {
            ordering_ok = false;
            violations.push(format!(
                "ordering violated: {} {:.2}% is not above {} {:.2}%",
                pair[1].classifier.title(),
                pair[1].accuracy,
                pair[0].classifier.title(),
                pair[0].accuracy
            ));
        }
    }
    let pass = violations.is_empty();
    Comparison { floors, ordering_ok, pass, violations }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub master_seed: u64,
    pub signals_per_class: usize,
    pub split_seed: u64,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub results: Vec<ClassifierResult>,
    pub forest_oob: Option<OobEstimate>,
    pub svm: Option<SvmDiagnostics>,
    pub comparison: Comparison,
}

impl EvalReport {
    pub fn result(&self, kind: ClassifierKind) -> Option<&ClassifierResult> {
        self.results.iter().find(|r| r.classifier == kind)
    }

    pub fn accuracies(&self) -> Vec<(ClassifierKind, f64)> {
        self.results.iter().map(|r| (r.classifier, r.overall_accuracy)).collect()
    }
}

pub fn compare_to_reference(report: &EvalReport) -> Comparison {
    compare_accuracies(&report.accuracies())
}

/// Plain-text tables in the `PQD C1 … C11` layout with integer percentages.
pub fn render_text(report: &EvalReport) -> String {
    let mut s = String::new();
    for (n, r) in report.results.iter().enumerate() {
        let _ = writeln!(s, "Table {}: Confusion Matrix of {}", n + 1, r.classifier.title());
        let _ = write!(s, "{:<5}", "PQD");
        for c in DisturbanceClass::ALL {
            let _ = write!(s, "{:>5}", c.to_string());
        }
        s.push('\n');
        for (i, row) in r.percentages.iter().enumerate() {
            let _ = write!(s, "{:<5}", i + 1);
            for v in row {
                let _ = write!(s, "{:>5.0}", v);
            }
            s.push('\n');
        }
        let _ = writeln!(s, "Overall Accuracy = {:.2}%", r.overall_accuracy);
        s.push('\n');
    }
    if let Some(oob) = &report.forest_oob {
        let _ = writeln!(
            s,
            "Random Forest OOB error = {:.2}% over {} rows ({} without OOB votes)",
            100.0 * oob.error,
            oob.voted_rows,
            oob.skipped_rows
        );
    }
    if let Some(svm) = &report.svm {
        let _ = writeln!(
            s,
            "SVM: {} machines, {} support vectors, max |sum alpha*o| = {:.3e}, max KKT gap = {:.3e}",
            svm.machines, svm.support_vectors, svm.max_equality_residual, svm.max_kkt_gap
        );
    }
    let _ = writeln!(s, "\n{:<15}{:>10}{:>10}{:>10}{:>8}", "classifier", "accuracy", "reference", "delta", "floor");
    for f in &report.comparison.floors {
        let _ = writeln!(
            s,
            "{:<15}{:>9.2}%{:>9.2}%{:>+10.2}{:>7.0}%{}",
            f.classifier.title(),
            f.accuracy,
            f.reference,
            f.delta,
            f.floor,
            if f.pass { "" } else { "  FAIL" }
        );
    }
    let _ = writeln!(
        s,
        "ordering RF > SVM > KNN: {}",
        if report.comparison.ordering_ok { "ok" } else { "violated" }
    );
    for v in &report.comparison.violations {
        let _ = writeln!(s, "  - {v}");
    }
    let _ = writeln!(s, "result: {}", if report.comparison.pass { "PASS" } else { "FAIL" });
    s
}
