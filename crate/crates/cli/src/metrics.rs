//! Classification metrics: accuracy, confusion matrix and one-vs-rest ROC
//! curves with trapezoid AUC.

use evfuse::error::{Error, Result};

/// ROC points sorted by false-positive rate, plus the trapezoid AUC.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

/// Sweeps every distinct score as a decision threshold (predict positive at
/// or above it) and integrates the resulting staircase.
pub fn roc_points(scores: &[f64], labels: &[bool]) -> Result<RocCurve> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    for &s in scores {
        if !s.is_finite() {
            return Err(Error::NonFiniteInput(s));
        }
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClassLabels);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));

    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / n_neg as f64, tp as f64 / n_pos as f64));
    }
    let auc = trapezoid(&points);
    Ok(RocCurve { points, auc })
}

/// Trapezoid integral of a (fpr, tpr) staircase.
pub fn trapezoid(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum()
}

/// Per-run evaluation outcome for one fusion method.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    /// Class order shared by the confusion matrix and ROC list.
    pub class_labels: Vec<String>,
    pub accuracy: f64,
    /// Rows are true classes, columns predicted classes.
    pub confusion: Vec<Vec<usize>>,
    /// One-vs-rest curve per class; `None` when the labels contain no
    /// positives or no negatives for it.
    pub roc: Vec<(String, Option<RocCurve>)>,
}

impl MetricsReport {
    /// Builds metrics from per-sample class probabilities and true labels.
    /// `class_probs[sample][class]` follows `class_labels` order.
    pub fn from_predictions(
        class_labels: Vec<String>,
        class_probs: &[Vec<f64>],
        predicted: &[usize],
        true_labels: &[usize],
    ) -> MetricsReport {
        let k = class_labels.len();
        let mut confusion = vec![vec![0usize; k]; k];
        let mut correct = 0usize;
        for (&truth, &pred) in true_labels.iter().zip(predicted) {
            confusion[truth][pred] += 1;
            if truth == pred {
                correct += 1;
            }
        }
        let accuracy = correct as f64 / true_labels.len() as f64;
        let mut roc = Vec::with_capacity(k);
        for class in 0..k {
            let scores: Vec<f64> = class_probs.iter().map(|p| p[class]).collect();
            let binary: Vec<bool> = true_labels.iter().map(|&t| t == class).collect();
            roc.push((class_labels[class].clone(), roc_points(&scores, &binary).ok()));
        }
        MetricsReport {
            class_labels,
            accuracy,
            confusion,
            roc,
        }
    }

    pub fn auc_of(&self, class: &str) -> Option<f64> {
        self.roc
            .iter()
            .find(|(label, _)| label == class)
            .and_then(|(_, curve)| curve.as_ref().map(|c| c.auc))
    }
}
