//! Classification and regression metrics.
//!
//! Every score reported anywhere in the workspace is computed here: confusion
//! matrices, accuracy, one-vs-rest precision/recall/F1, classification reports
//! and RMSE. All functions are pure.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Square count matrix, rows = true class, columns = predicted class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    classes: Vec<String>,
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    /// Builds a matrix from raw counts. `counts` must be `classes.len()` square.
    pub fn from_counts(classes: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self> {
        let c = classes.len();
        if counts.len() != c || counts.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidInput(format!(
                "confusion counts must be {c}x{c}"
            )));
        }
        Ok(Self { classes, counts })
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n_classes()).map(|i| self.counts[i][i]).sum()
    }

    pub fn class_index(&self, class: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == class)
    }

    /// One-vs-rest counts for class `i`.
    pub fn one_vs_rest(&self, i: usize) -> BinaryCounts {
        let tp = self.counts[i][i];
        let row: u64 = self.counts[i].iter().sum();
        let col: u64 = self.counts.iter().map(|r| r[i]).sum();
        let fn_ = row - tp;
        let fp = col - tp;
        BinaryCounts {
            tp,
            fp,
            fn_,
            tn: self.total() - tp - fp - fn_,
        }
    }

    /// True-class support for class `i`.
    pub fn support(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinaryCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

/// Counts `(true, predicted)` pairs into a confusion matrix over `classes`.
pub fn confusion<A, B, C>(y_true: &[A], y_pred: &[B], classes: &[C]) -> Result<ConfusionMatrix>
where
    A: AsRef<str>,
    B: AsRef<str>,
    C: AsRef<str>,
{
    if y_true.len() != y_pred.len() {
        return Err(Error::DimensionMismatch {
            expected: y_true.len(),
            got: y_pred.len(),
        });
    }
    let classes: Vec<String> = classes.iter().map(|c| c.as_ref().to_string()).collect();
    let index = |label: &str| {
        classes
            .iter()
            .position(|c| c == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    };
    let c = classes.len();
    let mut counts = vec![vec![0u64; c]; c];
    for (t, p) in y_true.iter().zip(y_pred) {
        let i = index(t.as_ref())?;
        let j = index(p.as_ref())?;
        counts[i][j] += 1;
    }
    Ok(ConfusionMatrix { classes, counts })
}

/// Fraction of examples on the diagonal.
pub fn accuracy<T: Scalar>(cm: &ConfusionMatrix) -> Result<T> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Empty("confusion matrix"));
    }
    Ok(T::of(cm.trace() as f64) / T::of(total as f64))
}

/// Which of precision/recall/F1 hit a zero denominator and were set to 0.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Degenerate {
    pub precision: bool,
    pub recall: bool,
    pub f1: bool,
}

impl Degenerate {
    pub fn any(&self) -> bool {
        self.precision || self.recall || self.f1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ClassScores<T> {
    pub precision: T,
    pub recall: T,
    pub f1: T,
    pub support: u64,
    pub degenerate: Degenerate,
}

fn ratio<T: Scalar>(num: u64, den: u64) -> (T, bool) {
    if den == 0 {
        (T::zero(), true)
    } else {
        (T::of(num as f64) / T::of(den as f64), false)
    }
}

fn scores_at<T: Scalar>(cm: &ConfusionMatrix, i: usize) -> ClassScores<T> {
    let b = cm.one_vs_rest(i);
    let (precision, dp) = ratio::<T>(b.tp, b.tp + b.fp);
    let (recall, dr) = ratio::<T>(b.tp, b.tp + b.fn_);
    let sum = precision + recall;
    let (f1, df) = if sum == T::zero() {
        (T::zero(), true)
    } else {
        (T::of(2.0) * precision * recall / sum, false)
    };
    ClassScores {
        precision,
        recall,
        f1,
        support: cm.support(i),
        degenerate: Degenerate {
            precision: dp,
            recall: dr,
            f1: df,
        },
    }
}

/// Precision, recall and F1 of `class` against the rest.
///
/// A zero denominator yields 0 for that metric and sets its degenerate flag.
pub fn precision_recall_f1<T: Scalar>(cm: &ConfusionMatrix, class: &str) -> Result<ClassScores<T>> {
    let i = cm
        .class_index(class)
        .ok_or_else(|| Error::UnknownLabel(class.to_string()))?;
    Ok(scores_at(cm, i))
}

/// Root mean squared error.
pub fn rmse<T: Scalar>(y_true: &[T], y_pred: &[T]) -> Result<T> {
    if y_true.len() != y_pred.len() {
        return Err(Error::DimensionMismatch {
            expected: y_true.len(),
            got: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(Error::Empty("rmse input"));
    }
    let sq: T = y_true
        .iter()
        .zip(y_pred)
        .map(|(&t, &p)| (p - t) * (p - t))
        .sum();
    Ok((sq / T::count(y_true.len())).sqrt())
}

/// Numerically stable softmax.
pub fn softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let Some(max) = logits.iter().copied().reduce(T::max) else {
        return Vec::new();
    };
    let exps: Vec<T> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Index of the largest value, first one on ties.
pub fn argmax<T: PartialOrd + Copy>(values: &[T]) -> Option<usize> {
    let mut best: Option<(usize, T)> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some((_, b)) if !(v > b) => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ReportRow<T> {
    pub class: String,
    #[serde(flatten)]
    pub scores: ClassScores<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct AverageScores<T> {
    pub precision: T,
    pub recall: T,
    pub f1: T,
    pub support: u64,
}

/// Per-class scores plus accuracy and macro/weighted averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ClassificationReport<T> {
    pub rows: Vec<ReportRow<T>>,
    pub accuracy: T,
    pub macro_avg: AverageScores<T>,
    pub weighted_avg: AverageScores<T>,
    pub confusion: ConfusionMatrix,
}

pub fn classification_report<T: Scalar>(cm: &ConfusionMatrix) -> Result<ClassificationReport<T>> {
    let total = cm.total();
    let acc = accuracy::<T>(cm)?;
    let rows: Vec<ReportRow<T>> = (0..cm.n_classes())
        .map(|i| ReportRow {
            class: cm.classes[i].clone(),
            scores: scores_at(cm, i),
        })
        .collect();

    let c = T::count(rows.len());
    let mean = |f: fn(&ClassScores<T>) -> T| rows.iter().map(|r| f(&r.scores)).sum::<T>() / c;
    let weighted = |f: fn(&ClassScores<T>) -> T| {
        rows.iter()
            .map(|r| f(&r.scores) * T::of(r.scores.support as f64))
            .sum::<T>()
            / T::of(total as f64)
    };
    let macro_avg = AverageScores {
        precision: mean(|s| s.precision),
        recall: mean(|s| s.recall),
        f1: mean(|s| s.f1),
        support: total,
    };
    let weighted_avg = AverageScores {
        precision: weighted(|s| s.precision),
        recall: weighted(|s| s.recall),
        f1: weighted(|s| s.f1),
        support: total,
    };
    Ok(ClassificationReport {
        rows,
        accuracy: acc,
        macro_avg,
        weighted_avg,
        confusion: cm.clone(),
    })
}

impl<T: Scalar> fmt::Display for ClassificationReport<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self
            .rows
            .iter()
            .map(|r| r.class.len())
            .chain(["weighted avg".len()])
            .max()
            .unwrap_or(12);
        writeln!(
            f,
            "{:>width$}  {:>9} {:>9} {:>9} {:>9}",
            "", "precision", "recall", "f1-score", "support"
        )?;
        writeln!(f)?;
        for r in &self.rows {
            writeln!(
                f,
                "{:>width$}  {:>9.2} {:>9.2} {:>9.2} {:>9}",
                r.class,
                r.scores.precision.as_f64(),
                r.scores.recall.as_f64(),
                r.scores.f1.as_f64(),
                r.scores.support
            )?;
        }
        writeln!(f)?;
        writeln!(
            f,
            "{:>width$}  {:>9} {:>9} {:>9.2} {:>9}",
            "accuracy",
            "",
            "",
            self.accuracy.as_f64(),
            self.macro_avg.support
        )?;
        for (name, avg) in [("macro avg", &self.macro_avg), ("weighted avg", &self.weighted_avg)] {
            writeln!(
                f,
                "{:>width$}  {:>9.2} {:>9.2} {:>9.2} {:>9}",
                name,
                avg.precision.as_f64(),
                avg.recall.as_f64(),
                avg.f1.as_f64(),
                avg.support
            )?;
        }
        Ok(())
    }
}
