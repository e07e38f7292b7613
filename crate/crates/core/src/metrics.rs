//! Support-recovery and classification metrics.
//!
//! Undefined quantities are reported as 0 together with a flag, never NaN.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::model::PredictionResult;

#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryMetrics {
    /// `|est ∩ truth| / |truth|`.
    pub hit_rate: f64,
    /// `|est ∩ truth| / |est|`, 0 when nothing was selected.
    pub precision: f64,
    pub flags: Vec<String>,
}

/// Compare an estimated expert set with the true one.
pub fn recovery(estimated: &BTreeSet<usize>, truth: &BTreeSet<usize>) -> Result<RecoveryMetrics> {
    if truth.is_empty() {
        return Err(Error::InvalidArgument("true expert set is empty".into()));
    }
    let hits = estimated.intersection(truth).count() as f64;
    let mut flags = Vec::new();
    let precision = if estimated.is_empty() {
        flags.push("estimated set is empty; precision set to 0".to_owned());
        0.0
    } else {
        hits / estimated.len() as f64
    };
    Ok(RecoveryMetrics {
        hit_rate: hits / truth.len() as f64,
        precision,
        flags,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassificationMetrics {
    pub accuracy: f64,
    pub auc: f64,
    /// Positive predictive value.
    pub ppv: f64,
    /// Negative predictive value.
    pub npv: f64,
    /// `2·PPV·NPV / (PPV + NPV)`.
    pub f_score: f64,
    /// Conventional F1 from PPV and recall; only filled when requested.
    pub f1: Option<f64>,
    pub flags: Vec<String>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ClassificationOptions {
    /// When set, hard labels are `score >= threshold` instead of the
    /// prediction's own labels.
    pub threshold: Option<f64>,
    pub conventional_f1: bool,
}

fn ratio(num: usize, den: usize, what: &str, flags: &mut Vec<String>) -> f64 {
    if den == 0 {
        flags.push(format!("{what} undefined; set to 0"));
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(a: f64, b: f64, what: &str, flags: &mut Vec<String>) -> f64 {
    if a + b > 0.0 {
        2.0 * a * b / (a + b)
    } else {
        flags.push(format!("{what} undefined; set to 0"));
        0.0
    }
}

/// Evaluate a prediction against `±1` truth.
pub fn classification(
    pred: &PredictionResult,
    truth: &[i8],
    opts: ClassificationOptions,
) -> Result<ClassificationMetrics> {
    if pred.len() != truth.len() || pred.scores.len() != truth.len() {
        return Err(Error::Dimension {
            expected: truth.len(),
            found: pred.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::InvalidArgument("no instances to evaluate".into()));
    }
    if truth.iter().any(|t| t.abs() != 1) {
        return Err(Error::Labels("truth entries must be -1 or 1".into()));
    }
    let hard: Vec<i8> = match opts.threshold {
        Some(th) => pred.scores.iter().map(|&s| if s >= th { 1 } else { -1 }).collect(),
        None => pred.labels.clone(),
    };
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (&h, &t) in hard.iter().zip(truth) {
        match (h == 1, t == 1) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    let mut flags = Vec::new();
    let ppv = ratio(tp, tp + fp, "PPV (no predicted positives)", &mut flags);
    let npv = ratio(tn, tn + fn_, "NPV (no predicted negatives)", &mut flags);
    let f_score = harmonic(ppv, npv, "F-score", &mut flags);
    let f1 = if opts.conventional_f1 {
        let recall = ratio(tp, tp + fn_, "recall (no positive instances)", &mut flags);
        Some(harmonic(ppv, recall, "F1", &mut flags))
    } else {
        None
    };
    let auc = match auc(&pred.scores, truth) {
        Some(a) => a,
        None => {
            flags.push("AUC undefined (truth has a single class); set to 0".to_owned());
            0.0
        }
    };
    Ok(ClassificationMetrics {
        accuracy: (tp + tn) as f64 / truth.len() as f64,
        auc,
        ppv,
        npv,
        f_score,
        f1,
        flags,
    })
}

/// Mann-Whitney AUC with ties counted as one half; `None` for single-class truth.
pub fn auc(scores: &[f64], truth: &[i8]) -> Option<f64> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // midranks over tie groups
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            if truth[k] == 1 {
                rank_sum_pos += mid;
            }
        }
        i = j + 1;
    }
    let n_pos = truth.iter().filter(|&&t| t == 1).count() as f64;
    let n_neg = truth.len() as f64 - n_pos;
    if n_pos == 0.0 || n_neg == 0.0 {
        return None;
    }
    Some((rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg))
}
