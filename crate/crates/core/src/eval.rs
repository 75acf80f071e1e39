//! Classification metrics: confusion counts, accuracy / precision / recall /
//! F1 / MCC, rank-based ROC AUC and per-cell wall-clock time.

use std::str::FromStr;
use std::time::Instant;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::models::TrainedModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }
}

pub fn confusion(y_true: &[u8], y_pred: &[u8]) -> Result<ConfusionCounts> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch {
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(Error::Empty);
    }
    let mut c = ConfusionCounts::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t == 1, p == 1) {
            (true, true) => c.tp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fp += 1,
            (true, false) => c.fn_ += 1,
        }
    }
    Ok(c)
}

/// How precision, recall and F1 are reduced over the two classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Averaging {
    /// Positive class only.
    Binary,
    /// Per-class values averaged with class-support weights.
    #[default]
    Weighted,
}

impl FromStr for Averaging {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(Averaging::Binary),
            "weighted" => Ok(Averaging::Weighted),
            other => Err(Error::Config(format!("unknown averaging `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub mcc: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

pub fn point_metrics(c: &ConfusionCounts, averaging: Averaging) -> Result<PointMetrics> {
    let total = c.total();
    if total == 0 {
        return Err(Error::Empty);
    }
    let accuracy = ratio(c.tp + c.tn, total);

    let pos_precision = ratio(c.tp, c.tp + c.fp);
    let pos_recall = ratio(c.tp, c.tp + c.fn_);
    let (precision, recall, f1) = match averaging {
        Averaging::Binary => (pos_precision, pos_recall, f1(pos_precision, pos_recall)),
        Averaging::Weighted => {
            let neg_precision = ratio(c.tn, c.tn + c.fn_);
            let neg_recall = ratio(c.tn, c.tn + c.fp);
            let w_pos = (c.tp + c.fn_) as f64 / total as f64;
            let w_neg = (c.tn + c.fp) as f64 / total as f64;
            (
                w_pos * pos_precision + w_neg * neg_precision,
                w_pos * pos_recall + w_neg * neg_recall,
                w_pos * f1(pos_precision, pos_recall) + w_neg * f1(neg_precision, neg_recall),
            )
        }
    };

    let (tp, tn, fp, fn_) = (c.tp as f64, c.tn as f64, c.fp as f64, c.fn_ as f64);
    let factors = [tp + fp, tp + fn_, tn + fp, tn + fn_];
    let mcc = if factors.contains(&0.0) {
        0.0
    } else {
        let den = factors.iter().map(|f| f.sqrt()).product::<f64>();
        ((tp * tn - fp * fn_) / den).clamp(-1.0, 1.0)
    };

    Ok(PointMetrics {
        accuracy,
        precision,
        recall,
        f1,
        mcc,
    })
}

/// Rank-based (Mann-Whitney) AUC with average ranks for ties: the
/// probability that a random positive outscores a random negative, ties
/// counting one half.
pub fn auc(y_true: &[u8], scores: &[f64]) -> Result<f64> {
    if y_true.len() != scores.len() {
        return Err(Error::LengthMismatch {
            left: y_true.len(),
            right: scores.len(),
        });
    }
    let n_pos = y_true.iter().filter(|&&l| l == 1).count();
    let n_neg = y_true.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1 ..= j+1 share their mean
        let avg_rank = (i + j + 2) as f64 / 2.0;
        for &idx in &order[i..=j] {
            if y_true[idx] == 1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let (p, q) = (n_pos as f64, n_neg as f64);
    let u = rank_sum_pos - p * (p + 1.0) / 2.0;
    Ok((u / (p * q)).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// `None` when the test set holds a single class.
    pub auc: Option<f64>,
    pub mcc: f64,
    pub runtime_seconds: f64,
    pub n_features: usize,
    pub confusion: ConfusionCounts,
}

/// Scores `model` on `test`; `runtime_seconds` is measured from `timer_start`.
pub fn evaluate(model: &TrainedModel, test: &Dataset, timer_start: Instant, averaging: Averaging) -> Result<EvalReport> {
    let x = test.features();
    let scores = model.predict_score(x)?;
    let predicted = crate::models::threshold(&scores);
    let counts = confusion(test.labels(), &predicted)?;
    let m = point_metrics(&counts, averaging)?;
    let auc = match auc(test.labels(), &scores) {
        Ok(v) => Some(v),
        Err(Error::SingleClass) => {
            log::warn!("test split holds a single class; AUC left blank");
            None
        }
        Err(e) => return Err(e),
    };
    Ok(EvalReport {
        accuracy: m.accuracy,
        precision: m.precision,
        recall: m.recall,
        f1: m.f1,
        auc,
        mcc: m.mcc,
        runtime_seconds: timer_start.elapsed().as_secs_f64(),
        n_features: model.n_features(),
        confusion: counts,
    })
}
