#![allow(dead_code)]

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};

use llmfs_core::llm::{Backend, QueryError};
use llmfs_core::Dataset;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Column-major construction.
pub fn dataset(columns: &[Vec<f64>], labels: &[u8]) -> Dataset {
    let n = labels.len();
    let x = Array2::from_shape_fn((n, columns.len()), |(i, j)| columns[j][i]);
    let names = (0..columns.len()).map(|j| format!("c{j}")).collect();
    Dataset::new(x, labels.to_vec(), names).unwrap()
}

/// Random labels with at least `min_per_class` rows of each class.
pub fn random_labels(r: &mut ChaCha8Rng, n: usize, min_per_class: usize) -> Vec<u8> {
    loop {
        let y: Vec<u8> = (0..n).map(|_| r.random_range(0..2u8)).collect();
        let pos = y.iter().filter(|&&l| l == 1).count();
        if pos >= min_per_class && n - pos >= min_per_class {
            return y;
        }
    }
}

pub fn random_dataset(r: &mut ChaCha8Rng, n: usize, d: usize) -> Dataset {
    let y = random_labels(r, n, 2);
    let cols: Vec<Vec<f64>> = (0..d)
        .map(|j| {
            (0..n)
                .map(|i| r.random_range(-3.0..3.0) + if j % 2 == 0 { y[i] as f64 } else { 0.0 })
                .collect()
        })
        .collect();
    dataset(&cols, &y)
}

pub fn column(ds: &Dataset, j: usize) -> Vec<f64> {
    ds.features().column(j).to_vec()
}

#[derive(Debug, Clone, Copy)]
pub struct OracleMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub mcc: f64,
}

fn safe_div(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        a / b
    }
}

/// Per-class precision, recall and F1 from raw label vectors, treating
/// `class` as the positive one.
fn class_prf(y: &[u8], p: &[u8], class: u8) -> (f64, f64, f64) {
    let mut hit = 0.0;
    let mut predicted = 0.0;
    let mut actual = 0.0;
    for (&t, &q) in y.iter().zip(p) {
        if q == class {
            predicted += 1.0;
        }
        if t == class {
            actual += 1.0;
            if q == class {
                hit += 1.0;
            }
        }
    }
    let prec = safe_div(hit, predicted);
    let rec = safe_div(hit, actual);
    (prec, rec, safe_div(2.0 * prec * rec, prec + rec))
}

/// Brute-force metrics straight from label vectors. `weighted` averages the
/// per-class values by class support.
pub fn oracle_metrics(y: &[u8], p: &[u8], weighted: bool) -> OracleMetrics {
    let n = y.len() as f64;
    let accuracy = y.iter().zip(p).filter(|(a, b)| a == b).count() as f64 / n;
    let pos = class_prf(y, p, 1);
    let (precision, recall, f1) = if weighted {
        let neg = class_prf(y, p, 0);
        let w1 = y.iter().filter(|&&t| t == 1).count() as f64 / n;
        let w0 = 1.0 - w1;
        (
            w1 * pos.0 + w0 * neg.0,
            w1 * pos.1 + w0 * neg.1,
            w1 * pos.2 + w0 * neg.2,
        )
    } else {
        pos
    };
    // MCC as the Pearson correlation of the two 0/1 vectors.
    let yf: Vec<f64> = y.iter().map(|&v| v as f64).collect();
    let pf: Vec<f64> = p.iter().map(|&v| v as f64).collect();
    let mcc = pearson_oracle(&yf, &pf);
    OracleMetrics {
        accuracy,
        precision,
        recall,
        f1,
        mcc,
    }
}

pub fn pearson_oracle(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}

/// Fraction of (positive, negative) pairs ordered correctly, ties half.
pub fn pairwise_auc(y: &[u8], s: &[f64]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for i in 0..y.len() {
        for j in 0..y.len() {
            if y[i] == 1 && y[j] == 0 {
                pairs += 1.0;
                if s[i] > s[j] {
                    wins += 1.0;
                } else if s[i] == s[j] {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

/// Chi-squared over the 2-row table (class, feature mass) with expected
/// mass proportional to class frequency.
pub fn chi2_oracle(col: &[f64], y: &[u8]) -> f64 {
    let min = col.iter().cloned().fold(f64::INFINITY, f64::min);
    let shifted: Vec<f64> = col.iter().map(|v| if min < 0.0 { v - min } else { *v }).collect();
    let total: f64 = shifted.iter().sum();
    let mut chi = 0.0;
    for class in [0u8, 1] {
        let observed: f64 = shifted.iter().zip(y).filter(|(_, &t)| t == class).map(|(v, _)| v).sum();
        let freq = y.iter().filter(|&&t| t == class).count() as f64 / y.len() as f64;
        let expected = total * freq;
        if expected > 0.0 {
            chi += (observed - expected).powi(2) / expected;
        }
    }
    chi
}

/// Two-group F from explicit group lists.
pub fn anova_oracle(col: &[f64], y: &[u8]) -> f64 {
    let groups: Vec<Vec<f64>> = [0u8, 1]
        .iter()
        .map(|&c| col.iter().zip(y).filter(|(_, &t)| t == c).map(|(v, _)| *v).collect())
        .collect();
    let n = col.len() as f64;
    let grand = col.iter().sum::<f64>() / n;
    let mut ssb = 0.0;
    let mut ssw = 0.0;
    for g in &groups {
        let m = g.iter().sum::<f64>() / g.len() as f64;
        ssb += g.len() as f64 * (m - grand).powi(2);
        ssw += g.iter().map(|v| (v - m).powi(2)).sum::<f64>();
    }
    (ssb / 1.0) / (ssw / (n - 2.0))
}

fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// MI = H(Y) + H(B) - H(B, Y) with B the equal-width bin over explicit edges.
pub fn mi_oracle(col: &[f64], y: &[u8], n_bins: usize) -> f64 {
    let min = col.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = (max - min) / n_bins as f64;
    let bin = |v: f64| -> usize {
        if max <= min {
            return 0;
        }
        let mut b = 0;
        for i in 1..n_bins {
            if v >= min + i as f64 * width {
                b = i;
            }
        }
        b
    };
    let n = col.len() as f64;
    let mut joint: HashMap<(usize, u8), usize> = HashMap::new();
    let mut bins: HashMap<usize, usize> = HashMap::new();
    let mut classes: HashMap<u8, usize> = HashMap::new();
    for (&v, &t) in col.iter().zip(y) {
        let b = bin(v);
        *joint.entry((b, t)).or_default() += 1;
        *bins.entry(b).or_default() += 1;
        *classes.entry(t).or_default() += 1;
    }
    entropy(classes.values().copied(), n) + entropy(bins.values().copied(), n)
        - entropy(joint.values().copied(), n)
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// Backend answering from a closure and counting calls.
pub struct FnBackend<F> {
    pub f: F,
    pub calls: AtomicUsize,
}

impl<F> FnBackend<F>
where
    F: Fn(&str) -> Result<String, QueryError> + Send + Sync,
{
    pub fn new(f: F) -> Self {
        Self {
            f,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl<F> Backend for FnBackend<F>
where
    F: Fn(&str) -> Result<String, QueryError> + Send + Sync,
{
    fn complete(&self, _model: &str, prompt: &str, _temperature: f64) -> Result<String, QueryError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        (self.f)(prompt)
    }
}

/// Column index named in a rendered prompt (`Feature name: c3`).
pub fn prompt_feature_index(prompt: &str) -> Option<usize> {
    let start = prompt.find("Feature name: ")? + "Feature name: ".len();
    let name: String = prompt[start..].chars().take_while(|c| !c.is_whitespace()).collect();
    name.trim_start_matches(|c: char| c.is_alphabetic()).parse().ok()
}
