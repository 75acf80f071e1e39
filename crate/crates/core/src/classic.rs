//! Statistical and model-based feature scorers.
//!
//! Every scorer returns a [`ScoreVector`] over all `d` features where larger
//! is better, so that a single top-k rule applies to all of them. The one
//! exception is [`sequential_forward_select`], a wrapper method that yields
//! the selection directly.

use rand::seq::{index, SliceRandom};
use rayon::prelude::*;

use crate::data::{split_indices, Dataset};
use crate::error::{Error, Result};
use crate::selection::SelectionResult;
use crate::stats::{mean, variance};
use crate::tree::{Forest, ForestParams};
use crate::util::{self, derive_seed, index_seed};

/// One importance score per feature.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    pub scores: Vec<f64>,
    pub method_name: String,
    pub higher_is_better: bool,
    /// Run-log lines produced while scoring (shifts, fallbacks, cache use).
    pub notes: Vec<String>,
}

impl ScoreVector {
    /// Infinities are clamped to `±f64::MAX`; NaN becomes `-f64::MAX`.
    pub fn new(method_name: impl Into<String>, scores: Vec<f64>) -> Self {
        let scores = scores
            .into_iter()
            .map(|s| {
                if s.is_nan() {
                    -f64::MAX
                } else {
                    s.clamp(-f64::MAX, f64::MAX)
                }
            })
            .collect();
        Self {
            scores,
            method_name: method_name.into(),
            higher_is_better: true,
            notes: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

fn column(train: &Dataset, j: usize) -> Vec<f64> {
    train.column(j).to_vec()
}

fn per_feature(train: &Dataset, f: impl Fn(&[f64]) -> f64 + Sync) -> Vec<f64> {
    (0..train.n_features())
        .into_par_iter()
        .map(|j| f(&column(train, j)))
        .collect()
}

/// Population variance of each column.
pub fn variance_scores(train: &Dataset) -> ScoreVector {
    ScoreVector::new("variance", per_feature(train, variance))
}

/// Chi-squared statistic treating feature values as class-wise mass.
/// Columns with negative values are shifted by their own minimum first.
pub fn chi2_scores(train: &Dataset) -> ScoreVector {
    let labels = train.labels();
    let n = labels.len() as f64;
    let (n_neg, n_pos) = train.class_counts();
    let priors = [n_neg as f64 / n, n_pos as f64 / n];

    let results: Vec<(f64, Option<f64>)> = (0..train.n_features())
        .into_par_iter()
        .map(|j| {
            let col = column(train, j);
            let min = col.iter().copied().fold(f64::INFINITY, f64::min);
            let shift = if min < 0.0 { -min } else { 0.0 };
            let mut observed = [0.0f64; 2];
            for (&v, &l) in col.iter().zip(labels) {
                observed[l as usize] += v + shift;
            }
            (chi2_statistic(observed, priors), (shift > 0.0).then_some(shift))
        })
        .collect();

    let mut out = ScoreVector::new("chi2", results.iter().map(|r| r.0).collect());
    for (j, (_, shift)) in results.iter().enumerate() {
        if let Some(s) = shift {
            out.notes.push(format!(
                "chi2: shifted feature `{}` by {} to make it non-negative",
                train.feature_names()[j],
                s
            ));
        }
    }
    out
}

fn chi2_statistic(observed: [f64; 2], priors: [f64; 2]) -> f64 {
    let total = observed[0] + observed[1];
    if total == 0.0 {
        return 0.0;
    }
    observed
        .iter()
        .zip(priors)
        .filter(|(_, p)| *p > 0.0)
        .map(|(&o, p)| {
            let e = p * total;
            (o - e) * (o - e) / e
        })
        .sum()
}

/// One-way ANOVA F statistic with two groups.
pub fn anova_f_scores(train: &Dataset) -> Result<ScoreVector> {
    let n = train.n_samples();
    if n < 3 {
        return Err(Error::TooFewSamples { needed: 3, found: n });
    }
    let labels = train.labels();
    let scores = per_feature(train, |col| anova_f(col, labels));
    Ok(ScoreVector::new("anova", scores))
}

fn anova_f(col: &[f64], labels: &[u8]) -> f64 {
    let grand = mean(col);
    let mut sums = [0.0f64; 2];
    let mut counts = [0usize; 2];
    for (&v, &l) in col.iter().zip(labels) {
        sums[l as usize] += v;
        counts[l as usize] += 1;
    }
    let means = [0, 1].map(|c| if counts[c] > 0 { sums[c] / counts[c] as f64 } else { 0.0 });
    let ssb: f64 = (0..2)
        .map(|c| counts[c] as f64 * (means[c] - grand) * (means[c] - grand))
        .sum();
    let ssw: f64 = col
        .iter()
        .zip(labels)
        .map(|(&v, &l)| (v - means[l as usize]) * (v - means[l as usize]))
        .sum();
    let df_within = (col.len() - 2) as f64;
    // Relative cut-off so rounding noise in a constant column is not read as signal.
    let scale = col.iter().map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    if ssb <= 1e-24 * scale * scale * col.len() as f64 {
        return 0.0;
    }
    if ssw == 0.0 {
        return f64::MAX;
    }
    ssb / (ssw / df_within)
}

pub const DEFAULT_MI_BINS: usize = 10;

/// Plug-in mutual information (nats) between the label and the feature
/// discretized into `n_bins` equal-width bins over `[min, max]`.
pub fn mutual_info_scores(train: &Dataset, n_bins: usize) -> ScoreVector {
    let labels = train.labels();
    let n_bins = n_bins.max(1);
    ScoreVector::new("mi", per_feature(train, |col| binned_mutual_info(col, labels, n_bins)))
}

pub(crate) fn equal_width_bin(v: f64, min: f64, max: f64, n_bins: usize) -> usize {
    if max <= min {
        return 0;
    }
    let b = ((v - min) / (max - min) * n_bins as f64).floor();
    (b.max(0.0) as usize).min(n_bins - 1)
}

fn binned_mutual_info(col: &[f64], labels: &[u8], n_bins: usize) -> f64 {
    let n = col.len() as f64;
    let min = col.iter().copied().fold(f64::INFINITY, f64::min);
    let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut joint = vec![[0usize; 2]; n_bins];
    for (&v, &l) in col.iter().zip(labels) {
        joint[equal_width_bin(v, min, max, n_bins)][l as usize] += 1;
    }
    let mut class = [0usize; 2];
    for cell in &joint {
        class[0] += cell[0];
        class[1] += cell[1];
    }
    let mut mi = 0.0;
    for cell in &joint {
        let bin_total = (cell[0] + cell[1]) as f64;
        for c in 0..2 {
            if cell[c] == 0 {
                continue;
            }
            let p_bc = cell[c] as f64 / n;
            mi += p_bc * (p_bc / ((bin_total / n) * (class[c] as f64 / n))).ln();
        }
    }
    mi.max(0.0)
}

/// Pearson correlation; zero when either side has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        (sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0)
    }
}

/// Point-biserial correlation of every feature with the label.
pub fn label_correlations(train: &Dataset) -> Vec<f64> {
    let y: Vec<f64> = train.labels().iter().map(|&l| l as f64).collect();
    per_feature(train, |col| pearson(col, &y))
}

pub const DEFAULT_REDUNDANCY_THRESHOLD: f64 = 0.95;

/// Redundancy filter. Features are scanned by descending absolute label
/// correlation; a feature is dropped when its |r| with an already kept
/// feature exceeds `redundancy_threshold`. Kept features score `2 - rank/d`
/// and dropped ones `-rank/d`, so top-k returns kept features in scan order
/// before any dropped one.
pub fn correlation_filter_scores(train: &Dataset, redundancy_threshold: f64) -> ScoreVector {
    let d = train.n_features();
    let label_r = label_correlations(train);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| label_r[b].abs().total_cmp(&label_r[a].abs()).then(a.cmp(&b)));

    // Unit-norm centered columns make r a dot product.
    let normalized: Vec<Vec<f64>> = (0..d)
        .into_par_iter()
        .map(|j| {
            let col = column(train, j);
            let m = mean(&col);
            let centered: Vec<f64> = col.iter().map(|v| v - m).collect();
            let norm = centered.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                vec![0.0; col.len()]
            } else {
                centered.iter().map(|v| v / norm).collect()
            }
        })
        .collect();

    let eps = 1.0 / d as f64;
    let mut kept: Vec<usize> = Vec::new();
    let mut scores = vec![0.0; d];
    for (rank, &j) in order.iter().enumerate() {
        let redundant = kept.par_iter().any(|&k| {
            let r: f64 = normalized[j].iter().zip(&normalized[k]).map(|(a, b)| a * b).sum();
            r.abs() > redundancy_threshold
        });
        if redundant {
            scores[j] = -(rank as f64) * eps;
        } else {
            scores[j] = 2.0 - rank as f64 * eps;
            kept.push(j);
        }
    }
    let mut out = ScoreVector::new("correlation", scores);
    out.notes.push(format!(
        "correlation: kept {} of {d} features at |r| <= {redundancy_threshold}",
        kept.len()
    ));
    out
}

pub const DEFAULT_TREES: usize = 100;
pub const DEFAULT_MAX_DEPTH: usize = 12;

/// Normalized Gini importances of a bootstrap random forest.
pub fn tree_importance_scores(train: &Dataset, n_trees: usize, max_depth: usize, seed: u64) -> Result<ScoreVector> {
    train.require_both_classes()?;
    let forest = Forest::fit(
        train.features(),
        train.labels(),
        &ForestParams::random_forest(n_trees.max(1), max_depth),
        seed,
    );
    Ok(ScoreVector::new("tree", forest.feature_importances()))
}

/// Normalized Gini importances of extremely randomized trees.
pub fn extratrees_importance_scores(train: &Dataset, n_trees: usize, max_depth: usize, seed: u64) -> Result<ScoreVector> {
    train.require_both_classes()?;
    let forest = Forest::fit(
        train.features(),
        train.labels(),
        &ForestParams::extra_trees(n_trees.max(1), max_depth),
        seed,
    );
    Ok(ScoreVector::new("extratrees", forest.feature_importances()))
}

pub const DEFAULT_CANDIDATES_PER_ROUND: usize = 32;
const PROXY_TREES: usize = 25;
const PROXY_DEPTH: usize = 8;

/// Greedy forward selection. Each round samples up to
/// `candidates_per_round` unselected features, scores each by the
/// validation accuracy of a small extra-trees proxy trained on the current
/// set plus the candidate, and keeps the best (lower index on ties).
/// The result's scores are 1-based selection ranks.
pub fn sequential_forward_select(
    train: &Dataset,
    k: usize,
    candidates_per_round: usize,
    seed: u64,
) -> Result<SelectionResult> {
    let d = train.n_features();
    if k > d {
        return Err(Error::KTooLarge { k, d });
    }
    train.require_both_classes()?;
    let split = split_indices(train, 0.8, derive_seed(seed, "sequential/validation"))?;
    let fit_part = train.subset_rows(&split.train)?;
    let val_part = train.subset_rows(&split.test)?;

    let mut sampler = util::rng(derive_seed(seed, "sequential/candidates"));
    let proxy_base = derive_seed(seed, "sequential/proxy");
    let params = ForestParams::extra_trees(PROXY_TREES, PROXY_DEPTH);

    let mut selected: Vec<usize> = Vec::with_capacity(k);
    let mut remaining: Vec<usize> = (0..d).collect();
    for round in 0..k {
        let take = candidates_per_round.max(1).min(remaining.len());
        let mut candidates: Vec<usize> = index::sample(&mut sampler, remaining.len(), take)
            .into_iter()
            .map(|i| remaining[i])
            .collect();
        candidates.sort_unstable();
        let proxy_seed = index_seed(proxy_base, round);

        let accuracies: Vec<f64> = candidates
            .par_iter()
            .map(|&c| {
                let mut cols = selected.clone();
                cols.push(c);
                let x_fit = fit_part.features().select(ndarray::Axis(1), &cols);
                let x_val = val_part.features().select(ndarray::Axis(1), &cols);
                let forest = Forest::fit(x_fit.view(), fit_part.labels(), &params, proxy_seed);
                let correct = forest
                    .predict(x_val.view())
                    .iter()
                    .zip(val_part.labels())
                    .filter(|(p, t)| p == t)
                    .count();
                correct as f64 / val_part.n_samples() as f64
            })
            .collect();

        let mut best = 0;
        for i in 1..candidates.len() {
            if accuracies[i] > accuracies[best] {
                best = i;
            }
        }
        let chosen = candidates[best];
        selected.push(chosen);
        remaining.retain(|&f| f != chosen);
    }

    Ok(SelectionResult {
        scores: (1..=k).map(|r| r as f64).collect(),
        indices: selected,
        method_name: "sequential".into(),
        k,
    })
}

/// A seeded uniform permutation of `1..=d`, divided by `d`.
pub fn random_scores(train: &Dataset, seed: u64) -> ScoreVector {
    let d = train.n_features();
    let mut ranks: Vec<usize> = (1..=d).collect();
    ranks.shuffle(&mut util::rng(seed));
    ScoreVector::new("random", ranks.into_iter().map(|r| r as f64 / d as f64).collect())
}
