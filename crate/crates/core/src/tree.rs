//! CART-style binary classification trees with Gini impurity and the two
//! ensembles built from them: bootstrap forests with searched midpoint
//! thresholds and extremely randomized trees with uniformly drawn thresholds.

use ndarray::{ArrayView1, ArrayView2};
use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;

use crate::util::{self, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitStrategy {
    /// Best Gini gain over midpoints of consecutive distinct values.
    Best,
    /// One threshold drawn uniformly in `[min, max)` per candidate feature.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub bootstrap: bool,
    pub split: SplitStrategy,
    /// Candidate features per split; `None` means `ceil(sqrt(d))`.
    pub max_features: Option<usize>,
}

impl ForestParams {
    pub fn random_forest(n_trees: usize, max_depth: usize) -> Self {
        Self {
            n_trees,
            max_depth,
            bootstrap: true,
            split: SplitStrategy::Best,
            max_features: None,
        }
    }

    pub fn extra_trees(n_trees: usize, max_depth: usize) -> Self {
        Self {
            n_trees,
            max_depth,
            bootstrap: false,
            split: SplitStrategy::Random,
            max_features: None,
        }
    }

    fn candidates(&self, d: usize) -> usize {
        self.max_features
            .unwrap_or_else(|| (d as f64).sqrt().ceil() as usize)
            .clamp(1, d)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf { label: u8 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn predict_row(&self, row: ArrayView1<'_, f64>) -> u8 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { label } => return label,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }
}

fn gini(pos: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let p = pos as f64 / total as f64;
    2.0 * p * (1.0 - p)
}

/// Weighted impurity decrease `n*G(parent) - n_l*G(left) - n_r*G(right)`.
fn gain(pos: usize, total: usize, left_pos: usize, left_total: usize) -> f64 {
    let right_pos = pos - left_pos;
    let right_total = total - left_total;
    total as f64 * gini(pos, total)
        - left_total as f64 * gini(left_pos, left_total)
        - right_total as f64 * gini(right_pos, right_total)
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    gain: f64,
}

struct Builder<'a> {
    columns: &'a [Vec<f64>],
    labels: &'a [u8],
    params: &'a ForestParams,
    n_candidates: usize,
    importances: Vec<f64>,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn best_threshold(&self, feature: usize, rows: &[usize], pos: usize) -> Option<(f64, f64)> {
        let col = &self.columns[feature];
        let mut pairs: Vec<(f64, u8)> = rows.iter().map(|&r| (col[r], self.labels[r])).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total = pairs.len();
        let mut left_pos = 0;
        let mut best: Option<(f64, f64)> = None;
        for i in 0..total - 1 {
            left_pos += pairs[i].1 as usize;
            let (lo, hi) = (pairs[i].0, pairs[i + 1].0);
            if lo == hi {
                continue;
            }
            let g = gain(pos, total, left_pos, i + 1);
            if best.is_none_or(|(_, b)| g > b) {
                let mid = lo + (hi - lo) / 2.0;
                let threshold = if mid < hi { mid } else { lo };
                best = Some((threshold, g));
            }
        }
        best
    }

    fn random_threshold(&self, feature: usize, rows: &[usize], pos: usize, rng: &mut Rng) -> Option<(f64, f64)> {
        let col = &self.columns[feature];
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &r in rows {
            lo = lo.min(col[r]);
            hi = hi.max(col[r]);
        }
        if lo >= hi {
            return None;
        }
        let threshold = rng.random_range(lo..hi);
        let (mut left_total, mut left_pos) = (0, 0);
        for &r in rows {
            if col[r] <= threshold {
                left_total += 1;
                left_pos += self.labels[r] as usize;
            }
        }
        Some((threshold, gain(pos, rows.len(), left_pos, left_total)))
    }

    fn is_constant(&self, feature: usize, rows: &[usize]) -> bool {
        let col = &self.columns[feature];
        let first = col[rows[0]];
        rows.iter().all(|&r| col[r] == first)
    }

    fn choose_split(&self, rows: &[usize], pos: usize, rng: &mut Rng) -> Option<SplitChoice> {
        let d = self.columns.len();
        let mut order: Vec<usize> = (0..d).collect();
        order.shuffle(rng);
        let mut visited = 0;
        let mut best: Option<SplitChoice> = None;
        for feature in order {
            if visited == self.n_candidates {
                break;
            }
            if self.is_constant(feature, rows) {
                continue;
            }
            visited += 1;
            let found = match self.params.split {
                SplitStrategy::Best => self.best_threshold(feature, rows, pos),
                SplitStrategy::Random => self.random_threshold(feature, rows, pos, rng),
            };
            if let Some((threshold, g)) = found {
                if best.as_ref().is_none_or(|b| g > b.gain) {
                    best = Some(SplitChoice {
                        feature,
                        threshold,
                        gain: g,
                    });
                }
            }
        }
        best
    }

    fn build(&mut self, rows: Vec<usize>, rng: &mut Rng) {
        // (node slot, rows, depth)
        let mut stack = vec![(0usize, rows, 0usize)];
        self.nodes.push(Node::Leaf { label: 0 });
        while let Some((slot, rows, depth)) = stack.pop() {
            let pos = rows.iter().filter(|&&r| self.labels[r] == 1).count();
            let label = u8::from(2 * pos > rows.len());
            if pos == 0 || pos == rows.len() || depth >= self.params.max_depth || rows.len() < 2 {
                self.nodes[slot] = Node::Leaf { label };
                continue;
            }
            let Some(choice) = self.choose_split(&rows, pos, rng) else {
                self.nodes[slot] = Node::Leaf { label };
                continue;
            };
            let col = &self.columns[choice.feature];
            let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
                rows.iter().partition(|&&r| col[r] <= choice.threshold);
            self.importances[choice.feature] += choice.gain.max(0.0);
            let left = self.nodes.len();
            let right = left + 1;
            self.nodes.push(Node::Leaf { label: 0 });
            self.nodes.push(Node::Leaf { label: 0 });
            self.nodes[slot] = Node::Split {
                feature: choice.feature,
                threshold: choice.threshold,
                left,
                right,
            };
            stack.push((right, right_rows, depth + 1));
            stack.push((left, left_rows, depth + 1));
        }
    }
}

/// An ensemble of trees, each grown from sub-seed `index_seed(seed, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    trees: Vec<DecisionTree>,
    n_features: usize,
    raw_importances: Vec<f64>,
}

impl Forest {
    /// Callers guarantee `x.nrows() == labels.len() > 0` and `n_trees >= 1`.
    pub fn fit(x: ArrayView2<'_, f64>, labels: &[u8], params: &ForestParams, seed: u64) -> Self {
        let (n, d) = x.dim();
        assert_eq!(n, labels.len());
        let columns: Vec<Vec<f64>> = (0..d).map(|f| x.column(f).to_vec()).collect();
        let n_candidates = params.candidates(d);

        let grown: Vec<(DecisionTree, Vec<f64>)> = (0..params.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = util::rng(util::index_seed(seed, t));
                let rows: Vec<usize> = if params.bootstrap {
                    (0..n).map(|_| rng.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                let mut builder = Builder {
                    columns: &columns,
                    labels,
                    params,
                    n_candidates,
                    importances: vec![0.0; d],
                    nodes: Vec::new(),
                };
                builder.build(rows, &mut rng);
                (DecisionTree { nodes: builder.nodes }, builder.importances)
            })
            .collect();

        let mut raw_importances = vec![0.0; d];
        let mut trees = Vec::with_capacity(grown.len());
        for (tree, imp) in grown {
            for (acc, v) in raw_importances.iter_mut().zip(imp) {
                *acc += v;
            }
            trees.push(tree);
        }
        Self {
            trees,
            n_features: d,
            raw_importances,
        }
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    /// Total Gini decrease per feature, normalized to sum to one (uniform
    /// when no split was ever made).
    pub fn feature_importances(&self) -> Vec<f64> {
        let total: f64 = self.raw_importances.iter().sum();
        if total > 0.0 {
            self.raw_importances.iter().map(|v| v / total).collect()
        } else {
            vec![1.0 / self.n_features as f64; self.n_features]
        }
    }

    /// Fraction of trees voting positive, per row.
    pub fn predict_score(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        x.outer_iter()
            .map(|row| {
                let votes: usize = self.trees.iter().map(|t| t.predict_row(row) as usize).sum();
                votes as f64 / self.trees.len() as f64
            })
            .collect()
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Vec<u8> {
        self.predict_score(x).into_iter().map(|s| u8::from(s > 0.5)).collect()
    }
}
