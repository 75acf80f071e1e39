//! The four classifiers behind one fit / predict / predict_score contract.
//!
//! k-NN and the MLP standardize features with training means and standard
//! deviations; the tree ensembles work on raw values.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::tree::{Forest, ForestParams};
use crate::util::{self, derive_seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassifierKind {
    Knn,
    RandomForest,
    ExtraTrees,
    Mlp,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 4] = [
        ClassifierKind::RandomForest,
        ClassifierKind::ExtraTrees,
        ClassifierKind::Mlp,
        ClassifierKind::Knn,
    ];

    /// Identifier used in configs and on the command line.
    pub fn key(&self) -> &'static str {
        match self {
            ClassifierKind::Knn => "knn",
            ClassifierKind::RandomForest => "random_forest",
            ClassifierKind::ExtraTrees => "extra_trees",
            ClassifierKind::Mlp => "mlp",
        }
    }

    /// Column label used in report tables.
    pub fn label(&self) -> &'static str {
        match self {
            ClassifierKind::Knn => "KNN",
            ClassifierKind::RandomForest => "RandomForest",
            ClassifierKind::ExtraTrees => "ExtraTrees",
            ClassifierKind::Mlp => "MLP",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ClassifierKind::ALL
            .into_iter()
            .find(|k| k.key() == s)
            .ok_or_else(|| Error::Config(format!("unknown classifier `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierSpec {
    pub kind: ClassifierKind,
    pub k_neighbors: usize,
    pub n_trees: usize,
    pub max_depth: usize,
    pub hidden_width: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl ClassifierSpec {
    pub fn new(kind: ClassifierKind, seed: u64) -> Self {
        Self {
            kind,
            k_neighbors: 5,
            n_trees: 100,
            max_depth: 12,
            hidden_width: 32,
            epochs: 50,
            batch_size: 32,
            learning_rate: 0.01,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        match self.kind {
            ClassifierKind::Knn if self.k_neighbors == 0 => bad("k_neighbors must be >= 1"),
            ClassifierKind::RandomForest | ClassifierKind::ExtraTrees if self.n_trees == 0 => {
                bad("n_trees must be >= 1")
            }
            ClassifierKind::Mlp if self.hidden_width == 0 || self.batch_size == 0 => {
                bad("hidden_width and batch_size must be >= 1")
            }
            ClassifierKind::Mlp if self.learning_rate.is_nan() || self.learning_rate <= 0.0 => bad("learning_rate must be > 0"),
            _ => Ok(()),
        }
    }
}

/// Per-feature affine standardization fitted on training data.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Array1<f64>,
    pub std: Array1<f64>,
}

impl Standardizer {
    /// Zero-variance columns keep a unit scale.
    pub fn fit(x: ArrayView2<'_, f64>) -> Self {
        let mean = x.mean_axis(Axis(0)).expect("non-empty");
        let std = x.std_axis(Axis(0), 0.0).mapv(|s| if s > 0.0 { s } else { 1.0 });
        Self { mean, std }
    }

    pub fn transform(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        (&x - &self.mean) / &self.std
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    k: usize,
    scaler: Standardizer,
    points: Array2<f64>,
    labels: Vec<u8>,
}

impl KnnModel {
    /// Fraction of positive labels among the `k` nearest training points
    /// (Euclidean, standardized); equal distances resolve to the lower index.
    fn score(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        let z = self.scaler.transform(x);
        let k = self.k.min(self.points.nrows());
        (0..z.nrows())
            .into_par_iter()
            .map(|r| {
                let q = z.row(r);
                let mut dists: Vec<(f64, usize)> = self
                    .points
                    .outer_iter()
                    .enumerate()
                    .map(|(i, p)| {
                        let d2: f64 = p.iter().zip(q.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
                        (d2, i)
                    })
                    .collect();
                let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
                if k < dists.len() {
                    dists.select_nth_unstable_by(k - 1, cmp);
                }
                let pos = dists[..k].iter().filter(|(_, i)| self.labels[*i] == 1).count();
                pos as f64 / k as f64
            })
            .collect()
    }
}

/// Weights of a one-hidden-layer ReLU network with a sigmoid output.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    /// hidden x inputs
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array1<f64>,
    pub b2: f64,
}

impl MlpParams {
    pub fn zeros(inputs: usize, hidden: usize) -> Self {
        Self {
            w1: Array2::zeros((hidden, inputs)),
            b1: Array1::zeros(hidden),
            w2: Array1::zeros(hidden),
            b2: 0.0,
        }
    }

    /// Weights uniform in (-0.1, 0.1), biases zero.
    pub fn init(inputs: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = util::rng(seed);
        let mut p = Self::zeros(inputs, hidden);
        p.w1.mapv_inplace(|_| rng.random_range(-0.1..0.1));
        p.w2.mapv_inplace(|_| rng.random_range(-0.1..0.1));
        p
    }

    fn logits(&self, x: ArrayView2<'_, f64>) -> (Array2<f64>, Array1<f64>) {
        let pre = x.dot(&self.w1.t()) + &self.b1;
        let hidden = pre.mapv(|v| v.max(0.0));
        let z = hidden.dot(&self.w2) + self.b2;
        (pre, z)
    }

    pub fn predict_proba(&self, x: ArrayView2<'_, f64>) -> Array1<f64> {
        self.logits(x).1.mapv(sigmoid)
    }

    /// Mean binary cross-entropy, computed from logits.
    pub fn loss(&self, x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>) -> f64 {
        let (_, z) = self.logits(x);
        let total: f64 = z.iter().zip(y.iter()).map(|(&z, &t)| softplus(z) - t * z).sum();
        total / y.len() as f64
    }

    /// Analytic gradient of [`MlpParams::loss`].
    pub fn gradient(&self, x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>) -> MlpParams {
        let m = y.len() as f64;
        let (pre, z) = self.logits(x);
        let hidden = pre.mapv(|v| v.max(0.0));
        let dz: Array1<f64> = (z.mapv(sigmoid) - y) / m;
        let w2 = hidden.t().dot(&dz);
        let b2 = dz.sum();
        let mut dpre = dz.clone().insert_axis(Axis(1)).dot(&self.w2.clone().insert_axis(Axis(0)));
        dpre.zip_mut_with(&pre, |g, &p| {
            if p <= 0.0 {
                *g = 0.0;
            }
        });
        MlpParams {
            w1: dpre.t().dot(&x),
            b1: dpre.sum_axis(Axis(0)),
            w2,
            b2,
        }
    }

    fn step(&mut self, grad: &MlpParams, lr: f64) {
        self.w1.scaled_add(-lr, &grad.w1);
        self.b1.scaled_add(-lr, &grad.b1);
        self.w2.scaled_add(-lr, &grad.w2);
        self.b2 -= lr * grad.b2;
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub scaler: Standardizer,
    pub params: MlpParams,
    /// Full-training-set loss after each epoch.
    pub loss_history: Vec<f64>,
}

impl MlpModel {
    fn fit(spec: &ClassifierSpec, train: &Dataset) -> Self {
        let scaler = Standardizer::fit(train.features());
        let x = scaler.transform(train.features());
        let y: Array1<f64> = train.labels().iter().map(|&l| l as f64).collect();
        let mut params = MlpParams::init(x.ncols(), spec.hidden_width, derive_seed(spec.seed, "mlp/init"));
        let mut rng = util::rng(derive_seed(spec.seed, "mlp/batches"));
        let mut order: Vec<usize> = (0..x.nrows()).collect();
        let mut loss_history = Vec::with_capacity(spec.epochs);
        for _ in 0..spec.epochs {
            order.shuffle(&mut rng);
            for batch in order.chunks(spec.batch_size) {
                let bx = x.select(Axis(0), batch);
                let by = y.select(Axis(0), batch);
                let grad = params.gradient(bx.view(), by.view());
                params.step(&grad, spec.learning_rate);
            }
            loss_history.push(params.loss(x.view(), y.view()));
        }
        Self {
            scaler,
            params,
            loss_history,
        }
    }

    fn score(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        self.params.predict_proba(self.scaler.transform(x).view()).to_vec()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Learned {
    Knn(KnnModel),
    Forest(Forest),
    Mlp(MlpModel),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub kind: ClassifierKind,
    n_features: usize,
    learned: Learned,
}

impl TrainedModel {
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn learned(&self) -> &Learned {
        &self.learned
    }

    fn check_dims(&self, x: &ArrayView2<'_, f64>) -> Result<()> {
        if x.ncols() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                found: x.ncols(),
            });
        }
        Ok(())
    }

    /// Positive-class score in [0, 1] per row.
    pub fn predict_score(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        self.check_dims(&x)?;
        Ok(match &self.learned {
            Learned::Knn(m) => m.score(x),
            Learned::Forest(f) => f.predict_score(x),
            Learned::Mlp(m) => m.score(x),
        })
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Vec<u8>> {
        Ok(threshold(&self.predict_score(x)?))
    }
}

/// Scores strictly above one half are positive; exact ties are negative.
pub fn threshold(scores: &[f64]) -> Vec<u8> {
    scores.iter().map(|&s| u8::from(s > 0.5)).collect()
}

pub fn fit(spec: &ClassifierSpec, train: &Dataset) -> Result<TrainedModel> {
    spec.validate()?;
    train.require_both_classes()?;
    let learned = match spec.kind {
        ClassifierKind::Knn => {
            if train.n_samples() < spec.k_neighbors {
                return Err(Error::TooFewSamples {
                    needed: spec.k_neighbors,
                    found: train.n_samples(),
                });
            }
            let scaler = Standardizer::fit(train.features());
            Learned::Knn(KnnModel {
                k: spec.k_neighbors,
                points: scaler.transform(train.features()),
                scaler,
                labels: train.labels().to_vec(),
            })
        }
        ClassifierKind::RandomForest => Learned::Forest(Forest::fit(
            train.features(),
            train.labels(),
            &ForestParams::random_forest(spec.n_trees, spec.max_depth),
            spec.seed,
        )),
        ClassifierKind::ExtraTrees => Learned::Forest(Forest::fit(
            train.features(),
            train.labels(),
            &ForestParams::extra_trees(spec.n_trees, spec.max_depth),
            spec.seed,
        )),
        ClassifierKind::Mlp => Learned::Mlp(MlpModel::fit(spec, train)),
    };
    Ok(TrainedModel {
        kind: spec.kind,
        n_features: train.n_features(),
        learned,
    })
}
