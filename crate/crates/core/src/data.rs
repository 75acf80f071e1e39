//! Binary-labelled feature tables: CSV ingestion, stratified splitting and
//! synthetic generation.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::util::{self, format_significant};

pub const DEFAULT_LABEL_COLUMN: &str = "label";

/// An immutable `n x d` feature matrix with binary labels (1 = positive /
/// malware) and unique feature names.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    labels: Vec<u8>,
    feature_names: Vec<String>,
}

impl Dataset {
    pub fn new(features: Array2<f64>, labels: Vec<u8>, feature_names: Vec<String>) -> Result<Self> {
        let (n, d) = features.dim();
        if n == 0 || d == 0 {
            return Err(Error::InvalidDataset(format!("shape {n}x{d} has no data")));
        }
        if labels.len() != n {
            return Err(Error::InvalidDataset(format!(
                "{} labels for {n} rows",
                labels.len()
            )));
        }
        if feature_names.len() != d {
            return Err(Error::InvalidDataset(format!(
                "{} names for {d} columns",
                feature_names.len()
            )));
        }
        if let Some(row) = labels.iter().position(|&l| l > 1) {
            return Err(Error::NonBinaryLabel { row });
        }
        let mut seen = HashSet::with_capacity(d);
        for name in &feature_names {
            if name.is_empty() {
                return Err(Error::InvalidDataset("empty feature name".into()));
            }
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidDataset(format!("duplicate feature name `{name}`")));
            }
        }
        if let Some(((row, col), _)) = features.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonNumericCell {
                row,
                column: feature_names[col].clone(),
            });
        }
        Ok(Self {
            features,
            labels,
            feature_names,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn column(&self, j: usize) -> ArrayView1<'_, f64> {
        self.features.column(j)
    }

    /// `(negatives, positives)`.
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|&&l| l == 1).count();
        (self.labels.len() - pos, pos)
    }

    pub fn has_both_classes(&self) -> bool {
        let (neg, pos) = self.class_counts();
        neg > 0 && pos > 0
    }

    pub(crate) fn require_both_classes(&self) -> Result<()> {
        if self.has_both_classes() {
            Ok(())
        } else {
            Err(Error::SingleClassDataset)
        }
    }

    /// New dataset holding the given rows, in the given order.
    pub fn subset_rows(&self, rows: &[usize]) -> Result<Self> {
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.n_samples()) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                len: self.n_samples(),
            });
        }
        let features = self.features.select(Axis(0), rows);
        let labels = rows.iter().map(|&r| self.labels[r]).collect();
        Dataset::new(features, labels, self.feature_names.clone())
    }

    /// New dataset holding the given columns, in the given order.
    pub fn subset_columns(&self, columns: &[usize]) -> Result<Self> {
        if let Some(&bad) = columns.iter().find(|&&c| c >= self.n_features()) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                len: self.n_features(),
            });
        }
        let features = self.features.select(Axis(1), columns);
        let names = columns.iter().map(|&c| self.feature_names[c].clone()).collect();
        Dataset::new(features, self.labels.clone(), names)
    }

    /// Same labels and names with a replacement feature matrix.
    pub fn with_features(&self, features: Array2<f64>) -> Result<Self> {
        Dataset::new(features, self.labels.clone(), self.feature_names.clone())
    }
}

/// Loads a CSV whose header names the columns and where `label_column`
/// holds 0/1 labels; every other column is a numeric feature.
pub fn load_csv(path: impl AsRef<Path>, label_column: &str) -> Result<Dataset> {
    let file = File::open(path)?;
    read_csv(BufReader::new(file), label_column)
}

pub fn read_csv<R: Read>(reader: R, label_column: &str) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .from_reader(reader);
    let mut records = rdr.records();

    let header = match records.next() {
        None => return Err(Error::EmptyFile),
        Some(h) => h?,
    };
    let header: Vec<String> = header.iter().map(|s| s.trim().to_string()).collect();
    if header.len() == 1 && header[0].is_empty() {
        return Err(Error::EmptyFile);
    }
    let label_idx = header
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::MissingLabelColumn(label_column.to_string()))?;
    let names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_idx)
        .map(|(_, h)| h.clone())
        .collect();
    if names.is_empty() {
        return Err(Error::InvalidDataset("no feature columns".into()));
    }

    let d = names.len();
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (row, record) in records.enumerate() {
        let record = record?;
        for (i, cell) in record.iter().enumerate() {
            let cell = cell.trim();
            if i == label_idx {
                labels.push(parse_label(cell).ok_or(Error::NonBinaryLabel { row })?);
            } else {
                let v: f64 = cell
                    .parse()
                    .ok()
                    .filter(|v: &f64| v.is_finite())
                    .ok_or_else(|| Error::NonNumericCell {
                        row,
                        column: header[i].clone(),
                    })?;
                values.push(v);
            }
        }
    }
    if labels.is_empty() {
        return Err(Error::EmptyFile);
    }
    let features = Array2::from_shape_vec((labels.len(), d), values)
        .map_err(|e| Error::Csv(e.to_string()))?;
    Dataset::new(features, labels, names)
}

fn parse_label(cell: &str) -> Option<u8> {
    match cell {
        "0" => Some(0),
        "1" => Some(1),
        other => {
            let v = other.parse::<f64>().ok()?;
            if v == 0.0 {
                Some(0)
            } else if v == 1.0 {
                Some(1)
            } else {
                None
            }
        }
    }
}

/// Writes features (12 significant digits) followed by the label column.
pub fn write_csv<W: Write>(ds: &Dataset, writer: W, label_column: &str) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = ds.feature_names.iter().map(String::as_str).collect();
    header.push(label_column);
    wtr.write_record(&header)?;
    let mut record = Vec::with_capacity(header.len());
    for (row, label) in ds.features.outer_iter().zip(&ds.labels) {
        record.clear();
        record.extend(row.iter().map(|&v| format_significant(v, 12, false)));
        record.push(label.to_string());
        wtr.write_record(&record)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn save_csv(ds: &Dataset, path: impl AsRef<Path>, label_column: &str) -> Result<()> {
    let file = File::create(path)?;
    write_csv(ds, BufWriter::new(file), label_column)
}

/// Row indices of a stratified split, each list in ascending row order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified split: per class, `floor(train_fraction * count)` rows (at
/// least one) are drawn for training using a seeded shuffle.
pub fn split_indices(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<SplitIndices> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train fraction {train_fraction} outside (0, 1)"
        )));
    }
    ds.require_both_classes()?;
    let mut rng = util::rng(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [0u8, 1] {
        let mut rows: Vec<usize> = (0..ds.n_samples()).filter(|&i| ds.labels[i] == class).collect();
        rows.shuffle(&mut rng);
        let take = ((train_fraction * rows.len() as f64).floor() as usize).max(1);
        train.extend_from_slice(&rows[..take]);
        test.extend_from_slice(&rows[take..]);
    }
    if train.is_empty() {
        return Err(Error::DegenerateSplit("train"));
    }
    if test.is_empty() {
        return Err(Error::DegenerateSplit("test"));
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices { train, test })
}

pub fn split(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let idx = split_indices(ds, train_fraction, seed)?;
    Ok((ds.subset_rows(&idx.train)?, ds.subset_rows(&idx.test)?))
}

/// Parameters for a synthetic two-class Gaussian table.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n_samples: usize,
    pub n_features: usize,
    pub n_informative: usize,
    /// Class-mean separation of informative features, in noise standard deviations.
    pub mean_shift: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn new(n_samples: usize, n_features: usize, n_informative: usize, mean_shift: f64, seed: u64) -> Self {
        Self {
            n_samples,
            n_features,
            n_informative,
            mean_shift,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_samples == 0 || self.n_features == 0 {
            return Err(Error::InvalidSpec("need at least one sample and one feature".into()));
        }
        if self.n_informative > self.n_features {
            return Err(Error::InvalidSpec(format!(
                "{} informative features exceed {} features",
                self.n_informative, self.n_features
            )));
        }
        if !(self.mean_shift >= 0.0 && self.mean_shift.is_finite()) {
            return Err(Error::InvalidSpec(format!("mean_shift {} must be >= 0", self.mean_shift)));
        }
        Ok(())
    }
}

/// Even rows are positive (so `ceil(n/2)` positives). Features `j <
/// n_informative` are N(0,1) for negatives and N(mean_shift,1) for positives;
/// the rest are N(0,1) noise. Names are `f0 .. f{d-1}`.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = util::rng(spec.seed);
    let labels: Vec<u8> = (0..spec.n_samples).map(|i| u8::from(i % 2 == 0)).collect();
    let mut features = Array2::zeros((spec.n_samples, spec.n_features));
    for (i, mut row) in features.outer_iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let noise: f64 = StandardNormal.sample(&mut rng);
            let shift = if j < spec.n_informative && labels[i] == 1 {
                spec.mean_shift
            } else {
                0.0
            };
            *v = noise + shift;
        }
    }
    let names = (0..spec.n_features).map(|j| format!("f{j}")).collect();
    Dataset::new(features, labels, names)
}
