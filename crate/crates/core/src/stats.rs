//! Per-feature global and class-conditional descriptors.
//!
//! All dispersion statistics use population (1/n) weighting. Quantiles use
//! linear interpolation between order statistics, so the median of an
//! even-length column is the midpoint of the two middle values.

use std::io::Write;

use rand::seq::index;
use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::util::{self, format_significant};

pub const DEFAULT_SAMPLES_PER_CLASS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDescriptor {
    pub name: String,
    pub mu: f64,
    pub sigma: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub iqr: f64,
    pub mu_pos: f64,
    pub mu_neg: f64,
    pub sigma_pos: f64,
    pub sigma_neg: f64,
    pub delta_mu: f64,
    pub samples_pos: Vec<f64>,
    pub samples_neg: Vec<f64>,
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population variance, two-pass.
pub fn variance(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64
}

/// Linear-interpolation quantile of an ascending slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    }
}

pub fn describe_feature(ds: &Dataset, j: usize, samples_per_class: usize, seed: u64) -> Result<FeatureDescriptor> {
    if j >= ds.n_features() {
        return Err(Error::IndexOutOfRange {
            index: j,
            len: ds.n_features(),
        });
    }
    ds.require_both_classes()?;

    let column = ds.column(j).to_vec();
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (&v, &label) in column.iter().zip(ds.labels()) {
        if label == 1 {
            pos.push(v);
        } else {
            neg.push(v);
        }
    }

    let mut sorted = column.clone();
    sorted.sort_by(f64::total_cmp);

    let mu_pos = mean(&pos);
    let mu_neg = mean(&neg);
    let mut rng = util::rng(seed);
    let mut draw = |values: &[f64]| -> Vec<f64> {
        let amount = samples_per_class.min(values.len());
        let mut picked = index::sample(&mut rng, values.len(), amount).into_vec();
        picked.sort_unstable();
        picked.into_iter().map(|i| values[i]).collect()
    };
    let samples_pos = draw(&pos);
    let samples_neg = draw(&neg);

    Ok(FeatureDescriptor {
        name: ds.feature_names()[j].clone(),
        mu: mean(&column),
        sigma: variance(&column).sqrt(),
        median: quantile_sorted(&sorted, 0.5),
        min: sorted[0],
        max: sorted[sorted.len() - 1],
        iqr: quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25),
        mu_pos,
        mu_neg,
        sigma_pos: variance(&pos).sqrt(),
        sigma_neg: variance(&neg).sqrt(),
        delta_mu: mu_pos - mu_neg,
        samples_pos,
        samples_neg,
    })
}

/// Describes every feature, in feature order. Feature `j` is sampled with
/// sub-seed `index_seed(seed, j)`, so the result does not depend on how the
/// work is scheduled.
pub fn describe_all(ds: &Dataset, samples_per_class: usize, seed: u64) -> Result<Vec<FeatureDescriptor>> {
    describe_subset(ds, &(0..ds.n_features()).collect::<Vec<_>>(), samples_per_class, seed)
}

pub fn describe_subset(
    ds: &Dataset,
    features: &[usize],
    samples_per_class: usize,
    seed: u64,
) -> Result<Vec<FeatureDescriptor>> {
    ds.require_both_classes()?;
    features
        .par_iter()
        .map(|&j| describe_feature(ds, j, samples_per_class, util::index_seed(seed, j)))
        .collect()
}

pub fn describe_all_sequential(ds: &Dataset, samples_per_class: usize, seed: u64) -> Result<Vec<FeatureDescriptor>> {
    (0..ds.n_features())
        .map(|j| describe_feature(ds, j, samples_per_class, util::index_seed(seed, j)))
        .collect()
}

pub const DESCRIPTOR_CSV_HEADER: [&str; 14] = [
    "name",
    "mu",
    "sigma",
    "median",
    "min",
    "max",
    "iqr",
    "mu_pos",
    "mu_neg",
    "sigma_pos",
    "sigma_neg",
    "delta_mu",
    "samples_pos",
    "samples_neg",
];

/// One row per descriptor; sample lists are `;`-joined.
pub fn write_descriptors_csv<W: Write>(descriptors: &[FeatureDescriptor], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(DESCRIPTOR_CSV_HEADER)?;
    let num = |v: f64| format_significant(v, 12, false);
    let list = |vs: &[f64]| vs.iter().map(|&v| num(v)).collect::<Vec<_>>().join(";");
    for d in descriptors {
        wtr.write_record([
            d.name.clone(),
            num(d.mu),
            num(d.sigma),
            num(d.median),
            num(d.min),
            num(d.max),
            num(d.iqr),
            num(d.mu_pos),
            num(d.mu_neg),
            num(d.sigma_pos),
            num(d.sigma_neg),
            num(d.delta_mu),
            list(&d.samples_pos),
            list(&d.samples_neg),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn column_ds(values: &[f64], labels: &[u8]) -> Dataset {
        let features = Array2::from_shape_vec((values.len(), 1), values.to_vec()).unwrap();
        Dataset::new(features, labels.to_vec(), vec!["x".into()]).unwrap()
    }

    #[test]
    fn constant_feature() {
        let d = describe_feature(&column_ds(&[1.0; 4], &[0, 0, 1, 1]), 0, 5, 0).unwrap();
        assert_eq!((d.mu, d.sigma, d.delta_mu, d.iqr), (1.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn hand_evaluated_column() {
        let d = describe_feature(&column_ds(&[0.0, 1.0, 2.0, 3.0], &[0, 0, 1, 1]), 0, 5, 0).unwrap();
        assert_eq!(d.mu, 1.5);
        assert!((d.sigma - 1.25f64.sqrt()).abs() < 1e-15);
        assert_eq!(d.mu_pos, 2.5);
        assert_eq!(d.mu_neg, 0.5);
        assert_eq!(d.delta_mu, 2.0);
        assert_eq!(d.sigma_pos, 0.5);
        assert_eq!(d.sigma_neg, 0.5);
        assert_eq!(d.median, 1.5);
        assert_eq!((d.min, d.max), (0.0, 3.0));
        // q1 = 0.75, q3 = 2.25
        assert_eq!(d.iqr, 1.5);
        assert_eq!(d.samples_pos, vec![2.0, 3.0]);
        assert_eq!(d.samples_neg, vec![0.0, 1.0]);
    }

    #[test]
    fn label_swap_negates_delta() {
        let values = [3.0, -1.0, 4.0, 1.5, 9.0, 2.6];
        let labels = [0, 1, 1, 0, 1, 0];
        let flipped: Vec<u8> = labels.iter().map(|l| 1 - l).collect();
        let a = describe_feature(&column_ds(&values, &labels), 0, 2, 5).unwrap();
        let b = describe_feature(&column_ds(&values, &flipped), 0, 2, 5).unwrap();
        assert_eq!(a.delta_mu, -b.delta_mu);
        assert_eq!(a.mu_pos, b.mu_neg);
        assert_eq!(a.mu_neg, b.mu_pos);
    }

    #[test]
    fn samples_come_from_their_class() {
        let values: Vec<f64> = (0..40).map(|i| i as f64).collect();
        let labels: Vec<u8> = (0..40).map(|i| u8::from(i < 10)).collect();
        let d = describe_feature(&column_ds(&values, &labels), 0, 5, 17).unwrap();
        assert_eq!(d.samples_pos.len(), 5);
        assert!(d.samples_pos.iter().all(|&v| v < 10.0));
        assert!(d.samples_neg.iter().all(|&v| v >= 10.0));
    }

    #[test]
    fn errors() {
        let ds = column_ds(&[1.0, 2.0], &[0, 1]);
        assert!(matches!(describe_feature(&ds, 1, 5, 0), Err(Error::IndexOutOfRange { .. })));
        let single = column_ds(&[1.0, 2.0], &[1, 1]);
        assert!(matches!(describe_feature(&single, 0, 5, 0), Err(Error::SingleClassDataset)));
    }

    #[test]
    fn descriptor_csv_layout() {
        let ds = column_ds(&[0.0, 1.0, 2.0, 3.0], &[0, 0, 1, 1]);
        let all = describe_all(&ds, 5, 0).unwrap();
        let mut out = Vec::new();
        write_descriptors_csv(&all, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), DESCRIPTOR_CSV_HEADER.join(","));
        assert_eq!(
            lines.next().unwrap(),
            "x,1.5,1.11803398875,1.5,0,3,1.5,2.5,0.5,0.5,0.5,2,2;3,0;1"
        );
    }
}
