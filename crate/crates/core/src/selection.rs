//! Top-k selection over score vectors and column projection.

use std::io::Write;

use crate::classic::ScoreVector;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::util::format_significant;

pub const DEFAULT_K: usize = 341;

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    /// Selected feature indices, best first.
    pub indices: Vec<usize>,
    pub method_name: String,
    pub k: usize,
    /// Score of each selected feature, aligned with `indices`. For wrapper
    /// selection this is the 1-based selection rank.
    pub scores: Vec<f64>,
}

/// Indices of the `k` largest scores, descending; ties go to the lower index.
pub fn top_k(scores: &ScoreVector, k: usize) -> Result<SelectionResult> {
    let d = scores.len();
    if k > d {
        return Err(Error::KTooLarge { k, d });
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| scores.scores[b].total_cmp(&scores.scores[a]).then(a.cmp(&b)));
    order.truncate(k);
    Ok(SelectionResult {
        scores: order.iter().map(|&i| scores.scores[i]).collect(),
        indices: order,
        method_name: scores.method_name.clone(),
        k,
    })
}

/// Dataset restricted to the selected columns, in selection order.
pub fn project(ds: &Dataset, sel: &SelectionResult) -> Result<Dataset> {
    ds.subset_columns(&sel.indices)
}

/// `rank,feature_index,feature_name,score` with 1-based ranks.
pub fn write_selection_csv<W: Write>(sel: &SelectionResult, feature_names: &[String], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["rank", "feature_index", "feature_name", "score"])?;
    for (rank, (&idx, &score)) in sel.indices.iter().zip(&sel.scores).enumerate() {
        let name = feature_names.get(idx).ok_or(Error::IndexOutOfRange {
            index: idx,
            len: feature_names.len(),
        })?;
        wtr.write_record([
            (rank + 1).to_string(),
            idx.to_string(),
            name.clone(),
            format_significant(score, 12, false),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}
