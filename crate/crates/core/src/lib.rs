//! Feature selection for high-dimensional binary classification tables.
//!
//! The crate pairs a zero-shot scorer, which asks a chat model to rate each
//! feature from a compact statistical descriptor, with nine classical
//! selectors, four classifiers, the usual evaluation metrics and a grid
//! runner that crosses selectors with classifiers at a fixed `k`.
//!
//! Typical flow:
//!
//! ```no_run
//! use llmfs_core::{data, bench::{BenchConfig, GridRunner, write_outputs}};
//!
//! let ds = data::load_csv("features.csv", "label")?;
//! let cfg = BenchConfig::load("grid.conf")?;
//! let report = GridRunner::new(cfg).run(&ds)?;
//! write_outputs(&report, "results")?;
//! # Ok::<(), llmfs_core::Error>(())
//! ```

pub mod bench;
pub mod classic;
pub mod data;
pub mod error;
pub mod eval;
pub mod llm;
pub mod models;
pub mod selection;
pub mod stats;
pub mod tree;
pub mod util;

pub use classic::ScoreVector;
pub use data::{Dataset, SynthSpec};
pub use error::{Error, Result};
pub use eval::{Averaging, EvalReport};
pub use selection::SelectionResult;
pub use stats::FeatureDescriptor;
