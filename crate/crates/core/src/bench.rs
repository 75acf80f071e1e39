//! The comparison grid: every feature-selection method crossed with every
//! classifier at a shared `k`, plus the table, accuracy-matrix and run-log
//! writers.

use std::collections::HashMap;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::classic::{self, ScoreVector};
use crate::data::{self, Dataset, DEFAULT_LABEL_COLUMN};
use crate::error::{Error, Result};
use crate::eval::{evaluate, Averaging, EvalReport};
use crate::llm::{Backend, BackendKind, LlmConfig, LlmScorer, TaskContext};
use crate::models::{fit, ClassifierKind, ClassifierSpec};
use crate::selection::{project, top_k, SelectionResult, DEFAULT_K};
use crate::util::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FsMethod {
    Variance,
    Chi2,
    Anova,
    MutualInfo,
    Correlation,
    Tree,
    ExtraTrees,
    Sequential,
    Random,
    Llm,
    LlmPrefilter,
}

impl FsMethod {
    pub const ALL: [FsMethod; 11] = [
        FsMethod::Variance,
        FsMethod::Chi2,
        FsMethod::Anova,
        FsMethod::MutualInfo,
        FsMethod::Correlation,
        FsMethod::Tree,
        FsMethod::ExtraTrees,
        FsMethod::Sequential,
        FsMethod::Random,
        FsMethod::Llm,
        FsMethod::LlmPrefilter,
    ];

    pub const CLASSIC: [FsMethod; 9] = [
        FsMethod::Variance,
        FsMethod::Chi2,
        FsMethod::Anova,
        FsMethod::MutualInfo,
        FsMethod::Correlation,
        FsMethod::Tree,
        FsMethod::ExtraTrees,
        FsMethod::Sequential,
        FsMethod::Random,
    ];

    pub fn key(&self) -> &'static str {
        match self {
            FsMethod::Variance => "variance",
            FsMethod::Chi2 => "chi2",
            FsMethod::Anova => "anova",
            FsMethod::MutualInfo => "mi",
            FsMethod::Correlation => "correlation",
            FsMethod::Tree => "tree",
            FsMethod::ExtraTrees => "extratrees",
            FsMethod::Sequential => "sequential",
            FsMethod::Random => "random",
            FsMethod::Llm => "llm",
            FsMethod::LlmPrefilter => "llm_prefilter",
        }
    }

    fn table_label(&self) -> &'static str {
        match self {
            FsMethod::Variance => "VarianceThreshold",
            FsMethod::Chi2 => "Chi-squared",
            FsMethod::Anova => "ANOVA",
            FsMethod::MutualInfo => "Mutual Information",
            FsMethod::Correlation => "Correlation-threshold",
            FsMethod::Tree => "Tree-Based",
            FsMethod::ExtraTrees => "ExtraTrees",
            FsMethod::Sequential => "Sequential Forward",
            FsMethod::Random => "Random Selection",
            FsMethod::Llm => "LLM",
            FsMethod::LlmPrefilter => "LLM",
        }
    }

    pub fn uses_llm(&self) -> bool {
        matches!(self, FsMethod::Llm | FsMethod::LlmPrefilter)
    }
}

impl fmt::Display for FsMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for FsMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FsMethod::ALL
            .into_iter()
            .find(|m| m.key() == s)
            .ok_or_else(|| Error::Config(format!("unknown feature-selection method `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrefilterConfig {
    pub method: FsMethod,
    pub m: usize,
}

impl Default for PrefilterConfig {
    fn default() -> Self {
        Self {
            method: FsMethod::Variance,
            m: 1000,
        }
    }
}

/// Everything a feature-selection method may need besides the data.
pub struct SelectorContext<'a> {
    pub seed: u64,
    pub llm: Option<&'a LlmScorer>,
    pub task: &'a TaskContext,
    pub prefilter: &'a PrefilterConfig,
}

fn require_llm<'a>(cx: &SelectorContext<'a>) -> Result<&'a LlmScorer> {
    cx.llm
        .ok_or_else(|| Error::Config("an LLM method was requested without an LLM backend".into()))
}

/// Scores for a ranking method. For `sequential` the greedy selection of
/// `k` features is run and chosen features score `k - rank + 1`, others 0.
pub fn method_scores(method: FsMethod, train: &Dataset, k: usize, cx: &SelectorContext<'_>) -> Result<ScoreVector> {
    let seed = cx.seed;
    Ok(match method {
        FsMethod::Variance => classic::variance_scores(train),
        FsMethod::Chi2 => classic::chi2_scores(train),
        FsMethod::Anova => classic::anova_f_scores(train)?,
        FsMethod::MutualInfo => classic::mutual_info_scores(train, classic::DEFAULT_MI_BINS),
        FsMethod::Correlation => {
            classic::correlation_filter_scores(train, classic::DEFAULT_REDUNDANCY_THRESHOLD)
        }
        FsMethod::Tree => {
            classic::tree_importance_scores(train, classic::DEFAULT_TREES, classic::DEFAULT_MAX_DEPTH, seed)?
        }
        FsMethod::ExtraTrees => classic::extratrees_importance_scores(
            train,
            classic::DEFAULT_TREES,
            classic::DEFAULT_MAX_DEPTH,
            seed,
        )?,
        FsMethod::Sequential => {
            let sel = classic::sequential_forward_select(train, k, classic::DEFAULT_CANDIDATES_PER_ROUND, seed)?;
            let mut scores = vec![0.0; train.n_features()];
            for (rank, &j) in sel.indices.iter().enumerate() {
                scores[j] = (k - rank) as f64;
            }
            ScoreVector::new("sequential", scores)
        }
        FsMethod::Random => classic::random_scores(train, seed),
        FsMethod::Llm => require_llm(cx)?.score_all_features(train, cx.task, seed)?,
        FsMethod::LlmPrefilter => {
            let pre_method = cx.prefilter.method;
            if pre_method.uses_llm() || pre_method == FsMethod::Sequential {
                return Err(Error::Config(format!(
                    "`{pre_method}` cannot serve as a prefilter"
                )));
            }
            let pre_cx = SelectorContext {
                seed: derive_seed(seed, "prefilter"),
                ..*cx
            };
            let pre = method_scores(pre_method, train, k, &pre_cx)?;
            let m = cx.prefilter.m.max(k).min(train.n_features());
            require_llm(cx)?.prefilter_rerank(train, &pre, m, cx.task, seed)?
        }
    })
}

/// Top-`k` selection for any method.
pub fn select_features(method: FsMethod, train: &Dataset, k: usize, cx: &SelectorContext<'_>) -> Result<(SelectionResult, Vec<String>)> {
    if k > train.n_features() {
        return Err(Error::KTooLarge {
            k,
            d: train.n_features(),
        });
    }
    if method == FsMethod::Sequential {
        let sel = classic::sequential_forward_select(train, k, classic::DEFAULT_CANDIDATES_PER_ROUND, cx.seed)?;
        return Ok((sel, Vec::new()));
    }
    let scores = method_scores(method, train, k, cx)?;
    let sel = top_k(&scores, k)?;
    Ok((sel, scores.notes))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub data_path: Option<PathBuf>,
    pub label_column: String,
    pub methods: Vec<FsMethod>,
    pub classifiers: Vec<ClassifierKind>,
    pub k: usize,
    pub train_fraction: f64,
    pub master_seed: u64,
    pub llm: LlmConfig,
    pub task: TaskContext,
    pub prefilter: PrefilterConfig,
    pub output_dir: PathBuf,
    pub averaging: Averaging,
    /// Grid cells evaluated concurrently.
    pub workers: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            data_path: None,
            label_column: DEFAULT_LABEL_COLUMN.into(),
            methods: FsMethod::CLASSIC.to_vec(),
            classifiers: ClassifierKind::ALL.to_vec(),
            k: DEFAULT_K,
            train_fraction: 0.8,
            master_seed: 0,
            llm: LlmConfig::default(),
            task: TaskContext::default(),
            prefilter: PrefilterConfig::default(),
            output_dir: PathBuf::from("results"),
            averaging: Averaging::Weighted,
            workers: 1,
        }
    }
}

fn parse_list<T: FromStr<Err = Error>>(value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect()
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}`")))
}

impl BenchConfig {
    /// Parses `key = value` lines; `#` starts a comment and dotted keys
    /// address nested settings (`llm.model_name`).
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = BenchConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "data_path" => self.data_path = Some(PathBuf::from(value)),
            "label_column" => self.label_column = value.to_string(),
            "methods" => self.methods = parse_list(value)?,
            "classifiers" => self.classifiers = parse_list(value)?,
            "k" => self.k = parse_num(key, value)?,
            "train_fraction" => self.train_fraction = parse_num(key, value)?,
            "master_seed" | "seed" => self.master_seed = parse_num(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "averaging" => self.averaging = value.parse()?,
            "workers" => self.workers = parse_num(key, value)?,
            "task_context" => {
                self.task = TaskContext::new(value)
                    .ok_or_else(|| Error::Config("task_context must not be empty".into()))?
            }
            "llm.backend" => self.llm.backend_kind = value.parse::<BackendKind>()?,
            "llm.endpoint_url" => self.llm.endpoint_url = value.to_string(),
            "llm.model_name" => self.llm.model_name = value.to_string(),
            "llm.temperature" => self.llm.temperature = parse_num(key, value)?,
            "llm.timeout_secs" => {
                let secs: f64 = parse_num(key, value)?;
                if !(secs.is_finite() && secs > 0.0 && secs < 1e9) {
                    return Err(Error::Config(format!("`{key}` must be a positive number of seconds")));
                }
                self.llm.timeout = Duration::from_secs_f64(secs);
            }
            "llm.max_retries" => self.llm.max_retries = parse_num(key, value)?,
            "llm.max_parallel" => self.llm.max_parallel = parse_num(key, value)?,
            "llm.cache_path" => {
                self.llm.cache_path = (!value.is_empty()).then(|| PathBuf::from(value));
            }
            "llm.samples_per_class" => self.llm.samples_per_class = parse_num(key, value)?,
            "prefilter.method" => self.prefilter.method = value.parse()?,
            "prefilter.m" => self.prefilter.m = parse_num(key, value)?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::Config("no feature-selection methods configured".into()));
        }
        if self.classifiers.is_empty() {
            return Err(Error::Config("no classifiers configured".into()));
        }
        if self.k == 0 {
            return Err(Error::Config("k must be >= 1".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config("train_fraction must lie in (0, 1)".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be >= 1".into()));
        }
        self.llm.validate()
    }

    /// Row label for a method in tables.
    pub fn method_label(&self, method: FsMethod) -> String {
        match method {
            FsMethod::Llm => format!("LLM_{}", self.llm.model_name),
            FsMethod::LlmPrefilter => format!(
                "LLM_{}+{}",
                self.llm.model_name,
                self.prefilter.method.table_label()
            ),
            other => other.table_label().to_string(),
        }
    }
}

/// One (method, classifier) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub method: String,
    pub classifier: String,
    pub n_features: usize,
    /// `None` when the cell failed; see `error`.
    pub report: Option<EvalReport>,
    pub selected: Vec<usize>,
    pub error: Option<String>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkReport {
    pub rows: Vec<BenchRow>,
    pub methods: Vec<String>,
    pub classifiers: Vec<String>,
    pub k: usize,
    pub master_seed: u64,
}

impl BenchmarkReport {
    pub fn failed_cells(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }
}

/// Runs the grid on an in-memory dataset, optionally with an injected LLM
/// backend in place of the configured one.
pub struct GridRunner {
    cfg: BenchConfig,
    backend: Option<Arc<dyn Backend>>,
}

impl GridRunner {
    pub fn new(cfg: BenchConfig) -> Self {
        Self { cfg, backend: None }
    }

    pub fn with_backend(mut self, backend: Arc<dyn Backend>) -> Self {
        self.backend = Some(backend);
        self
    }

    pub fn config(&self) -> &BenchConfig {
        &self.cfg
    }

    fn scorer(&self) -> Result<Option<LlmScorer>> {
        if !self.cfg.methods.iter().any(FsMethod::uses_llm) {
            return Ok(None);
        }
        let scorer = match &self.backend {
            Some(b) => LlmScorer::with_backend(self.cfg.llm.clone(), b.clone())?,
            None => LlmScorer::from_config(self.cfg.llm.clone())?,
        };
        Ok(Some(scorer))
    }

    fn fs_seed(&self, method: FsMethod) -> u64 {
        derive_seed(self.cfg.master_seed, &format!("fs/{}", method.key()))
    }

    fn cell_seed(&self, method: FsMethod, classifier: ClassifierKind) -> u64 {
        derive_seed(
            self.cfg.master_seed,
            &format!("cell/{}/{}", method.key(), classifier.key()),
        )
    }

    /// The train/test split shared by every cell.
    pub fn split(&self, ds: &Dataset) -> Result<(Dataset, Dataset)> {
        data::split(ds, self.cfg.train_fraction, derive_seed(self.cfg.master_seed, "split"))
    }

    /// Each configured method's selection on the training split.
    pub fn selections(&self, ds: &Dataset) -> Result<Vec<(FsMethod, SelectionResult)>> {
        self.cfg.validate()?;
        let (train, _) = self.split(ds)?;
        let scorer = self.scorer()?;
        self.cfg
            .methods
            .iter()
            .map(|&m| {
                let cx = SelectorContext {
                    seed: self.fs_seed(m),
                    llm: scorer.as_ref(),
                    task: &self.cfg.task,
                    prefilter: &self.cfg.prefilter,
                };
                select_features(m, &train, self.cfg.k, &cx).map(|(s, _)| (m, s))
            })
            .collect()
    }

    fn run_cell(
        &self,
        method: FsMethod,
        classifier: ClassifierKind,
        train: &Dataset,
        test: &Dataset,
        scorer: Option<&LlmScorer>,
    ) -> Result<(EvalReport, SelectionResult, Vec<String>)> {
        let started = Instant::now();
        let cx = SelectorContext {
            seed: self.fs_seed(method),
            llm: scorer,
            task: &self.cfg.task,
            prefilter: &self.cfg.prefilter,
        };
        let (sel, notes) = select_features(method, train, self.cfg.k, &cx)?;
        let train_k = project(train, &sel)?;
        let test_k = project(test, &sel)?;
        let model = fit(&ClassifierSpec::new(classifier, self.cell_seed(method, classifier)), &train_k)?;
        let report = evaluate(&model, &test_k, started, self.cfg.averaging)?;
        Ok((report, sel, notes))
    }

    pub fn run(&self, ds: &Dataset) -> Result<BenchmarkReport> {
        self.cfg.validate()?;
        let (train, test) = self.split(ds)?;
        let scorer = self.scorer()?;
        let cells: Vec<(FsMethod, ClassifierKind)> = self
            .cfg
            .methods
            .iter()
            .flat_map(|&m| self.cfg.classifiers.iter().map(move |&c| (m, c)))
            .collect();

        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.cfg.workers)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?;
        let rows: Vec<BenchRow> = pool.install(|| {
            cells
                .par_iter()
                .map(|&(m, c)| {
                    let outcome = self.run_cell(m, c, &train, &test, scorer.as_ref());
                    let mut row = BenchRow {
                        method: self.cfg.method_label(m),
                        classifier: c.label().to_string(),
                        n_features: self.cfg.k,
                        report: None,
                        selected: Vec::new(),
                        error: None,
                        notes: Vec::new(),
                    };
                    match outcome {
                        Ok((report, sel, notes)) => {
                            row.report = Some(report);
                            row.selected = sel.indices;
                            row.notes = notes;
                        }
                        Err(e) => {
                            log::error!("cell {m} x {c} failed: {e}");
                            row.error = Some(e.to_string());
                        }
                    }
                    row
                })
                .collect()
        });

        Ok(BenchmarkReport {
            rows,
            methods: self.cfg.methods.iter().map(|&m| self.cfg.method_label(m)).collect(),
            classifiers: self.cfg.classifiers.iter().map(|c| c.label().to_string()).collect(),
            k: self.cfg.k,
            master_seed: self.cfg.master_seed,
        })
    }
}

/// Loads `cfg.data_path` and runs the full grid.
pub fn run_grid(cfg: &BenchConfig) -> Result<BenchmarkReport> {
    let path = cfg
        .data_path
        .as_ref()
        .ok_or_else(|| Error::Config("data_path is not set".into()))?;
    let ds = data::load_csv(path, &cfg.label_column)?;
    GridRunner::new(cfg.clone()).run(&ds)
}

pub const TABLE_HEADER: [&str; 10] = [
    "fs_method",
    "classifier",
    "n_features",
    "accuracy",
    "precision",
    "recall",
    "f1",
    "auc",
    "mcc",
    "runtime_seconds",
];

fn r3(v: f64) -> String {
    format!("{v:.3}")
}

/// One row per cell, metrics rounded to three decimals. Failed cells keep
/// their method, classifier and `n_features` with blank metric fields.
pub fn write_table<W: Write>(report: &BenchmarkReport, writer: W) -> Result<()> {
    if report.rows.is_empty() {
        return Err(Error::Empty);
    }
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(TABLE_HEADER)?;
    for row in &report.rows {
        let mut record = vec![row.method.clone(), row.classifier.clone(), row.n_features.to_string()];
        match &row.report {
            Some(r) => record.extend([
                r3(r.accuracy),
                r3(r.precision),
                r3(r.recall),
                r3(r.f1),
                r.auc.map(r3).unwrap_or_default(),
                r3(r.mcc),
                r3(r.runtime_seconds),
            ]),
            None => record.extend(std::iter::repeat_n(String::new(), 7)),
        }
        wtr.write_record(&record)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn emit_table(report: &BenchmarkReport, path: impl AsRef<Path>) -> Result<()> {
    write_table(report, BufWriter::new(File::create(path)?))
}

/// Methods down, classifiers across, accuracy to three decimals. Cells of
/// failed runs are blank; a missing cell is an error.
pub fn write_heatmap_matrix<W: Write>(report: &BenchmarkReport, writer: W) -> Result<()> {
    let mut acc: HashMap<(&str, &str), Option<f64>> = HashMap::new();
    for row in &report.rows {
        acc.insert(
            (row.method.as_str(), row.classifier.as_str()),
            row.report.as_ref().map(|r| r.accuracy),
        );
    }
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["fs_method".to_string()];
    header.extend(report.classifiers.iter().cloned());
    wtr.write_record(&header)?;
    for method in &report.methods {
        let mut record = vec![method.clone()];
        for classifier in &report.classifiers {
            let cell = acc
                .get(&(method.as_str(), classifier.as_str()))
                .ok_or(Error::IncompleteGrid)?;
            record.push(cell.map(r3).unwrap_or_default());
        }
        wtr.write_record(&record)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn emit_heatmap_matrix(report: &BenchmarkReport, path: impl AsRef<Path>) -> Result<()> {
    let mut buf = Vec::new();
    write_heatmap_matrix(report, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

/// Plain-text log: seeds, per-cell notes (chi-squared shifts, LLM fallback
/// and cache counts) and failures.
pub fn write_run_log<W: Write>(report: &BenchmarkReport, mut w: W) -> Result<()> {
    writeln!(w, "master_seed = {}", report.master_seed)?;
    writeln!(w, "k = {}", report.k)?;
    writeln!(w, "cells = {} ({} failed)", report.rows.len(), report.failed_cells())?;
    for row in &report.rows {
        let status = match (&row.report, &row.error) {
            (_, Some(e)) => format!("FAILED: {e}"),
            (Some(r), None) => format!("ok in {:.3}s", r.runtime_seconds),
            (None, None) => "no result".to_string(),
        };
        writeln!(w, "[{} x {}] {status}", row.method, row.classifier)?;
        for note in &row.notes {
            writeln!(w, "    {note}")?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `report.csv`, `heatmap.csv` and `run.log` into `dir`.
pub fn write_outputs(report: &BenchmarkReport, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    emit_table(report, dir.join("report.csv"))?;
    emit_heatmap_matrix(report, dir.join("heatmap.csv"))?;
    write_run_log(report, BufWriter::new(File::create(dir.join("run.log"))?))?;
    Ok(())
}
