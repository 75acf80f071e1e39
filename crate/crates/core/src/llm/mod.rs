//! Zero-shot LLM feature scoring.
//!
//! For every feature: describe it on the training split, render the
//! canonical prompt, query a chat backend at temperature 0, and accept the
//! reply only when it is a number in `[0, 1]`; anything else (including an
//! unreachable backend) becomes the neutral score 0.5. Resolved scores are
//! cached by a digest of model name and prompt.

pub mod backend;
pub mod cache;
pub mod prompt;

use std::path::PathBuf;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;

pub use backend::{
    extract_content, mock_score, mock_score_values, request_body, Backend, HttpBackend, MockBackend, QueryError,
    UnreachableBackend, API_KEY_ENV,
};
pub use cache::{parse_cache, prompt_digest, ParsedCache, ScoreCache};
pub use prompt::{
    build_prompt, first_number, parse_score, parse_score_checked, Prompt, TaskContext, DEFAULT_TASK, FALLBACK_SCORE,
};

use crate::classic::ScoreVector;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::selection::top_k;
use crate::stats::{describe_subset, DEFAULT_SAMPLES_PER_CLASS};

/// Score given to features a prefilter removed; below every valid score.
pub const PRUNED_SCORE: f64 = -1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendKind {
    Http,
    Mock,
}

impl FromStr for BackendKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "http" => Ok(BackendKind::Http),
            "mock" => Ok(BackendKind::Mock),
            other => Err(Error::Config(format!("unknown backend `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LlmConfig {
    pub backend_kind: BackendKind,
    pub endpoint_url: String,
    pub model_name: String,
    /// Must be 0: decoding is deterministic.
    pub temperature: f64,
    pub timeout: Duration,
    pub max_retries: u32,
    pub max_parallel: usize,
    pub cache_path: Option<PathBuf>,
    pub samples_per_class: usize,
}

impl Default for LlmConfig {
    fn default() -> Self {
        Self {
            backend_kind: BackendKind::Mock,
            endpoint_url: "http://127.0.0.1:8000/v1/chat/completions".into(),
            model_name: "mock".into(),
            temperature: 0.0,
            timeout: Duration::from_secs(60),
            max_retries: 3,
            max_parallel: 4,
            cache_path: None,
            samples_per_class: DEFAULT_SAMPLES_PER_CLASS,
        }
    }
}

impl LlmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.temperature != 0.0 {
            return Err(Error::Config(format!(
                "temperature must be 0, got {}",
                self.temperature
            )));
        }
        if self.max_parallel == 0 {
            return Err(Error::Config("max_parallel must be >= 1".into()));
        }
        if self.model_name.is_empty() {
            return Err(Error::Config("model_name must not be empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawResponse {
    pub content: String,
    pub latency: Duration,
    pub from_cache: bool,
}

/// Counters for one scoring pass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LlmRunStats {
    pub features: usize,
    pub cache_hits: usize,
    pub backend_requests: usize,
    /// Replies that were not a number in [0, 1].
    pub invalid_responses: usize,
    /// Queries that failed outright (unreachable or malformed body).
    pub failed_queries: usize,
}

impl LlmRunStats {
    pub fn fallbacks(&self) -> usize {
        self.invalid_responses + self.failed_queries
    }

    fn merge(&mut self, other: &LlmRunStats) {
        self.features += other.features;
        self.cache_hits += other.cache_hits;
        self.backend_requests += other.backend_requests;
        self.invalid_responses += other.invalid_responses;
        self.failed_queries += other.failed_queries;
    }

    pub fn summary(&self) -> String {
        let rate = |x: usize| {
            if self.features == 0 {
                0.0
            } else {
                x as f64 / self.features as f64
            }
        };
        format!(
            "llm: {} features, {} backend requests, cache hits {} ({:.3}), fallbacks {} ({:.3}: {} invalid replies, {} failed queries)",
            self.features,
            self.backend_requests,
            self.cache_hits,
            rate(self.cache_hits),
            self.fallbacks(),
            rate(self.fallbacks()),
            self.invalid_responses,
            self.failed_queries
        )
    }
}

/// A configured backend plus score cache.
pub struct LlmScorer {
    cfg: LlmConfig,
    backend: Arc<dyn Backend>,
    cache: Arc<ScoreCache>,
    requests: AtomicUsize,
}

impl LlmScorer {
    /// Builds the backend named by `cfg.backend_kind` and opens the cache.
    pub fn from_config(cfg: LlmConfig) -> Result<Self> {
        let backend: Arc<dyn Backend> = match cfg.backend_kind {
            BackendKind::Mock => Arc::new(MockBackend),
            BackendKind::Http => Arc::new(HttpBackend::new(
                cfg.endpoint_url.clone(),
                cfg.timeout,
                cfg.max_retries,
            )),
        };
        Self::with_backend(cfg, backend)
    }

    pub fn with_backend(cfg: LlmConfig, backend: Arc<dyn Backend>) -> Result<Self> {
        cfg.validate()?;
        let cache = match &cfg.cache_path {
            Some(path) => ScoreCache::open(path)?,
            None => ScoreCache::in_memory(),
        };
        Ok(Self::with_parts(cfg, backend, Arc::new(cache)))
    }

    pub fn with_parts(cfg: LlmConfig, backend: Arc<dyn Backend>, cache: Arc<ScoreCache>) -> Self {
        Self {
            cfg,
            backend,
            cache,
            requests: AtomicUsize::new(0),
        }
    }

    pub fn config(&self) -> &LlmConfig {
        &self.cfg
    }

    pub fn cache(&self) -> &Arc<ScoreCache> {
        &self.cache
    }

    /// Backend calls issued over this scorer's lifetime.
    pub fn backend_requests(&self) -> usize {
        self.requests.load(Ordering::Relaxed)
    }

    fn digest(&self, prompt: &Prompt) -> String {
        prompt_digest(&self.cfg.model_name, &prompt.text)
    }

    /// Cached score if present, otherwise one backend completion.
    pub fn query(&self, prompt: &Prompt) -> Result<RawResponse, QueryError> {
        let started = Instant::now();
        if let Some(score) = self.cache.get(&self.digest(prompt)) {
            return Ok(RawResponse {
                content: score.to_string(),
                latency: started.elapsed(),
                from_cache: true,
            });
        }
        self.requests.fetch_add(1, Ordering::Relaxed);
        let content = self
            .backend
            .complete(&self.cfg.model_name, &prompt.text, self.cfg.temperature)?;
        Ok(RawResponse {
            content,
            latency: started.elapsed(),
            from_cache: false,
        })
    }

    fn score_prompt(&self, prompt: &Prompt) -> (f64, LlmRunStats) {
        let mut stats = LlmRunStats {
            features: 1,
            ..Default::default()
        };
        match self.query(prompt) {
            Ok(resp) if resp.from_cache => {
                stats.cache_hits = 1;
                (parse_score(&resp.content), stats)
            }
            Ok(resp) => {
                stats.backend_requests = 1;
                let score = match prompt::parse_score_checked(&resp.content) {
                    Some(s) => s,
                    None => {
                        stats.invalid_responses = 1;
                        FALLBACK_SCORE
                    }
                };
                if let Err(e) = self.cache.insert(&self.digest(prompt), score) {
                    log::warn!("could not persist score for feature {}: {e}", prompt.feature_index);
                }
                (score, stats)
            }
            Err(e) => {
                stats.backend_requests = 1;
                stats.failed_queries = 1;
                log::warn!("feature {}: {e}; using fallback score", prompt.feature_index);
                (FALLBACK_SCORE, stats)
            }
        }
    }

    /// Scores the listed features (in order) and returns their scores.
    pub fn score_features(
        &self,
        train: &Dataset,
        features: &[usize],
        ctx: &TaskContext,
        seed: u64,
    ) -> Result<(Vec<f64>, LlmRunStats)> {
        let descriptors = describe_subset(train, features, self.cfg.samples_per_class, seed)?;
        let prompts: Vec<Prompt> = descriptors
            .iter()
            .zip(features)
            .map(|(d, &j)| build_prompt(d, ctx, j))
            .collect();

        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.cfg.max_parallel)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?;
        let results: Vec<(f64, LlmRunStats)> =
            pool.install(|| prompts.par_iter().map(|p| self.score_prompt(p)).collect());

        let mut stats = LlmRunStats::default();
        let mut scores = Vec::with_capacity(results.len());
        for (score, s) in results {
            stats.merge(&s);
            scores.push(score);
        }
        Ok((scores, stats))
    }

    /// One score per feature, in feature order.
    pub fn score_all_features(&self, train: &Dataset, ctx: &TaskContext, seed: u64) -> Result<ScoreVector> {
        train.require_both_classes()?;
        let all: Vec<usize> = (0..train.n_features()).collect();
        let (scores, stats) = self.score_features(train, &all, ctx, seed)?;
        let mut out = ScoreVector::new(format!("llm_{}", self.cfg.model_name), scores);
        out.notes.push(stats.summary());
        Ok(out)
    }

    /// LLM scores for the `m` best features under `prefilter`; every other
    /// feature gets [`PRUNED_SCORE`].
    pub fn prefilter_rerank(
        &self,
        train: &Dataset,
        prefilter: &ScoreVector,
        m: usize,
        ctx: &TaskContext,
        seed: u64,
    ) -> Result<ScoreVector> {
        if prefilter.len() != train.n_features() {
            return Err(Error::LengthMismatch {
                left: prefilter.len(),
                right: train.n_features(),
            });
        }
        train.require_both_classes()?;
        let survivors = top_k(prefilter, m)?.indices;
        let (scores, stats) = self.score_features(train, &survivors, ctx, seed)?;
        let mut all = vec![PRUNED_SCORE; train.n_features()];
        for (&j, s) in survivors.iter().zip(scores) {
            all[j] = s;
        }
        let mut out = ScoreVector::new(
            format!("llm_{}+{}", self.cfg.model_name, prefilter.method_name),
            all,
        );
        out.notes.extend(prefilter.notes.iter().cloned());
        out.notes.push(format!("prefilter {}: kept {m} features", prefilter.method_name));
        out.notes.push(stats.summary());
        Ok(out)
    }
}
