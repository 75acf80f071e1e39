//! Append-only score cache keyed by a digest of model name and prompt text.
//!
//! File format: one `<64 hex digest>\t<score>` record per line.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Mutex;

use sha2::{Digest, Sha256};

/// SHA-256 hex of `model + "\n" + prompt`.
pub fn prompt_digest(model: &str, prompt: &str) -> String {
    let mut h = Sha256::new();
    h.update(model.as_bytes());
    h.update(b"\n");
    h.update(prompt.as_bytes());
    hex::encode(h.finalize())
}

/// Result of parsing cache-file text.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct ParsedCache {
    pub entries: HashMap<String, f64>,
    /// Lines that were not a valid record.
    pub skipped: usize,
}

fn parse_record(line: &str) -> Option<(String, f64)> {
    let (digest, score) = line.split_once('\t')?;
    if digest.len() != 64 || !digest.bytes().all(|b| b.is_ascii_hexdigit()) {
        return None;
    }
    let score: f64 = score.trim_end_matches('\r').parse().ok()?;
    (0.0..=1.0).contains(&score).then(|| (digest.to_ascii_lowercase(), score))
}

/// Later records for the same digest win. Blank and malformed lines are
/// counted in `skipped`.
pub fn parse_cache(text: &str) -> ParsedCache {
    let mut parsed = ParsedCache::default();
    for line in text.lines() {
        if line.is_empty() {
            continue;
        }
        match parse_record(line) {
            Some((digest, score)) => {
                parsed.entries.insert(digest, score);
            }
            None => parsed.skipped += 1,
        }
    }
    parsed
}

#[derive(Debug, Default)]
pub struct ScoreCache {
    entries: Mutex<HashMap<String, f64>>,
    file: Option<Mutex<BufWriter<File>>>,
}

impl ScoreCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Loads existing records (if any) and appends new ones to `path`.
    pub fn open(path: impl AsRef<Path>) -> io::Result<Self> {
        let path = path.as_ref();
        let mut text = String::new();
        match File::open(path) {
            Ok(mut f) => {
                let mut bytes = Vec::new();
                f.read_to_end(&mut bytes)?;
                text = String::from_utf8_lossy(&bytes).into_owned();
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => {}
            Err(e) => return Err(e),
        }
        let parsed = parse_cache(&text);
        if parsed.skipped > 0 {
            log::warn!("score cache {}: skipped {} malformed lines", path.display(), parsed.skipped);
        }
        let mut file = OpenOptions::new().create(true).append(true).open(path)?;
        if !text.is_empty() && !text.ends_with('\n') {
            file.write_all(b"\n")?;
        }
        Ok(Self {
            entries: Mutex::new(parsed.entries),
            file: Some(Mutex::new(BufWriter::new(file))),
        })
    }

    pub fn get(&self, digest: &str) -> Option<f64> {
        self.entries.lock().expect("cache lock").get(digest).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Records a score in memory and, when file-backed, appends it.
    pub fn insert(&self, digest: &str, score: f64) -> io::Result<()> {
        debug_assert!((0.0..=1.0).contains(&score));
        let mut entries = self.entries.lock().expect("cache lock");
        if entries.get(digest) == Some(&score) {
            return Ok(());
        }
        entries.insert(digest.to_string(), score);
        if let Some(file) = &self.file {
            let mut w = file.lock().expect("cache file lock");
            // `{}` on f64 is the shortest round-trip representation.
            writeln!(w, "{digest}\t{score}")?;
            w.flush()?;
        }
        Ok(())
    }
}
