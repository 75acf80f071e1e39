use std::fs;
use std::path::PathBuf;

use llmfs_core::bench::BenchConfig;
use llmfs_core::data::{read_csv, write_csv};
use llmfs_core::llm::{extract_content, parse_cache, parse_score, parse_score_checked};

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fuzz/corpus").join(target);
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let path = e.unwrap().path();
            (path.display().to_string(), fs::read(&path).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn read_csv_seeds() {
    let mut accepted = 0;
    for (name, bytes) in seeds("read_csv") {
        let Ok(ds) = read_csv(bytes.as_slice(), "label") else { continue };
        accepted += 1;
        let mut buf = Vec::new();
        write_csv(&ds, &mut buf, "label").unwrap();
        let back = read_csv(buf.as_slice(), "label").unwrap();
        assert_eq!(back.labels(), ds.labels(), "{name}");
    }
    assert!(accepted >= 2);
}

#[test]
fn parse_score_seeds() {
    for (_, bytes) in seeds("parse_score") {
        let text = String::from_utf8_lossy(&bytes);
        let s = parse_score(&text);
        assert!((0.0..=1.0).contains(&s));
        if let Some(v) = parse_score_checked(&text) {
            assert_eq!(v, s);
        }
    }
}

#[test]
fn score_cache_seeds() {
    let total: usize = seeds("score_cache")
        .iter()
        .map(|(_, b)| parse_cache(&String::from_utf8_lossy(b)).entries.len())
        .sum();
    assert_eq!(total, 2);
}

#[test]
fn bench_config_seeds() {
    let results: Vec<bool> = seeds("bench_config")
        .iter()
        .map(|(_, b)| BenchConfig::parse(std::str::from_utf8(b).unwrap()).is_ok())
        .collect();
    assert_eq!(results, vec![true, false]);
}

#[test]
fn chat_response_seeds() {
    let ok: Vec<String> = seeds("chat_response")
        .iter()
        .filter_map(|(_, b)| extract_content(b).ok())
        .collect();
    assert_eq!(ok, vec!["0.42".to_string()]);
}
