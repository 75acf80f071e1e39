#![no_main]

use libfuzzer_sys::fuzz_target;
use llmfs_core::llm::{parse_score, parse_score_checked};

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    let s = parse_score(&text);
    assert!((0.0..=1.0).contains(&s));
    if let Some(v) = parse_score_checked(&text) {
        assert_eq!(v, s);
    }
});
