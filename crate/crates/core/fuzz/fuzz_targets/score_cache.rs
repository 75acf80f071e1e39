#![no_main]

use libfuzzer_sys::fuzz_target;
use llmfs_core::llm::parse_cache;

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    let parsed = parse_cache(&text);
    for (digest, score) in &parsed.entries {
        assert_eq!(digest.len(), 64);
        assert!((0.0..=1.0).contains(score));
    }
});
