#![no_main]

use libfuzzer_sys::fuzz_target;
use llmfs_core::llm::{extract_content, parse_score};

fuzz_target!(|data: &[u8]| {
    if let Ok(content) = extract_content(data) {
        let _ = parse_score(&content);
    }
});
