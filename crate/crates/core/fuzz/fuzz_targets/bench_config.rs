#![no_main]

use libfuzzer_sys::fuzz_target;
use llmfs_core::bench::BenchConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = BenchConfig::parse(text) {
        assert!(cfg.validate().is_ok());
        assert!(cfg.k >= 1);
    }
});
