#![no_main]

use libfuzzer_sys::fuzz_target;
use llmfs_core::data::{read_csv, write_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(ds) = read_csv(data, "label") else { return };
    assert_eq!(ds.labels().len(), ds.n_samples());
    assert!(ds.labels().iter().all(|&l| l <= 1));
    assert!(ds.features().iter().all(|v| v.is_finite()));
    let mut out = Vec::new();
    write_csv(&ds, &mut out, "label").unwrap();
    let back = read_csv(out.as_slice(), "label").unwrap();
    assert_eq!(back.labels(), ds.labels());
    assert_eq!(back.n_features(), ds.n_features());
});
