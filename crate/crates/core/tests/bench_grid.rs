use std::sync::Arc;

use llmfs_core::bench::{write_heatmap_matrix, write_outputs, BenchConfig, FsMethod, GridRunner};
use llmfs_core::data::{generate_synthetic, SynthSpec};
use llmfs_core::llm::MockBackend;
use llmfs_core::models::ClassifierKind;

fn config(methods: &[FsMethod], classifiers: &[ClassifierKind]) -> BenchConfig {
    BenchConfig {
        methods: methods.to_vec(),
        classifiers: classifiers.to_vec(),
        k: 4,
        master_seed: 77,
        ..BenchConfig::default()
    }
}

fn heatmap(cfg: BenchConfig) -> Vec<Vec<String>> {
    let ds = generate_synthetic(&SynthSpec::new(200, 10, 3, 1.5, 1)).unwrap();
    let report = GridRunner::new(cfg).with_backend(Arc::new(MockBackend)).run(&ds).unwrap();
    let mut buf = Vec::new();
    write_heatmap_matrix(&report, &mut buf).unwrap();
    String::from_utf8(buf)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn config_order_drives_row_and_column_order() {
    let a = heatmap(config(
        &[FsMethod::Anova, FsMethod::Llm],
        &[ClassifierKind::Knn, ClassifierKind::Mlp],
    ));
    let b = heatmap(config(
        &[FsMethod::Llm, FsMethod::Anova],
        &[ClassifierKind::Mlp, ClassifierKind::Knn],
    ));
    assert_eq!(a[0], ["fs_method", "KNN", "MLP"]);
    assert_eq!(b[0], ["fs_method", "MLP", "KNN"]);
    assert_eq!(a[1][0], "ANOVA");
    assert_eq!(b[2][0], "ANOVA");
    for (ra, rb) in [(1, 2), (2, 1)] {
        assert_eq!(a[ra][1], b[rb][2]);
        assert_eq!(a[ra][2], b[rb][1]);
    }
}

#[test]
fn failing_cells_are_reported_not_fatal() {
    let ds = generate_synthetic(&SynthSpec::new(100, 6, 2, 1.5, 2)).unwrap();
    let cfg = BenchConfig {
        k: 6,
        ..config(&[FsMethod::Anova, FsMethod::Sequential], &[ClassifierKind::Knn])
    };
    let report = GridRunner::new(cfg.clone()).run(&ds).unwrap();
    assert_eq!(report.failed_cells(), 0);

    let too_many = BenchConfig { k: 7, ..cfg };
    let report = GridRunner::new(too_many).run(&ds).unwrap();
    assert_eq!(report.failed_cells(), 2);
    assert!(report.rows.iter().all(|r| r.error.as_deref().unwrap().contains('7')));

    let dir = tempfile::tempdir().unwrap();
    write_outputs(&report, dir.path()).unwrap();
    let log = std::fs::read_to_string(dir.path().join("run.log")).unwrap();
    assert!(log.contains("FAILED"));
    let table = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert!(table.lines().nth(1).unwrap().ends_with(",,,,,,,"));
}

#[test]
fn run_log_records_chi2_shifts_and_llm_counts() {
    let ds = generate_synthetic(&SynthSpec::new(120, 5, 2, 1.5, 3)).unwrap();
    let report = GridRunner::new(config(&[FsMethod::Chi2, FsMethod::Llm], &[ClassifierKind::Knn]))
        .with_backend(Arc::new(MockBackend))
        .run(&ds)
        .unwrap();
    let mut log = Vec::new();
    llmfs_core::bench::write_run_log(&report, &mut log).unwrap();
    let log = String::from_utf8(log).unwrap();
    assert!(log.contains("chi2: shifted feature `f0`"));
    assert!(log.contains("5 backend requests"));
}
