mod common;

use common::*;
use llmfs_core::classic::{self, DEFAULT_MI_BINS};
use llmfs_core::eval::{auc, confusion, point_metrics, Averaging};
use rand::Rng;

#[test]
fn scorers_match_brute_force_on_random_tables() {
    let mut r = rng(11);
    for _ in 0..50 {
        let ds = random_dataset(&mut r, 20, 5);
        let y = ds.labels().to_vec();
        let chi = classic::chi2_scores(&ds);
        let f = classic::anova_f_scores(&ds).unwrap();
        let mi = classic::mutual_info_scores(&ds, DEFAULT_MI_BINS);
        let var = classic::variance_scores(&ds);
        let corr = classic::label_correlations(&ds);
        let yf: Vec<f64> = y.iter().map(|&v| v as f64).collect();
        for (j, &r_j) in corr.iter().enumerate() {
            let col = column(&ds, j);
            assert!(rel_close(chi.scores[j], chi2_oracle(&col, &y), 1e-9), "chi2 col {j}");
            assert!(rel_close(f.scores[j], anova_oracle(&col, &y), 1e-9), "anova col {j}");
            assert!(rel_close(mi.scores[j], mi_oracle(&col, &y, DEFAULT_MI_BINS), 1e-9), "mi col {j}");
            let m = col.iter().sum::<f64>() / 20.0;
            let v = col.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 20.0;
            assert!(rel_close(var.scores[j], v, 1e-12));
            assert!(rel_close(r_j, pearson_oracle(&col, &yf), 1e-9));
        }
    }
}

#[test]
fn metrics_match_brute_force_with_skewed_predictions() {
    let mut r = rng(5);
    for trial in 0..200 {
        let n = r.random_range(2..60);
        let y = random_labels(&mut r, n, 1);
        // Some trials predict a single class to hit the zero-denominator paths.
        let p: Vec<u8> = match trial % 4 {
            0 => vec![0; n],
            1 => vec![1; n],
            _ => (0..n).map(|_| r.random_range(0..2u8)).collect(),
        };
        let c = confusion(&y, &p).unwrap();
        for (avg, weighted) in [(Averaging::Binary, false), (Averaging::Weighted, true)] {
            let got = point_metrics(&c, avg).unwrap();
            let want = oracle_metrics(&y, &p, weighted);
            assert!((got.accuracy - want.accuracy).abs() < 1e-9);
            assert!((got.precision - want.precision).abs() < 1e-9);
            assert!((got.recall - want.recall).abs() < 1e-9);
            assert!((got.f1 - want.f1).abs() < 1e-9);
            assert!((got.mcc - want.mcc).abs() < 1e-9);
        }
    }
}

#[test]
fn auc_matches_pairwise_count_with_heavy_ties() {
    let mut r = rng(9);
    for _ in 0..100 {
        let n = r.random_range(2..80);
        let y = random_labels(&mut r, n, 1);
        let s: Vec<f64> = (0..n).map(|_| r.random_range(0..5) as f64 / 4.0).collect();
        assert!((auc(&y, &s).unwrap() - pairwise_auc(&y, &s)).abs() < 1e-12);
    }
}

#[test]
fn weighted_and_binary_agree_on_balanced_symmetric_errors() {
    let mut r = rng(3);
    let n = 2000;
    let y: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
    let p: Vec<u8> = y.iter().map(|&t| if r.random_bool(0.1) { 1 - t } else { t }).collect();
    let c = confusion(&y, &p).unwrap();
    let b = point_metrics(&c, Averaging::Binary).unwrap();
    let w = point_metrics(&c, Averaging::Weighted).unwrap();
    assert!((b.precision - w.precision).abs() < 0.02);
    assert!((b.recall - w.recall).abs() < 0.02);
    assert!((b.f1 - w.f1).abs() < 0.02);
}
