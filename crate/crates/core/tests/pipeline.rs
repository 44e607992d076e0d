mod common;

use ggflex::chipclass::{extract_support_edges, PreparedTraining};
use ggflex::dataset::{gen_gaussian_pair, Dataset, Label};
use ggflex::evaluation::{cv_objective, run_benchmark, BenchConfig};
use ggflex::graph::build_gabriel_for;
use ggflex::margin::{fixed_threshold_margin, margin_curve, mean_margin, CurveConfig};
use ggflex::quality::{class_thresholds, quality_index, removal_mask};
use ggflex::{train, PerClass};

use Label::{Negative as N, Positive as P};

/// A positive cluster, a negative cluster, and one positive sample planted
/// inside the negative cluster.
fn planted_outlier() -> (Dataset, Vec<f64>) {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..5 {
        for j in 0..5 {
            rows.push(vec![i as f64, j as f64]);
            labels.push(P);
            rows.push(vec![10.0 + i as f64, j as f64]);
            labels.push(N);
        }
    }
    let outlier = vec![12.5, 2.5];
    rows.push(outlier.clone());
    labels.push(P);
    (Dataset::new(rows, labels).unwrap(), outlier)
}

#[test]
fn filtering_removes_planted_outlier() {
    let (data, outlier) = planted_outlier();
    let filtered = train(&data, PerClass::ONES, true).unwrap();
    let raw = train(&data, PerClass::ONES, false).unwrap();
    assert_eq!(filtered.predict(&outlier).unwrap(), N);
    assert_eq!(raw.predict(&outlier).unwrap(), P);
    let g = build_gabriel_for(&data).unwrap();
    let q = quality_index(&g, data.labels()).unwrap();
    assert_eq!(q[data.len() - 1], 0.0);
    // its opposite-class edges are gone from the filtered model
    let from_outlier = |m: &ggflex::ChipclassModel| m.edges.iter().filter(|e| e.ssv_pos == outlier).count();
    assert_eq!(from_outlier(&raw), g.degree(data.len() - 1));
    assert_eq!(from_outlier(&filtered), 0);
}

#[test]
fn single_edge_boundary_is_the_bisector() {
    let data = Dataset::new(vec![vec![1.0, 3.0], vec![4.0, -1.0]], vec![P, N]).unwrap();
    let model = train(&data, PerClass::ONES, false).unwrap();
    assert_eq!(model.edges.len(), 1);
    let (a, b) = ([1.0, 3.0], [4.0, -1.0]);
    let side = |x: &[f64]| {
        let da: f64 = x.iter().zip(&a).map(|(u, v)| (u - v).powi(2)).sum();
        let db: f64 = x.iter().zip(&b).map(|(u, v)| (u - v).powi(2)).sum();
        da < db
    };
    for i in -20..=20 {
        for j in -20..=20 {
            let x = [i as f64 * 0.5 + 0.01, j as f64 * 0.5 + 0.003];
            assert_eq!(model.predict(&x).unwrap() == P, side(&x), "at {x:?}");
        }
    }
}

#[test]
fn swapping_labels_flips_predictions() {
    let data = gen_gaussian_pair(&[3.0, 3.0], &[5.0, 5.0], 0.5, 60, 4).unwrap();
    let swapped = Dataset::from_flat(
        data.features().to_vec(),
        2,
        data.labels().iter().map(|l| l.opposite()).collect(),
    )
    .unwrap();
    let a = train(&data, PerClass::ONES, true).unwrap();
    let b = train(&swapped, PerClass::ONES, true).unwrap();
    for i in 0..40 {
        let x = [2.0 + 0.1 * i as f64 + 0.0137, 6.0 - 0.09 * i as f64];
        let (pa, pb) = (a.predict_proba(&x).unwrap(), b.predict_proba(&x).unwrap());
        if pa != 0.5 {
            assert_ne!(a.predict(&x).unwrap(), b.predict(&x).unwrap());
        }
        assert!((pa + pb - 1.0).abs() < 1e-12);
    }
}

#[test]
fn fixed_and_flexible_paths_agree_at_unit_multipliers() {
    for seed in 0..10 {
        let data = common::random_dataset(seed, 40, 2);
        let prepared = PreparedTraining::new(&data, false).unwrap();
        match (prepared.model(PerClass::ONES, true), prepared.fixed_model()) {
            (Ok(a), Ok(b)) => assert_eq!(a.edges, b.edges),
            (Err(a), Err(b)) => assert_eq!(a.to_string(), b.to_string()),
            _ => panic!("paths disagree on seed {seed}"),
        }
    }
}

#[test]
fn removal_count_shrinks_as_h_grows() {
    let data = gen_gaussian_pair(&[3.0, 3.0], &[5.0, 5.0], 0.3, 200, 1).unwrap();
    let g = build_gabriel_for(&data).unwrap();
    let q = quality_index(&g, data.labels()).unwrap();
    let theta = class_thresholds(&q, data.labels()).unwrap();
    for fixed in [0.5, 1.0, 2.0] {
        let mut last = usize::MAX;
        for step in 0..30 {
            let h = 0.25 * 1.15f64.powi(step);
            let removed = removal_mask(&q, data.labels(), theta, PerClass::new(h, fixed));
            let count = removed.iter().filter(|r| **r).count();
            assert!(count <= last);
            last = count;
        }
    }
}

#[test]
fn separable_pair_scores_near_one() {
    let data = gen_gaussian_pair(&[3.0, 3.0], &[5.0, 5.0], 0.05, 100, 2).unwrap();
    let objective = cv_objective(&data, 5, 0, true).unwrap();
    assert!(objective(&[1.0, 1.0]).unwrap() > 0.99);
}

#[test]
fn filtering_raises_margin_at_high_variance() {
    let data = gen_gaussian_pair(&[3.0, 3.0], &[5.0, 5.0], 0.8, 500, 0).unwrap();
    let unfiltered = mean_margin(&data, None).unwrap().mean_all;
    assert!(fixed_threshold_margin(&data).unwrap() > unfiltered);
}

#[test]
fn zero_variance_curve_point() {
    let points = margin_curve(&[0.0, 0.2], &CurveConfig { n_per_class: 50, ..CurveConfig::default() }).unwrap();
    assert_eq!(points[0].mean_unfiltered, 1.0);
    assert_eq!(points[0].mean_q, None);
    assert!(points[1].mean_q.unwrap() > 0.0);
}

#[test]
fn support_edges_join_opposite_classes() {
    let data = gen_gaussian_pair(&[3.0, 3.0], &[5.0, 5.0], 0.5, 80, 3).unwrap();
    let g = build_gabriel_for(&data).unwrap();
    let edges = extract_support_edges(&g, &data).unwrap();
    let positives: Vec<&[f64]> = (0..data.len()).filter(|&i| data.label(i) == P).map(|i| data.row(i)).collect();
    for e in &edges {
        assert!(positives.contains(&e.ssv_pos.as_slice()));
        assert!(!positives.contains(&e.ssv_neg.as_slice()));
    }
}

#[test]
fn benchmark_is_reproducible() {
    let data = gen_gaussian_pair(&[3.0, 3.0], &[5.0, 5.0], 0.6, 30, 8).unwrap();
    let config = BenchConfig { outer_k: 3, inner_k: 3, budget: 12, seed: 4, ..BenchConfig::default() };
    let a = run_benchmark(&data, &config).unwrap();
    let b = run_benchmark(&data, &config).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert_eq!(a.per_fold.len(), 3);
    for f in &a.per_fold {
        assert_eq!(f.trials.len(), 12);
        assert!(f.inner_best >= f.inner_fixed.unwrap());
    }
}
