#![allow(dead_code)]

use std::collections::BTreeSet;

use ggflex::chipclass::train;
use ggflex::dataset::{Dataset, Label};
use ggflex::evaluation::auc;
use ggflex::graph::{build_gabriel, Points};
use ggflex::margin::margin_split;
use ggflex::quality::removal_mask;
use ggflex::{Error, PerClass};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Naive Gabriel oracle: every pair, every third point, written out longhand.
pub fn naive_gabriel(coords: &[f64], dim: usize) -> BTreeSet<(usize, usize)> {
    let n = coords.len() / dim;
    let p = |i: usize| &coords[i * dim..(i + 1) * dim];
    let d2 = |a: &[f64], b: &[f64]| {
        let mut s = 0.0;
        for t in 0..dim {
            s += (a[t] - b[t]) * (a[t] - b[t]);
        }
        s
    };
    let mut edges = BTreeSet::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let dij = d2(p(i), p(j));
            let mut blocked = false;
            for k in 0..n {
                if k != i && k != j && d2(p(i), p(k)) + d2(p(j), p(k)) < dij {
                    blocked = true;
                    break;
                }
            }
            if !blocked {
                edges.insert((i, j));
            }
        }
    }
    edges
}

pub fn edge_set(coords: &[f64], dim: usize) -> BTreeSet<(usize, usize)> {
    build_gabriel(Points::new(coords, dim).unwrap())
        .unwrap()
        .edges()
        .iter()
        .copied()
        .collect()
}

/// Random coordinates in `[-10, 10)`, `n` points of dimension `dim`.
pub fn random_coords(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<f64> {
    (0..n * dim).map(|_| rng.random_range(-10.0..10.0)).collect()
}

/// Random labelled dataset containing both classes.
pub fn random_dataset(seed: u64, n: usize, dim: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = random_coords(&mut rng, n, dim);
    let mut labels: Vec<Label> = (0..n)
        .map(|_| if rng.random_bool(0.5) { Label::Positive } else { Label::Negative })
        .collect();
    labels[0] = Label::Positive;
    labels[1] = Label::Negative;
    Dataset::from_flat(coords, dim, labels).unwrap()
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; v.len()];
        for i in 0..v.len() {
            let less = v.iter().filter(|&&w| w < v[i]).count() as f64;
            let equal = v.iter().filter(|&&w| w == v[i]).count() as f64;
            r[i] = less + (equal + 1.0) / 2.0;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

// Strategies and property bodies shared by the proptest suite and the
// acceptance run.

pub fn labelled_points() -> impl Strategy<Value = (Vec<f64>, usize, Vec<bool>)> {
    (1usize..=3, 4usize..=24).prop_flat_map(|(dim, n)| {
        (
            prop::collection::vec(-10.0f64..10.0, n * dim),
            Just(dim),
            prop::collection::vec(any::<bool>(), n),
        )
    })
}

pub fn to_dataset(coords: &[f64], dim: usize, pos: &[bool]) -> Option<Dataset> {
    if !pos.iter().any(|&p| p) || pos.iter().all(|&p| p) {
        return None;
    }
    let labels = pos.iter().map(|&p| if p { Label::Positive } else { Label::Negative }).collect();
    Dataset::from_flat(coords.to_vec(), dim, labels).ok()
}

fn swapped(data: &Dataset) -> Dataset {
    let labels = data.labels().iter().map(|l| l.opposite()).collect();
    Dataset::from_flat(data.features().to_vec(), data.dim(), labels).unwrap()
}

/// `p` lies in `[0, 1]`, and the label-swapped model gives `1 - p`.
pub fn check_probability(input: (Vec<f64>, usize, Vec<bool>), probe: Vec<f64>) -> Result<(), TestCaseError> {
    let (coords, dim, pos) = input;
    let Some(data) = to_dataset(&coords, dim, &pos) else {
        return Err(TestCaseError::reject("single class"));
    };
    let model = match train(&data, PerClass::ONES, true) {
        Ok(m) => m,
        Err(Error::EmptiedClass { .. } | Error::DuplicatePoints { .. }) => {
            return Err(TestCaseError::reject("degenerate"))
        }
        Err(e) => return Err(TestCaseError::fail(e.to_string())),
    };
    let flipped = train(&swapped(&data), PerClass::ONES, true).map_err(|e| TestCaseError::fail(e.to_string()))?;
    for x in probe.chunks(dim).filter(|c| c.len() == dim) {
        let p = model.predict_proba(x).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        let q = flipped.predict_proba(x).unwrap();
        prop_assert!((p + q - 1.0).abs() < 1e-12, "p = {p}, swapped p = {q}");
    }
    Ok(())
}

fn rotate(coords: &mut [f64], dim: usize, a: usize, b: usize, angle: f64) {
    let (s, c) = angle.sin_cos();
    for row in coords.chunks_mut(dim) {
        let (x, y) = (row[a], row[b]);
        row[a] = c * x - s * y;
        row[b] = s * x + c * y;
    }
}

/// Rotation (a product of plane rotations), uniform scaling and translation
/// leave the Gabriel edge set unchanged.
pub fn check_rigid_motion(
    input: (Vec<f64>, usize, Vec<bool>),
    angles: Vec<f64>,
    scale: f64,
    shift: Vec<f64>,
) -> Result<(), TestCaseError> {
    let (coords, dim, _) = input;
    let before = edge_set(&coords, dim);
    let mut moved = coords.clone();
    if dim >= 2 {
        for (t, angle) in angles.iter().enumerate() {
            rotate(&mut moved, dim, t % dim, (t + 1) % dim, *angle);
        }
    }
    for row in moved.chunks_mut(dim) {
        for (v, s) in row.iter_mut().zip(&shift) {
            *v = *v * scale + s;
        }
    }
    prop_assert_eq!(before, edge_set(&moved, dim));
    Ok(())
}

/// AUC is unchanged by strictly increasing maps and `auc(-s) = 1 - auc(s)`.
pub fn check_auc_invariance(scores: Vec<u8>, pos: Vec<bool>) -> Result<(), TestCaseError> {
    let n = scores.len().min(pos.len());
    let labels: Vec<Label> = pos[..n]
        .iter()
        .map(|&p| if p { Label::Positive } else { Label::Negative })
        .collect();
    if labels.iter().all(|l| l.is_positive()) || labels.iter().all(|l| !l.is_positive()) {
        return Err(TestCaseError::reject("single class"));
    }
    let s: Vec<f64> = scores[..n].iter().map(|&v| f64::from(v % 32)).collect();
    let base = auc(&s, &labels).unwrap();
    let cubic: Vec<f64> = s.iter().map(|v| v * v * v + v - 7.0).collect();
    let expo: Vec<f64> = s.iter().map(|v| (v / 4.0).exp()).collect();
    prop_assert_eq!(base, auc(&cubic, &labels).unwrap());
    prop_assert_eq!(base, auc(&expo, &labels).unwrap());
    let neg: Vec<f64> = s.iter().map(|v| -v).collect();
    prop_assert!((auc(&neg, &labels).unwrap() - (1.0 - base)).abs() < 1e-12);
    Ok(())
}

/// Raising a class multiplier never removes more samples.
pub fn check_h_monotone(q: Vec<f64>, pos: Vec<bool>, theta: (f64, f64), h: (f64, f64), factor: f64) -> Result<(), TestCaseError> {
    let n = q.len().min(pos.len());
    let labels: Vec<Label> = pos[..n]
        .iter()
        .map(|&p| if p { Label::Positive } else { Label::Negative })
        .collect();
    let theta = PerClass::new(theta.0, theta.1);
    let low = removal_mask(&q[..n], &labels, theta, PerClass::new(h.0, h.1));
    for high_h in [PerClass::new(h.0 * factor, h.1), PerClass::new(h.0, h.1 * factor)] {
        let high = removal_mask(&q[..n], &labels, theta, high_h);
        for (lo, hi) in low.iter().zip(&high) {
            prop_assert!(!hi || *lo, "sample removed at larger h but kept at smaller h");
        }
    }
    Ok(())
}

/// The full-data mean margin is the count-weighted mix of kept and removed terms.
pub fn check_margin_split(input: (Vec<f64>, usize, Vec<bool>), mask: Vec<bool>) -> Result<(), TestCaseError> {
    let (coords, dim, pos) = input;
    let Some(data) = to_dataset(&coords, dim, &pos) else {
        return Err(TestCaseError::reject("single class"));
    };
    if data.count(Label::Positive) < 2 || data.count(Label::Negative) < 2 {
        return Err(TestCaseError::reject("class too small for margins"));
    }
    let removed: Vec<bool> = (0..data.len()).map(|i| mask.get(i).copied().unwrap_or(false)).collect();
    let r = margin_split(&data, &removed).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let (m_in, m_out) = (r.kept_count as f64, r.removed_count as f64);
    let mixed = (m_in * r.mean_kept.unwrap() + m_out * r.removed_contribution.unwrap()) / (m_in + m_out);
    prop_assert!((mixed - r.mean_all).abs() < 1e-12, "{mixed} vs {}", r.mean_all);
    prop_assert!(r.per_sample.iter().all(|&m| m <= 1.0));
    Ok(())
}
