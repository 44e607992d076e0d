//! Per-sample quality indices and threshold filtering.
//!
//! The quality of a vertex is the fraction of its graph neighbours that share
//! its label. A class threshold is the mean quality over that class. The
//! flexible rule removes sample `i` iff `h[class(i)] * q[i] < theta[class(i)]`;
//! `h = (1, 1)` is the fixed rule `q[i] < theta[class(i)]`.

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Label};
use crate::error::{Error, Result};
use crate::graph::{build_gabriel_for, GabrielGraph};

/// A pair of per-class reals, serialized as `[positive, negative]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct PerClass {
    pub pos: f64,
    pub neg: f64,
}

impl PerClass {
    pub const ONES: PerClass = PerClass { pos: 1.0, neg: 1.0 };

    pub fn new(pos: f64, neg: f64) -> Self {
        Self { pos, neg }
    }

    pub fn get(&self, label: Label) -> f64 {
        match label {
            Label::Positive => self.pos,
            Label::Negative => self.neg,
        }
    }
}

impl From<[f64; 2]> for PerClass {
    fn from([pos, neg]: [f64; 2]) -> Self {
        Self { pos, neg }
    }
}

impl From<PerClass> for [f64; 2] {
    fn from(p: PerClass) -> Self {
        [p.pos, p.neg]
    }
}

/// Quality indices of a training set together with the filter parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityProfile {
    pub q: Vec<f64>,
    pub theta: PerClass,
    pub h: PerClass,
}

impl QualityProfile {
    pub fn compute(graph: &GabrielGraph, labels: &[Label], h: PerClass) -> Result<Self> {
        check_multipliers(h)?;
        let q = quality_index(graph, labels)?;
        let theta = class_thresholds(&q, labels)?;
        Ok(Self { q, theta, h })
    }

    pub fn removal_mask(&self, labels: &[Label]) -> Vec<bool> {
        removal_mask(&self.q, labels, self.theta, self.h)
    }
}

/// `V_eq / V_dt` for every vertex. An isolated vertex is an error.
pub fn quality_index(graph: &GabrielGraph, labels: &[Label]) -> Result<Vec<f64>> {
    if graph.n() != labels.len() {
        return Err(Error::Dimension {
            expected: graph.n(),
            found: labels.len(),
        });
    }
    (0..graph.n())
        .map(|i| {
            let nb = graph.neighbors(i);
            if nb.is_empty() {
                return Err(Error::IsolatedVertex(i));
            }
            let same = nb.iter().filter(|&&j| labels[j] == labels[i]).count();
            Ok(same as f64 / nb.len() as f64)
        })
        .collect()
}

/// Mean quality index of each class.
pub fn class_thresholds(q: &[f64], labels: &[Label]) -> Result<PerClass> {
    if q.len() != labels.len() {
        return Err(Error::Dimension {
            expected: labels.len(),
            found: q.len(),
        });
    }
    let mean = |class: Label| {
        let (sum, count) = q
            .iter()
            .zip(labels)
            .filter(|(_, &l)| l == class)
            .fold((0.0, 0usize), |(s, c), (v, _)| (s + v, c + 1));
        (count > 0).then(|| sum / count as f64)
    };
    match (mean(Label::Positive), mean(Label::Negative)) {
        (Some(pos), Some(neg)) => Ok(PerClass { pos, neg }),
        _ => Err(Error::SingleClass {
            positives: labels.iter().filter(|l| l.is_positive()).count(),
            negatives: labels.iter().filter(|l| !l.is_positive()).count(),
        }),
    }
}

/// `true` marks a sample the flexible rule removes.
pub fn removal_mask(q: &[f64], labels: &[Label], theta: PerClass, h: PerClass) -> Vec<bool> {
    q.iter()
        .zip(labels)
        .map(|(&qi, &l)| h.get(l) * qi < theta.get(l))
        .collect()
}

/// The original fixed-threshold rule, kept as its own code path.
pub fn fixed_removal_mask(q: &[f64], labels: &[Label], theta: PerClass) -> Vec<bool> {
    q.iter()
        .zip(labels)
        .map(|(&qi, &l)| match l {
            Label::Positive => qi < theta.pos,
            Label::Negative => qi < theta.neg,
        })
        .collect()
}

pub(crate) fn check_multipliers(h: PerClass) -> Result<()> {
    for v in [h.pos, h.neg] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "class multipliers must be finite and > 0, got ({}, {})",
                h.pos, h.neg
            )));
        }
    }
    Ok(())
}

/// Outcome of one filtering pass.
#[derive(Debug, Clone)]
pub struct FilterResult {
    pub kept: Vec<usize>,
    pub removed: Vec<usize>,
    pub dataset: Dataset,
    /// Gabriel graph rebuilt over the kept samples.
    pub graph: GabrielGraph,
}

/// Applies the flexible rule once and rebuilds the graph on the survivors.
pub fn flexible_filter(
    data: &Dataset,
    graph: &GabrielGraph,
    q: &[f64],
    theta: PerClass,
    h: PerClass,
) -> Result<FilterResult> {
    check_multipliers(h)?;
    check_sizes(data, graph, q)?;
    apply_mask(data, &removal_mask(q, data.labels(), theta, h))
}

/// Applies the fixed rule `q < theta` once and rebuilds the graph.
pub fn fixed_filter(data: &Dataset, graph: &GabrielGraph, q: &[f64], theta: PerClass) -> Result<FilterResult> {
    check_sizes(data, graph, q)?;
    apply_mask(data, &fixed_removal_mask(q, data.labels(), theta))
}

fn check_sizes(data: &Dataset, graph: &GabrielGraph, q: &[f64]) -> Result<()> {
    for found in [graph.n(), q.len()] {
        if found != data.len() {
            return Err(Error::Dimension {
                expected: data.len(),
                found,
            });
        }
    }
    Ok(())
}

/// Splits by `removed` mask; fails if a class would vanish.
pub fn apply_mask(data: &Dataset, removed_mask: &[bool]) -> Result<FilterResult> {
    let (removed, kept): (Vec<usize>, Vec<usize>) = (0..data.len()).partition(|&i| removed_mask[i]);
    check_classes_survive(data, &kept)?;
    let dataset = data.subset(&kept)?;
    let graph = build_gabriel_for(&dataset)?;
    Ok(FilterResult {
        kept,
        removed,
        dataset,
        graph,
    })
}

pub(crate) fn check_classes_survive(data: &Dataset, kept: &[usize]) -> Result<()> {
    for class in Label::BOTH {
        if !kept.iter().any(|&i| data.label(i) == class) {
            return Err(Error::EmptiedClass {
                class,
                total: data.count(class),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::{Negative as N, Positive as P};

    #[test]
    fn path_graph_quality() {
        let g = GabrielGraph::from_edges(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let q = quality_index(&g, &[P, P, N, N]).unwrap();
        assert_eq!(q, vec![1.0, 0.5, 0.5, 1.0]);
    }

    #[test]
    fn all_opposite_neighbours_give_zero() {
        let g = GabrielGraph::from_edges(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
        let q = quality_index(&g, &[P, N, N, N]).unwrap();
        assert_eq!(q[0], 0.0);
        assert_eq!(q[1], 0.0);
    }

    #[test]
    fn isolated_vertex_is_error() {
        let g = GabrielGraph::from_edges(3, [(0, 1)]).unwrap();
        assert!(matches!(quality_index(&g, &[P, N, N]), Err(Error::IsolatedVertex(2))));
    }

    #[test]
    fn thresholds() {
        let t = class_thresholds(&[1.0, 0.5, 0.0, 1.0, 1.0], &[P, P, P, N, N]).unwrap();
        assert_eq!(t, PerClass::new(0.5, 1.0));
        let ones = class_thresholds(&[1.0; 3], &[P, N, N]).unwrap();
        assert_eq!(ones, PerClass::ONES);
        assert!(class_thresholds(&[1.0, 1.0], &[P, P]).is_err());
    }

    #[test]
    fn masks_agree_at_unit_multipliers() {
        let q = [0.0, 0.25, 0.5, 0.75, 1.0, 0.5];
        let labels = [P, P, P, N, N, N];
        let theta = PerClass::new(0.5, 0.75);
        assert_eq!(
            removal_mask(&q, &labels, theta, PerClass::ONES),
            fixed_removal_mask(&q, &labels, theta)
        );
        // equality keeps
        assert_eq!(fixed_removal_mask(&q, &labels, theta), vec![true, true, false, false, false, true]);
    }

    #[test]
    fn zero_quality_always_removed() {
        for h in [0.1, 1.0, 10.0, 1e12] {
            let m = removal_mask(&[0.0], &[P], PerClass::new(0.3, 0.3), PerClass::new(h, h));
            assert_eq!(m, vec![true]);
        }
    }

    #[test]
    fn emptied_class_error() {
        let d = Dataset::new(vec![vec![0.0], vec![1.0], vec![2.0]], vec![P, N, N]).unwrap();
        let g = build_gabriel_for(&d).unwrap();
        let q = quality_index(&g, d.labels()).unwrap();
        let err = flexible_filter(&d, &g, &q, PerClass::new(0.5, 0.0), PerClass::ONES).unwrap_err();
        assert!(matches!(err, Error::EmptiedClass { class: Label::Positive, total: 1 }));
        assert!(flexible_filter(&d, &g, &q, PerClass::ONES, PerClass::new(0.0, 1.0)).is_err());
    }

    #[test]
    fn per_class_json_shape() {
        let s = serde_json::to_string(&PerClass::new(2.0, 0.5)).unwrap();
        assert_eq!(s, "[2.0,0.5]");
    }
}
