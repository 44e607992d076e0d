//! Nearest-hit / nearest-miss margins and the margin sweeps over class
//! variance and over the per-class filter multipliers.
//!
//! The margin of `x_i` is `(δ_miss - δ_hit) / δ_miss`, with `δ_hit` the
//! distance to the closest other sample of the same class and `δ_miss` the
//! distance to the closest sample of the opposite class, both searched over
//! the whole dataset.

use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::{gen_gaussian_pair, Dataset};
use crate::error::{Error, Result};
use crate::graph::{build_gabriel_for, sq_dist};
use crate::quality::{
    check_classes_survive, class_thresholds, fixed_removal_mask, quality_index, removal_mask, FilterResult,
    PerClass,
};

pub fn sample_margin(i: usize, data: &Dataset) -> Result<f64> {
    if i >= data.len() {
        return Err(Error::InvalidArgument(format!("sample {i} out of range")));
    }
    let xi = data.row(i);
    let li = data.label(i);
    let mut hit = f64::INFINITY;
    let mut miss = f64::INFINITY;
    for (j, (row, &lj)) in data.rows().zip(data.labels()).enumerate() {
        if j == i {
            continue;
        }
        let d = sq_dist(xi, row);
        if lj == li {
            hit = hit.min(d);
        } else {
            miss = miss.min(d);
        }
    }
    if hit.is_infinite() {
        return Err(Error::MarginUndefined {
            index: i,
            reason: "no other sample of the same class",
        });
    }
    if miss.is_infinite() {
        return Err(Error::MarginUndefined {
            index: i,
            reason: "no sample of the opposite class",
        });
    }
    if miss == 0.0 {
        return Err(Error::MarginUndefined {
            index: i,
            reason: "an opposite-class sample coincides with it",
        });
    }
    let (hit, miss) = (hit.sqrt(), miss.sqrt());
    Ok((miss - hit) / miss)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginReport {
    /// Margins of the considered samples, in `indices` order.
    pub per_sample: Vec<f64>,
    pub indices: Vec<usize>,
    pub mean_all: f64,
    /// Mean over samples a filter keeps (terms computed on the full data).
    pub mean_kept: Option<f64>,
    /// Mean over samples a filter removes; zero when none are removed.
    pub removed_contribution: Option<f64>,
    pub kept_count: usize,
    pub removed_count: usize,
}

fn margins_of(data: &Dataset, indices: &[usize]) -> Result<Vec<f64>> {
    indices.par_iter().map(|&i| sample_margin(i, data)).collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Mean margin over all samples, or over `restrict_to` (e.g. the SSVs).
pub fn mean_margin(data: &Dataset, restrict_to: Option<&[usize]>) -> Result<MarginReport> {
    let indices: Vec<usize> = match restrict_to {
        Some([]) => {
            return Err(Error::InvalidArgument("empty restriction set".into()));
        }
        Some(idx) => idx.to_vec(),
        None => (0..data.len()).collect(),
    };
    let per_sample = margins_of(data, &indices)?;
    Ok(MarginReport {
        mean_all: mean(&per_sample),
        kept_count: per_sample.len(),
        per_sample,
        indices,
        mean_kept: None,
        removed_contribution: None,
        removed_count: 0,
    })
}

/// Splits the full-data mean margin into the terms of kept and removed
/// samples: `mean_all = (n_kept * mean_kept + n_removed * removed) / n`.
pub fn margin_split(data: &Dataset, removed_mask: &[bool]) -> Result<MarginReport> {
    if removed_mask.len() != data.len() {
        return Err(Error::Dimension {
            expected: data.len(),
            found: removed_mask.len(),
        });
    }
    let mut report = mean_margin(data, None)?;
    let (mut kept_sum, mut kept_n, mut out_sum, mut out_n) = (0.0, 0usize, 0.0, 0usize);
    for (&m, &removed) in report.per_sample.iter().zip(removed_mask) {
        if removed {
            out_sum += m;
            out_n += 1;
        } else {
            kept_sum += m;
            kept_n += 1;
        }
    }
    report.mean_kept = Some(if kept_n > 0 { kept_sum / kept_n as f64 } else { 0.0 });
    report.removed_contribution = Some(if out_n > 0 { out_sum / out_n as f64 } else { 0.0 });
    report.kept_count = kept_n;
    report.removed_count = out_n;
    Ok(report)
}

/// Mean margin of a filtered training set, with hits and misses searched
/// among the kept samples only.
pub fn filtered_mean_margin(filter: &FilterResult) -> Result<f64> {
    Ok(mean_margin(&filter.dataset, None)?.mean_all)
}

fn kept_mean_margin(data: &Dataset, removed: &[bool]) -> Result<(f64, usize)> {
    let kept: Vec<usize> = (0..data.len()).filter(|&i| !removed[i]).collect();
    check_classes_survive(data, &kept)?;
    let sub = data.subset(&kept)?;
    Ok((mean_margin(&sub, None)?.mean_all, kept.len()))
}

/// Kept-sample mean margin after the fixed `q < theta` filter.
pub fn fixed_threshold_margin(data: &Dataset) -> Result<f64> {
    let graph = build_gabriel_for(data)?;
    let q = quality_index(&graph, data.labels())?;
    let theta = class_thresholds(&q, data.labels())?;
    Ok(kept_mean_margin(data, &fixed_removal_mask(&q, data.labels(), theta))?.0)
}

/// `n` log-spaced values from `lo` to `hi` inclusive. A point whose
/// logarithm rounds to within 1e-12 of zero is returned as exactly 1.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| {
                    if i == n - 1 {
                        hi
                    } else {
                        let t = a + (b - a) * i as f64 / (n - 1) as f64;
                        if t.abs() < 1e-12 {
                            1.0
                        } else {
                            t.exp()
                        }
                    }
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurfaceCell {
    pub h_pos: f64,
    pub h_neg: f64,
    /// `None` when the filter empties a class or leaves a margin undefined.
    pub mean_margin: Option<f64>,
    pub kept_count: usize,
}

/// Kept-sample mean margin for every `(h_pos, h_neg)` on the grid, row-major
/// with `h_pos` varying slowest. Thresholds come from the unfiltered graph.
pub fn margin_surface(data: &Dataset, h_pos_axis: &[f64], h_neg_axis: &[f64]) -> Result<Vec<SurfaceCell>> {
    if h_pos_axis.iter().chain(h_neg_axis).any(|&h| !(h > 0.0 && h.is_finite())) {
        return Err(Error::InvalidArgument("grid multipliers must be finite and > 0".into()));
    }
    let graph = build_gabriel_for(data)?;
    let q = quality_index(&graph, data.labels())?;
    let theta = class_thresholds(&q, data.labels())?;
    let cells: Vec<(f64, f64)> = h_pos_axis
        .iter()
        .flat_map(|&a| h_neg_axis.iter().map(move |&b| (a, b)))
        .collect();
    Ok(cells
        .into_par_iter()
        .map(|(h_pos, h_neg)| {
            let removed = removal_mask(&q, data.labels(), theta, PerClass::new(h_pos, h_neg));
            let kept_count = removed.iter().filter(|r| !**r).count();
            let mean_margin = kept_mean_margin(data, &removed).ok().map(|(m, _)| m);
            SurfaceCell {
                h_pos,
                h_neg,
                mean_margin,
                kept_count,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub variance: f64,
    pub mean_unfiltered: f64,
    /// Undefined when the graph cannot be built (coincident points at zero
    /// variance) or filtering leaves a margin undefined.
    pub mean_filtered: Option<f64>,
    pub mean_q: Option<f64>,
}

/// Settings of the two-Gaussian margin/quality sweep.
#[derive(Debug, Clone)]
pub struct CurveConfig {
    pub mu0: Vec<f64>,
    pub mu1: Vec<f64>,
    pub n_per_class: usize,
    pub seed: u64,
}

impl Default for CurveConfig {
    fn default() -> Self {
        Self {
            mu0: vec![3.0, 3.0],
            mu1: vec![5.0, 5.0],
            n_per_class: 500,
            seed: 0,
        }
    }
}

/// Mean margin before and after fixed filtering, and mean quality index, for
/// each variance. The same seed is used at every variance, so samples differ
/// only by scale around the class means.
pub fn margin_curve(variances: &[f64], config: &CurveConfig) -> Result<Vec<CurvePoint>> {
    variances
        .iter()
        .map(|&variance| {
            let data = gen_gaussian_pair(&config.mu0, &config.mu1, variance, config.n_per_class, config.seed)?;
            let mean_unfiltered = mean_margin(&data, None)?.mean_all;
            let (mean_filtered, mean_q) = match build_gabriel_for(&data) {
                Ok(graph) => {
                    let q = quality_index(&graph, data.labels())?;
                    let theta = class_thresholds(&q, data.labels())?;
                    let removed = fixed_removal_mask(&q, data.labels(), theta);
                    (kept_mean_margin(&data, &removed).ok().map(|(m, _)| m), Some(mean(&q)))
                }
                Err(Error::DuplicatePoints { .. }) => (None, None),
                Err(e) => return Err(e),
            };
            Ok(CurvePoint {
                variance,
                mean_unfiltered,
                mean_filtered,
                mean_q,
            })
        })
        .collect()
}
