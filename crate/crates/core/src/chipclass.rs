//! The Chipclass classifier.
//!
//! Every Gabriel edge joining opposite classes (a support edge) contributes
//! the hyperplane bisecting it. A test point is scored by a gated vote: edge
//! `k` carries weight `c_k = exp(D_max^2 / δ(x, p_k))`, where `p_k` is the
//! edge midpoint and `D_max` the largest midpoint distance, and the weight goes
//! to the class of whichever endpoint is closer to `x`.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{normalize_zscore, Dataset, Label, Normalization};
use crate::error::{Error, Result};
use crate::graph::{build_gabriel_for, dist, sq_dist, GabrielGraph};
use crate::quality::{fixed_filter, flexible_filter, quality_index, class_thresholds, PerClass};

pub const MODEL_SCHEMA_VERSION: u32 = 1;

/// Opposite-class Gabriel edge with its structural support vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportEdge {
    pub ssv_pos: Vec<f64>,
    pub ssv_neg: Vec<f64>,
    pub midpoint: Vec<f64>,
}

impl SupportEdge {
    pub fn new(ssv_pos: &[f64], ssv_neg: &[f64]) -> Self {
        let midpoint = ssv_pos.iter().zip(ssv_neg).map(|(a, b)| (a + b) / 2.0).collect();
        Self {
            ssv_pos: ssv_pos.to_vec(),
            ssv_neg: ssv_neg.to_vec(),
            midpoint,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub seed: Option<u64>,
    pub dataset_hash: String,
    /// Whether quality filtering was applied before extracting edges.
    pub filtered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChipclassModel {
    pub schema_version: u32,
    pub dimension: usize,
    pub edges: Vec<SupportEdge>,
    pub h: PerClass,
    pub theta: PerClass,
    /// Applied to raw inputs before scoring, when present.
    pub normalization: Option<Normalization>,
    pub metadata: ModelMetadata,
}

/// Index pairs `(positive, negative)` of every opposite-class edge, in edge
/// order.
pub fn support_edge_pairs(graph: &GabrielGraph, labels: &[Label]) -> Vec<(usize, usize)> {
    graph
        .edges()
        .iter()
        .filter(|&&(i, j)| labels[i] != labels[j])
        .map(|&(i, j)| if labels[i].is_positive() { (i, j) } else { (j, i) })
        .collect()
}

pub fn extract_support_edges(graph: &GabrielGraph, data: &Dataset) -> Result<Vec<SupportEdge>> {
    if graph.n() != data.len() {
        return Err(Error::Dimension {
            expected: data.len(),
            found: graph.n(),
        });
    }
    data.require_both_classes()?;
    let edges: Vec<SupportEdge> = support_edge_pairs(graph, data.labels())
        .into_iter()
        .map(|(p, n)| SupportEdge::new(data.row(p), data.row(n)))
        .collect();
    if edges.is_empty() {
        return Err(Error::NoSupportEdges);
    }
    Ok(edges)
}

/// Graph, quality indices and class thresholds of a training set: the part
/// of training that does not depend on the class multipliers.
#[derive(Debug, Clone)]
pub struct PreparedTraining {
    data: Dataset,
    normalization: Option<Normalization>,
    graph: GabrielGraph,
    q: Vec<f64>,
    theta: PerClass,
    source_hash: String,
}

impl PreparedTraining {
    /// With `normalize`, the data are z-scored first and the parameters are
    /// stored in every model produced.
    pub fn new(data: &Dataset, normalize: bool) -> Result<Self> {
        data.require_both_classes()?;
        let (scaled, normalization) = if normalize {
            let (s, p) = normalize_zscore(data);
            (s, Some(p))
        } else {
            (data.clone(), None)
        };
        let graph = build_gabriel_for(&scaled)?;
        let q = quality_index(&graph, scaled.labels())?;
        let theta = class_thresholds(&q, scaled.labels())?;
        Ok(Self {
            data: scaled,
            normalization,
            graph,
            q,
            theta,
            source_hash: data.content_hash(),
        })
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn graph(&self) -> &GabrielGraph {
        &self.graph
    }

    pub fn quality(&self) -> &[f64] {
        &self.q
    }

    pub fn theta(&self) -> PerClass {
        self.theta
    }

    /// Flexible filter under `h` (when `enable_filter`), then support edges.
    pub fn model(&self, h: PerClass, enable_filter: bool) -> Result<ChipclassModel> {
        crate::quality::check_multipliers(h)?;
        let edges = if enable_filter {
            let filtered = flexible_filter(&self.data, &self.graph, &self.q, self.theta, h)?;
            extract_support_edges(&filtered.graph, &filtered.dataset)?
        } else {
            extract_support_edges(&self.graph, &self.data)?
        };
        Ok(self.assemble(edges, h, enable_filter))
    }

    /// Standard Chipclass through the fixed `q < theta` rule.
    pub fn fixed_model(&self) -> Result<ChipclassModel> {
        let filtered = fixed_filter(&self.data, &self.graph, &self.q, self.theta)?;
        let edges = extract_support_edges(&filtered.graph, &filtered.dataset)?;
        Ok(self.assemble(edges, PerClass::ONES, true))
    }

    fn assemble(&self, edges: Vec<SupportEdge>, h: PerClass, filtered: bool) -> ChipclassModel {
        ChipclassModel {
            schema_version: MODEL_SCHEMA_VERSION,
            dimension: self.data.dim(),
            edges,
            h,
            theta: self.theta,
            normalization: self.normalization.clone(),
            metadata: ModelMetadata {
                seed: None,
                dataset_hash: self.source_hash.clone(),
                filtered,
            },
        }
    }
}

/// Trains on `data` as given (no scaling). With `enable_filter`, samples
/// failing the flexible rule under `h` are dropped and the graph rebuilt
/// before support edges are taken.
pub fn train(data: &Dataset, h: PerClass, enable_filter: bool) -> Result<ChipclassModel> {
    crate::quality::check_multipliers(h)?;
    PreparedTraining::new(data, false)?.model(h, enable_filter)
}

/// Standard Chipclass: fixed per-class mean thresholds, no multipliers.
pub fn train_fixed(data: &Dataset) -> Result<ChipclassModel> {
    PreparedTraining::new(data, false)?.fixed_model()
}

/// Training options for [`fit`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub h: PerClass,
    pub filter: bool,
    pub normalize: bool,
    pub seed: Option<u64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            h: PerClass::ONES,
            filter: true,
            normalize: true,
            seed: None,
        }
    }
}

/// Optionally z-scores the data, trains, and records the scaling in the
/// model so raw points can be scored later.
pub fn fit(data: &Dataset, options: &FitOptions) -> Result<ChipclassModel> {
    crate::quality::check_multipliers(options.h)?;
    let mut model = PreparedTraining::new(data, options.normalize)?.model(options.h, options.filter)?;
    model.metadata.seed = options.seed;
    Ok(model)
}

/// Log-domain gate of every edge: `D_max^2 / δ(x, p_k)`, `+inf` where `x`
/// sits on a midpoint.
pub fn gating_exponents(x: &[f64], model: &ChipclassModel) -> Vec<f64> {
    let d: Vec<f64> = model.edges.iter().map(|e| dist(x, &e.midpoint)).collect();
    let d_max = d.iter().copied().fold(0.0, f64::max);
    d.iter()
        .map(|&dk| if dk == 0.0 { f64::INFINITY } else { d_max * d_max / dk })
        .collect()
}

/// Gate weights `c_k / Σ c`, computed by shifting exponents by their maximum.
/// Points lying on midpoints split the whole weight among those edges.
pub fn gating_weights(x: &[f64], model: &ChipclassModel) -> Vec<f64> {
    let e = gating_exponents(x, model);
    let on_midpoint = e.iter().filter(|v| v.is_infinite()).count();
    if on_midpoint > 0 {
        let share = 1.0 / on_midpoint as f64;
        return e.iter().map(|v| if v.is_infinite() { share } else { 0.0 }).collect();
    }
    let top = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = e.iter().map(|v| (v - top).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|v| v / total).collect()
}

/// Class vote totals `(w_p, w_n)` for a point already in model space.
fn votes(z: &[f64], model: &ChipclassModel) -> (f64, f64) {
    let c = gating_weights(z, model);
    let mut wp = 0.0;
    let mut wn = 0.0;
    for (edge, ck) in model.edges.iter().zip(c) {
        let dp = sq_dist(z, &edge.ssv_pos);
        let dn = sq_dist(z, &edge.ssv_neg);
        if dp < dn {
            wp += ck;
        } else if dn < dp {
            wn += ck;
        } else {
            wp += ck / 2.0;
            wn += ck / 2.0;
        }
    }
    (wp, wn)
}

impl ChipclassModel {
    /// Maps a raw input into the space the edges live in.
    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dimension {
            return Err(Error::Dimension {
                expected: self.dimension,
                found: x.len(),
            });
        }
        Ok(match &self.normalization {
            Some(n) => n.apply(x),
            None => x.to_vec(),
        })
    }

    /// `w_p / (w_p + w_n)` for a raw input.
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        let z = self.transform(x)?;
        let (wp, wn) = votes(&z, self);
        Ok(wp / (wp + wn))
    }

    /// Positive iff `w_p >= w_n`.
    pub fn predict(&self, x: &[f64]) -> Result<Label> {
        let z = self.transform(x)?;
        let (wp, wn) = votes(&z, self);
        Ok(if wp >= wn { Label::Positive } else { Label::Negative })
    }

    /// Positive-class probabilities for every row, in row order.
    pub fn predict_proba_batch(&self, data: &Dataset) -> Result<Vec<f64>> {
        if data.dim() != self.dimension {
            return Err(Error::Dimension {
                expected: self.dimension,
                found: data.dim(),
            });
        }
        (0..data.len())
            .into_par_iter()
            .map(|i| self.predict_proba(data.row(i)))
            .collect()
    }

    pub fn predict_batch(&self, data: &Dataset) -> Result<Vec<Label>> {
        (0..data.len())
            .into_par_iter()
            .map(|i| self.predict(data.row(i)))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(s)?;
        if model.edges.is_empty() {
            return Err(Error::NoSupportEdges);
        }
        if let Some(e) = model
            .edges
            .iter()
            .flat_map(|e| [&e.ssv_pos, &e.ssv_neg, &e.midpoint])
            .find(|v| v.len() != model.dimension)
        {
            return Err(Error::Dimension {
                expected: model.dimension,
                found: e.len(),
            });
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()? + "\n").map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&s)
    }
}

pub fn gating_weights_for(x: &[f64], model: &ChipclassModel) -> Result<Vec<f64>> {
    Ok(gating_weights(&model.transform(x)?, model))
}

pub fn predict_proba(x: &[f64], model: &ChipclassModel) -> Result<f64> {
    model.predict_proba(x)
}

pub fn predict(x: &[f64], model: &ChipclassModel) -> Result<Label> {
    model.predict(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::{Negative as N, Positive as P};

    fn model_of(edges: Vec<SupportEdge>) -> ChipclassModel {
        ChipclassModel {
            schema_version: MODEL_SCHEMA_VERSION,
            dimension: edges[0].midpoint.len(),
            edges,
            h: PerClass::ONES,
            theta: PerClass::ONES,
            normalization: None,
            metadata: ModelMetadata::default(),
        }
    }

    #[test]
    fn two_point_model() {
        let d = Dataset::new(vec![vec![0.0, 0.0], vec![2.0, 4.0]], vec![P, N]).unwrap();
        let m = train(&d, PerClass::ONES, false).unwrap();
        assert_eq!(m.edges.len(), 1);
        assert_eq!(m.edges[0].midpoint, vec![1.0, 2.0]);
        assert_eq!(m.edges[0].ssv_pos, vec![0.0, 0.0]);
        assert_eq!(m.predict_proba(&[0.1, 0.0]).unwrap(), 1.0);
        assert_eq!(m.predict(&[1.9, 4.0]).unwrap(), N);
    }

    #[test]
    fn single_edge_gate_collapses() {
        let m = model_of(vec![SupportEdge::new(&[0.0, 0.0], &[2.0, 0.0])]);
        let x = [4.0, 3.0];
        let e = gating_exponents(&x, &m);
        let d = dist(&x, &[1.0, 0.0]);
        assert!((e[0] - d).abs() < 1e-12);
        assert_eq!(gating_weights(&x, &m), vec![1.0]);
    }

    #[test]
    fn equidistant_midpoints_share_weight() {
        let m = model_of(vec![
            SupportEdge::new(&[-2.0, 1.0], &[-2.0, -1.0]),
            SupportEdge::new(&[2.0, 1.0], &[2.0, -1.0]),
        ]);
        let c = gating_weights(&[0.0, 5.0], &m);
        assert_eq!(c[0], c[1]);
    }

    #[test]
    fn midpoint_takes_all_weight_and_matches_limit() {
        let m = model_of(vec![
            SupportEdge::new(&[0.0, 1.0], &[0.0, -1.0]),
            SupportEdge::new(&[3.0, 1.0], &[3.0, -1.0]),
            SupportEdge::new(&[-4.0, 2.0], &[-4.0, 0.0]),
        ]);
        assert_eq!(gating_weights(&[3.0, 0.0], &m), vec![0.0, 1.0, 0.0]);
        let near = gating_weights(&[3.0, 1e-3], &m);
        assert!(near[1] > 1.0 - 1e-12, "{near:?}");
        assert!(near[0] < 1e-12 && near[2] < 1e-12);
        // off the midpoint along the edge direction, the winning class is decided
        assert_eq!(m.predict_proba(&[3.0, 1e-3]).unwrap(), 1.0);
    }

    #[test]
    fn mirror_symmetric_tie_is_half() {
        let m = model_of(vec![
            SupportEdge::new(&[-1.0, 0.0], &[1.0, 0.0]),
            SupportEdge::new(&[-1.0, 3.0], &[1.0, 3.0]),
        ]);
        for y in [-2.0, 0.7, 10.0] {
            assert_eq!(m.predict_proba(&[0.0, y]).unwrap(), 0.5);
            assert_eq!(m.predict(&[0.0, y]).unwrap(), P);
        }
    }

    #[test]
    fn two_edge_hand_evaluation() {
        // edge A: pos (0,0), neg (2,0), midpoint (1,0)
        // edge B: pos (0,4), neg (0,2), midpoint (0,3)
        let m = model_of(vec![
            SupportEdge::new(&[0.0, 0.0], &[2.0, 0.0]),
            SupportEdge::new(&[0.0, 4.0], &[0.0, 2.0]),
        ]);
        // x = (2,2): δ(x,pA) = √5, δ(x,pB) = √5 → equal gates.
        // A: |x-posA|²=8, |x-negA|²=4 → negative. B: |x-posB|²=8, |x-negB|²=4 → negative.
        assert_eq!(m.predict_proba(&[2.0, 2.0]).unwrap(), 0.0);
        // x = (0,1): δ(x,pA)=√2, δ(x,pB)=2, D_max=2.
        // exponents 4/√2 = 2√2 and 4/2 = 2.
        // A: |x-posA|²=1 < |x-negA|²=5 → positive. B: |x-posB|²=9 > |x-negB|²=1 → negative.
        let ca = (2.0 * 2f64.sqrt()).exp();
        let cb = 2f64.exp();
        let want = ca / (ca + cb);
        assert!((m.predict_proba(&[0.0, 1.0]).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn huge_exponents_stay_finite() {
        let m = model_of(vec![
            SupportEdge::new(&[0.0, 0.0], &[1e-6, 0.0]),
            SupportEdge::new(&[1e6, 0.0], &[1e6, 1.0]),
        ]);
        let p = m.predict_proba(&[1e-6, 1e-9]).unwrap();
        assert!(p.is_finite());
    }

    #[test]
    fn json_round_trip() {
        let d = Dataset::new(
            vec![vec![0.0, 0.0], vec![1.0, 0.1], vec![3.0, 0.0], vec![4.0, 1.0]],
            vec![P, P, N, N],
        )
        .unwrap();
        let m = fit(&d, &FitOptions { seed: Some(3), ..FitOptions::default() }).unwrap();
        let back = ChipclassModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        let v: serde_json::Value = serde_json::from_str(&m.to_json().unwrap()).unwrap();
        assert_eq!(v["h"], serde_json::json!([1.0, 1.0]));
        assert!(v["normalization"]["means"].is_array());
        assert_eq!(v["metadata"]["seed"], 3);
        assert!(v["edges"][0]["midpoint"].is_array());
    }

    #[test]
    fn dimension_checked() {
        let m = model_of(vec![SupportEdge::new(&[0.0, 0.0], &[2.0, 0.0])]);
        assert!(matches!(m.predict(&[1.0]), Err(Error::Dimension { .. })));
    }
}
