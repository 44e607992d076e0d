//! AUC, the nested cross-validation benchmark, and rank statistics
//! (average ranks, Friedman test, Bonferroni-Dunn critical difference).

use std::io::Read;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chipclass::{ChipclassModel, PreparedTraining};
use crate::dataset::{stratified_kfold, Dataset, Label};
use crate::error::{Error, Result};
use crate::quality::PerClass;
use crate::tuner::{tune, SearchSpace, TrialRecord};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Average (fractional) ranks, rank 1 for the smallest value.
pub fn fractional_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let avg = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

/// Area under the ROC curve: the probability that a random positive scores
/// above a random negative, ties counting one half (rank-sum form).
pub fn auc(scores: &[f64], labels: &[Label]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Dimension {
            expected: labels.len(),
            found: scores.len(),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidArgument("non-finite score".into()));
    }
    let n_pos = labels.iter().filter(|l| l.is_positive()).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass {
            positives: n_pos,
            negatives: n_neg,
        });
    }
    let ranks = fractional_ranks(scores);
    let rank_sum: f64 = ranks
        .iter()
        .zip(labels)
        .filter(|(_, l)| l.is_positive())
        .map(|(r, _)| r)
        .sum();
    let (p, n) = (n_pos as f64, n_neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Test AUC of a model on a held-out set.
pub fn model_auc(model: &ChipclassModel, test: &Dataset) -> Result<f64> {
    auc(&model.predict_proba_batch(test)?, test.labels())
}

/// Inner-CV objective over `[h_pos, h_neg]`. Splits, scaling, graphs and
/// quality indices are prepared once; each call only filters, extracts
/// support edges and scores the validation folds. Any fold failing (e.g. a
/// class emptied by the filter) makes the whole assignment invalid.
pub struct CvObjective {
    folds: Vec<(PreparedTraining, Dataset)>,
}

impl CvObjective {
    pub fn new(data: &Dataset, k_inner: usize, seed: u64, normalize: bool) -> Result<Self> {
        let plan = stratified_kfold(data, k_inner, seed)?;
        let folds = (0..k_inner)
            .into_par_iter()
            .map(|f| {
                let train = data.subset(&plan.train_indices(f))?;
                let valid = data.subset(&plan.test_indices(f))?;
                Ok((PreparedTraining::new(&train, normalize)?, valid))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { folds })
    }

    pub fn evaluate(&self, h: PerClass) -> Result<f64> {
        let mut total = 0.0;
        for (prepared, valid) in &self.folds {
            total += model_auc(&prepared.model(h, true)?, valid)?;
        }
        Ok(total / self.folds.len() as f64)
    }

    pub fn score(&self, params: &[f64]) -> Option<f64> {
        match params {
            [hp, hn] => self.evaluate(PerClass::new(*hp, *hn)).ok(),
            _ => None,
        }
    }
}

/// Closure form of [`CvObjective`] for [`tune`].
pub fn cv_objective(
    data: &Dataset,
    k_inner: usize,
    seed: u64,
    normalize: bool,
) -> Result<impl Fn(&[f64]) -> Option<f64> + Sync> {
    let obj = CvObjective::new(data, k_inner, seed, normalize)?;
    Ok(move |p: &[f64]| obj.score(p))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub outer_k: usize,
    pub inner_k: usize,
    pub budget: usize,
    pub seed: u64,
    pub normalize: bool,
    pub h_low: f64,
    pub h_high: f64,
    pub n_startup: usize,
    pub gamma: f64,
    pub n_candidates: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            outer_k: 10,
            inner_k: 5,
            budget: 50,
            seed: 0,
            normalize: true,
            h_low: 0.1,
            h_high: 10.0,
            n_startup: 10,
            gamma: 0.25,
            n_candidates: 24,
        }
    }
}

impl BenchConfig {
    pub fn search_space(&self, seed: u64) -> SearchSpace {
        let mut space = SearchSpace::class_multipliers(self.h_low, self.h_high, self.budget, seed);
        space.n_startup = self.n_startup;
        space.gamma = self.gamma;
        space.n_candidates = self.n_candidates;
        space
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldOutcome {
    pub fold: usize,
    pub test_size: usize,
    pub chosen_h: PerClass,
    /// Best mean inner-validation AUC found by the tuner.
    pub inner_best: f64,
    /// Mean inner-validation AUC at `h = (1, 1)`, when that point was tried.
    pub inner_fixed: Option<f64>,
    pub test_auc: f64,
    /// Held-out AUC of standard Chipclass on the same split.
    pub fixed_test_auc: f64,
    pub trials: Vec<TrialRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema_version: u32,
    pub dataset_hash: String,
    pub config: BenchConfig,
    pub per_fold: Vec<FoldOutcome>,
    pub mean: f64,
    pub chosen_h: Vec<PerClass>,
    pub fixed_baseline: FixedBaseline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedBaseline {
    pub per_fold: Vec<f64>,
    pub mean: f64,
}

/// Derives an independent stream seed for a sub-task.
pub(crate) fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Nested cross-validation: for every outer fold the multipliers are tuned
/// on inner folds of the outer-train part, the model is refit on the whole
/// outer-train part, and AUC is measured on the held-out fold. Standard
/// Chipclass is scored on the same splits.
pub fn run_benchmark(data: &Dataset, config: &BenchConfig) -> Result<BenchReport> {
    let plan = stratified_kfold(data, config.outer_k, config.seed)?;
    let per_fold = (0..config.outer_k)
        .into_par_iter()
        .map(|f| run_outer_fold(data, config, &plan.train_indices(f), &plan.test_indices(f), f))
        .collect::<Result<Vec<_>>>()?;
    let mean = per_fold.iter().map(|f| f.test_auc).sum::<f64>() / per_fold.len() as f64;
    let fixed: Vec<f64> = per_fold.iter().map(|f| f.fixed_test_auc).collect();
    Ok(BenchReport {
        schema_version: REPORT_SCHEMA_VERSION,
        dataset_hash: data.content_hash(),
        config: config.clone(),
        chosen_h: per_fold.iter().map(|f| f.chosen_h).collect(),
        mean,
        fixed_baseline: FixedBaseline {
            mean: fixed.iter().sum::<f64>() / fixed.len() as f64,
            per_fold: fixed,
        },
        per_fold,
    })
}

fn run_outer_fold(
    data: &Dataset,
    config: &BenchConfig,
    train_idx: &[usize],
    test_idx: &[usize],
    fold: usize,
) -> Result<FoldOutcome> {
    let train = data.subset(train_idx)?;
    let test = data.subset(test_idx)?;
    let fold_seed = derive_seed(config.seed, fold as u64);
    let objective = CvObjective::new(&train, config.inner_k, fold_seed, config.normalize)?;
    let result = tune(|p: &[f64]| objective.score(p), &config.search_space(derive_seed(fold_seed, 1)))?;
    let chosen_h = PerClass::new(result.best.params[0], result.best.params[1]);
    let inner_fixed = result
        .history
        .iter()
        .find(|t| t.params == [1.0, 1.0])
        .and_then(|t| t.score);

    let prepared = PreparedTraining::new(&train, config.normalize)?;
    let test_auc = model_auc(&prepared.model(chosen_h, true)?, &test)?;
    let fixed_test_auc = model_auc(&prepared.fixed_model()?, &test)?;
    Ok(FoldOutcome {
        fold,
        test_size: test.len(),
        chosen_h,
        inner_best: result.best.score.unwrap_or(f64::NAN),
        inner_fixed,
        test_auc,
        fixed_test_auc,
        trials: result.history,
    })
}

/// Held-out AUC of standard Chipclass on each of `k` stratified folds.
pub fn cross_validate_fixed(data: &Dataset, k: usize, seed: u64, normalize: bool) -> Result<Vec<f64>> {
    let plan = stratified_kfold(data, k, seed)?;
    (0..k)
        .into_par_iter()
        .map(|f| {
            let train = data.subset(&plan.train_indices(f))?;
            let test = data.subset(&plan.test_indices(f))?;
            model_auc(&PreparedTraining::new(&train, normalize)?.fixed_model()?, &test)
        })
        .collect()
}

/// Scores of several classifiers on several datasets (rows = datasets).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub datasets: Vec<String>,
    pub classifiers: Vec<String>,
    pub scores: Vec<Vec<Option<f64>>>,
}

impl ScoreTable {
    /// CSV with a header row of classifier names after a first dataset-name
    /// column. Empty cells are missing values.
    pub fn read_csv<R: Read>(reader: R, delimiter: u8) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .delimiter(delimiter)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let classifiers: Vec<String> = rdr.headers()?.iter().skip(1).map(str::to_string).collect();
        let mut datasets = Vec::new();
        let mut scores = Vec::new();
        for (n, rec) in rdr.records().enumerate() {
            let rec = rec?;
            datasets.push(rec.get(0).unwrap_or_default().to_string());
            let row = rec
                .iter()
                .enumerate()
                .skip(1)
                .map(|(c, cell)| {
                    if cell.is_empty() {
                        return Ok(None);
                    }
                    match cell.parse::<f64>() {
                        Ok(v) if v.is_finite() => Ok(Some(v)),
                        _ => Err(Error::BadCell {
                            row: n + 2,
                            column: c,
                            value: cell.to_string(),
                        }),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            if row.len() != classifiers.len() {
                return Err(Error::RaggedRow {
                    row: n + 2,
                    found: row.len() + 1,
                    expected: classifiers.len() + 1,
                });
            }
            scores.push(row);
        }
        Ok(Self {
            datasets,
            classifiers,
            scores,
        })
    }

    pub fn load(path: impl AsRef<Path>, delimiter: u8) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::read_csv(file, delimiter)
    }

    fn complete_rows(&self) -> Result<Vec<Vec<f64>>> {
        self.scores
            .iter()
            .enumerate()
            .map(|(r, row)| {
                row.iter()
                    .enumerate()
                    .map(|(c, v)| {
                        v.ok_or_else(|| {
                            Error::InvalidArgument(format!(
                                "missing score for {:?} on {:?}",
                                self.classifiers[c], self.datasets[r]
                            ))
                        })
                    })
                    .collect()
            })
            .collect()
    }
}

/// Mean rank of each classifier; per dataset the highest score gets rank 1
/// and ties share the average rank.
pub fn average_ranks(table: &ScoreTable) -> Result<Vec<f64>> {
    let rows = table.complete_rows()?;
    if rows.is_empty() {
        return Err(Error::InvalidArgument("score table has no datasets".into()));
    }
    let k = table.classifiers.len();
    let mut sums = vec![0.0; k];
    for row in &rows {
        let negated: Vec<f64> = row.iter().map(|v| -v).collect();
        for (s, r) in sums.iter_mut().zip(fractional_ranks(&negated)) {
            *s += r;
        }
    }
    Ok(sums.into_iter().map(|s| s / rows.len() as f64).collect())
}

/// Friedman statistic and its F-distributed (Iman-Davenport) form.
pub fn friedman_test(avg_ranks: &[f64], n: usize, k: usize) -> Result<(f64, f64)> {
    if k < 3 || n < 2 {
        return Err(Error::InvalidArgument(format!("need k >= 3 and N >= 2, got k={k}, N={n}")));
    }
    if avg_ranks.len() != k {
        return Err(Error::Dimension {
            expected: k,
            found: avg_ranks.len(),
        });
    }
    let (nf, kf) = (n as f64, k as f64);
    let sum_sq: f64 = avg_ranks.iter().map(|r| r * r).sum();
    let chi2 = 12.0 * nf / (kf * (kf + 1.0)) * (sum_sq - kf * (kf + 1.0) * (kf + 1.0) / 4.0);
    let denom = nf * (kf - 1.0) - chi2;
    if denom == 0.0 {
        return Err(Error::InvalidArgument("Friedman F undefined: N(k-1) equals chi2".into()));
    }
    Ok((chi2, (nf - 1.0) * chi2 / denom))
}

/// `q_alpha * sqrt(k (k + 1) / (6 N))`.
pub fn bonferroni_dunn_cd(k: usize, n: usize, q_alpha: f64) -> f64 {
    q_alpha * ((k * (k + 1)) as f64 / (6.0 * n as f64)).sqrt()
}

/// Two-tailed Bonferroni-Dunn critical values for `k = 2..=10` classifiers.
const Q_BD_005: [f64; 9] = [1.960, 2.241, 2.394, 2.498, 2.576, 2.638, 2.690, 2.724, 2.773];
const Q_BD_010: [f64; 9] = [1.645, 1.960, 2.128, 2.241, 2.326, 2.394, 2.450, 2.498, 2.539];

pub fn bonferroni_dunn_q(k: usize, alpha: f64) -> Option<f64> {
    if !(2..=10).contains(&k) {
        return None;
    }
    if (alpha - 0.05).abs() < 1e-12 {
        Some(Q_BD_005[k - 2])
    } else if (alpha - 0.10).abs() < 1e-12 {
        Some(Q_BD_010[k - 2])
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankSummary {
    pub schema_version: u32,
    pub classifiers: Vec<String>,
    pub average_ranks: Vec<f64>,
    pub n: usize,
    pub k: usize,
    pub friedman_chi2: f64,
    pub friedman_f: f64,
    pub alpha: f64,
    pub q_alpha: f64,
    pub cd: f64,
    pub best: String,
    /// Average rank within `cd` of the best classifier's.
    pub within_cd_of_best: Vec<bool>,
    pub f_critical: Option<f64>,
    pub reject_null: Option<bool>,
}

/// Ranks, Friedman statistics and critical difference for a table. `q_alpha`
/// overrides the built-in table; `f_critical` enables the rejection decision.
pub fn rank_summary(
    table: &ScoreTable,
    alpha: f64,
    q_alpha: Option<f64>,
    f_critical: Option<f64>,
) -> Result<RankSummary> {
    let ranks = average_ranks(table)?;
    let (n, k) = (table.datasets.len(), table.classifiers.len());
    let (chi2, f) = friedman_test(&ranks, n, k)?;
    let q = match q_alpha {
        Some(q) => q,
        None => bonferroni_dunn_q(k, alpha).ok_or_else(|| {
            Error::InvalidArgument(format!("no built-in q value for k={k}, alpha={alpha}; supply one"))
        })?,
    };
    let cd = bonferroni_dunn_cd(k, n, q);
    let best_idx = (0..k)
        .min_by(|&a, &b| ranks[a].total_cmp(&ranks[b]))
        .unwrap_or(0);
    let best_rank = ranks[best_idx];
    Ok(RankSummary {
        schema_version: REPORT_SCHEMA_VERSION,
        classifiers: table.classifiers.clone(),
        within_cd_of_best: ranks.iter().map(|r| r - best_rank <= cd).collect(),
        average_ranks: ranks,
        n,
        k,
        friedman_chi2: chi2,
        friedman_f: f,
        alpha,
        q_alpha: q,
        cd,
        best: table.classifiers[best_idx].clone(),
        f_critical,
        reject_null: f_critical.map(|c| f > c),
    })
}
