//! Sequential model-based search (tree-structured Parzen estimator).
//!
//! Trial 0 evaluates the anchor point when one is set. The next
//! `n_startup` trials are uniform draws (evaluated as one parallel batch);
//! after that each trial splits the history into the best `gamma` fraction
//! ("good") and the rest ("bad"), fits one Parzen density per side and per
//! parameter in unit coordinates, draws `n_candidates` points from the good
//! density and evaluates the one maximizing `l(x) / g(x)`.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ParamSpec {
    Continuous { name: String, low: f64, high: f64, scale: Scale },
    Choice { name: String, values: Vec<f64> },
}

impl ParamSpec {
    pub fn continuous(name: &str, low: f64, high: f64, scale: Scale) -> Self {
        ParamSpec::Continuous {
            name: name.into(),
            low,
            high,
            scale,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            ParamSpec::Continuous { name, .. } | ParamSpec::Choice { name, .. } => name,
        }
    }

    /// Number of distinct values, `None` for a continuous interval.
    fn cardinality(&self) -> Option<usize> {
        match self {
            ParamSpec::Continuous { low, high, .. } if low == high => Some(1),
            ParamSpec::Continuous { .. } => None,
            ParamSpec::Choice { values, .. } => Some(values.len()),
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(format!("parameter {:?}: {msg}", self.name())));
        match self {
            ParamSpec::Continuous { low, high, scale, .. } => {
                if !(low.is_finite() && high.is_finite() && low <= high) {
                    return bad(format!("empty range [{low}, {high}]"));
                }
                if *scale == Scale::Log && *low <= 0.0 {
                    return bad("log scale needs a positive lower bound".into());
                }
            }
            ParamSpec::Choice { values, .. } => {
                if values.is_empty() {
                    return bad("no choices".into());
                }
            }
        }
        Ok(())
    }

    fn contains(&self, v: f64) -> bool {
        match self {
            ParamSpec::Continuous { low, high, .. } => *low <= v && v <= *high,
            ParamSpec::Choice { values, .. } => values.contains(&v),
        }
    }

    /// Unit-interval coordinate of a continuous value.
    fn to_unit(&self, v: f64) -> f64 {
        match self {
            ParamSpec::Continuous { low, high, scale, .. } => {
                if low == high {
                    return 0.5;
                }
                match scale {
                    Scale::Linear => (v - low) / (high - low),
                    Scale::Log => (v.ln() - low.ln()) / (high.ln() - low.ln()),
                }
            }
            ParamSpec::Choice { .. } => unreachable!("choices have no unit coordinate"),
        }
    }

    fn value_at(&self, u: f64) -> f64 {
        match self {
            ParamSpec::Continuous { low, high, scale, .. } => {
                let u = u.clamp(0.0, 1.0);
                let v = match scale {
                    Scale::Linear => low + u * (high - low),
                    Scale::Log => (low.ln() + u * (high.ln() - low.ln())).exp(),
                };
                v.clamp(*low, *high)
            }
            ParamSpec::Choice { .. } => unreachable!("choices have no unit coordinate"),
        }
    }
}

/// Parameters, budget and strategy constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub params: Vec<ParamSpec>,
    pub budget: usize,
    pub seed: u64,
    /// Evaluated first, when set.
    pub anchor: Option<Vec<f64>>,
    pub n_startup: usize,
    pub gamma: f64,
    pub n_candidates: usize,
}

impl SearchSpace {
    pub fn new(params: Vec<ParamSpec>, budget: usize, seed: u64) -> Self {
        Self {
            params,
            budget,
            seed,
            anchor: None,
            n_startup: 10,
            gamma: 0.25,
            n_candidates: 24,
        }
    }

    /// `(h_pos, h_neg)` on a log scale, anchored at the fixed-threshold point
    /// `(1, 1)` when it lies inside the bounds.
    pub fn class_multipliers(low: f64, high: f64, budget: usize, seed: u64) -> Self {
        let mut space = Self::new(
            vec![
                ParamSpec::continuous("h_pos", low, high, Scale::Log),
                ParamSpec::continuous("h_neg", low, high, Scale::Log),
            ],
            budget,
            seed,
        );
        if low <= 1.0 && 1.0 <= high {
            space.anchor = Some(vec![1.0, 1.0]);
        }
        space
    }

    /// Total number of distinct points, `None` if any parameter is continuous.
    pub fn cardinality(&self) -> Option<usize> {
        self.params
            .iter()
            .try_fold(1usize, |acc, p| p.cardinality().map(|c| acc.saturating_mul(c)))
    }

    fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::InvalidArgument("trial budget must be >= 1".into()));
        }
        if self.params.is_empty() {
            return Err(Error::InvalidArgument("search space has no parameters".into()));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) || self.n_candidates == 0 {
            return Err(Error::InvalidArgument("gamma must be in (0, 1) and n_candidates >= 1".into()));
        }
        for p in &self.params {
            p.validate()?;
        }
        if let Some(a) = &self.anchor {
            if a.len() != self.params.len() || !self.params.iter().zip(a).all(|(p, &v)| p.contains(v)) {
                return Err(Error::InvalidArgument(format!("anchor {a:?} lies outside the search space")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_index: usize,
    pub params: Vec<f64>,
    /// `None` marks an invalid trial, ranked below every valid one.
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub best: TrialRecord,
    pub history: Vec<TrialRecord>,
}

/// Orders trials best first: valid before invalid, higher score first,
/// earlier trial on ties.
fn rank_order(a: &TrialRecord, b: &TrialRecord) -> std::cmp::Ordering {
    match (a.score, b.score) {
        (Some(x), Some(y)) => y.total_cmp(&x).then(a.trial_index.cmp(&b.trial_index)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.trial_index.cmp(&b.trial_index),
    }
}

/// Maximizes `objective` over `space`. The objective returns `None` for an
/// invalid assignment.
pub fn tune<F>(objective: F, space: &SearchSpace) -> Result<TuneResult>
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    space.validate()?;
    let limit = space.cardinality().map_or(space.budget, |c| c.min(space.budget));
    let mut rng = ChaCha8Rng::seed_from_u64(space.seed);
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    let discrete = space.cardinality().is_some();
    let key = |p: &[f64]| p.iter().map(|v| v.to_bits()).collect::<Vec<u64>>();

    // Startup batch: anchor then uniform draws.
    let mut batch: Vec<Vec<f64>> = Vec::new();
    if let Some(a) = &space.anchor {
        seen.insert(key(a));
        batch.push(a.clone());
    }
    let startup = (batch.len() + space.n_startup).min(limit);
    let mut attempts = 0;
    while batch.len() < startup && attempts < 1000 * limit {
        attempts += 1;
        let p = random_point(&space.params, &mut rng);
        if discrete && !seen.insert(key(&p)) {
            continue;
        }
        batch.push(p);
    }
    let scores: Vec<Option<f64>> = batch.par_iter().map(|p| clean(objective(p))).collect();
    let mut history: Vec<TrialRecord> = batch
        .into_iter()
        .zip(scores)
        .enumerate()
        .map(|(trial_index, (params, score))| TrialRecord {
            trial_index,
            params,
            score,
        })
        .collect();

    while history.len() < limit {
        let proposal = propose(space, &history, &mut rng);
        let params = if discrete && seen.contains(&key(&proposal)) {
            match first_unseen(&space.params, &seen) {
                Some(p) => p,
                None => break,
            }
        } else {
            proposal
        };
        seen.insert(key(&params));
        let score = clean(objective(&params));
        history.push(TrialRecord {
            trial_index: history.len(),
            params,
            score,
        });
    }

    let best = history
        .iter()
        .filter(|t| t.score.is_some())
        .min_by(|a, b| rank_order(a, b))
        .cloned()
        .ok_or_else(|| Error::Tuning(format!("all {} trials were invalid", history.len())))?;
    Ok(TuneResult { best, history })
}

fn clean(score: Option<f64>) -> Option<f64> {
    score.filter(|s| s.is_finite())
}

fn random_point(params: &[ParamSpec], rng: &mut ChaCha8Rng) -> Vec<f64> {
    params
        .iter()
        .map(|p| match p {
            ParamSpec::Continuous { .. } => p.value_at(rng.random::<f64>()),
            ParamSpec::Choice { values, .. } => values[rng.random_range(0..values.len())],
        })
        .collect()
}

fn first_unseen(params: &[ParamSpec], seen: &HashSet<Vec<u64>>) -> Option<Vec<f64>> {
    let sizes: Vec<usize> = params.iter().map(|p| p.cardinality().unwrap_or(1)).collect();
    let total: usize = sizes.iter().product();
    (0..total).find_map(|mut code| {
        let point: Vec<f64> = params
            .iter()
            .zip(&sizes)
            .map(|(p, &s)| {
                let i = code % s;
                code /= s;
                match p {
                    ParamSpec::Continuous { low, .. } => *low,
                    ParamSpec::Choice { values, .. } => values[i],
                }
            })
            .collect();
        let k: Vec<u64> = point.iter().map(|v| v.to_bits()).collect();
        (!seen.contains(&k)).then_some(point)
    })
}

fn propose(space: &SearchSpace, history: &[TrialRecord], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let valid = history.iter().filter(|t| t.score.is_some()).count();
    if valid == 0 {
        return random_point(&space.params, rng);
    }
    let mut ordered: Vec<&TrialRecord> = history.iter().collect();
    ordered.sort_by(|a, b| rank_order(a, b));
    let n_good = ((space.gamma * valid as f64).ceil() as usize).clamp(1, valid);
    let (good, bad) = ordered.split_at(n_good);

    let estimators: Vec<(Density, Density)> = space
        .params
        .iter()
        .enumerate()
        .map(|(d, p)| {
            let column = |set: &[&TrialRecord]| set.iter().map(|t| t.params[d]).collect::<Vec<f64>>();
            (Density::fit(p, &column(good)), Density::fit(p, &column(bad)))
        })
        .collect();

    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..space.n_candidates {
        let cand: Vec<f64> = space
            .params
            .iter()
            .zip(&estimators)
            .map(|(p, (l, _))| l.sample(p, rng))
            .collect();
        let score: f64 = space
            .params
            .iter()
            .zip(&estimators)
            .zip(&cand)
            .map(|((p, (l, g)), &v)| l.log_pdf(p, v) - g.log_pdf(p, v))
            .sum();
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, cand));
        }
    }
    best.map(|(_, c)| c).unwrap_or_else(|| random_point(&space.params, rng))
}

/// One-dimensional Parzen estimator.
enum Density {
    /// Truncated-Gaussian mixture on [0, 1] in unit coordinates; the last
    /// component is a broad prior centred at 0.5.
    Mixture { mus: Vec<f64>, sigmas: Vec<f64> },
    /// Smoothed frequencies over the choices.
    Categorical { probs: Vec<f64> },
}

const PRIOR_SIGMA: f64 = 1.0;

impl Density {
    fn fit(spec: &ParamSpec, observed: &[f64]) -> Self {
        match spec {
            ParamSpec::Continuous { .. } => {
                let mut pts: Vec<f64> = observed.iter().map(|&v| spec.to_unit(v)).collect();
                pts.sort_by(f64::total_cmp);
                let n = pts.len();
                let min_sigma = 1.0 / (n as f64 + 1.0).min(100.0);
                let mut with_prior = pts.clone();
                with_prior.push(0.5);
                with_prior.sort_by(f64::total_cmp);
                let sigmas: Vec<f64> = pts
                    .iter()
                    .map(|&mu| {
                        let pos = with_prior.partition_point(|&v| v < mu);
                        let left = if pos > 0 { mu - with_prior[pos - 1] } else { mu };
                        let right = with_prior
                            .get(pos + 1)
                            .map_or(1.0 - mu, |&v| v - mu);
                        left.max(right).clamp(min_sigma, 1.0)
                    })
                    .chain(std::iter::once(PRIOR_SIGMA))
                    .collect();
                pts.push(0.5);
                Density::Mixture { mus: pts, sigmas }
            }
            ParamSpec::Choice { values, .. } => {
                let mut counts = vec![1.0; values.len()];
                for v in observed {
                    if let Some(i) = values.iter().position(|c| c == v) {
                        counts[i] += 1.0;
                    }
                }
                let total: f64 = counts.iter().sum();
                Density::Categorical {
                    probs: counts.into_iter().map(|c| c / total).collect(),
                }
            }
        }
    }

    fn sample(&self, spec: &ParamSpec, rng: &mut ChaCha8Rng) -> f64 {
        match (self, spec) {
            (Density::Mixture { mus, sigmas }, _) => {
                let k = rng.random_range(0..mus.len());
                let (mu, sigma) = (mus[k], sigmas[k]);
                let mut u = mu;
                for _ in 0..100 {
                    let z: f64 = rng.sample(rand_distr::StandardNormal);
                    u = mu + sigma * z;
                    if (0.0..=1.0).contains(&u) {
                        break;
                    }
                }
                spec.value_at(u.clamp(0.0, 1.0))
            }
            (Density::Categorical { probs }, ParamSpec::Choice { values, .. }) => {
                let mut r: f64 = rng.random();
                for (i, p) in probs.iter().enumerate() {
                    if r < *p {
                        return values[i];
                    }
                    r -= p;
                }
                values[values.len() - 1]
            }
            _ => unreachable!("density kind follows the parameter kind"),
        }
    }

    fn log_pdf(&self, spec: &ParamSpec, v: f64) -> f64 {
        match (self, spec) {
            (Density::Mixture { mus, sigmas }, _) => {
                let u = spec.to_unit(v);
                let total: f64 = mus
                    .iter()
                    .zip(sigmas)
                    .map(|(&mu, &s)| truncated_normal_pdf(u, mu, s))
                    .sum();
                (total / mus.len() as f64).max(f64::MIN_POSITIVE).ln()
            }
            (Density::Categorical { probs }, ParamSpec::Choice { values, .. }) => {
                values.iter().position(|c| *c == v).map_or(f64::NEG_INFINITY, |i| probs[i].ln())
            }
            _ => unreachable!("density kind follows the parameter kind"),
        }
    }
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
}

fn truncated_normal_pdf(u: f64, mu: f64, sigma: f64) -> f64 {
    let z = (u - mu) / sigma;
    let pdf = (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    let mass = normal_cdf((1.0 - mu) / sigma) - normal_cdf(-mu / sigma);
    pdf / mass.max(1e-300)
}
