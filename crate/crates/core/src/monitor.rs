//! Monitoring applications built on TU: OOD detection, the max-softmax
//! confidence baseline, trained-network selection and shift monitoring.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::compensated_sum;
use crate::model::NetworkModel;
use crate::profile::{Scorer, TopologicalProfile};

pub const DEFAULT_QUANTILE: f64 = 0.95;
const TARGET_TPR: f64 = 0.95;

/// Which side of the threshold counts as out-of-distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// High scores are suspicious (TU).
    FlagAbove,
    /// Low scores are suspicious (confidence).
    FlagBelow,
}

impl Direction {
    /// Maps scores so that larger always means "more suspicious".
    fn orient(self, score: f64) -> f64 {
        match self {
            Direction::FlagAbove => score,
            Direction::FlagBelow => -score,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectorConfig {
    pub quantile: f64,
    pub direction: Direction,
}

impl DetectorConfig {
    pub fn new(quantile: f64, direction: Direction) -> Result<Self> {
        check_quantile(quantile)?;
        Ok(DetectorConfig {
            quantile,
            direction,
        })
    }
}

fn check_quantile(q: f64) -> Result<()> {
    if q > 0.0 && q <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("quantile {q} outside (0, 1]")))
    }
}

/// Nearest-rank quantile: element `ceil(q n) - 1` of the ascending order.
pub fn nearest_rank(scores: &[f64], q: f64) -> Result<f64> {
    check_quantile(q)?;
    if scores.is_empty() {
        return Err(Error::Empty("score list"));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    Ok(sorted[rank - 1])
}

/// Threshold at the `q`-th nearest-rank quantile of training scores.
pub fn calibrate_threshold(train_scores: &[f64], q: f64) -> Result<f64> {
    nearest_rank(train_scores, q)
}

/// `true` when the score is flagged as OOD. Ties are never flagged.
pub fn detect(score: f64, threshold: f64, direction: Direction) -> bool {
    match direction {
        Direction::FlagAbove => score > threshold,
        Direction::FlagBelow => score < threshold,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionReport {
    pub direction: Direction,
    /// Threshold of the 95%-TPR operating point, usable with [`detect`].
    pub threshold: f64,
    pub fpr_at_95_tpr: f64,
    pub auroc: f64,
    pub in_scores: Vec<f64>,
    pub out_scores: Vec<f64>,
}

/// Probability that a random OOD score lands on the flagged side of a random
/// in-distribution score, ties counting one half (Mann-Whitney U / n m).
pub fn auroc(in_scores: &[f64], out_scores: &[f64], direction: Direction) -> Result<f64> {
    if in_scores.is_empty() || out_scores.is_empty() {
        return Err(Error::Empty("score list"));
    }
    let mut pooled: Vec<(f64, bool)> = in_scores
        .iter()
        .map(|&s| (direction.orient(s), false))
        .chain(out_scores.iter().map(|&s| (direction.orient(s), true)))
        .collect();
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Average 1-based ranks over tie groups; ranks are kept doubled to stay integral.
    let mut out_rank_sum2: u128 = 0;
    let mut start = 0;
    while start < pooled.len() {
        let mut end = start;
        while end + 1 < pooled.len() && pooled[end + 1].0 == pooled[start].0 {
            end += 1;
        }
        let doubled_rank = (start + 1 + end + 1) as u128;
        let outs = pooled[start..=end].iter().filter(|p| p.1).count() as u128;
        out_rank_sum2 += doubled_rank * outs;
        start = end + 1;
    }
    let (n, m) = (in_scores.len() as u128, out_scores.len() as u128);
    // U_out = R_out - m(m+1)/2, everything doubled.
    let u2 = out_rank_sum2 - m * (m + 1);
    Ok(u2 as f64 / (2 * n * m) as f64)
}

fn next_down(x: f64) -> f64 {
    x.next_down()
}

/// AUROC and FPR at 95% TPR for in-distribution vs OOD scores.
///
/// The operating point is the loosest threshold that still flags at least 95%
/// of the OOD scores; the FPR is the fraction of in-distribution scores it
/// flags.
pub fn roc_metrics(in_scores: &[f64], out_scores: &[f64], direction: Direction) -> Result<DetectionReport> {
    let auroc = auroc(in_scores, out_scores, direction)?;
    let mut oriented: Vec<f64> = out_scores.iter().map(|&s| direction.orient(s)).collect();
    oriented.sort_by(f64::total_cmp);
    let m = oriented.len();
    let must_flag = ((TARGET_TPR * m as f64) - 1e-9).ceil() as usize;
    let may_miss = m - must_flag.min(m);
    // Flag everything at or beyond the (may_miss + 1)-th smallest oriented score.
    let cut = oriented[may_miss];
    let oriented_threshold = next_down(cut);
    let threshold = direction.orient(oriented_threshold);
    let flagged_in = in_scores
        .iter()
        .filter(|&&s| detect(s, threshold, direction))
        .count();
    Ok(DetectionReport {
        direction,
        threshold,
        fpr_at_95_tpr: flagged_in as f64 / in_scores.len() as f64,
        auroc,
        in_scores: in_scores.to_vec(),
        out_scores: out_scores.to_vec(),
    })
}

/// Max-softmax confidence per sample, in input order.
pub fn confidence_scores(net: &NetworkModel, batch: &[Vec<f64>]) -> Result<Vec<f64>> {
    batch
        .par_iter()
        .enumerate()
        .map(|(i, x)| net.predict(x).map(|p| p.1).map_err(|e| Error::at_sample(i, e)))
        .collect()
}

/// Order-independent mean.
fn mean_of(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    compensated_sum(sorted) / values.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelScore {
    pub model: usize,
    pub name: String,
    /// Mean TU over the scorable part of the batch; `None` if nothing was scorable.
    pub mean_score: Option<f64>,
    pub mean_confidence: Option<f64>,
    pub accuracy: Option<f64>,
    pub scored: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionResult {
    pub models: Vec<ModelScore>,
    /// Model indices by ascending mean score (preferred first).
    pub ranking: Vec<usize>,
    /// Mean accuracy of the 5 lowest-score models minus that of the 5 highest.
    pub gap_metric: Option<f64>,
}

pub struct Candidate<'a> {
    pub name: String,
    pub net: &'a NetworkModel,
    pub profile: &'a TopologicalProfile,
    pub accuracy: Option<f64>,
}

const GAP_GROUP: usize = 5;
const GAP_MIN_MODELS: usize = 10;

/// Ranks candidate networks by mean TU on an unlabeled batch.
///
/// Samples whose predicted class is not covered by a model's profile are
/// skipped for that model and counted.
pub fn selection_score(candidates: &[Candidate<'_>], batch: &[Vec<f64>]) -> Result<SelectionResult> {
    if candidates.is_empty() {
        return Err(Error::Empty("model list"));
    }
    let models = candidates
        .par_iter()
        .enumerate()
        .map(|(idx, c)| {
            let scorer = Scorer::new(c.profile, c.net)?;
            let mut tus = Vec::with_capacity(batch.len());
            let mut confs = Vec::with_capacity(batch.len());
            let mut skipped = 0;
            for (i, x) in batch.iter().enumerate() {
                match scorer.score(x) {
                    Ok(r) => {
                        tus.push(r.tu);
                        confs.push(r.confidence);
                    }
                    Err(Error::UncoveredClass(_)) => skipped += 1,
                    Err(e) => return Err(Error::at_sample(i, e)),
                }
            }
            Ok(ModelScore {
                model: idx,
                name: c.name.clone(),
                mean_score: (!tus.is_empty()).then(|| mean_of(&tus)),
                mean_confidence: (!confs.is_empty()).then(|| mean_of(&confs)),
                accuracy: c.accuracy,
                scored: tus.len(),
                skipped,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut ranking: Vec<usize> = (0..models.len()).collect();
    ranking.sort_by(|&a, &b| {
        let key = |i: usize| models[i].mean_score.unwrap_or(f64::INFINITY);
        key(a).total_cmp(&key(b)).then(a.cmp(&b))
    });

    let gap_metric = if models.len() >= GAP_MIN_MODELS && models.iter().all(|m| m.accuracy.is_some()) {
        let acc = |idx: &[usize]| idx.iter().map(|&i| models[i].accuracy.unwrap()).sum::<f64>() / idx.len() as f64;
        Some(acc(&ranking[..GAP_GROUP]) - acc(&ranking[ranking.len() - GAP_GROUP..]))
    } else {
        None
    };
    Ok(SelectionResult {
        models,
        ranking,
        gap_metric,
    })
}

/// One batch at a given shift level; `labels` enables the accuracy column.
pub struct ShiftLevel<'a> {
    pub level: f64,
    pub batch: &'a [Vec<f64>],
    pub labels: Option<&'a [usize]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftSummary {
    pub level: f64,
    pub mean_tu: f64,
    pub q10: f64,
    pub q90: f64,
    pub mean_confidence: f64,
    pub accuracy: Option<f64>,
}

pub fn shift_monitor(
    profile: &TopologicalProfile,
    net: &NetworkModel,
    levels: &[ShiftLevel<'_>],
) -> Result<Vec<ShiftSummary>> {
    let scorer = Scorer::new(profile, net)?;
    levels
        .iter()
        .map(|lvl| {
            if lvl.batch.is_empty() {
                return Err(Error::Empty("shift batch"));
            }
            let reports = scorer.score_batch(lvl.batch)?;
            let tus: Vec<f64> = reports.iter().map(|r| r.tu).collect();
            let confs: Vec<f64> = reports.iter().map(|r| r.confidence).collect();
            let accuracy = match lvl.labels {
                Some(labels) if labels.len() == reports.len() => Some(
                    reports
                        .iter()
                        .zip(labels)
                        .filter(|(r, &y)| r.predicted == y)
                        .count() as f64
                        / reports.len() as f64,
                ),
                Some(labels) => {
                    return Err(Error::InvalidArgument(format!(
                        "{} labels for a batch of {}",
                        labels.len(),
                        reports.len()
                    )))
                }
                None => None,
            };
            Ok(ShiftSummary {
                level: lvl.level,
                mean_tu: mean_of(&tus),
                q10: nearest_rank(&tus, 0.1)?,
                q90: nearest_rank(&tus, 0.9)?,
                mean_confidence: mean_of(&confs),
                accuracy,
            })
        })
        .collect()
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::InvalidArgument(
            "spearman needs two equal-length series of at least 2 values".into(),
        ));
    }
    let ranks = |v: &[f64]| -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
        let mut r = vec![0.0; v.len()];
        let mut s = 0;
        while s < idx.len() {
            let mut e = s;
            while e + 1 < idx.len() && v[idx[e + 1]] == v[idx[s]] {
                e += 1;
            }
            let avg = (s + e) as f64 / 2.0 + 1.0;
            for &k in &idx[s..=e] {
                r[k] = avg;
            }
            s = e + 1;
        }
        r
    };
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    if va == 0.0 || vb == 0.0 {
        return Ok(0.0);
    }
    Ok(cov / (va * vb).sqrt())
}
