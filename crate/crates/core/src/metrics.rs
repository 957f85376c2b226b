//! Distances and averages between persistence diagrams of equal cardinality.
//!
//! Diagram points live on the real line and both sides have the same number
//! of points, so the optimal partial matching pairs points in sorted order and
//! never uses the diagonal. [`matching_distance_oracle`] solves the general
//! partial matching problem by enumeration to check that claim.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::{sort_descending, PersistenceDiagram};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceKind {
    /// `sqrt(mean |a_i - b_i|^2)`.
    #[default]
    Dist2,
    /// `mean |a_i - b_i|`, i.e. the 1-Wasserstein matching cost over N.
    D1Normalized,
    /// `max |a_i - b_i|`.
    DInf,
}

/// Neumaier-compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn sorted_copy(d: &PersistenceDiagram) -> Vec<f64> {
    let mut w = d.weights().to_vec();
    sort_descending(&mut w);
    w
}

pub fn diagram_distance(
    a: &PersistenceDiagram,
    b: &PersistenceDiagram,
    kind: DistanceKind,
) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::CardinalityMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(Error::EmptyDiagram);
    }
    let (a, b) = (sorted_copy(a), sorted_copy(b));
    let n = a.len() as f64;
    let gaps = a.iter().zip(&b).map(|(x, y)| (x - y).abs());
    Ok(match kind {
        DistanceKind::Dist2 => (compensated_sum(gaps.map(|g| g * g)) / n).sqrt(),
        DistanceKind::D1Normalized => compensated_sum(gaps) / n,
        DistanceKind::DInf => gaps.fold(0.0, f64::max),
    })
}

/// Per-rank arithmetic mean. Each rank is summed in sorted order, so the
/// result does not depend on the order of `diagrams`.
pub fn frechet_mean(diagrams: &[PersistenceDiagram]) -> Result<PersistenceDiagram> {
    let first = diagrams.first().ok_or(Error::Empty("diagram list"))?;
    let n = first.len();
    if let Some(bad) = diagrams.iter().find(|d| d.len() != n) {
        return Err(Error::CardinalityMismatch(n, bad.len()));
    }
    let sorted: Vec<Vec<f64>> = diagrams.iter().map(sorted_copy).collect();
    let m = diagrams.len() as f64;
    let mut column = Vec::with_capacity(diagrams.len());
    let mean = (0..n)
        .map(|rank| {
            column.clear();
            column.extend(sorted.iter().map(|d| d[rank]));
            column.sort_by(f64::total_cmp);
            compensated_sum(column.iter().copied()) / m
        })
        .collect();
    Ok(PersistenceDiagram::new(mean))
}

/// Normalized distance to the empty diagram: `mean(a_i)`.
pub fn total_persistence(a: &PersistenceDiagram) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::EmptyDiagram);
    }
    Ok(compensated_sum(a.weights().iter().copied()) / a.len() as f64)
}

pub const ORACLE_LIMIT: usize = 8;

/// Exact optimal partial-matching cost `sum |x - y|^p + sum_unmatched t^p`,
/// unnormalized and without the final `1/p` root.
///
/// A weight `t` stands for the diagram point `(+inf, t)` seen through the
/// `L1` ground metric as a point at distance `t` from the diagonal, so sending
/// it to the diagonal costs `t^p`. Enumerates every partial injection; only
/// meant for verification on tiny diagrams.
pub fn matching_distance_oracle(a: &PersistenceDiagram, b: &PersistenceDiagram, p: u32) -> Result<f64> {
    if !(p == 1 || p == 2) {
        return Err(Error::InvalidArgument(format!("oracle supports p in {{1, 2}}, got {p}")));
    }
    for d in [a, b] {
        if d.len() > ORACLE_LIMIT {
            return Err(Error::OracleTooLarge {
                limit: ORACLE_LIMIT,
                found: d.len(),
            });
        }
    }
    let cost = |x: f64| x.abs().powi(p as i32);
    let mut used = vec![false; b.len()];
    let mut best = f64::INFINITY;
    fn search(
        i: usize,
        acc: f64,
        a: &[f64],
        b: &[f64],
        used: &mut [bool],
        cost: &dyn Fn(f64) -> f64,
        best: &mut f64,
    ) {
        if acc >= *best {
            return;
        }
        if i == a.len() {
            let rest: f64 = b
                .iter()
                .zip(used.iter())
                .filter(|(_, u)| !**u)
                .map(|(y, _)| cost(*y))
                .sum();
            *best = best.min(acc + rest);
            return;
        }
        search(i + 1, acc + cost(a[i]), a, b, used, cost, best);
        for j in 0..b.len() {
            if !used[j] {
                used[j] = true;
                search(i + 1, acc + cost(a[i] - b[j]), a, b, used, cost, best);
                used[j] = false;
            }
        }
    }
    search(0, 0.0, a.weights(), b.weights(), &mut used, &cost, &mut best);
    Ok(best)
}
