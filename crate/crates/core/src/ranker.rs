//! Final premise selection.
//!
//! [`biased_coreset`] is the greedy min-max coverage selection with a
//! relevance bias: the first pick is the most relevant premise, and every
//! later pick maximises
//!
//! ```text
//! alpha * R[p] - (1 - alpha) * max_{a in A} psim(a, p)
//! ```
//!
//! over the remaining candidates. `alpha = 1` is a plain relevance sort and
//! `alpha = 0` is greedy k-center on the premise similarity.
//!
//! [`kmeans_ranker`] and [`top_k`] are the clustering and no-deduplication
//! baselines.

use std::collections::HashMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::relevance::{sort_by_relevance, ScoredPremise};
use crate::represent::{ReprKind, Representation, SimKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RankerConfig {
    pub k: usize,
    pub alpha: f64,
    pub tau: f64,
    pub representation: ReprKind,
    pub similarity: SimKind,
}

impl Default for RankerConfig {
    fn default() -> Self {
        RankerConfig {
            k: 10,
            alpha: 0.5,
            tau: 0.5,
            representation: ReprKind::ClaimSim,
            similarity: SimKind::Cos,
        }
    }
}

impl RankerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::invalid("k", "must be >= 1"));
        }
        check_unit("alpha", self.alpha)?;
        check_unit("tau", self.tau)
    }
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("{v} is outside [0, 1]")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedItem {
    pub premise_id: String,
    pub relevance: f64,
    /// Objective value at the time the item was picked.
    pub selection_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedResult {
    pub query_claim_id: String,
    pub items: Vec<RankedItem>,
    pub config: RankerConfig,
}

impl RankedResult {
    pub fn ids(&self) -> Vec<&str> {
        self.items.iter().map(|i| i.premise_id.as_str()).collect()
    }
}

/// Dense pairwise premise similarity over a fixed id list.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    ids: Vec<String>,
    pos: HashMap<String, usize>,
    data: Vec<f64>,
}

impl SimilarityMatrix {
    /// Evaluates `psim(a, b)` for every ordered pair; rows run in parallel.
    pub fn from_fn<F>(ids: Vec<String>, psim: F) -> Result<Self>
    where
        F: Fn(&str, &str) -> Result<f64> + Sync + Send,
    {
        let n = ids.len();
        let rows = par::try_map(&ids, |a| ids.iter().map(|b| psim(a, b)).collect::<Result<Vec<f64>>>())?;
        let mut pos = HashMap::with_capacity(n);
        for (i, id) in ids.iter().enumerate() {
            if pos.insert(id.clone(), i).is_some() {
                return Err(Error::DuplicateId {
                    kind: "premise",
                    id: id.clone(),
                });
            }
        }
        let data: Vec<f64> = rows.into_iter().flatten().collect();
        if let Some(x) = data.iter().find(|x| !x.is_finite()) {
            return Err(Error::invalid("premise similarity", format!("non-finite value {x}")));
        }
        Ok(SimilarityMatrix { ids, pos, data })
    }

    pub fn from_representation(ids: Vec<String>, repr: &Representation, kind: SimKind) -> Result<Self> {
        Self::from_fn(ids, |a, b| repr.similarity(a, b, kind))
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.pos.get(id).copied()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.ids.len() + j]
    }

    pub fn by_id(&self, a: &str, b: &str) -> Result<f64> {
        let i = self.index_of(a).ok_or_else(|| Error::MissingEmbedding(a.to_string()))?;
        let j = self.index_of(b).ok_or_else(|| Error::MissingEmbedding(b.to_string()))?;
        Ok(self.get(i, j))
    }
}

fn check_candidates(candidates: &[ScoredPremise]) -> Result<()> {
    if candidates.is_empty() {
        return Err(Error::Empty("candidate set"));
    }
    for c in candidates {
        if !(0.0..=1.0).contains(&c.relevance) {
            return Err(Error::invalid(
                format!("relevance of `{}`", c.id),
                format!("{} is outside [0, 1]", c.relevance),
            ));
        }
    }
    Ok(())
}

/// Greedy biased coreset selection. Output is in selection order.
///
/// Ties on the objective go to the higher relevance, then the smaller id.
pub fn biased_coreset(
    candidates: &[ScoredPremise],
    sims: &SimilarityMatrix,
    k: usize,
    alpha: f64,
) -> Result<Vec<RankedItem>> {
    check_candidates(candidates)?;
    check_unit("alpha", alpha)?;
    if k == 0 {
        return Err(Error::invalid("k", "must be >= 1"));
    }
    let col: Vec<usize> = candidates
        .iter()
        .map(|c| {
            sims.index_of(&c.id)
                .ok_or_else(|| Error::MissingEmbedding(c.id.clone()))
        })
        .collect::<Result<_>>()?;

    let n = candidates.len();
    let mut taken = vec![false; n];
    // max similarity of each candidate to the selection so far
    let mut coverage = vec![f64::NEG_INFINITY; n];
    let mut out = Vec::with_capacity(k.min(n));

    for step in 0..k.min(n) {
        let mut best: Option<(usize, f64)> = None;
        for (i, c) in candidates.iter().enumerate() {
            if taken[i] {
                continue;
            }
            let objective = if step == 0 {
                alpha * c.relevance
            } else {
                alpha * c.relevance - (1.0 - alpha) * coverage[i]
            };
            let better = match best {
                None => true,
                Some((b, bo)) => {
                    let cb = &candidates[b];
                    objective > bo
                        || (objective == bo
                            && (c.relevance > cb.relevance || (c.relevance == cb.relevance && c.id < cb.id)))
                }
            };
            if better {
                best = Some((i, objective));
            }
        }
        let (pick, objective) = best.expect("at least one candidate remains");
        taken[pick] = true;
        for j in 0..n {
            if !taken[j] {
                coverage[j] = coverage[j].max(sims.get(col[pick], col[j]));
            }
        }
        out.push(RankedItem {
            premise_id: candidates[pick].id.clone(),
            relevance: candidates[pick].relevance,
            selection_score: objective,
        });
    }
    Ok(out)
}

/// The `k` most relevant candidates, ties by ascending id.
pub fn top_k(candidates: &[ScoredPremise], k: usize) -> Vec<RankedItem> {
    let mut sorted = candidates.to_vec();
    sort_by_relevance(&mut sorted);
    sorted
        .into_iter()
        .take(k)
        .map(|c| RankedItem {
            selection_score: c.relevance,
            premise_id: c.id,
            relevance: c.relevance,
        })
        .collect()
}

/// Q(p, A): how well `premise` is represented by the selection.
pub fn coverage_q_by<F>(premise: &str, selected: &[&str], psim: F) -> Result<f64>
where
    F: Fn(&str, &str) -> Result<f64>,
{
    if selected.is_empty() {
        return Err(Error::Empty("selection"));
    }
    let mut best = f64::NEG_INFINITY;
    for a in selected {
        best = best.max(psim(premise, a)?);
    }
    Ok(best)
}

/// Q̄(A): the worst coverage of any pool premise.
pub fn coverage_qbar_by<F>(selected: &[&str], pool: &[&str], psim: F) -> Result<f64>
where
    F: Fn(&str, &str) -> Result<f64>,
{
    if pool.is_empty() {
        return Err(Error::Empty("pool"));
    }
    let mut worst = f64::INFINITY;
    for p in pool {
        worst = worst.min(coverage_q_by(p, selected, &psim)?);
    }
    Ok(worst)
}

pub fn coverage_q(premise: &str, selected: &[&str], repr: &Representation, kind: SimKind) -> Result<f64> {
    coverage_q_by(premise, selected, |a, b| repr.similarity(a, b, kind))
}

pub fn coverage_qbar(selected: &[&str], pool: &[&str], repr: &Representation, kind: SimKind) -> Result<f64> {
    coverage_qbar_by(selected, pool, |a, b| repr.similarity(a, b, kind))
}

/// Which cluster member the k-means baseline returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Representative {
    /// Member closest to the cluster centroid.
    #[default]
    Centroid,
    MostRelevant,
}

const KMEANS_MAX_ITER: usize = 100;

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Cluster assignment from Lloyd's algorithm with k-means++ seeding.
/// Returns one cluster label per point; fewer than `k` clusters are used when
/// the points do not have `k` distinct positions.
pub fn kmeans(points: &[&[f64]], k: usize, seed: u64) -> (Vec<usize>, Vec<Vec<f64>>) {
    let n = points.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers: Vec<Vec<f64>> = vec![points[rng.gen_range(0..n)].to_vec()];
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &centers[0])).collect();
    while centers.len() < k.min(n) {
        let total: f64 = d2.iter().sum();
        if total <= 0.0 {
            break;
        }
        let mut target = rng.gen::<f64>() * total;
        let mut pick = n - 1;
        for (i, &d) in d2.iter().enumerate() {
            if d > 0.0 && target < d {
                pick = i;
                break;
            }
            target -= d;
        }
        if d2[pick] == 0.0 {
            // rounding ran past the end; take the last point with mass
            pick = d2.iter().rposition(|&d| d > 0.0).expect("total > 0");
        }
        centers.push(points[pick].to_vec());
        let c = centers.last().expect("just pushed");
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(dist2(p, c));
        }
    }

    let nearest = |p: &[f64], centers: &[Vec<f64>]| {
        let mut best = (0, f64::INFINITY);
        for (j, c) in centers.iter().enumerate() {
            let d = dist2(p, c);
            if d < best.1 {
                best = (j, d);
            }
        }
        best.0
    };

    let mut labels: Vec<usize> = par::map(points, |p| nearest(p, &centers));
    for _ in 0..KMEANS_MAX_ITER {
        let dim = points[0].len();
        let mut sums = vec![vec![0.0; dim]; centers.len()];
        let mut counts = vec![0usize; centers.len()];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for (s, x) in sums[l].iter_mut().zip(p.iter()) {
                *s += x;
            }
        }
        for (j, c) in centers.iter_mut().enumerate() {
            if counts[j] > 0 {
                *c = sums[j].iter().map(|s| s / counts[j] as f64).collect();
            }
        }
        let next: Vec<usize> = par::map(points, |p| nearest(p, &centers));
        if next == labels {
            break;
        }
        labels = next;
    }
    (labels, centers)
}

/// k-means baseline: cluster the candidates' vectors, keep one premise per
/// non-empty cluster, and order the picks by relevance.
pub fn kmeans_ranker(
    candidates: &[ScoredPremise],
    repr: &Representation,
    k: usize,
    seed: u64,
    representative: Representative,
) -> Result<Vec<RankedItem>> {
    check_candidates(candidates)?;
    if k == 0 {
        return Err(Error::invalid("k", "must be >= 1"));
    }
    let mut sorted = candidates.to_vec();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    let points: Vec<&[f64]> = sorted.iter().map(|c| repr.vector(&c.id)).collect::<Result<_>>()?;
    let dim = points[0].len();
    if let Some(p) = points.iter().find(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch {
            left: dim,
            right: p.len(),
        });
    }

    let (labels, centers) = kmeans(&points, k, seed);
    let mut best: Vec<Option<(usize, f64)>> = vec![None; centers.len()];
    for (i, &l) in labels.iter().enumerate() {
        let c = &sorted[i];
        let key = match representative {
            Representative::Centroid => -dist2(points[i], &centers[l]),
            Representative::MostRelevant => c.relevance,
        };
        let replace = match best[l] {
            None => true,
            Some((b, bk)) => {
                key > bk || (key == bk && c.relevance > sorted[b].relevance)
                // equal keys and relevance keep the earlier (smaller) id
            }
        };
        if replace {
            best[l] = Some((i, key));
        }
    }
    let picked: Vec<ScoredPremise> = best.into_iter().flatten().map(|(i, _)| sorted[i].clone()).collect();
    Ok(top_k(&picked, k))
}
