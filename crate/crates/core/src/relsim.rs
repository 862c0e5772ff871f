//! Relational similarity between word pairs via difference vectors.
//!
//! For pairs A : B and C : D with r1 = v_B - v_A and r2 = v_D - v_C, two
//! metrics are supported: cosine of the difference vectors, and
//! `1 - ||r1 - r2||`. The Euclidean form is length-sensitive and is
//! reported unclipped (it can go negative); vectors are used raw unless
//! the caller pre-normalizes the space.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::embedding::{EmbeddingError, EmbeddingSpace};
use crate::vector::{self, VectorError};

#[derive(Debug, Error)]
pub enum RelSimError {
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Vector(#[from] VectorError),
    #[error("pair {0} has identical word vectors; cosine of a zero difference is undefined")]
    ZeroDifference(String),
}

/// An ordered word pair; the relation reads `first : second`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct WordPair {
    pub first: String,
    pub second: String,
}

impl WordPair {
    pub fn new(first: &str, second: &str) -> Self {
        Self {
            first: first.to_owned(),
            second: second.to_owned(),
        }
    }

    pub fn label(&self) -> String {
        format!("{}:{}", self.first, self.second)
    }
}

impl std::fmt::Display for WordPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.first, self.second)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Metric {
    /// r1·r2 / (||r1|| ||r2||), in [-1, 1].
    CosineOfDifferences,
    /// 1 - ||r1 - r2||, unbounded below.
    EuclideanOfDifferences,
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::CosineOfDifferences => "cosine",
            Metric::EuclideanOfDifferences => "euclidean",
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cosine" => Ok(Metric::CosineOfDifferences),
            "euclidean" => Ok(Metric::EuclideanOfDifferences),
            other => Err(format!("unknown metric {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelSimScore {
    pub metric: Metric,
    pub value: f64,
    pub pair_left: WordPair,
    pub pair_right: WordPair,
}

fn difference_vector(space: &EmbeddingSpace, pair: &WordPair) -> Result<Vec<f64>, RelSimError> {
    let first = space.vector(&pair.first, false)?;
    let second = space.vector(&pair.second, false)?;
    Ok(vector::difference(&second, &first)?)
}

pub fn relsim_cosine(
    space: &EmbeddingSpace,
    p: &WordPair,
    q: &WordPair,
) -> Result<RelSimScore, RelSimError> {
    let r1 = difference_vector(space, p)?;
    let r2 = difference_vector(space, q)?;
    if vector::is_zero(&r1) {
        return Err(RelSimError::ZeroDifference(p.label()));
    }
    if vector::is_zero(&r2) {
        return Err(RelSimError::ZeroDifference(q.label()));
    }
    Ok(RelSimScore {
        metric: Metric::CosineOfDifferences,
        value: vector::cosine(&r1, &r2)?,
        pair_left: p.clone(),
        pair_right: q.clone(),
    })
}

pub fn relsim_euclidean(
    space: &EmbeddingSpace,
    p: &WordPair,
    q: &WordPair,
) -> Result<RelSimScore, RelSimError> {
    let r1 = difference_vector(space, p)?;
    let r2 = difference_vector(space, q)?;
    Ok(RelSimScore {
        metric: Metric::EuclideanOfDifferences,
        value: 1.0 - vector::euclidean_distance(&r1, &r2)?,
        pair_left: p.clone(),
        pair_right: q.clone(),
    })
}

pub fn relsim(
    space: &EmbeddingSpace,
    p: &WordPair,
    q: &WordPair,
    metric: Metric,
) -> Result<RelSimScore, RelSimError> {
    match metric {
        Metric::CosineOfDifferences => relsim_cosine(space, p, q),
        Metric::EuclideanOfDifferences => relsim_euclidean(space, p, q),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MissingPolicy {
    Error,
    SkipAndReport,
}

impl std::str::FromStr for MissingPolicy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "error" => Ok(MissingPolicy::Error),
            "skip" => Ok(MissingPolicy::SkipAndReport),
            other => Err(format!("unknown missing policy {other:?}")),
        }
    }
}

/// One batch output line: a score, or a record of why the comparison was
/// skipped.
#[derive(Debug, Clone)]
pub enum BatchOutcome {
    Scored(RelSimScore),
    Skipped { reason: String },
}

/// Score a batch of `(id, left, right)` comparisons. Output is
/// order-preserving with exactly one outcome per input. Parallel over
/// comparisons; the collected order does not depend on thread count.
pub fn batch_relsim(
    space: &EmbeddingSpace,
    comparisons: &[(String, WordPair, WordPair)],
    metric: Metric,
    missing_policy: MissingPolicy,
) -> Result<Vec<(String, BatchOutcome)>, RelSimError> {
    let results: Vec<(String, Result<RelSimScore, RelSimError>)> = comparisons
        .par_iter()
        .map(|(id, p, q)| (id.clone(), relsim(space, p, q, metric)))
        .collect();
    let mut out = Vec::with_capacity(results.len());
    for (id, res) in results {
        match res {
            Ok(score) => out.push((id, BatchOutcome::Scored(score))),
            Err(e) => match missing_policy {
                MissingPolicy::Error => return Err(e),
                MissingPolicy::SkipAndReport => out.push((
                    id,
                    BatchOutcome::Skipped {
                        reason: e.to_string(),
                    },
                )),
            },
        }
    }
    Ok(out)
}
