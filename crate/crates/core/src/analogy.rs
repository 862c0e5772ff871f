//! Parallelogram analogy completion: solve A : B :: C : ? by ranking the
//! vocabulary by cosine similarity to `v_b - v_a + v_c`.

use std::collections::HashMap;

use thiserror::Error;

use crate::embedding::{EmbeddingError, EmbeddingSpace};
use crate::vector::{self, Neighbor, VectorError};

#[derive(Debug, Error)]
pub enum AnalogyError {
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Vector(#[from] VectorError),
    #[error("candidate {0} is excluded by the query's input-exclusion rule")]
    ExcludedCandidate(String),
}

#[derive(Debug, Clone)]
pub struct AnalogyQuery {
    pub a: String,
    pub b: String,
    pub c: String,
    pub k: usize,
    /// Drop a, b, c from the candidate ranking. Defaults to on: the target
    /// vector is typically nearest to b or c themselves.
    pub exclude_inputs: bool,
    pub fold_case: bool,
}

impl AnalogyQuery {
    pub fn new(a: &str, b: &str, c: &str, k: usize) -> Self {
        Self {
            a: a.to_owned(),
            b: b.to_owned(),
            c: c.to_owned(),
            k,
            exclude_inputs: true,
            fold_case: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AnalogyResult {
    /// `v_b - v_a + v_c`.
    pub target_vector: Vec<f64>,
    pub candidates: Vec<Neighbor>,
    /// 1-based rank by token, for the tokens present in `candidates`.
    pub rank_of: HashMap<String, usize>,
}

fn target_and_rows(
    space: &EmbeddingSpace,
    query: &AnalogyQuery,
) -> Result<(Vec<f64>, [usize; 3]), AnalogyError> {
    let ra = space.lookup(&query.a, query.fold_case)?;
    let rb = space.lookup(&query.b, query.fold_case)?;
    let rc = space.lookup(&query.c, query.fold_case)?;
    let diff = vector::difference(&space.row_f64(rb), &space.row_f64(ra))?;
    let target = vector::add(&diff, &space.row_f64(rc))?;
    Ok((target, [ra, rb, rc]))
}

pub fn complete_parallelogram(
    space: &EmbeddingSpace,
    query: &AnalogyQuery,
) -> Result<AnalogyResult, AnalogyError> {
    let (target, rows) = target_and_rows(space, query)?;
    let exclude = |r: usize| query.exclude_inputs && rows.contains(&r);
    let candidates = vector::top_k_by_cosine(space, &target, query.k, &exclude)?;
    let rank_of = candidates
        .iter()
        .enumerate()
        .map(|(i, n)| (n.token.clone(), i + 1))
        .collect();
    Ok(AnalogyResult {
        target_vector: target,
        candidates,
        rank_of,
    })
}

/// 1-based rank of `d_token` in the full ranking under the query's
/// exclusion rule.
pub fn rank_of_candidate(
    space: &EmbeddingSpace,
    query: &AnalogyQuery,
    d_token: &str,
) -> Result<usize, AnalogyError> {
    let d_row = space.lookup(d_token, query.fold_case)?;
    let (target, rows) = target_and_rows(space, query)?;
    if query.exclude_inputs && rows.contains(&d_row) {
        return Err(AnalogyError::ExcludedCandidate(d_token.to_owned()));
    }
    let exclude = |r: usize| query.exclude_inputs && rows.contains(&r);
    let full = vector::top_k_by_cosine(space, &target, space.len(), &exclude)?;
    let d_name = space.token_string(d_row);
    full.iter()
        .position(|n| n.token == d_name)
        .map(|i| i + 1)
        .ok_or_else(|| AnalogyError::Embedding(EmbeddingError::MissingToken(d_token.to_owned())))
}
