//! Correlation of model-predicted relational similarity with mean human
//! ratings, grouped by relation type. The default pooling set is
//! within-subtype plus between-subtype comparisons; between-type
//! comparisons span two types and are excluded unless asked for.

use serde::Serialize;

use crate::dataset::{mean_rating, Comparison, ComparisonKind};
use crate::embedding::EmbeddingSpace;
use crate::relsim::{relsim, Metric, MissingPolicy, RelSimError};
use crate::stats::{pearson, StatsError};

#[derive(Debug, Clone, Serialize)]
pub struct TypeEvalRow {
    pub type_id: u8,
    /// Comparisons that contributed a (model score, mean rating) point.
    pub n: usize,
    pub n_skipped: usize,
    pub r: Option<f64>,
    /// Why r is absent (constant input, too few points).
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub metric: Metric,
    pub pooling: Vec<ComparisonKind>,
    pub rows: Vec<TypeEvalRow>,
}

pub const DEFAULT_POOLING: [ComparisonKind; 2] = [
    ComparisonKind::WithinSubtype,
    ComparisonKind::BetweenSubtype,
];

/// Per-type Pearson r between model scores and mean human ratings.
pub fn evaluate_by_type(
    space: &EmbeddingSpace,
    comparisons: &[Comparison],
    metric: Metric,
    pooling: &[ComparisonKind],
    missing_policy: MissingPolicy,
) -> Result<EvalReport, RelSimError> {
    let mut by_type: Vec<(u8, Vec<f64>, Vec<f64>, usize)> = Vec::new();
    for c in comparisons {
        if !pooling.contains(&c.kind) {
            continue;
        }
        let type_id = c.left_subtype.type_id;
        let slot = match by_type.iter().position(|(t, ..)| *t == type_id) {
            Some(i) => i,
            None => {
                by_type.push((type_id, Vec::new(), Vec::new(), 0));
                by_type.len() - 1
            }
        };
        let Ok(human) = mean_rating(c) else {
            by_type[slot].3 += 1;
            continue;
        };
        match relsim(space, &c.left, &c.right, metric) {
            Ok(score) => {
                by_type[slot].1.push(score.value);
                by_type[slot].2.push(human);
            }
            Err(e) => match missing_policy {
                MissingPolicy::Error => return Err(e),
                MissingPolicy::SkipAndReport => by_type[slot].3 += 1,
            },
        }
    }
    by_type.sort_by_key(|(t, ..)| *t);
    let rows = by_type
        .into_iter()
        .map(|(type_id, model, human, n_skipped)| {
            let n = model.len();
            match pearson(&model, &human) {
                Ok(p) => TypeEvalRow {
                    type_id,
                    n,
                    n_skipped,
                    r: Some(p.r),
                    error: None,
                },
                Err(e @ (StatsError::ConstantInput | StatsError::TooFewObservations(_))) => {
                    TypeEvalRow {
                        type_id,
                        n,
                        n_skipped,
                        r: None,
                        error: Some(e.to_string()),
                    }
                }
                Err(e) => TypeEvalRow {
                    type_id,
                    n,
                    n_skipped,
                    r: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(EvalReport {
        metric,
        pooling: pooling.to_vec(),
        rows,
    })
}
