//! Metric-axiom audits: presentation-order symmetry on human ratings,
//! triangle-inequality probing on triads, and the corresponding
//! model-side checks (which can never show a violation; that asymmetry
//! between people and the geometry is the point).

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;
use serde::Serialize;
use thiserror::Error;

use crate::dataset::{Comparison, Triad, ANALOGY_TYPE_NAMES};
use crate::embedding::EmbeddingSpace;
use crate::relsim::{relsim, Metric, RelSimError, WordPair};
use crate::stats::{
    anova_oneway, binomial_test, tukey_hsd, AnovaResult, BinomialResult, StatsError, TTestResult,
    TukeyResult,
};

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("comparison {0} lacks >= 2 ratings in each presentation order")]
    InsufficientRatings(String),
    #[error("triad {id}: {source}")]
    DegenerateGroups { id: String, source: StatsError },
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    RelSim(#[from] RelSimError),
}

#[derive(Debug, Clone, Serialize)]
pub struct SymmetryRow {
    pub comparison_id: String,
    pub mean_order1: f64,
    pub mean_order2: f64,
    pub t_test: TTestResult,
}

#[derive(Debug, Clone, Serialize)]
pub struct SymmetryAuditResult {
    pub alpha: f64,
    pub n_comparisons: usize,
    pub n_significant: usize,
    pub expected_under_null: f64,
    pub binomial: BinomialResult,
    pub per_comparison: Vec<SymmetryRow>,
}

/// Per-comparison Welch t-test between the two presentation orders, then
/// a binomial test of the significant count against the alpha level.
pub fn symmetry_audit(
    comparisons: &[Comparison],
    alpha: f64,
) -> Result<SymmetryAuditResult, AuditError> {
    let mut per_comparison = Vec::with_capacity(comparisons.len());
    let mut n_significant = 0usize;
    for c in comparisons {
        if c.ratings_left_first.len() < 2 || c.ratings_right_first.len() < 2 {
            return Err(AuditError::InsufficientRatings(c.id.clone()));
        }
        let g1: Vec<f64> = c.ratings_left_first.iter().map(|&r| r as f64).collect();
        let g2: Vec<f64> = c.ratings_right_first.iter().map(|&r| r as f64).collect();
        let m1 = g1.iter().sum::<f64>() / g1.len() as f64;
        let m2 = g2.iter().sum::<f64>() / g2.len() as f64;
        let t_test = match crate::stats::welch_t_test(&g1, &g2) {
            Ok(t) => t,
            // zero variance in both orders with different means: the
            // difference is unambiguous, record it as p = 0
            Err(StatsError::DegenerateGroup(_)) => TTestResult {
                t: if m1 > m2 {
                    f64::INFINITY
                } else {
                    f64::NEG_INFINITY
                },
                df: (g1.len() + g2.len() - 2) as f64,
                p_two_sided: 0.0,
            },
            Err(e) => return Err(e.into()),
        };
        if t_test.p_two_sided < alpha {
            n_significant += 1;
        }
        per_comparison.push(SymmetryRow {
            comparison_id: c.id.clone(),
            mean_order1: m1,
            mean_order2: m2,
            t_test,
        });
    }
    let n = comparisons.len();
    let binomial = binomial_test(n_significant as u64, n as u64, alpha)?;
    Ok(SymmetryAuditResult {
        alpha,
        n_comparisons: n,
        n_significant,
        expected_under_null: alpha * n as f64,
        binomial,
        per_comparison,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelSymmetryResult {
    pub metric: Metric,
    pub n_samples: usize,
    pub max_abs_asymmetry: f64,
    pub empty_sample: bool,
}

/// Sample random pair-of-pairs and report the largest observed
/// |sim(p,q) - sim(q,p)|. Both metrics are algebraically symmetric, so
/// the contract is that this is exactly 0.0.
pub fn model_symmetry_check(
    space: &EmbeddingSpace,
    metric: Metric,
    n_samples: usize,
    seed: u64,
) -> ModelSymmetryResult {
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
    let mut max_abs = 0.0f64;
    let mut taken = 0usize;
    let mut attempts = 0usize;
    while taken < n_samples && attempts < n_samples.saturating_mul(10) + 16 {
        attempts += 1;
        let idx: Vec<usize> = (0..4).map(|_| rng.gen_range(0..space.len())).collect();
        if idx[0] == idx[1] || idx[2] == idx[3] {
            continue;
        }
        let p = WordPair::new(&space.token_string(idx[0]), &space.token_string(idx[1]));
        let q = WordPair::new(&space.token_string(idx[2]), &space.token_string(idx[3]));
        let (Ok(fwd), Ok(rev)) = (relsim(space, &p, &q, metric), relsim(space, &q, &p, metric))
        else {
            continue;
        };
        max_abs = max_abs.max((fwd.value - rev.value).abs());
        taken += 1;
    }
    ModelSymmetryResult {
        metric,
        n_samples: taken,
        max_abs_asymmetry: max_abs,
        empty_sample: taken == 0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TriadPattern {
    /// Analogies 1-2 and 2-3 rated significantly higher than 1-3, while
    /// 1-2 and 2-3 do not differ: the operationalized triangle-inequality
    /// violation.
    ExpectedViolation,
    Other,
}

#[derive(Debug, Clone, Serialize)]
pub struct TriadRow {
    pub triad_id: String,
    pub anova: AnovaResult,
    pub tukey: TukeyResult,
    pub pattern: TriadPattern,
}

#[derive(Debug, Clone, Serialize)]
pub struct TriadAuditResult {
    pub alpha: f64,
    pub per_triad: Vec<TriadRow>,
    pub n_expected_pattern: usize,
}

fn classify(tukey: &TukeyResult) -> TriadPattern {
    // pairwise order for 3 groups is (0,1), (0,2), (1,2); group indices
    // are analogy types 1-2, 2-3, 1-3
    let sig = |i: usize, j: usize| {
        tukey
            .pairwise
            .iter()
            .find(|p| p.i == i && p.j == j)
            .map(|p| p.significant)
            .unwrap_or(false)
    };
    if sig(0, 2) && sig(1, 2) && !sig(0, 1) {
        TriadPattern::ExpectedViolation
    } else {
        TriadPattern::Other
    }
}

/// Per-triad one-way ANOVA over the three analogy-type rating groups,
/// Tukey HSD, and classification of the high/high/low pattern.
pub fn triad_audit_human(triads: &[Triad], alpha: f64) -> Result<TriadAuditResult, AuditError> {
    let mut per_triad = Vec::with_capacity(triads.len());
    let mut n_expected = 0usize;
    for triad in triads {
        let groups: Vec<Vec<f64>> = triad
            .ratings
            .iter()
            .map(|g| g.iter().map(|&r| r as f64).collect())
            .collect();
        let wrap = |e: StatsError| AuditError::DegenerateGroups {
            id: triad.id.clone(),
            source: e,
        };
        let anova = anova_oneway(&groups).map_err(wrap)?;
        let tukey = tukey_hsd(&groups, alpha).map_err(wrap)?;
        let pattern = classify(&tukey);
        if pattern == TriadPattern::ExpectedViolation {
            n_expected += 1;
        }
        per_triad.push(TriadRow {
            triad_id: triad.id.clone(),
            anova,
            tukey,
            pattern,
        });
    }
    Ok(TriadAuditResult {
        alpha,
        per_triad,
        n_expected_pattern: n_expected,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TriadMetricCheck {
    pub triad_id: String,
    /// Predicted similarity per analogy type (1-2, 2-3, 1-3).
    pub similarities: [f64; 3],
    /// The associated distances (angular for cosine, ||r_i - r_j|| for
    /// Euclidean).
    pub distances: [f64; 3],
    /// d(1,2) + d(2,3) >= d(1,3) within 1e-9.
    pub triangle_holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TriadModelResult {
    pub metric: Metric,
    pub analogy_type_names: [&'static str; 3],
    pub anova: AnovaResult,
    pub per_triad: Vec<TriadMetricCheck>,
}

/// One predicted similarity per (triad, analogy type), an ANOVA over the
/// three type groups, and a per-triad triangle-inequality check on the
/// corresponding distance.
pub fn triad_audit_model(
    space: &EmbeddingSpace,
    triads: &[Triad],
    metric: Metric,
) -> Result<TriadModelResult, AuditError> {
    let mut groups: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    let mut per_triad = Vec::with_capacity(triads.len());
    for triad in triads {
        let [p1, p2, p3] = &triad.pairs;
        let sims = [
            relsim(space, p1, p2, metric)?.value,
            relsim(space, p2, p3, metric)?.value,
            relsim(space, p1, p3, metric)?.value,
        ];
        for (g, s) in groups.iter_mut().zip(sims) {
            g.push(s);
        }
        let distances = match metric {
            Metric::CosineOfDifferences => sims.map(|s| s.clamp(-1.0, 1.0).acos()),
            Metric::EuclideanOfDifferences => sims.map(|s| 1.0 - s),
        };
        per_triad.push(TriadMetricCheck {
            triad_id: triad.id.clone(),
            similarities: sims,
            distances,
            triangle_holds: distances[0] + distances[1] >= distances[2] - 1e-9,
        });
    }
    let anova = anova_oneway(groups.as_ref())?;
    Ok(TriadModelResult {
        metric,
        analogy_type_names: ANALOGY_TYPE_NAMES,
        anova,
        per_triad,
    })
}
