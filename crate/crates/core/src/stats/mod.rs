//! Statistical tests used by the evaluation and audit pipelines: Pearson
//! correlation, two-sample t-tests, the exact binomial test, one-way
//! ANOVA, and Tukey's HSD. All accumulation is in f64.

pub mod special;
pub mod tukey;

use serde::Serialize;
use thiserror::Error;

pub use special::{f_cdf, t_cdf};
pub use tukey::{q_critical, TukeyTableError};

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("input lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("correlation is undefined for constant input")]
    ConstantInput,
    #[error("need at least {0} observations")]
    TooFewObservations(usize),
    #[error("group is degenerate: {0}")]
    DegenerateGroup(String),
    #[error("groups are degenerate: {0}")]
    DegenerateGroups(String),
    #[error("invalid binomial parameters: k={k}, n={n}, p0={p0}")]
    InvalidBinomial { k: u64, n: u64, p0: f64 },
    #[error(transparent)]
    TukeyTable(#[from] TukeyTableError),
}

/// n, mean, and sample sd (n-1 denominator) of one group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroupSummary {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
}

impl GroupSummary {
    pub fn from_data(data: &[f64]) -> Result<Self, StatsError> {
        if data.len() < 2 {
            return Err(StatsError::TooFewObservations(2));
        }
        let n = data.len() as f64;
        let mean = data.iter().sum::<f64>() / n;
        let ss: f64 = data.iter().map(|x| (x - mean) * (x - mean)).sum();
        Ok(Self {
            n: data.len(),
            mean,
            sd: (ss / (n - 1.0)).sqrt(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PearsonResult {
    pub r: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TTestResult {
    pub t: f64,
    pub df: f64,
    pub p_two_sided: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnovaResult {
    pub f: f64,
    pub df_between: usize,
    pub df_within: usize,
    pub p: f64,
    pub ms_within: f64,
    pub group_means: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairwiseTukey {
    pub i: usize,
    pub j: usize,
    pub mean_diff: f64,
    pub q_stat: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TukeyResult {
    pub pairwise: Vec<PairwiseTukey>,
    pub q_critical: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinomialResult {
    pub k: u64,
    pub n: u64,
    pub p0: f64,
    pub expected: f64,
    pub p_one_sided_ge: f64,
    pub p_two_sided: f64,
}

/// Product-moment correlation. Requires length >= 3 and non-constant
/// inputs.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<PearsonResult, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 3 {
        return Err(StatsError::TooFewObservations(3));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..xs.len() {
        let dx = xs[i] - mx;
        let dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ConstantInput);
    }
    Ok(PearsonResult {
        r: (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0),
        n: xs.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TTestKind {
    /// Welch's unequal-variance t with Welch-Satterthwaite df (default).
    Welch,
    /// Classic pooled-variance Student t, for sensitivity analysis.
    Pooled,
}

pub fn welch_t_test(g1: &[f64], g2: &[f64]) -> Result<TTestResult, StatsError> {
    t_test(g1, g2, TTestKind::Welch)
}

pub fn t_test(g1: &[f64], g2: &[f64], kind: TTestKind) -> Result<TTestResult, StatsError> {
    let s1 = GroupSummary::from_data(g1)?;
    let s2 = GroupSummary::from_data(g2)?;
    let (n1, n2) = (s1.n as f64, s2.n as f64);
    let (v1, v2) = (s1.sd * s1.sd, s2.sd * s2.sd);
    if v1 == 0.0 && v2 == 0.0 && s1.mean != s2.mean {
        return Err(StatsError::DegenerateGroup(
            "both groups have zero variance and unequal means".into(),
        ));
    }
    let (se2, df) = match kind {
        TTestKind::Welch => {
            let se2 = v1 / n1 + v2 / n2;
            if se2 == 0.0 {
                return Ok(TTestResult {
                    t: 0.0,
                    df: n1 + n2 - 2.0,
                    p_two_sided: 1.0,
                });
            }
            let df = se2 * se2
                / ((v1 / n1) * (v1 / n1) / (n1 - 1.0) + (v2 / n2) * (v2 / n2) / (n2 - 1.0));
            (se2, df)
        }
        TTestKind::Pooled => {
            let df = n1 + n2 - 2.0;
            let sp2 = ((n1 - 1.0) * v1 + (n2 - 1.0) * v2) / df;
            if sp2 == 0.0 {
                return Ok(TTestResult {
                    t: 0.0,
                    df,
                    p_two_sided: 1.0,
                });
            }
            (sp2 * (1.0 / n1 + 1.0 / n2), df)
        }
    };
    let t = (s1.mean - s2.mean) / se2.sqrt();
    let p = (2.0 * (1.0 - t_cdf(t.abs(), df))).clamp(0.0, 1.0);
    Ok(TTestResult {
        t,
        df,
        p_two_sided: p,
    })
}

/// Exact binomial test of `k` successes in `n` trials against success
/// probability `p0`. The one-sided value is the upper tail P(X >= k);
/// the two-sided value sums all outcomes at most as likely as k
/// (minimum-likelihood convention).
pub fn binomial_test(k: u64, n: u64, p0: f64) -> Result<BinomialResult, StatsError> {
    if k > n || !(0.0 < p0 && p0 < 1.0) || n == 0 {
        return Err(StatsError::InvalidBinomial { k, n, p0 });
    }
    let ln_p = p0.ln();
    let ln_q = (1.0 - p0).ln();
    let ln_pmf = |i: u64| special::ln_choose(n, i) + i as f64 * ln_p + (n - i) as f64 * ln_q;

    let mut upper = 0.0;
    for i in k..=n {
        upper += ln_pmf(i).exp();
    }
    let ln_pk = ln_pmf(k);
    let mut two_sided = 0.0;
    for i in 0..=n {
        // relative tolerance absorbs rounding when pmf(i) == pmf(k)
        if ln_pmf(i) <= ln_pk + 1e-7 {
            two_sided += ln_pmf(i).exp();
        }
    }
    Ok(BinomialResult {
        k,
        n,
        p0,
        expected: n as f64 * p0,
        p_one_sided_ge: upper.clamp(0.0, 1.0),
        p_two_sided: two_sided.clamp(0.0, 1.0),
    })
}

pub fn anova_oneway(groups: &[Vec<f64>]) -> Result<AnovaResult, StatsError> {
    let summaries: Vec<GroupSummary> = groups
        .iter()
        .map(|g| GroupSummary::from_data(g))
        .collect::<Result<_, _>>()?;
    anova_from_summaries(&summaries)
}

pub fn anova_from_summaries(summaries: &[GroupSummary]) -> Result<AnovaResult, StatsError> {
    if summaries.len() < 2 {
        return Err(StatsError::DegenerateGroups(
            "need at least 2 groups".into(),
        ));
    }
    if summaries.iter().any(|s| s.n < 2) {
        return Err(StatsError::DegenerateGroups(
            "every group needs n >= 2".into(),
        ));
    }
    let total_n: usize = summaries.iter().map(|s| s.n).sum();
    let grand = summaries.iter().map(|s| s.n as f64 * s.mean).sum::<f64>() / total_n as f64;
    let ssb: f64 = summaries
        .iter()
        .map(|s| s.n as f64 * (s.mean - grand) * (s.mean - grand))
        .sum();
    let ssw: f64 = summaries
        .iter()
        .map(|s| (s.n as f64 - 1.0) * s.sd * s.sd)
        .sum();
    let df_between = summaries.len() - 1;
    let df_within = total_n - summaries.len();
    if ssw == 0.0 {
        if ssb.abs() < 1e-12 {
            // all observations equal: no effect, by convention F = 0
            return Ok(AnovaResult {
                f: 0.0,
                df_between,
                df_within,
                p: 1.0,
                ms_within: 0.0,
                group_means: summaries.iter().map(|s| s.mean).collect(),
            });
        }
        return Err(StatsError::DegenerateGroups(
            "zero within-group variance".into(),
        ));
    }
    let ms_between = ssb / df_between as f64;
    let ms_within = ssw / df_within as f64;
    let f = ms_between / ms_within;
    let p = (1.0 - f_cdf(f, df_between as f64, df_within as f64)).clamp(0.0, 1.0);
    Ok(AnovaResult {
        f,
        df_between,
        df_within,
        p,
        ms_within,
        group_means: summaries.iter().map(|s| s.mean).collect(),
    })
}

pub fn tukey_hsd(groups: &[Vec<f64>], alpha: f64) -> Result<TukeyResult, StatsError> {
    let summaries: Vec<GroupSummary> = groups
        .iter()
        .map(|g| GroupSummary::from_data(g))
        .collect::<Result<_, _>>()?;
    tukey_from_summaries(&summaries, alpha)
}

/// Pairwise q statistics against the studentized-range critical value at
/// (k, df_within). Uses the unbalanced-design (Tukey-Kramer) standard
/// error `sqrt(ms_within/2 * (1/n_i + 1/n_j))`.
pub fn tukey_from_summaries(
    summaries: &[GroupSummary],
    alpha: f64,
) -> Result<TukeyResult, StatsError> {
    let anova = anova_from_summaries(summaries)?;
    let qc = q_critical(summaries.len(), anova.df_within as f64, alpha)?;
    let mut pairwise = Vec::new();
    for i in 0..summaries.len() {
        for j in i + 1..summaries.len() {
            let (si, sj) = (&summaries[i], &summaries[j]);
            let mean_diff = si.mean - sj.mean;
            let se = (anova.ms_within / 2.0 * (1.0 / si.n as f64 + 1.0 / sj.n as f64)).sqrt();
            let q_stat = if se == 0.0 {
                if mean_diff == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                mean_diff.abs() / se
            };
            pairwise.push(PairwiseTukey {
                i,
                j,
                mean_diff,
                q_stat,
                significant: q_stat >= qc,
            });
        }
    }
    Ok(TukeyResult {
        pairwise,
        q_critical: qc,
        alpha,
    })
}
