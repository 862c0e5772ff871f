//! Dense-vector arithmetic and exact top-k cosine retrieval.
//!
//! All accumulation is done in f64 with a fixed left-to-right order so
//! results are bit-identical across runs and platforms.

use thiserror::Error;

use crate::embedding::EmbeddingSpace;

#[derive(Debug, Error, PartialEq)]
pub enum VectorError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("zero vector has no direction")]
    ZeroVector,
}

/// A token with its cosine similarity to some query.
///
/// Result lists are sorted by score descending; ties break by vocabulary
/// (insertion) order.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Neighbor {
    pub token: String,
    pub score: f64,
}

fn check_dims(u: &[f64], v: &[f64]) -> Result<(), VectorError> {
    if u.len() != v.len() {
        return Err(VectorError::DimensionMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    Ok(())
}

/// Componentwise `b - a`.
pub fn difference(b: &[f64], a: &[f64]) -> Result<Vec<f64>, VectorError> {
    check_dims(b, a)?;
    Ok(b.iter().zip(a).map(|(x, y)| x - y).collect())
}

pub fn add(u: &[f64], v: &[f64]) -> Result<Vec<f64>, VectorError> {
    check_dims(u, v)?;
    Ok(u.iter().zip(v).map(|(x, y)| x + y).collect())
}

/// Left-to-right dot product in f64.
pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..u.len() {
        acc += u[i] * v[i];
    }
    acc
}

pub fn norm(u: &[f64]) -> f64 {
    dot(u, u).sqrt()
}

pub fn is_zero(u: &[f64]) -> bool {
    u.iter().all(|&x| x == 0.0)
}

/// Cosine similarity, clamped into [-1, 1] to absorb rounding at the
/// boundary (slack below 1e-12 in practice).
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, VectorError> {
    check_dims(u, v)?;
    if is_zero(u) || is_zero(v) {
        return Err(VectorError::ZeroVector);
    }
    let c = dot(u, v) / (norm(u) * norm(v));
    Ok(c.clamp(-1.0, 1.0))
}

pub fn euclidean_distance(u: &[f64], v: &[f64]) -> Result<f64, VectorError> {
    check_dims(u, v)?;
    let mut acc = 0.0;
    for i in 0..u.len() {
        let d = u[i] - v[i];
        acc += d * d;
    }
    Ok(acc.sqrt())
}

/// The k vocabulary entries with the highest cosine similarity to `query`,
/// skipping any row whose index is flagged in `exclude`.
///
/// Runs a full scan; ranking is deterministic (score descending, then row
/// index ascending). Fewer than k results only when the vocabulary minus
/// exclusions is smaller than k.
pub fn top_k_by_cosine(
    space: &EmbeddingSpace,
    query: &[f64],
    k: usize,
    exclude: &dyn Fn(usize) -> bool,
) -> Result<Vec<Neighbor>, VectorError> {
    if is_zero(query) {
        return Err(VectorError::ZeroVector);
    }
    if query.len() != space.dim() {
        return Err(VectorError::DimensionMismatch {
            left: query.len(),
            right: space.dim(),
        });
    }
    let qnorm = norm(query);
    let mut scored: Vec<(f64, usize)> = Vec::new();
    for row in 0..space.len() {
        if exclude(row) {
            continue;
        }
        let v = space.row_f64(row);
        let n = norm(&v);
        if n == 0.0 {
            continue; // zero rows can never be ranked
        }
        let score = (dot(query, &v) / (qnorm * n)).clamp(-1.0, 1.0);
        scored.push((score, row));
    }
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    scored.truncate(k);
    Ok(scored
        .into_iter()
        .map(|(score, row)| Neighbor {
            token: space.token_string(row),
            score,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::EmbeddingSpace;
    use proptest::prelude::*;

    fn space(entries: &[(&str, &[f32])]) -> EmbeddingSpace {
        EmbeddingSpace::from_rows(
            entries
                .iter()
                .map(|(t, v)| (t.as_bytes().to_vec(), v.to_vec())),
        )
        .unwrap()
    }

    #[test]
    fn difference_basics() {
        assert_eq!(
            difference(&[1.0, 2.0], &[1.0, 2.0]).unwrap(),
            vec![0.0, 0.0]
        );
        assert_eq!(
            difference(&[1.0, 2.0], &[0.0, 0.0]).unwrap(),
            vec![1.0, 2.0]
        );
        assert_eq!(
            difference(&[3.0, 5.0], &[1.0, 2.0]).unwrap(),
            vec![2.0, 3.0]
        );
        assert!(matches!(
            difference(&[1.0], &[1.0, 2.0]),
            Err(VectorError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn cosine_basics() {
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!((cosine(&[1.0, 2.0], &[2.0, 4.0]).unwrap() - 1.0).abs() < 1e-12);
        let c = cosine(&[1.0, 1.0], &[1.0, 0.0]).unwrap();
        assert!((c - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(
            cosine(&[0.0, 0.0], &[1.0, 0.0]),
            Err(VectorError::ZeroVector)
        );
    }

    #[test]
    fn euclidean_basics() {
        assert_eq!(euclidean_distance(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(euclidean_distance(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(
            euclidean_distance(&[1.0, 2.0, 3.0], &[2.0, 2.0, 3.0]).unwrap(),
            1.0
        );
    }

    #[test]
    fn top_k_self_retrieval_and_exclusion() {
        let s = space(&[("a", &[1.0, 0.0]), ("b", &[0.0, 1.0]), ("c", &[1.0, 1.0])]);
        let q = s.row_f64(0);
        let top = top_k_by_cosine(&s, &q, 3, &|_| false).unwrap();
        assert_eq!(top[0].token, "a");
        assert_eq!(top[0].score, 1.0);

        let top = top_k_by_cosine(&s, &q, 3, &|r| r == 0).unwrap();
        assert!(top.iter().all(|n| n.token != "a"));
        assert_eq!(top.len(), 2);
    }

    #[test]
    fn top_k_matches_full_scan_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_xoshiro::Xoshiro256StarStar::seed_from_u64(7);
        let entries: Vec<(String, Vec<f32>)> = (0..1000)
            .map(|i| {
                let v: Vec<f32> = (0..16).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
                (format!("t{i}"), v)
            })
            .collect();
        let s = EmbeddingSpace::from_rows(
            entries
                .iter()
                .map(|(t, v)| (t.as_bytes().to_vec(), v.clone())),
        )
        .unwrap();
        let query: Vec<f64> = (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect();

        // Independent oracle: score every row, full stable sort.
        let mut oracle: Vec<(usize, f64)> = (0..s.len())
            .map(|r| {
                let row = s.row_f64(r);
                let c = dot(&query, &row) / (norm(&query) * norm(&row));
                (r, c)
            })
            .collect();
        oracle.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));

        let got = top_k_by_cosine(&s, &query, 25, &|_| false).unwrap();
        for (n, (row, score)) in got.iter().zip(oracle.iter().take(25)) {
            assert_eq!(n.token, s.token_string(*row));
            assert!((n.score - score).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn cosine_symmetric_exact(u in proptest::collection::vec(-10.0f64..10.0, 3..8)) {
            let v: Vec<f64> = u.iter().rev().map(|x| x + 0.5).collect();
            if !is_zero(&u) && !is_zero(&v) {
                prop_assert_eq!(cosine(&u, &v).unwrap(), cosine(&v, &u).unwrap());
            }
        }

        #[test]
        fn cosine_scale_invariant(
            u in proptest::collection::vec(0.1f64..10.0, 4),
            a in 0.01f64..100.0,
            b in 0.01f64..100.0,
        ) {
            let v: Vec<f64> = u.iter().map(|x| x * 2.0 + 1.0).collect();
            let ua: Vec<f64> = u.iter().map(|x| x * a).collect();
            let vb: Vec<f64> = v.iter().map(|x| x * b).collect();
            let c1 = cosine(&u, &v).unwrap();
            let c2 = cosine(&ua, &vb).unwrap();
            prop_assert!((c1 - c2).abs() < 1e-12);
        }

        #[test]
        fn euclidean_triangle_inequality(
            u in proptest::collection::vec(-10.0f64..10.0, 5),
            v in proptest::collection::vec(-10.0f64..10.0, 5),
            w in proptest::collection::vec(-10.0f64..10.0, 5),
        ) {
            let duv = euclidean_distance(&u, &v).unwrap();
            let dvw = euclidean_distance(&v, &w).unwrap();
            let duw = euclidean_distance(&u, &w).unwrap();
            prop_assert!(duw <= duv + dvw + 1e-9);
        }
    }
}
