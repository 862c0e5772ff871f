//! Per-subtype 2-D PCA and difference-vector arrow plots.
//!
//! The fit centers the input and takes the top two principal axes. When
//! n < d (the usual case here: ~60 word vectors in 300 dimensions) the
//! eigendecomposition runs on the n-by-n Gram matrix and the axes are
//! recovered as X^T u / sqrt(lambda); otherwise on the d-by-d covariance.
//! Eigenvector signs follow a fixed convention (largest-magnitude
//! component positive) so fits are reproducible across platforms.

use serde::Serialize;
use thiserror::Error;

use crate::embedding::{EmbeddingError, EmbeddingSpace};
use crate::relsim::WordPair;
use crate::vector;

#[derive(Debug, Error)]
pub enum ProjectionError {
    #[error("PCA needs at least 3 vectors, got {0}")]
    TooFewVectors(usize),
    #[error("input vectors are all identical; no principal axis exists")]
    DegenerateData,
    #[error("vectors have mixed dimensions")]
    DimensionMismatch,
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
}

#[derive(Debug, Clone)]
pub struct Projection2D {
    pub mean: Vec<f64>,
    pub axes: [Vec<f64>; 2],
    /// Variance along each axis, descending.
    pub explained_variance: [f64; 2],
    /// Set when the centered data has rank < 2; axis 2 is then an
    /// arbitrary orthonormal completion and projections onto it are ~0.
    pub degenerate: bool,
}

impl Projection2D {
    pub fn project(&self, v: &[f64]) -> (f64, f64) {
        let centered: Vec<f64> = v.iter().zip(&self.mean).map(|(x, m)| x - m).collect();
        (
            vector::dot(&centered, &self.axes[0]),
            vector::dot(&centered, &self.axes[1]),
        )
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix (row-major).
/// Returns (eigenvalues, eigenvectors-as-columns) sorted by eigenvalue
/// descending.
fn jacobi_eigen(mut a: Vec<f64>, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let off = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                s += a[i * n + j] * a[i * n + j];
            }
        }
        s
    };
    let scale: f64 = (0..n).map(|i| a[i * n + i].abs()).sum::<f64>().max(1e-300);
    for _sweep in 0..100 {
        if off(&a).sqrt() <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].partial_cmp(&a[i * n + i]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
    let mut eigenvectors = vec![0.0; n * n];
    for (col, &src) in order.iter().enumerate() {
        for k in 0..n {
            eigenvectors[k * n + col] = v[k * n + src];
        }
    }
    (eigenvalues, eigenvectors)
}

fn fix_sign(axis: &mut [f64]) {
    let mut best = 0;
    for i in 1..axis.len() {
        if axis[i].abs() > axis[best].abs() {
            best = i;
        }
    }
    if axis[best] < 0.0 {
        for x in axis.iter_mut() {
            *x = -*x;
        }
    }
}

/// Deterministic orthonormal completion for rank-1 data: take the
/// standard basis vector least aligned with `axis` and Gram-Schmidt it.
fn orthonormal_complement(axis: &[f64]) -> Vec<f64> {
    let d = axis.len();
    let mut smallest = 0;
    for i in 1..d {
        if axis[i].abs() < axis[smallest].abs() {
            smallest = i;
        }
    }
    let mut e = vec![0.0; d];
    e[smallest] = 1.0;
    let proj = vector::dot(&e, axis);
    for i in 0..d {
        e[i] -= proj * axis[i];
    }
    let n = vector::norm(&e);
    for x in e.iter_mut() {
        *x /= n;
    }
    e
}

pub fn fit_pca(vectors: &[Vec<f64>]) -> Result<Projection2D, ProjectionError> {
    let n = vectors.len();
    if n < 3 {
        return Err(ProjectionError::TooFewVectors(n));
    }
    let d = vectors[0].len();
    if vectors.iter().any(|v| v.len() != d) {
        return Err(ProjectionError::DimensionMismatch);
    }
    let mut mean = vec![0.0; d];
    for v in vectors {
        for i in 0..d {
            mean[i] += v[i];
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let centered: Vec<Vec<f64>> = vectors
        .iter()
        .map(|v| v.iter().zip(&mean).map(|(x, m)| x - m).collect())
        .collect();

    let (mut axes, mut variances): (Vec<Vec<f64>>, Vec<f64>) = if n <= d {
        // Gram trick: eigenvectors of X X^T lift to axes of X^T X
        let mut gram = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let g = vector::dot(&centered[i], &centered[j]);
                gram[i * n + j] = g;
                gram[j * n + i] = g;
            }
        }
        let (vals, vecs) = jacobi_eigen(gram, n);
        let mut axes = Vec::new();
        let mut variances = Vec::new();
        for comp in 0..2.min(n) {
            let lambda = vals[comp].max(0.0);
            let mut axis = vec![0.0; d];
            for row in 0..n {
                let u = vecs[row * n + comp];
                for i in 0..d {
                    axis[i] += u * centered[row][i];
                }
            }
            let norm = vector::norm(&axis);
            if norm > 0.0 {
                for x in axis.iter_mut() {
                    *x /= norm;
                }
            }
            axes.push(axis);
            variances.push(lambda / (n as f64 - 1.0));
        }
        (axes, variances)
    } else {
        let mut cov = vec![0.0; d * d];
        for v in &centered {
            for i in 0..d {
                for j in i..d {
                    cov[i * d + j] += v[i] * v[j];
                }
            }
        }
        for i in 0..d {
            for j in i..d {
                cov[i * d + j] /= n as f64 - 1.0;
                cov[j * d + i] = cov[i * d + j];
            }
        }
        let (vals, vecs) = jacobi_eigen(cov, d);
        let axes = (0..2)
            .map(|comp| (0..d).map(|k| vecs[k * d + comp]).collect())
            .collect();
        (axes, vals[..2].to_vec())
    };

    let total_scale: f64 = variances.iter().cloned().fold(0.0, f64::max);
    if total_scale <= 1e-24 {
        return Err(ProjectionError::DegenerateData);
    }
    let degenerate = variances.len() < 2 || variances[1] <= 1e-12 * variances[0];
    if degenerate {
        fix_sign(&mut axes[0]);
        let second = orthonormal_complement(&axes[0]);
        if axes.len() < 2 {
            axes.push(second);
            variances.push(0.0);
        } else {
            axes[1] = second;
            variances[1] = variances[1].max(0.0);
        }
    }
    for axis in axes.iter_mut() {
        fix_sign(axis);
    }
    Ok(Projection2D {
        mean,
        axes: [axes[0].clone(), axes[1].clone()],
        explained_variance: [variances[0], variances[1]],
        degenerate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Arrow {
    pub tail: (f64, f64),
    pub head: (f64, f64),
    pub label: String,
    /// Flagged when the pair's two words share a vector.
    pub zero_length: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Viewport {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Viewport {
    pub fn contains(&self, p: (f64, f64)) -> bool {
        p.0 >= self.min_x && p.0 <= self.max_x && p.1 >= self.min_y && p.1 <= self.max_y
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArrowPlot {
    pub title: String,
    pub arrows: Vec<Arrow>,
    pub viewport: Viewport,
}

fn viewport_for(arrows: &[Arrow]) -> Viewport {
    if arrows.is_empty() {
        return Viewport {
            min_x: -1.0,
            min_y: -1.0,
            max_x: 1.0,
            max_y: 1.0,
        };
    }
    let mut min_x = f64::INFINITY;
    let mut min_y = f64::INFINITY;
    let mut max_x = f64::NEG_INFINITY;
    let mut max_y = f64::NEG_INFINITY;
    for a in arrows {
        for p in [a.tail, a.head] {
            min_x = min_x.min(p.0);
            max_x = max_x.max(p.0);
            min_y = min_y.min(p.1);
            max_y = max_y.max(p.1);
        }
    }
    // 5% margin on each side
    let mx = 0.05 * (max_x - min_x).max(1e-9);
    let my = 0.05 * (max_y - min_y).max(1e-9);
    Viewport {
        min_x: min_x - mx,
        min_y: min_y - my,
        max_x: max_x + mx,
        max_y: max_y + my,
    }
}

/// One arrow per pair: tail at the projected first word, head at the
/// projected second word.
pub fn project_pairs(
    projection: &Projection2D,
    pairs: &[WordPair],
    space: &EmbeddingSpace,
    title: &str,
) -> Result<ArrowPlot, ProjectionError> {
    let mut arrows = Vec::with_capacity(pairs.len());
    for pair in pairs {
        let va = space.vector(&pair.first, false)?;
        let vb = space.vector(&pair.second, false)?;
        let tail = projection.project(&va);
        let head = projection.project(&vb);
        arrows.push(Arrow {
            tail,
            head,
            label: pair.label(),
            zero_length: va == vb,
        });
    }
    let viewport = viewport_for(&arrows);
    Ok(ArrowPlot {
        title: title.to_owned(),
        arrows,
        viewport,
    })
}

/// CSV export of arrow endpoints: tail_x,tail_y,head_x,head_y,label.
pub fn write_arrows_csv<W: std::io::Write>(plot: &ArrowPlot, writer: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["tail_x", "tail_y", "head_x", "head_y", "label"])?;
    for a in &plot.arrows {
        w.write_record([
            format!("{}", a.tail.0),
            format!("{}", a.tail.1),
            format!("{}", a.head.0),
            format!("{}", a.head.1),
            a.label.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
