//! Toolkit for the parallelogram model of analogy over word-embedding
//! spaces: analogy completion by vector offset, relational similarity
//! between word pairs, a relation-taxonomy comparison design, PCA
//! difference-vector plots, and statistical audits of the symmetry and
//! triangle-inequality axioms.

pub mod analogy;
pub mod audit;
pub mod dataset;
pub mod embedding;
pub mod eval;
pub mod projection;
pub mod relsim;
pub mod stats;
pub mod svg;
pub mod vector;

pub use analogy::{complete_parallelogram, rank_of_candidate, AnalogyQuery, AnalogyResult};
pub use embedding::{EmbeddingSpace, LoadReport};
pub use relsim::{Metric, MissingPolicy, RelSimScore, WordPair};
