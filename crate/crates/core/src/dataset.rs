//! Relation taxonomy, comparison stimuli with human ratings, triads, and
//! the seeded comparison-design generator.
//!
//! File formats (all UTF-8 CSV with headers):
//! - taxonomy: `type_id,type_name,subtype_id,subtype_name,word1,word2`
//!   plus optional `prototypicality` and `representative` columns
//! - ratings: `comparison_id,rating` plus optional `presentation_order`
//!   (`left_first` | `right_first`)
//! - comparisons export: `id,kind,left1,left2,right1,right2,left_subtype,right_subtype`
//! - triads: `triad_id,pair1_first,pair1_second,...,pair3_first,pair3_second`
//! - triad ratings: `triad_id,analogy_type,rating` with analogy_type in
//!   `{1-2, 2-3, 1-3}`

use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;
use serde::Serialize;
use thiserror::Error;

use crate::relsim::WordPair;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("rating {value} out of range 1..=7 at line {line}")]
    RatingOutOfRange { line: usize, value: i64 },
    #[error("subtype {0} has fewer member pairs than requested")]
    InsufficientPairs(String),
    #[error("requested {requested} samples from a population of {population}")]
    RequestExceedsPopulation { requested: usize, population: usize },
    #[error("comparison {0} has no ratings")]
    NoRatings(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// `type_id:subtype_id`, e.g. `3:1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct SubtypeRef {
    pub type_id: u8,
    pub subtype_id: String,
}

impl std::fmt::Display for SubtypeRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.type_id, self.subtype_id)
    }
}

#[derive(Debug, Clone)]
pub struct MemberPair {
    pub pair: WordPair,
    pub prototypicality: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Subtype {
    pub id: String,
    pub name: String,
    pub members: Vec<MemberPair>,
    /// Designated representative for the comparison design.
    pub representative: bool,
}

#[derive(Debug, Clone)]
pub struct RelationType {
    pub id: u8,
    pub name: String,
    pub subtypes: Vec<Subtype>,
}

impl RelationType {
    pub fn representative(&self) -> &Subtype {
        self.subtypes
            .iter()
            .find(|s| s.representative)
            .unwrap_or(&self.subtypes[0])
    }
}

/// 10 relation types, each with subtypes holding member word pairs.
#[derive(Debug, Clone, Default)]
pub struct RelationTaxonomy {
    pub types: Vec<RelationType>,
}

impl RelationTaxonomy {
    pub fn n_pairs(&self) -> usize {
        self.types
            .iter()
            .flat_map(|t| &t.subtypes)
            .map(|s| s.members.len())
            .sum()
    }

    pub fn subtype(&self, r: &SubtypeRef) -> Option<&Subtype> {
        self.types
            .iter()
            .find(|t| t.id == r.type_id)?
            .subtypes
            .iter()
            .find(|s| s.id == r.subtype_id)
    }
}

#[derive(Debug, Clone, Default)]
pub struct TaxonomyReport {
    /// Pairs seen twice within one subtype; the first occurrence was kept.
    pub duplicate_pairs: Vec<(SubtypeRef, WordPair)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ComparisonKind {
    WithinSubtype,
    BetweenSubtype,
    BetweenType,
}

impl ComparisonKind {
    pub fn name(&self) -> &'static str {
        match self {
            ComparisonKind::WithinSubtype => "within_subtype",
            ComparisonKind::BetweenSubtype => "between_subtype",
            ComparisonKind::BetweenType => "between_type",
        }
    }
}

impl std::str::FromStr for ComparisonKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "within_subtype" => Ok(ComparisonKind::WithinSubtype),
            "between_subtype" => Ok(ComparisonKind::BetweenSubtype),
            "between_type" => Ok(ComparisonKind::BetweenType),
            other => Err(format!("unknown comparison kind {other:?}")),
        }
    }
}

/// A pair-of-pairs stimulus. (left, right) is canonical taxonomy order;
/// presentation order is a property of the ratings, not the comparison.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub id: String,
    pub left: WordPair,
    pub right: WordPair,
    pub kind: ComparisonKind,
    pub left_subtype: SubtypeRef,
    pub right_subtype: SubtypeRef,
    pub ratings: Vec<u8>,
    pub ratings_left_first: Vec<u8>,
    pub ratings_right_first: Vec<u8>,
}

impl Comparison {
    /// Kind must agree with the subtype refs.
    pub fn kind_is_consistent(&self) -> bool {
        match self.kind {
            ComparisonKind::WithinSubtype => self.left_subtype == self.right_subtype,
            ComparisonKind::BetweenSubtype => {
                self.left_subtype.type_id == self.right_subtype.type_id
                    && self.left_subtype.subtype_id != self.right_subtype.subtype_id
            }
            ComparisonKind::BetweenType => self.left_subtype.type_id != self.right_subtype.type_id,
        }
    }
}

/// Three word pairs probing the triangle inequality. Ratings are indexed
/// by analogy type: 0 = pairs 1-2, 1 = pairs 2-3, 2 = pairs 1-3.
#[derive(Debug, Clone)]
pub struct Triad {
    pub id: String,
    pub pairs: [WordPair; 3],
    pub ratings: [Vec<u8>; 3],
}

pub const ANALOGY_TYPE_NAMES: [&str; 3] = ["1-2", "2-3", "1-3"];

fn get<'a>(
    rec: &'a csv::StringRecord,
    headers: &HashMap<String, usize>,
    name: &str,
    line: usize,
) -> Result<&'a str, DatasetError> {
    headers
        .get(name)
        .and_then(|&i| rec.get(i))
        .ok_or_else(|| DatasetError::MalformedRow {
            line,
            reason: format!("missing column {name}"),
        })
}

fn header_map<R: Read>(
    reader: &mut csv::Reader<R>,
) -> Result<HashMap<String, usize>, DatasetError> {
    Ok(reader
        .headers()?
        .iter()
        .enumerate()
        .map(|(i, h)| (h.trim().to_owned(), i))
        .collect())
}

pub fn load_taxonomy<R: Read>(
    reader: R,
) -> Result<(RelationTaxonomy, TaxonomyReport), DatasetError> {
    let mut csv = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = header_map(&mut csv)?;
    let mut taxonomy = RelationTaxonomy::default();
    let mut report = TaxonomyReport::default();
    let mut seen: HashSet<(SubtypeRef, WordPair)> = HashSet::new();

    for (i, rec) in csv.records().enumerate() {
        let line = i + 2; // 1-based, after the header
        let rec = rec?;
        let type_id: u8 = get(&rec, &headers, "type_id", line)?.parse().map_err(|_| {
            DatasetError::MalformedRow {
                line,
                reason: "type_id is not an integer".into(),
            }
        })?;
        if !(1..=10).contains(&type_id) {
            return Err(DatasetError::MalformedRow {
                line,
                reason: format!("type_id {type_id} outside 1..=10"),
            });
        }
        let type_name = get(&rec, &headers, "type_name", line)?.to_owned();
        let subtype_id = get(&rec, &headers, "subtype_id", line)?.to_owned();
        let subtype_name = get(&rec, &headers, "subtype_name", line)?.to_owned();
        let word1 = get(&rec, &headers, "word1", line)?.to_owned();
        let word2 = get(&rec, &headers, "word2", line)?.to_owned();
        if word1.is_empty() || word2.is_empty() || word1 == word2 {
            return Err(DatasetError::MalformedRow {
                line,
                reason: "word pair must be two distinct non-empty words".into(),
            });
        }
        let prototypicality = match headers.get("prototypicality").and_then(|&i| rec.get(i)) {
            Some("") | None => None,
            Some(v) => Some(v.parse().map_err(|_| DatasetError::MalformedRow {
                line,
                reason: "prototypicality is not a number".into(),
            })?),
        };
        let representative = matches!(
            headers.get("representative").and_then(|&i| rec.get(i)),
            Some("1") | Some("true")
        );

        let ty = match taxonomy.types.iter_mut().find(|t| t.id == type_id) {
            Some(t) => t,
            None => {
                taxonomy.types.push(RelationType {
                    id: type_id,
                    name: type_name,
                    subtypes: Vec::new(),
                });
                taxonomy.types.last_mut().unwrap()
            }
        };
        let sub = match ty.subtypes.iter_mut().position(|s| s.id == subtype_id) {
            Some(i) => &mut ty.subtypes[i],
            None => {
                ty.subtypes.push(Subtype {
                    id: subtype_id.clone(),
                    name: subtype_name,
                    members: Vec::new(),
                    representative,
                });
                ty.subtypes.last_mut().unwrap()
            }
        };
        if representative {
            sub.representative = true;
        }
        let sref = SubtypeRef {
            type_id,
            subtype_id,
        };
        let pair = WordPair::new(&word1, &word2);
        if !seen.insert((sref.clone(), pair.clone())) {
            report.duplicate_pairs.push((sref, pair));
            continue;
        }
        sub.members.push(MemberPair {
            pair,
            prototypicality,
        });
    }
    taxonomy.types.sort_by_key(|t| t.id);
    Ok((taxonomy, report))
}

#[derive(Debug, Clone, Copy)]
pub struct DesignParams {
    pub pairs_per_subtype: usize,
    pub n_between_subtype: usize,
    pub n_between_type: usize,
}

impl Default for DesignParams {
    fn default() -> Self {
        Self {
            pairs_per_subtype: 30,
            n_between_subtype: 925,
            n_between_type: 925,
        }
    }
}

/// Floyd's algorithm: `count` distinct indices from `0..population`,
/// returned sorted ascending.
fn sample_indices(
    rng: &mut Xoshiro256StarStar,
    population: usize,
    count: usize,
) -> Result<Vec<usize>, DatasetError> {
    if count > population {
        return Err(DatasetError::RequestExceedsPopulation {
            requested: count,
            population,
        });
    }
    let mut chosen = HashSet::with_capacity(count);
    for j in population - count..population {
        let t = rng.gen_range(0..=j);
        if !chosen.insert(t) {
            chosen.insert(j);
        }
    }
    let mut out: Vec<usize> = chosen.into_iter().collect();
    out.sort_unstable();
    Ok(out)
}

/// Generate the three-part comparison design: all within-subtype
/// combinations over a seeded sample of pairs from each representative
/// subtype, plus uniform without-replacement samples of between-subtype
/// and between-type comparisons. Pure function of (taxonomy, seed,
/// params); the output order is deterministic.
pub fn generate_comparisons(
    taxonomy: &RelationTaxonomy,
    seed: u64,
    params: &DesignParams,
) -> Result<Vec<Comparison>, DatasetError> {
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
    let mut out = Vec::new();

    // within-subtype: sample pairs, then every unordered combination
    let mut counter = 0usize;
    for ty in &taxonomy.types {
        let rep = ty.representative();
        if rep.members.len() < params.pairs_per_subtype {
            return Err(DatasetError::InsufficientPairs(format!(
                "{}:{}",
                ty.id, rep.id
            )));
        }
        let idx = sample_indices(&mut rng, rep.members.len(), params.pairs_per_subtype)?;
        let sref = SubtypeRef {
            type_id: ty.id,
            subtype_id: rep.id.clone(),
        };
        for i in 0..idx.len() {
            for j in i + 1..idx.len() {
                counter += 1;
                out.push(Comparison {
                    id: format!("w{counter:06}"),
                    left: rep.members[idx[i]].pair.clone(),
                    right: rep.members[idx[j]].pair.clone(),
                    kind: ComparisonKind::WithinSubtype,
                    left_subtype: sref.clone(),
                    right_subtype: sref.clone(),
                    ratings: Vec::new(),
                    ratings_left_first: Vec::new(),
                    ratings_right_first: Vec::new(),
                });
            }
        }
    }

    // between-subtype population: per type, every cross product of member
    // pairs from two different subtypes (taxonomy order)
    let mut bs_cells: Vec<(SubtypeRef, SubtypeRef, usize, usize)> = Vec::new(); // (s1, s2, |s1|, |s2|)
    for ty in &taxonomy.types {
        for a in 0..ty.subtypes.len() {
            for b in a + 1..ty.subtypes.len() {
                bs_cells.push((
                    SubtypeRef {
                        type_id: ty.id,
                        subtype_id: ty.subtypes[a].id.clone(),
                    },
                    SubtypeRef {
                        type_id: ty.id,
                        subtype_id: ty.subtypes[b].id.clone(),
                    },
                    ty.subtypes[a].members.len(),
                    ty.subtypes[b].members.len(),
                ));
            }
        }
    }
    emit_sampled(
        taxonomy,
        &mut rng,
        &bs_cells,
        params.n_between_subtype,
        ComparisonKind::BetweenSubtype,
        'b',
        &mut out,
    )?;

    // between-type population: representative subtypes of different types
    let mut bt_cells: Vec<(SubtypeRef, SubtypeRef, usize, usize)> = Vec::new();
    for a in 0..taxonomy.types.len() {
        for b in a + 1..taxonomy.types.len() {
            let (ta, tb) = (&taxonomy.types[a], &taxonomy.types[b]);
            let (ra, rb) = (ta.representative(), tb.representative());
            bt_cells.push((
                SubtypeRef {
                    type_id: ta.id,
                    subtype_id: ra.id.clone(),
                },
                SubtypeRef {
                    type_id: tb.id,
                    subtype_id: rb.id.clone(),
                },
                ra.members.len(),
                rb.members.len(),
            ));
        }
    }
    emit_sampled(
        taxonomy,
        &mut rng,
        &bt_cells,
        params.n_between_type,
        ComparisonKind::BetweenType,
        't',
        &mut out,
    )?;

    debug_assert!(out.iter().all(|c| c.kind_is_consistent()));
    Ok(out)
}

/// Sample `count` comparisons uniformly without replacement from the
/// population described by `cells` (each cell is a subtype pair with the
/// full cross product of its member pairs as candidates).
fn emit_sampled(
    taxonomy: &RelationTaxonomy,
    rng: &mut Xoshiro256StarStar,
    cells: &[(SubtypeRef, SubtypeRef, usize, usize)],
    count: usize,
    kind: ComparisonKind,
    prefix: char,
    out: &mut Vec<Comparison>,
) -> Result<(), DatasetError> {
    let population: usize = cells.iter().map(|(_, _, a, b)| a * b).sum();
    let indices = sample_indices(rng, population, count)?;
    let mut counter = 0usize;
    let mut cell_iter = cells.iter();
    let mut cell = cell_iter.next();
    let mut offset = 0usize;
    for global in indices {
        // advance to the owning cell (indices are sorted)
        while let Some((_, _, a, b)) = cell {
            if global < offset + a * b {
                break;
            }
            offset += a * b;
            cell = cell_iter.next();
        }
        let (s1, s2, _, b) = cell.expect("index within population");
        let local = global - offset;
        let (i, j) = (local / b, local % b);
        let left = taxonomy.subtype(s1).expect("cell subtype exists").members[i]
            .pair
            .clone();
        let right = taxonomy.subtype(s2).expect("cell subtype exists").members[j]
            .pair
            .clone();
        counter += 1;
        out.push(Comparison {
            id: format!("{prefix}{counter:06}"),
            left,
            right,
            kind,
            left_subtype: s1.clone(),
            right_subtype: s2.clone(),
            ratings: Vec::new(),
            ratings_left_first: Vec::new(),
            ratings_right_first: Vec::new(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Default)]
pub struct RatingsReport {
    pub attached: usize,
    pub unknown_ids: Vec<String>,
}

/// Attach ratings to comparisons in place. Rows with an unknown id are
/// collected in the report rather than failing the load.
pub fn load_ratings<R: Read>(
    reader: R,
    comparisons: &mut [Comparison],
) -> Result<RatingsReport, DatasetError> {
    let mut csv = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = header_map(&mut csv)?;
    let by_id: HashMap<String, usize> = comparisons
        .iter()
        .enumerate()
        .map(|(i, c)| (c.id.clone(), i))
        .collect();
    let mut report = RatingsReport::default();
    for (i, rec) in csv.records().enumerate() {
        let line = i + 2;
        let rec = rec?;
        let id = get(&rec, &headers, "comparison_id", line)?;
        let rating: i64 = get(&rec, &headers, "rating", line)?.parse().map_err(|_| {
            DatasetError::MalformedRow {
                line,
                reason: "rating is not an integer".into(),
            }
        })?;
        if !(1..=7).contains(&rating) {
            return Err(DatasetError::RatingOutOfRange {
                line,
                value: rating,
            });
        }
        let Some(&slot) = by_id.get(id) else {
            report.unknown_ids.push(id.to_owned());
            continue;
        };
        let c = &mut comparisons[slot];
        c.ratings.push(rating as u8);
        match headers.get("presentation_order").and_then(|&i| rec.get(i)) {
            Some("left_first") => c.ratings_left_first.push(rating as u8),
            Some("right_first") => c.ratings_right_first.push(rating as u8),
            Some("") | None => {}
            Some(other) => {
                return Err(DatasetError::MalformedRow {
                    line,
                    reason: format!("unknown presentation_order {other:?}"),
                })
            }
        }
        report.attached += 1;
    }
    Ok(report)
}

pub fn mean_rating(comparison: &Comparison) -> Result<f64, DatasetError> {
    if comparison.ratings.is_empty() {
        return Err(DatasetError::NoRatings(comparison.id.clone()));
    }
    Ok(comparison.ratings.iter().map(|&r| r as f64).sum::<f64>() / comparison.ratings.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KindSummary {
    pub kind: ComparisonKind,
    pub mean: f64,
    pub sd: f64,
    pub count: usize,
}

/// Mean and sample sd of per-comparison mean ratings, grouped by kind.
/// Comparisons without ratings are skipped.
pub fn summarize(comparisons: &[Comparison]) -> Vec<KindSummary> {
    let mut by_kind: Vec<(ComparisonKind, Vec<f64>)> = vec![
        (ComparisonKind::WithinSubtype, Vec::new()),
        (ComparisonKind::BetweenSubtype, Vec::new()),
        (ComparisonKind::BetweenType, Vec::new()),
    ];
    for c in comparisons {
        if let Ok(m) = mean_rating(c) {
            by_kind
                .iter_mut()
                .find(|(k, _)| *k == c.kind)
                .unwrap()
                .1
                .push(m);
        }
    }
    by_kind
        .into_iter()
        .filter(|(_, v)| !v.is_empty())
        .map(|(kind, v)| {
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let sd = if v.len() > 1 {
                (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            KindSummary {
                kind,
                mean,
                sd,
                count: v.len(),
            }
        })
        .collect()
}

/// RFC-4180 CSV export of a comparison list.
pub fn write_comparisons<W: Write>(
    comparisons: &[Comparison],
    writer: W,
) -> Result<(), DatasetError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "id",
        "kind",
        "left1",
        "left2",
        "right1",
        "right2",
        "left_subtype",
        "right_subtype",
    ])?;
    for c in comparisons {
        w.write_record([
            c.id.as_str(),
            c.kind.name(),
            &c.left.first,
            &c.left.second,
            &c.right.first,
            &c.right.second,
            &c.left_subtype.to_string(),
            &c.right_subtype.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Read a comparison list in the export schema above.
pub fn load_comparisons<R: Read>(reader: R) -> Result<Vec<Comparison>, DatasetError> {
    let mut csv = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = header_map(&mut csv)?;
    let mut out = Vec::new();
    for (i, rec) in csv.records().enumerate() {
        let line = i + 2;
        let rec = rec?;
        let parse_sref = |s: &str| -> Result<SubtypeRef, DatasetError> {
            let (t, sub) = s
                .split_once(':')
                .ok_or_else(|| DatasetError::MalformedRow {
                    line,
                    reason: format!("subtype ref {s:?} is not type:subtype"),
                })?;
            Ok(SubtypeRef {
                type_id: t.parse().map_err(|_| DatasetError::MalformedRow {
                    line,
                    reason: "subtype ref type_id is not an integer".into(),
                })?,
                subtype_id: sub.to_owned(),
            })
        };
        let kind: ComparisonKind = get(&rec, &headers, "kind", line)?
            .parse()
            .map_err(|reason| DatasetError::MalformedRow { line, reason })?;
        out.push(Comparison {
            id: get(&rec, &headers, "id", line)?.to_owned(),
            left: WordPair::new(
                get(&rec, &headers, "left1", line)?,
                get(&rec, &headers, "left2", line)?,
            ),
            right: WordPair::new(
                get(&rec, &headers, "right1", line)?,
                get(&rec, &headers, "right2", line)?,
            ),
            kind,
            left_subtype: parse_sref(get(&rec, &headers, "left_subtype", line)?)?,
            right_subtype: parse_sref(get(&rec, &headers, "right_subtype", line)?)?,
            ratings: Vec::new(),
            ratings_left_first: Vec::new(),
            ratings_right_first: Vec::new(),
        });
    }
    Ok(out)
}

pub fn load_triads<R: Read>(reader: R) -> Result<Vec<Triad>, DatasetError> {
    let mut csv = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = header_map(&mut csv)?;
    let mut out = Vec::new();
    for (i, rec) in csv.records().enumerate() {
        let line = i + 2;
        let rec = rec?;
        let pair = |n: usize| -> Result<WordPair, DatasetError> {
            Ok(WordPair::new(
                get(&rec, &headers, &format!("pair{n}_first"), line)?,
                get(&rec, &headers, &format!("pair{n}_second"), line)?,
            ))
        };
        let pairs = [pair(1)?, pair(2)?, pair(3)?];
        if pairs[0] == pairs[1] || pairs[1] == pairs[2] || pairs[0] == pairs[2] {
            return Err(DatasetError::MalformedRow {
                line,
                reason: "triad must contain three distinct pairs".into(),
            });
        }
        out.push(Triad {
            id: get(&rec, &headers, "triad_id", line)?.to_owned(),
            pairs,
            ratings: [Vec::new(), Vec::new(), Vec::new()],
        });
    }
    Ok(out)
}

pub fn load_triad_ratings<R: Read>(
    reader: R,
    triads: &mut [Triad],
) -> Result<RatingsReport, DatasetError> {
    let mut csv = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = header_map(&mut csv)?;
    let by_id: HashMap<String, usize> = triads
        .iter()
        .enumerate()
        .map(|(i, t)| (t.id.clone(), i))
        .collect();
    let mut report = RatingsReport::default();
    for (i, rec) in csv.records().enumerate() {
        let line = i + 2;
        let rec = rec?;
        let id = get(&rec, &headers, "triad_id", line)?;
        let ty = get(&rec, &headers, "analogy_type", line)?;
        let slot = ANALOGY_TYPE_NAMES
            .iter()
            .position(|n| *n == ty)
            .ok_or_else(|| DatasetError::MalformedRow {
                line,
                reason: format!("analogy_type must be one of 1-2, 2-3, 1-3, got {ty:?}"),
            })?;
        let rating: i64 = get(&rec, &headers, "rating", line)?.parse().map_err(|_| {
            DatasetError::MalformedRow {
                line,
                reason: "rating is not an integer".into(),
            }
        })?;
        if !(1..=7).contains(&rating) {
            return Err(DatasetError::RatingOutOfRange {
                line,
                value: rating,
            });
        }
        let Some(&t) = by_id.get(id) else {
            report.unknown_ids.push(id.to_owned());
            continue;
        };
        triads[t].ratings[slot].push(rating as u8);
        report.attached += 1;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn synthetic_taxonomy_csv(
        n_types: u8,
        subtypes_per_type: usize,
        pairs_per_subtype: usize,
    ) -> String {
        let mut s = String::from("type_id,type_name,subtype_id,subtype_name,word1,word2\n");
        for t in 1..=n_types {
            for st in 1..=subtypes_per_type {
                for p in 0..pairs_per_subtype {
                    s.push_str(&format!(
                        "{t},type{t},{st},sub{t}_{st},a{t}_{st}_{p},b{t}_{st}_{p}\n"
                    ));
                }
            }
        }
        s
    }

    #[test]
    fn taxonomy_two_row_fixture() {
        let csv = "type_id,type_name,subtype_id,subtype_name,word1,word2\n\
                   1,class-inclusion,1,Taxonomic,flower,tulip\n\
                   1,class-inclusion,1,Taxonomic,river,Nile\n";
        let (tax, rep) = load_taxonomy(csv.as_bytes()).unwrap();
        assert_eq!(tax.types.len(), 1);
        assert_eq!(tax.types[0].subtypes.len(), 1);
        assert_eq!(tax.types[0].subtypes[0].members.len(), 2);
        assert!(rep.duplicate_pairs.is_empty());
    }

    #[test]
    fn taxonomy_rejects_out_of_range_type() {
        let csv = "type_id,type_name,subtype_id,subtype_name,word1,word2\n\
                   11,bogus,1,sub,a,b\n";
        assert!(matches!(
            load_taxonomy(csv.as_bytes()),
            Err(DatasetError::MalformedRow { line: 2, .. })
        ));
    }

    #[test]
    fn taxonomy_duplicates_first_kept() {
        let csv = "type_id,type_name,subtype_id,subtype_name,word1,word2,prototypicality\n\
                   1,t,1,s,car,engine,0.9\n\
                   1,t,1,s,car,engine,0.1\n";
        let (tax, rep) = load_taxonomy(csv.as_bytes()).unwrap();
        assert_eq!(tax.types[0].subtypes[0].members.len(), 1);
        assert_eq!(
            tax.types[0].subtypes[0].members[0].prototypicality,
            Some(0.9)
        );
        assert_eq!(rep.duplicate_pairs.len(), 1);
    }

    #[test]
    fn taxonomy_full_synthetic_count() {
        let csv = synthetic_taxonomy_csv(10, 1, 30);
        let (tax, _) = load_taxonomy(csv.as_bytes()).unwrap();
        assert_eq!(tax.n_pairs(), 300);
    }

    #[test]
    fn design_counts_match_experiment_one() {
        let csv = synthetic_taxonomy_csv(10, 2, 30);
        let (tax, _) = load_taxonomy(csv.as_bytes()).unwrap();
        let comps = generate_comparisons(&tax, 7, &DesignParams::default()).unwrap();
        let count = |k: ComparisonKind| comps.iter().filter(|c| c.kind == k).count();
        assert_eq!(count(ComparisonKind::WithinSubtype), 4350);
        assert_eq!(count(ComparisonKind::BetweenSubtype), 925);
        assert_eq!(count(ComparisonKind::BetweenType), 925);
        assert_eq!(comps.len(), 6200);
        assert!(comps.iter().all(|c| c.kind_is_consistent()));
        assert!(comps.iter().all(|c| c.left != c.right));
    }

    #[test]
    fn design_small_combinatorics() {
        let csv = synthetic_taxonomy_csv(2, 2, 3);
        let (tax, _) = load_taxonomy(csv.as_bytes()).unwrap();
        let params = DesignParams {
            pairs_per_subtype: 3,
            n_between_subtype: 4,
            n_between_type: 4,
        };
        let comps = generate_comparisons(&tax, 1, &params).unwrap();
        // C(3,2) = 3 within per subtype, 2 subtype representatives
        assert_eq!(
            comps
                .iter()
                .filter(|c| c.kind == ComparisonKind::WithinSubtype)
                .count(),
            6
        );
    }

    #[test]
    fn design_is_deterministic_and_seed_sensitive() {
        let csv = synthetic_taxonomy_csv(3, 2, 10);
        let (tax, _) = load_taxonomy(csv.as_bytes()).unwrap();
        let params = DesignParams {
            pairs_per_subtype: 5,
            n_between_subtype: 10,
            n_between_type: 10,
        };
        let a = generate_comparisons(&tax, 42, &params).unwrap();
        let b = generate_comparisons(&tax, 42, &params).unwrap();
        let ser = |v: &[Comparison]| {
            let mut buf = Vec::new();
            write_comparisons(v, &mut buf).unwrap();
            buf
        };
        assert_eq!(ser(&a), ser(&b));
        let c = generate_comparisons(&tax, 43, &params).unwrap();
        assert_ne!(ser(&a), ser(&c));
    }

    #[test]
    fn design_errors() {
        let csv = synthetic_taxonomy_csv(2, 1, 5);
        let (tax, _) = load_taxonomy(csv.as_bytes()).unwrap();
        assert!(matches!(
            generate_comparisons(&tax, 0, &DesignParams::default()),
            Err(DatasetError::InsufficientPairs(_))
        ));
        let params = DesignParams {
            pairs_per_subtype: 5,
            n_between_subtype: 0,
            n_between_type: 100_000,
        };
        assert!(matches!(
            generate_comparisons(&tax, 0, &params),
            Err(DatasetError::RequestExceedsPopulation { .. })
        ));
    }

    fn tiny_comparisons() -> Vec<Comparison> {
        let csv = synthetic_taxonomy_csv(2, 2, 3);
        let (tax, _) = load_taxonomy(csv.as_bytes()).unwrap();
        let params = DesignParams {
            pairs_per_subtype: 3,
            n_between_subtype: 2,
            n_between_type: 2,
        };
        generate_comparisons(&tax, 5, &params).unwrap()
    }

    #[test]
    fn ratings_attach_and_split_by_order() {
        let mut comps = tiny_comparisons();
        let id = comps[0].id.clone();
        let csv = format!(
            "comparison_id,rating,presentation_order\n\
             {id},7,left_first\n{id},5,right_first\n{id},3,\n"
        );
        let rep = load_ratings(csv.as_bytes(), &mut comps).unwrap();
        assert_eq!(rep.attached, 3);
        assert_eq!(comps[0].ratings, vec![7, 5, 3]);
        assert_eq!(comps[0].ratings_left_first, vec![7]);
        assert_eq!(comps[0].ratings_right_first, vec![5]);
        assert_eq!(mean_rating(&comps[0]).unwrap(), 5.0);
    }

    #[test]
    fn ratings_out_of_range_and_unknown_id() {
        let mut comps = tiny_comparisons();
        let csv = "comparison_id,rating\nw000001,8\n";
        assert!(matches!(
            load_ratings(csv.as_bytes(), &mut comps),
            Err(DatasetError::RatingOutOfRange { value: 8, .. })
        ));
        let csv = "comparison_id,rating\nnosuch,5\n";
        let rep = load_ratings(csv.as_bytes(), &mut comps).unwrap();
        assert_eq!(rep.unknown_ids, vec!["nosuch"]);
    }

    #[test]
    fn mean_and_summary() {
        let mut comps = tiny_comparisons();
        assert!(matches!(
            mean_rating(&comps[0]),
            Err(DatasetError::NoRatings(_))
        ));
        comps[0].ratings = vec![7, 7, 7];
        comps[1].ratings = vec![1, 7];
        let s = summarize(&comps);
        let within = s
            .iter()
            .find(|k| k.kind == ComparisonKind::WithinSubtype)
            .unwrap();
        assert_eq!(within.count, 2);
        assert!((within.mean - 5.5).abs() < 1e-12); // mean of 7.0 and 4.0
        assert!((within.sd - (2.0f64 * 1.5 * 1.5).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn comparison_csv_round_trip() {
        let comps = tiny_comparisons();
        let mut buf = Vec::new();
        write_comparisons(&comps, &mut buf).unwrap();
        let loaded = load_comparisons(&buf[..]).unwrap();
        assert_eq!(loaded.len(), comps.len());
        for (a, b) in comps.iter().zip(&loaded) {
            assert_eq!(a.id, b.id);
            assert_eq!(a.kind, b.kind);
            assert_eq!(a.left, b.left);
            assert_eq!(a.right, b.right);
            assert_eq!(a.left_subtype, b.left_subtype);
        }
    }

    #[test]
    fn triads_load_with_ratings() {
        let triads_csv =
            "triad_id,pair1_first,pair1_second,pair2_first,pair2_second,pair3_first,pair3_second\n\
            t1,nurse,patient,mother,baby,frog,tadpole\n";
        let mut triads = load_triads(triads_csv.as_bytes()).unwrap();
        assert_eq!(triads.len(), 1);
        let ratings_csv = "triad_id,analogy_type,rating\n\
            t1,1-2,6\nt1,2-3,5\nt1,1-3,2\nt1,1-3,3\n";
        let rep = load_triad_ratings(ratings_csv.as_bytes(), &mut triads).unwrap();
        assert_eq!(rep.attached, 4);
        assert_eq!(triads[0].ratings[0], vec![6]);
        assert_eq!(triads[0].ratings[2], vec![2, 3]);
    }
}
