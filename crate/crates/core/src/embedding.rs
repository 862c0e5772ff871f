//! Embedding-space storage and the two interchange formats.
//!
//! Text format: one line per token, `token f1 f2 ... fd`, dimension
//! inferred from the first valid line. Binary format: ASCII header
//! `vocab_size dim\n`, then per entry the token bytes terminated by a
//! single space followed by `dim` little-endian f32 values; a single
//! trailing newline after each vector is tolerated.
//!
//! Tokens are byte strings. Binary files in the wild contain non-UTF-8
//! tokens, so only the text format requires UTF-8. Storage is f32 on disk
//! and in memory; all arithmetic promotes to f64.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use thiserror::Error;

/// Longest token accepted by the binary reader. Anything longer signals a
/// desynchronized stream rather than a real token.
const MAX_TOKEN_BYTES: usize = 1000;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("no valid embedding line in input")]
    EmptyInput,
    #[error("line {line}: expected {expected} values, found {found}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("binary header is not `vocab_size dim`: {0}")]
    HeaderParseError(String),
    #[error("stream ended inside entry {entry}")]
    TruncatedFile { entry: usize },
    #[error(
        "token longer than {MAX_TOKEN_BYTES} bytes at entry {entry}; stream is desynchronized"
    )]
    TokenTooLong { entry: usize },
    #[error("non-finite value for token {token:?}")]
    NonFiniteValue { token: String },
    #[error("token not in vocabulary: {0}")]
    MissingToken(String),
    #[error("zero vector for token {0}")]
    ZeroVector(String),
    #[error("cannot serialize an empty embedding space")]
    InvalidSpace,
    #[error("duplicate token {0}")]
    DuplicateToken(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// What a loader saw besides the space itself.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize)]
pub struct LoadReport {
    pub vocab_size: usize,
    pub dim: usize,
    pub skipped_lines: usize,
    /// Tokens seen more than once. Only the first occurrence was kept.
    pub duplicate_tokens: Vec<String>,
}

/// Immutable vocabulary-indexed matrix of d-dimensional word vectors.
///
/// Safe for unlimited concurrent readers once constructed.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSpace {
    dim: usize,
    tokens: Vec<Vec<u8>>,
    matrix: Vec<f32>, // row-major, tokens.len() * dim
    index: HashMap<Vec<u8>, usize>,
}

impl EmbeddingSpace {
    /// Build a space from `(token, row)` pairs, rejecting duplicates,
    /// dimension mismatches, and non-finite values.
    pub fn from_rows<I>(rows: I) -> Result<Self, EmbeddingError>
    where
        I: IntoIterator<Item = (Vec<u8>, Vec<f32>)>,
    {
        let mut dim = 0usize;
        let mut tokens = Vec::new();
        let mut matrix = Vec::new();
        let mut index = HashMap::new();
        for (line, (token, row)) in rows.into_iter().enumerate() {
            if tokens.is_empty() {
                dim = row.len();
            }
            if row.len() != dim || dim == 0 {
                return Err(EmbeddingError::DimensionMismatch {
                    line: line + 1,
                    expected: dim,
                    found: row.len(),
                });
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(EmbeddingError::NonFiniteValue {
                    token: String::from_utf8_lossy(&token).into_owned(),
                });
            }
            if index.contains_key(&token) {
                return Err(EmbeddingError::DuplicateToken(
                    String::from_utf8_lossy(&token).into_owned(),
                ));
            }
            index.insert(token.clone(), tokens.len());
            tokens.push(token);
            matrix.extend_from_slice(&row);
        }
        if tokens.is_empty() {
            return Err(EmbeddingError::EmptyInput);
        }
        Ok(Self {
            dim,
            tokens,
            matrix,
            index,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Vocabulary size.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token(&self, row: usize) -> &[u8] {
        &self.tokens[row]
    }

    pub fn token_string(&self, row: usize) -> String {
        String::from_utf8_lossy(&self.tokens[row]).into_owned()
    }

    pub fn tokens(&self) -> impl Iterator<Item = &[u8]> {
        self.tokens.iter().map(|t| t.as_slice())
    }

    pub fn row(&self, row: usize) -> &[f32] {
        &self.matrix[row * self.dim..(row + 1) * self.dim]
    }

    /// Row promoted to f64 for arithmetic.
    pub fn row_f64(&self, row: usize) -> Vec<f64> {
        self.row(row).iter().map(|&x| x as f64).collect()
    }

    pub fn row_index(&self, token: &str) -> Option<usize> {
        self.index.get(token.as_bytes()).copied()
    }

    /// Exact-match row lookup; with `fold_case` set, a miss retries with
    /// the lowercased token.
    pub fn lookup(&self, token: &str, fold_case: bool) -> Result<usize, EmbeddingError> {
        if let Some(&row) = self.index.get(token.as_bytes()) {
            return Ok(row);
        }
        if fold_case {
            let lower = token.to_lowercase();
            if let Some(&row) = self.index.get(lower.as_bytes()) {
                return Ok(row);
            }
        }
        Err(EmbeddingError::MissingToken(token.to_owned()))
    }

    pub fn vector(&self, token: &str, fold_case: bool) -> Result<Vec<f64>, EmbeddingError> {
        Ok(self.row_f64(self.lookup(token, fold_case)?))
    }

    /// A copy with every row scaled to unit Euclidean norm.
    pub fn normalize(&self) -> Result<EmbeddingSpace, EmbeddingError> {
        let mut matrix = Vec::with_capacity(self.matrix.len());
        for r in 0..self.len() {
            let row = self.row(r);
            let mut acc = 0.0f64;
            for &x in row {
                acc += (x as f64) * (x as f64);
            }
            let n = acc.sqrt();
            if n == 0.0 {
                return Err(EmbeddingError::ZeroVector(self.token_string(r)));
            }
            matrix.extend(row.iter().map(|&x| ((x as f64) / n) as f32));
        }
        Ok(EmbeddingSpace {
            dim: self.dim,
            tokens: self.tokens.clone(),
            matrix,
            index: self.index.clone(),
        })
    }
}

/// Parse the text interchange format. Lenient mode (the default in the
/// CLI) skips and counts lines with the wrong field count or unparsable
/// floats; strict mode turns the first such line into an error.
pub fn load_text<R: BufRead>(
    mut reader: R,
    strict: bool,
) -> Result<(EmbeddingSpace, LoadReport), EmbeddingError> {
    let mut dim: Option<usize> = None;
    let mut rows: Vec<(Vec<u8>, Vec<f32>)> = Vec::new();
    let mut index: HashMap<Vec<u8>, usize> = HashMap::new();
    let mut report = LoadReport::default();
    let mut line_no = 0usize;
    let mut line = String::new();

    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            break;
        }
        line_no += 1;
        let mut fields = line.split_whitespace();
        let token = match fields.next() {
            Some(t) => t,
            None => {
                report.skipped_lines += 1;
                continue;
            }
        };
        let values: Option<Vec<f32>> = fields.map(|f| f.parse::<f32>().ok()).collect();
        let values = match values {
            Some(v) if !v.is_empty() && v.iter().all(|x| x.is_finite()) => v,
            _ => {
                if strict {
                    return Err(EmbeddingError::DimensionMismatch {
                        line: line_no,
                        expected: dim.unwrap_or(0),
                        found: 0,
                    });
                }
                report.skipped_lines += 1;
                continue;
            }
        };
        match dim {
            None => dim = Some(values.len()),
            Some(d) if values.len() != d => {
                if strict {
                    return Err(EmbeddingError::DimensionMismatch {
                        line: line_no,
                        expected: d,
                        found: values.len(),
                    });
                }
                report.skipped_lines += 1;
                continue;
            }
            Some(_) => {}
        }
        let key = token.as_bytes().to_vec();
        if index.contains_key(&key) {
            report.duplicate_tokens.push(token.to_owned());
            continue;
        }
        index.insert(key.clone(), rows.len());
        rows.push((key, values));
    }

    let space = EmbeddingSpace::from_rows(rows)?;
    report.vocab_size = space.len();
    report.dim = space.dim();
    Ok((space, report))
}

fn read_token<R: BufRead>(reader: &mut R, entry: usize) -> Result<Option<Vec<u8>>, EmbeddingError> {
    let mut token = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        match reader.read(&mut byte)? {
            0 => {
                if token.is_empty() {
                    return Ok(None);
                }
                return Err(EmbeddingError::TruncatedFile { entry });
            }
            _ => {
                if byte[0] == b' ' {
                    return Ok(Some(token));
                }
                token.push(byte[0]);
                if token.len() > MAX_TOKEN_BYTES {
                    return Err(EmbeddingError::TokenTooLong { entry });
                }
            }
        }
    }
}

/// Parse the binary interchange format. Float bit patterns are preserved
/// exactly.
pub fn load_binary<R: BufRead>(
    mut reader: R,
) -> Result<(EmbeddingSpace, LoadReport), EmbeddingError> {
    let mut header = String::new();
    reader.read_line(&mut header)?;
    let mut parts = header.split_whitespace();
    let vocab_size: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| EmbeddingError::HeaderParseError(header.trim().to_owned()))?;
    let dim: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| EmbeddingError::HeaderParseError(header.trim().to_owned()))?;
    if parts.next().is_some() || vocab_size == 0 || dim == 0 {
        return Err(EmbeddingError::HeaderParseError(header.trim().to_owned()));
    }

    let mut rows: Vec<(Vec<u8>, Vec<f32>)> = Vec::with_capacity(vocab_size);
    let mut index: HashMap<Vec<u8>, usize> = HashMap::new();
    let mut report = LoadReport::default();

    for entry in 0..vocab_size {
        let token = match read_token(&mut reader, entry)? {
            Some(t) => t,
            None => return Err(EmbeddingError::TruncatedFile { entry }),
        };
        let mut buf = vec![0u8; dim * 4];
        reader
            .read_exact(&mut buf)
            .map_err(|_| EmbeddingError::TruncatedFile { entry })?;
        let values: Vec<f32> = buf
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        if values.iter().any(|x| !x.is_finite()) {
            return Err(EmbeddingError::NonFiniteValue {
                token: String::from_utf8_lossy(&token).into_owned(),
            });
        }
        // Tolerate one trailing newline after the vector.
        let peek = reader.fill_buf()?;
        if peek.first() == Some(&b'\n') {
            reader.consume(1);
        }
        if index.contains_key(&token) {
            report
                .duplicate_tokens
                .push(String::from_utf8_lossy(&token).into_owned());
            continue;
        }
        index.insert(token.clone(), rows.len());
        rows.push((token, values));
    }

    let space = EmbeddingSpace::from_rows(rows)?;
    report.vocab_size = space.len();
    report.dim = space.dim();
    Ok((space, report))
}

/// Serialize as text. f32 values use Rust's shortest round-trip-exact
/// decimal form, so `load_text(write_text(s))` is bit-identical.
pub fn write_text<W: Write>(space: &EmbeddingSpace, mut writer: W) -> Result<(), EmbeddingError> {
    if space.is_empty() {
        return Err(EmbeddingError::InvalidSpace);
    }
    let mut line = String::new();
    for r in 0..space.len() {
        writer.write_all(space.token(r))?;
        line.clear();
        for &x in space.row(r) {
            line.push(' ');
            line.push_str(&format!("{x}"));
        }
        line.push('\n');
        writer.write_all(line.as_bytes())?;
    }
    Ok(())
}

pub fn write_binary<W: Write>(space: &EmbeddingSpace, mut writer: W) -> Result<(), EmbeddingError> {
    if space.is_empty() {
        return Err(EmbeddingError::InvalidSpace);
    }
    writer.write_all(format!("{} {}\n", space.len(), space.dim()).as_bytes())?;
    for r in 0..space.len() {
        writer.write_all(space.token(r))?;
        writer.write_all(b" ")?;
        for &x in space.row(r) {
            writer.write_all(&x.to_le_bytes())?;
        }
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Sniff whether a stream starts with the binary header (`int int\n` in
/// ASCII). Used by the CLI's format auto-detection.
pub fn looks_binary(prefix: &[u8]) -> bool {
    let Some(end) = prefix.iter().position(|&b| b == b'\n') else {
        return false;
    };
    let Ok(header) = std::str::from_utf8(&prefix[..end]) else {
        return false;
    };
    let fields: Vec<&str> = header.split(' ').collect();
    fields.len() == 2 && fields.iter().all(|f| f.parse::<u64>().is_ok())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn text_minimal() {
        let (s, r) = load_text("a 1 0\nb 0 1\n".as_bytes(), false).unwrap();
        assert_eq!(s.dim(), 2);
        assert_eq!(s.len(), 2);
        assert_eq!(s.token(0), b"a");
        assert_eq!(s.row(1), &[0.0, 1.0]);
        assert_eq!(r.skipped_lines, 0);
    }

    #[test]
    fn text_first_occurrence_wins() {
        let (s, r) = load_text("a 1 0\na 9 9\n".as_bytes(), false).unwrap();
        assert_eq!(r.duplicate_tokens, vec!["a"]);
        assert_eq!(s.row(0), &[1.0, 0.0]);
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn text_skips_and_counts_malformed() {
        let input = "a 1 0\nb 0 1\nbroken 1\nc 2 2\nd 3 3\ne 4 4\n";
        let (s, r) = load_text(input.as_bytes(), false).unwrap();
        assert_eq!(s.len(), 5);
        assert_eq!(r.skipped_lines, 1);
    }

    #[test]
    fn text_strict_errors_on_malformed() {
        let input = "a 1 0\nbroken 1\n";
        assert!(matches!(
            load_text(input.as_bytes(), true),
            Err(EmbeddingError::DimensionMismatch { line: 2, .. })
        ));
    }

    #[test]
    fn text_empty_input() {
        assert!(matches!(
            load_text("".as_bytes(), false),
            Err(EmbeddingError::EmptyInput)
        ));
        assert!(matches!(
            load_text("\n\n".as_bytes(), false),
            Err(EmbeddingError::EmptyInput)
        ));
    }

    #[test]
    fn binary_minimal_and_truncation() {
        let mut buf = Vec::new();
        buf.extend_from_slice(b"2 3\n");
        buf.extend_from_slice(b"x ");
        for v in [1.0f32, 2.0, 3.0] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        buf.extend_from_slice(b"y ");
        for v in [4.0f32, 5.0, 6.0] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        let (s, _) = load_binary(&buf[..]).unwrap();
        assert_eq!(s.dim(), 3);
        assert_eq!(s.len(), 2);
        assert_eq!(s.row(1), &[4.0, 5.0, 6.0]);

        let cut = &buf[..buf.len() - 5];
        assert!(matches!(
            load_binary(cut),
            Err(EmbeddingError::TruncatedFile { entry: 1 })
        ));
    }

    #[test]
    fn binary_bad_header() {
        assert!(matches!(
            load_binary("nonsense\n".as_bytes()),
            Err(EmbeddingError::HeaderParseError(_))
        ));
    }

    #[test]
    fn binary_token_too_long() {
        let mut buf = Vec::new();
        buf.extend_from_slice(b"1 1\n");
        buf.extend(std::iter::repeat_n(b'a', 1200));
        assert!(matches!(
            load_binary(&buf[..]),
            Err(EmbeddingError::TokenTooLong { entry: 0 })
        ));
    }

    #[test]
    fn binary_non_utf8_token_round_trips() {
        let token = vec![0xC3u8, 0x28, 0xFF]; // invalid UTF-8 on purpose
        let s = EmbeddingSpace::from_rows([(token.clone(), vec![1.0f32, -2.5])]).unwrap();
        let mut buf = Vec::new();
        write_binary(&s, &mut buf).unwrap();
        let (s2, _) = load_binary(&buf[..]).unwrap();
        assert_eq!(s2.token(0), token.as_slice());
        assert_eq!(s2.row(0), s.row(0));
    }

    #[test]
    fn lookup_and_fold_case() {
        let s = EmbeddingSpace::from_rows([(b"a".to_vec(), vec![1.0f32, 0.0])]).unwrap();
        assert_eq!(s.vector("a", false).unwrap(), vec![1.0, 0.0]);
        assert_eq!(s.vector("A", true).unwrap(), vec![1.0, 0.0]);
        match s.lookup("A", false) {
            Err(EmbeddingError::MissingToken(t)) => assert_eq!(t, "A"),
            other => panic!("expected MissingToken, got {other:?}"),
        }
        match s.lookup("zzz", true) {
            Err(EmbeddingError::MissingToken(t)) => assert_eq!(t, "zzz"),
            other => panic!("expected MissingToken, got {other:?}"),
        }
    }

    #[test]
    fn normalize_rows() {
        let s = EmbeddingSpace::from_rows([
            (b"a".to_vec(), vec![3.0f32, 4.0]),
            (b"b".to_vec(), vec![1.0f32, 0.0]),
        ])
        .unwrap();
        let n = s.normalize().unwrap();
        assert!((n.row(0)[0] - 0.6).abs() < 1e-7);
        assert!((n.row(0)[1] - 0.8).abs() < 1e-7);
        // idempotent
        let n2 = n.normalize().unwrap();
        for r in 0..n.len() {
            for (a, b) in n.row(r).iter().zip(n2.row(r)) {
                assert!((a - b).abs() < 1e-7);
            }
        }
        let z = EmbeddingSpace::from_rows([(b"z".to_vec(), vec![0.0f32, 0.0])]).unwrap();
        assert!(matches!(z.normalize(), Err(EmbeddingError::ZeroVector(t)) if t == "z"));
    }

    #[test]
    fn empty_space_is_rejected() {
        assert!(matches!(
            EmbeddingSpace::from_rows(Vec::<(Vec<u8>, Vec<f32>)>::new()),
            Err(EmbeddingError::EmptyInput)
        ));
    }

    #[test]
    fn seeded_round_trip_bit_exact() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_xoshiro::Xoshiro256StarStar::seed_from_u64(42);
        let rows: Vec<(Vec<u8>, Vec<f32>)> = (0..50)
            .map(|i| {
                let v: Vec<f32> = (0..20).map(|_| rng.gen_range(-5.0f32..5.0)).collect();
                (format!("tok{i}").into_bytes(), v)
            })
            .collect();
        let s = EmbeddingSpace::from_rows(rows).unwrap();

        let mut bin = Vec::new();
        write_binary(&s, &mut bin).unwrap();
        let (sb, _) = load_binary(&bin[..]).unwrap();
        assert_eq!(sb, s);

        let mut txt = Vec::new();
        write_text(&s, &mut txt).unwrap();
        let (st, _) = load_text(&txt[..], true).unwrap();
        assert_eq!(st, s);
    }

    #[test]
    fn binary_sniffing() {
        assert!(looks_binary(b"120 300\nrest"));
        assert!(!looks_binary(b"the 0.1 0.2\n"));
        assert!(!looks_binary(b"1 2 3\n"));
        assert!(!looks_binary(b"no newline"));
    }

    proptest! {
        #[test]
        fn round_trip_any_space(
            rows in proptest::collection::vec(
                (proptest::collection::vec(1u8..128, 1..6), proptest::collection::vec(-1000.0f32..1000.0, 4)),
                1..20,
            )
        ) {
            // dedupe tokens and strip space/newline bytes to stay in-format
            let mut seen = std::collections::HashSet::new();
            let rows: Vec<(Vec<u8>, Vec<f32>)> = rows
                .into_iter()
                .map(|(t, v)| {
                    let t: Vec<u8> = t.into_iter().filter(|&b| b != b' ' && b != b'\n').collect();
                    (if t.is_empty() { vec![b'_'] } else { t }, v)
                })
                .filter(|(t, _)| seen.insert(t.clone()))
                .collect();
            prop_assume!(!rows.is_empty());
            let s = EmbeddingSpace::from_rows(rows).unwrap();
            let mut bin = Vec::new();
            write_binary(&s, &mut bin).unwrap();
            let (sb, _) = load_binary(&bin[..]).unwrap();
            prop_assert_eq!(&sb, &s);
        }
    }
}
