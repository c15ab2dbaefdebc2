//! Word similarity used to pick the topic-bearing token.
//!
//! Three interchangeable scorers, all returning values in `[0, 1]` with
//! `score(x, x) = 1` for non-empty `x`:
//!
//! * `exact` — 1 when the case-folded words are equal, else 0.
//! * `trigram` — Jaccard overlap of case-folded character trigrams over
//!   words padded with one `#` boundary marker on each side.
//! * `embedding` — cosine similarity clamped at 0, looked up in an
//!   external table of unit vectors; out-of-table words fall back to the
//!   trigram score.

use std::collections::{HashMap, HashSet};
use std::io::BufRead;
use std::path::Path;

use thiserror::Error;

const BOUNDARY: char = '#';

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimilarityKind {
    Exact,
    Trigram,
    Embedding,
}

impl std::str::FromStr for SimilarityKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(SimilarityKind::Exact),
            "trigram" => Ok(SimilarityKind::Trigram),
            "embedding" => Ok(SimilarityKind::Embedding),
            other => Err(format!("unknown similarity kind `{other}`")),
        }
    }
}

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("failed to read embedding table: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed embedding record on line {line}")]
    MalformedLine { line: usize },
    #[error("dimension mismatch on line {line}: expected {expected}, found {found}")]
    DimensionMismatch { line: usize, expected: usize, found: usize },
}

/// Word vectors keyed by case-folded word, unit length after load.
#[derive(Debug, Clone, Default)]
pub struct EmbeddingTable {
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    /// Read records `word v1 v2 … vd` from a text file. Every record must
    /// have the same dimension; zero vectors are treated as absent.
    pub fn load(path: &Path) -> Result<Self, EmbeddingError> {
        let file = std::fs::File::open(path)?;
        Self::from_reader(std::io::BufReader::new(file))
    }

    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self, EmbeddingError> {
        let mut vectors = HashMap::new();
        let mut dim = None;
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let line_no = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let word = parts
                .next()
                .ok_or(EmbeddingError::MalformedLine { line: line_no })?;
            let values: Result<Vec<f64>, _> = parts.map(str::parse).collect();
            let values = values.map_err(|_| EmbeddingError::MalformedLine { line: line_no })?;
            if values.is_empty() {
                return Err(EmbeddingError::MalformedLine { line: line_no });
            }
            match dim {
                None => dim = Some(values.len()),
                Some(expected) if expected != values.len() => {
                    return Err(EmbeddingError::DimensionMismatch {
                        line: line_no,
                        expected,
                        found: values.len(),
                    });
                }
                _ => {}
            }
            let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                let unit: Vec<f64> = values.iter().map(|v| v / norm).collect();
                vectors.insert(word.to_lowercase(), unit);
            }
        }
        Ok(EmbeddingTable { vectors })
    }

    pub fn get(&self, word: &str) -> Option<&Vec<f64>> {
        self.vectors.get(&word.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// A similarity scorer: a kind plus the optional embedding table the
/// `embedding` kind reads. Read-only after construction.
#[derive(Debug, Clone)]
pub struct SimilarityProvider {
    pub kind: SimilarityKind,
    pub table: Option<EmbeddingTable>,
}

impl SimilarityProvider {
    pub fn exact() -> Self {
        SimilarityProvider { kind: SimilarityKind::Exact, table: None }
    }

    pub fn trigram() -> Self {
        SimilarityProvider { kind: SimilarityKind::Trigram, table: None }
    }

    pub fn embedding(table: EmbeddingTable) -> Self {
        SimilarityProvider { kind: SimilarityKind::Embedding, table: Some(table) }
    }

    /// Score two words in `[0, 1]`.
    pub fn score(&self, a: &str, b: &str) -> f64 {
        let a_folded = a.to_lowercase();
        let b_folded = b.to_lowercase();
        if !a_folded.is_empty() && a_folded == b_folded {
            return 1.0;
        }
        match self.kind {
            SimilarityKind::Exact => 0.0,
            SimilarityKind::Trigram => trigram_jaccard(&a_folded, &b_folded),
            SimilarityKind::Embedding => {
                let vectors = self
                    .table
                    .as_ref()
                    .and_then(|t| Some((t.get(&a_folded)?, t.get(&b_folded)?)));
                match vectors {
                    Some((va, vb)) => {
                        let dot: f64 = va.iter().zip(vb).map(|(x, y)| x * y).sum();
                        dot.clamp(0.0, 1.0)
                    }
                    None => trigram_jaccard(&a_folded, &b_folded),
                }
            }
        }
    }
}

fn trigrams(word: &str) -> HashSet<Vec<char>> {
    let padded: Vec<char> = std::iter::once(BOUNDARY)
        .chain(word.chars())
        .chain(std::iter::once(BOUNDARY))
        .collect();
    padded.windows(3).map(|w| w.to_vec()).collect()
}

fn trigram_jaccard(a: &str, b: &str) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let ta = trigrams(a);
    let tb = trigrams(b);
    let intersection = ta.intersection(&tb).count();
    let union = ta.len() + tb.len() - intersection;
    if union == 0 {
        0.0
    } else {
        intersection as f64 / union as f64
    }
}
