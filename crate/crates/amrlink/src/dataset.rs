//! Dataset records, JSONL ingestion, corpus statistics, and a seeded toy
//! generator covering the four conflict types.
//!
//! One record pairs two advice texts with a conflict topic, four boolean
//! conflict labels, a split and source tag, and (optionally) the PENMAN
//! graphs and token alignments needed for graph processing.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amr::{serialize_penman, AmrAttribute, AmrEdge, AmrGraph, AmrNode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct ConflictLabels {
    pub direct: bool,
    pub subtypical: bool,
    pub conditional: bool,
    pub temporal: bool,
}

pub const LABEL_NAMES: [&str; 4] = ["direct", "subtypical", "conditional", "temporal"];

impl ConflictLabels {
    pub fn get(&self, name: &str) -> bool {
        match name {
            "direct" => self.direct,
            "subtypical" => self.subtypical,
            "conditional" => self.conditional,
            "temporal" => self.temporal,
            _ => false,
        }
    }

    pub fn any(&self) -> bool {
        self.direct || self.subtypical || self.conditional || self.temporal
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Real,
    Synthetic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// One advice pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    pub advice1: String,
    pub advice2: String,
    pub topic: String,
    pub labels: ConflictLabels,
    pub source: Source,
    pub split: Split,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amr1: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amr2: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub align1: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub align2: Option<String>,
    /// 1-based line number in the source file, attached at load time.
    #[serde(skip)]
    pub line: usize,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("failed to read dataset: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed record on line {line}: {detail}")]
    MalformedLine { line: usize, detail: String },
    #[error("missing field `{field}` on line {line}")]
    MissingField { line: usize, field: &'static str },
}

fn required_str(
    value: &serde_json::Value,
    field: &'static str,
    line: usize,
) -> Result<String, DatasetError> {
    match value.get(field) {
        Some(serde_json::Value::String(s)) if !s.is_empty() => Ok(s.clone()),
        Some(serde_json::Value::String(_)) | None => {
            Err(DatasetError::MissingField { line, field })
        }
        Some(_) => Err(DatasetError::MalformedLine {
            line,
            detail: format!("field `{field}` is not a string"),
        }),
    }
}

fn optional_str(value: &serde_json::Value, field: &str) -> Option<String> {
    match value.get(field) {
        Some(serde_json::Value::String(s)) => Some(s.clone()),
        _ => None,
    }
}

/// Parse one JSONL line. Unknown fields are ignored.
pub fn parse_record_line(text: &str, line: usize) -> Result<DatasetRecord, DatasetError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| DatasetError::MalformedLine {
            line,
            detail: e.to_string(),
        })?;
    if !value.is_object() {
        return Err(DatasetError::MalformedLine {
            line,
            detail: "record is not a JSON object".to_string(),
        });
    }
    let labels_value = value
        .get("labels")
        .ok_or(DatasetError::MissingField { line, field: "labels" })?;
    let labels: ConflictLabels = serde_json::from_value(labels_value.clone()).map_err(|e| {
        DatasetError::MalformedLine { line, detail: format!("bad labels object: {e}") }
    })?;
    let source: Source = match value.get("source") {
        Some(v) => serde_json::from_value(v.clone()).map_err(|e| {
            DatasetError::MalformedLine { line, detail: format!("bad source: {e}") }
        })?,
        None => return Err(DatasetError::MissingField { line, field: "source" }),
    };
    let split: Split = match value.get("split") {
        Some(v) => serde_json::from_value(v.clone()).map_err(|e| {
            DatasetError::MalformedLine { line, detail: format!("bad split: {e}") }
        })?,
        None => return Err(DatasetError::MissingField { line, field: "split" }),
    };
    Ok(DatasetRecord {
        id: required_str(&value, "id", line)?,
        advice1: required_str(&value, "advice1", line)?,
        advice2: required_str(&value, "advice2", line)?,
        topic: required_str(&value, "topic", line)?,
        labels,
        source,
        split,
        amr1: optional_str(&value, "amr1"),
        amr2: optional_str(&value, "amr2"),
        align1: optional_str(&value, "align1"),
        align2: optional_str(&value, "align2"),
        line,
    })
}

/// Load a JSONL file, one record per non-blank line, in file order.
pub fn load_records(path: &Path) -> Result<Vec<DatasetRecord>, DatasetError> {
    let file = std::fs::File::open(path)?;
    read_records(std::io::BufReader::new(file))
}

pub fn read_records<R: BufRead>(reader: R) -> Result<Vec<DatasetRecord>, DatasetError> {
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_text = line?;
        if line_text.trim().is_empty() {
            continue;
        }
        records.push(parse_record_line(&line_text, idx + 1)?);
    }
    Ok(records)
}

/// Write records as JSONL in the given order.
pub fn write_records<W: Write>(records: &[DatasetRecord], mut writer: W) -> std::io::Result<()> {
    for record in records {
        serde_json::to_writer(&mut writer, record)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub fn records_to_jsonl(records: &[DatasetRecord]) -> String {
    let mut buffer = Vec::new();
    write_records(records, &mut buffer).expect("writing to memory cannot fail");
    String::from_utf8(buffer).expect("serde_json emits UTF-8")
}

/// Corpus statistics: split-by-source counts, per-label positives, word
/// and sentence shape of the advice texts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetStats {
    pub total: usize,
    pub train_real: usize,
    pub train_synthetic: usize,
    pub test_real: usize,
    pub test_synthetic: usize,
    pub label_counts: BTreeMap<String, usize>,
    pub negatives: usize,
    pub mean_words_per_advice: f64,
    pub single_sentence_advice: usize,
    pub multi_sentence_advice: usize,
    /// None when no multi-sentence advice exists.
    pub single_to_multi_ratio: Option<f64>,
}

/// Number of sentences, splitting on terminal punctuation (`.`, `!`, `?`).
pub fn sentence_count(text: &str) -> usize {
    text.split(['.', '!', '?'])
        .filter(|segment| segment.chars().any(char::is_alphanumeric))
        .count()
}

fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

pub fn dataset_stats(records: &[DatasetRecord]) -> DatasetStats {
    let mut stats = DatasetStats {
        total: records.len(),
        train_real: 0,
        train_synthetic: 0,
        test_real: 0,
        test_synthetic: 0,
        label_counts: LABEL_NAMES.iter().map(|&n| (n.to_string(), 0)).collect(),
        negatives: 0,
        mean_words_per_advice: 0.0,
        single_sentence_advice: 0,
        multi_sentence_advice: 0,
        single_to_multi_ratio: None,
    };
    let mut words = 0usize;
    for record in records {
        match (record.split, record.source) {
            (Split::Train, Source::Real) => stats.train_real += 1,
            (Split::Train, Source::Synthetic) => stats.train_synthetic += 1,
            (Split::Test, Source::Real) => stats.test_real += 1,
            (Split::Test, Source::Synthetic) => stats.test_synthetic += 1,
        }
        for name in LABEL_NAMES {
            if record.labels.get(name) {
                *stats.label_counts.get_mut(name).expect("seeded above") += 1;
            }
        }
        if !record.labels.any() {
            stats.negatives += 1;
        }
        for advice in [&record.advice1, &record.advice2] {
            words += word_count(advice);
            if sentence_count(advice) > 1 {
                stats.multi_sentence_advice += 1;
            } else {
                stats.single_sentence_advice += 1;
            }
        }
    }
    let advice_count = records.len() * 2;
    if advice_count > 0 {
        stats.mean_words_per_advice = words as f64 / advice_count as f64;
    }
    if stats.multi_sentence_advice > 0 {
        stats.single_to_multi_ratio =
            Some(stats.single_sentence_advice as f64 / stats.multi_sentence_advice as f64);
    }
    stats
}

/// How many pairs of each kind the toy generator should emit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToyConfig {
    pub direct: usize,
    pub subtypical: usize,
    pub conditional: usize,
    pub temporal: usize,
    pub negatives: usize,
    /// Fraction of each kind assigned to the train split.
    pub train_fraction: f64,
}

impl Default for ToyConfig {
    fn default() -> Self {
        ToyConfig {
            direct: 25,
            subtypical: 25,
            conditional: 25,
            temporal: 25,
            negatives: 25,
            train_fraction: 0.8,
        }
    }
}

impl ToyConfig {
    pub fn total(&self) -> usize {
        self.direct + self.subtypical + self.conditional + self.temporal + self.negatives
    }
}

const TOPICS: [&str; 12] = [
    "alcohol", "coffee", "milk", "aspirin", "sugar", "salt", "cheese", "bread", "fruit", "water",
    "butter", "rice",
];

const POSITIVE_OPENERS: [&str; 4] = ["Consume", "Take", "Enjoy", "Include"];
const NEGATIVE_OPENERS: [&str; 4] =
    ["Avoid", "Never touch", "Cut out", "Stay away from"];
const DIRECT_TAILS: [&str; 3] = ["at all costs", "completely", "entirely"];
const POSITIVE_TAILS: [&str; 3] = ["regularly", "with meals", "as part of your routine"];
const TYPE_MODIFIERS: [&str; 5] =
    ["full-fat", "processed", "unpasteurized", "artificial", "raw"];
const CONDITIONS: [&str; 4] = [
    "you suffer from heart disease",
    "you are pregnant",
    "you take blood thinners",
    "you have high blood pressure",
];
const TIME_CLAUSES: [&str; 4] =
    ["before bed", "late at night", "in the evening", "before exercising"];

/// Build a star-shaped toy graph over the whitespace tokens of `text`:
/// token i becomes node `w{i}`, attached to the first token's node, and
/// the root carries a `:mode imperative` attribute. Returns the PENMAN
/// text and an alignment spec covering every token.
fn synth_structure(text: &str) -> (String, String) {
    const RELATIONS: [&str; 6] = [":ARG1", ":mod", ":time", ":manner", ":condition", ":op1"];
    let tokens: Vec<&str> = text.split_whitespace().collect();
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let mut align = String::new();
    for (i, token) in tokens.iter().enumerate() {
        let concept: String = token
            .to_lowercase()
            .trim_matches(|c: char| !c.is_alphanumeric())
            .to_string();
        let concept = if concept.is_empty() { "blank".to_string() } else { concept };
        let variable = format!("w{i}");
        nodes.push(AmrNode { variable: variable.clone(), concept });
        if i > 0 {
            edges.push(AmrEdge {
                source: "w0".to_string(),
                relation: RELATIONS[(i - 1) % RELATIONS.len()].to_string(),
                target: variable.clone(),
            });
        }
        if !align.is_empty() {
            align.push(' ');
        }
        let _ = write!(align, "{}-{}|{}", i, i + 1, variable);
    }
    let graph = AmrGraph {
        nodes,
        edges,
        attributes: vec![AmrAttribute {
            owner: "w0".to_string(),
            relation: ":mode".to_string(),
            value: "imperative".to_string(),
        }],
        root: "w0".to_string(),
    };
    let penman = serialize_penman(&graph).expect("star graph is connected");
    (penman, align)
}

fn pick<'a>(rng: &mut ChaCha8Rng, options: &[&'a str]) -> &'a str {
    options.choose(rng).expect("option banks are non-empty")
}

/// Generate a deterministic toy dataset. Every positive pair's topic
/// appears verbatim as a token of both advice texts, so topic linking
/// with exact-match similarity always succeeds on positives.
pub fn generate_toy(config: &ToyConfig, seed: u64) -> Vec<DatasetRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(config.total());

    let kinds: [(&str, usize); 5] = [
        ("direct", config.direct),
        ("subtypical", config.subtypical),
        ("conditional", config.conditional),
        ("temporal", config.temporal),
        ("negative", config.negatives),
    ];
    for (kind, count) in kinds {
        let train_cutoff = ((count as f64) * config.train_fraction).round() as usize;
        for index in 0..count {
            let topic = pick(&mut rng, &TOPICS);
            let (advice1, advice2, labels) = match kind {
                "direct" => (
                    format!("{} {} {}", pick(&mut rng, &POSITIVE_OPENERS), topic, pick(&mut rng, &POSITIVE_TAILS)),
                    format!("{} {} {}", pick(&mut rng, &NEGATIVE_OPENERS), topic, pick(&mut rng, &DIRECT_TAILS)),
                    ConflictLabels { direct: true, ..Default::default() },
                ),
                "subtypical" => (
                    format!("{} {} {}", pick(&mut rng, &POSITIVE_OPENERS), topic, pick(&mut rng, &POSITIVE_TAILS)),
                    format!("Avoid {} {} whenever possible", pick(&mut rng, &TYPE_MODIFIERS), topic),
                    ConflictLabels { subtypical: true, ..Default::default() },
                ),
                "conditional" => (
                    format!("{} {} {}", pick(&mut rng, &POSITIVE_OPENERS), topic, pick(&mut rng, &POSITIVE_TAILS)),
                    format!("Do not have {} if {}", topic, pick(&mut rng, &CONDITIONS)),
                    ConflictLabels { conditional: true, ..Default::default() },
                ),
                "temporal" => (
                    format!("{} {} {}", pick(&mut rng, &POSITIVE_OPENERS), topic, pick(&mut rng, &POSITIVE_TAILS)),
                    format!("Limit {} {}", topic, pick(&mut rng, &TIME_CLAUSES)),
                    ConflictLabels { temporal: true, ..Default::default() },
                ),
                _ => {
                    if rng.gen_bool(0.5) {
                        // same topic, same polarity
                        (
                            format!("{} {} {}", pick(&mut rng, &POSITIVE_OPENERS), topic, pick(&mut rng, &POSITIVE_TAILS)),
                            format!("Remember to have {} often", topic),
                            ConflictLabels::default(),
                        )
                    } else {
                        // disjoint topics
                        let other = loop {
                            let candidate = pick(&mut rng, &TOPICS);
                            if candidate != topic {
                                break candidate;
                            }
                        };
                        (
                            format!("{} {} {}", pick(&mut rng, &POSITIVE_OPENERS), topic, pick(&mut rng, &POSITIVE_TAILS)),
                            format!("{} {} {}", pick(&mut rng, &POSITIVE_OPENERS), other, pick(&mut rng, &POSITIVE_TAILS)),
                            ConflictLabels::default(),
                        )
                    }
                }
            };
            let (amr1, align1) = synth_structure(&advice1);
            let (amr2, align2) = synth_structure(&advice2);
            records.push(DatasetRecord {
                id: format!("toy-{kind}-{index:04}"),
                advice1,
                advice2,
                topic: topic.to_string(),
                labels,
                source: Source::Synthetic,
                split: if index < train_cutoff { Split::Train } else { Split::Test },
                amr1: Some(amr1),
                amr2: Some(amr2),
                align1: Some(align1),
                align2: Some(align2),
                line: 0,
            });
        }
    }
    records
}
