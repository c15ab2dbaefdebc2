//! End-to-end batch processing: records in, linked-graph JSON and sparse
//! relation matrices out.
//!
//! Each record is processed in isolation (parse both graphs, parse both
//! alignments, link on the topic, build the matrix) and writes only its
//! own two output files, so output trees are byte-identical at any
//! parallelism degree. The report preserves input order.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::alignment::{parse_alignment, AlignmentError, TokenAlignment};
use crate::amr::{parse_penman, AmrGraph, ParseError};
use crate::baseline;
use crate::dataset::{DatasetRecord, Split};
use crate::matrix::{build_matrix, build_vocab, serialize_matrix, MatrixError, RelationVocab, SubtokenMap};
use crate::similarity::SimilarityProvider;
use crate::tdgl::{link_graphs_with_threshold, AdviceSide, LinkError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VocabSource {
    /// Load the vocabulary from a file written by [`RelationVocab::to_file_format`].
    Path(PathBuf),
    /// Collect the vocabulary from the train-split graphs of the input.
    BuildFromTrain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strictness {
    /// The first record failure aborts the run.
    FailFast,
    /// Record failures are tallied in the report and the run continues.
    SkipAndLog,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubtokenMode {
    /// One packed position per word.
    WholeWord,
    /// Words longer than `threshold` characters take two positions.
    NaiveSplit { threshold: usize },
}

pub struct PipelineConfig {
    pub similarity: SimilarityProvider,
    pub similarity_threshold: f64,
    pub vocab: VocabSource,
    pub output_dir: PathBuf,
    pub parallelism: usize,
    pub strictness: Strictness,
    pub subtokens: SubtokenMode,
}

impl PipelineConfig {
    pub fn new(output_dir: PathBuf) -> Self {
        PipelineConfig {
            similarity: SimilarityProvider::trigram(),
            similarity_threshold: 0.0,
            vocab: VocabSource::BuildFromTrain,
            output_dir,
            parallelism: 1,
            strictness: Strictness::SkipAndLog,
            subtokens: SubtokenMode::WholeWord,
        }
    }
}

/// Why one record could not be processed.
#[derive(Debug, Error, PartialEq)]
pub enum RecordError {
    #[error("record is missing field `{0}`")]
    MissingStructure(&'static str),
    #[error("{side} graph: {source}")]
    Graph { side: AdviceSide, source: ParseError },
    #[error("{side} alignment: {source}")]
    Alignment { side: AdviceSide, source: AlignmentError },
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error("failed to write output: {0}")]
    Io(String),
}

impl RecordError {
    /// Stable key for per-kind tallies in the report.
    pub fn kind(&self) -> &'static str {
        match self {
            RecordError::MissingStructure(_) => "missing-structure",
            RecordError::Graph { .. } => "penman-parse",
            RecordError::Alignment { .. } => "alignment",
            RecordError::Link(_) => "topic-unalignable",
            RecordError::Matrix(_) => "matrix",
            RecordError::Io(_) => "io",
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("record `{id}` failed")]
    FailFast { id: String, source: RecordError },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeStatus {
    Processed,
    Skipped,
    Errored,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecordOutcome {
    pub id: String,
    pub status: OutcomeStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// Run summary. `processed + skipped + errored` equals the input count
/// and `outcomes` follows input order. Everything except `elapsed_ms` is
/// deterministic for a given input.
#[derive(Debug, Clone, Serialize)]
pub struct PipelineReport {
    pub processed: usize,
    pub skipped: usize,
    pub errored: usize,
    pub error_kinds: BTreeMap<String, usize>,
    pub outcomes: Vec<RecordOutcome>,
    pub elapsed_ms: u128,
}

impl PipelineReport {
    /// Equality over everything but the elapsed time.
    pub fn same_outcome(&self, other: &PipelineReport) -> bool {
        self.processed == other.processed
            && self.skipped == other.skipped
            && self.errored == other.errored
            && self.error_kinds == other.error_kinds
            && self.outcomes == other.outcomes
    }
}

fn whitespace_tokens(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_string).collect()
}

struct ParsedSide {
    graph: AmrGraph,
    alignment: TokenAlignment,
    tokens: Vec<String>,
}

fn parse_side(
    side: AdviceSide,
    advice: &str,
    amr: Option<&String>,
    align: Option<&String>,
) -> Result<ParsedSide, RecordError> {
    let amr_field = match side {
        AdviceSide::First => "amr1",
        AdviceSide::Second => "amr2",
    };
    let align_field = match side {
        AdviceSide::First => "align1",
        AdviceSide::Second => "align2",
    };
    let amr = amr.ok_or(RecordError::MissingStructure(amr_field))?;
    let align = align.ok_or(RecordError::MissingStructure(align_field))?;
    let graph = parse_penman(amr).map_err(|source| RecordError::Graph { side, source })?;
    let tokens = whitespace_tokens(advice);
    let alignment = parse_alignment(align, &graph, tokens.len())
        .map_err(|source| RecordError::Alignment { side, source })?;
    Ok(ParsedSide { graph, alignment, tokens })
}

fn process_record(
    record: &DatasetRecord,
    config: &PipelineConfig,
    vocab: &RelationVocab,
) -> Result<(), RecordError> {
    let side1 = parse_side(
        AdviceSide::First,
        &record.advice1,
        record.amr1.as_ref(),
        record.align1.as_ref(),
    )?;
    let side2 = parse_side(
        AdviceSide::Second,
        &record.advice2,
        record.amr2.as_ref(),
        record.align2.as_ref(),
    )?;
    let linked = link_graphs_with_threshold(
        &side1.graph,
        &side1.alignment,
        &side1.tokens,
        &side2.graph,
        &side2.alignment,
        &side2.tokens,
        &record.topic,
        &config.similarity,
        config.similarity_threshold,
    )?;
    let sm = match config.subtokens {
        SubtokenMode::WholeWord => SubtokenMap::whole_words(side1.tokens.len(), side2.tokens.len()),
        SubtokenMode::NaiveSplit { threshold } => {
            SubtokenMap::naive_split(&side1.tokens, &side2.tokens, threshold)
        }
    };
    let matrix = build_matrix(&linked, &side1.alignment, &side2.alignment, &sm, vocab)?;

    let write = |name: String, contents: String| -> Result<(), RecordError> {
        std::fs::write(config.output_dir.join(name), contents)
            .map_err(|e| RecordError::Io(e.to_string()))
    };
    write(format!("{}.linked.json", record.id), linked.to_json() + "\n")?;
    write(format!("{}.matrix.tsv", record.id), serialize_matrix(&matrix, vocab))?;
    Ok(())
}

fn resolve_vocab(
    records: &[DatasetRecord],
    config: &PipelineConfig,
) -> Result<RelationVocab, PipelineError> {
    match &config.vocab {
        VocabSource::Path(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                PipelineError::Config(format!("cannot read vocabulary {}: {e}", path.display()))
            })?;
            RelationVocab::from_file_format(&text)
                .map_err(|e| PipelineError::Config(format!("bad vocabulary file: {e}")))
        }
        VocabSource::BuildFromTrain => {
            // graphs that fail to parse are reported per record later
            let graphs: Vec<AmrGraph> = records
                .iter()
                .filter(|r| r.split == Split::Train)
                .flat_map(|r| [r.amr1.as_deref(), r.amr2.as_deref()])
                .flatten()
                .filter_map(|text| parse_penman(text).ok())
                .collect();
            Ok(build_vocab(graphs.iter()))
        }
    }
}

/// Process every record, writing `<id>.linked.json` and `<id>.matrix.tsv`
/// into the output directory. With [`VocabSource::BuildFromTrain`] the
/// collected vocabulary is written alongside as `vocab.txt`.
pub fn run_pipeline(
    records: &[DatasetRecord],
    config: &PipelineConfig,
) -> Result<PipelineReport, PipelineError> {
    let started = Instant::now();
    if config.parallelism == 0 {
        return Err(PipelineError::Config("parallelism must be at least 1".to_string()));
    }
    {
        let mut ids = std::collections::HashSet::new();
        for record in records {
            if !ids.insert(record.id.as_str()) {
                return Err(PipelineError::Config(format!(
                    "duplicate record id `{}`: output files would collide",
                    record.id
                )));
            }
        }
    }
    std::fs::create_dir_all(&config.output_dir)
        .map_err(|e| PipelineError::Config(format!("cannot create output directory: {e}")))?;
    let vocab = resolve_vocab(records, config)?;
    if config.vocab == VocabSource::BuildFromTrain {
        std::fs::write(config.output_dir.join("vocab.txt"), vocab.to_file_format())
            .map_err(|e| PipelineError::Config(format!("cannot write vocab.txt: {e}")))?;
    }

    let results: Vec<Result<(), RecordError>> = match config.strictness {
        Strictness::FailFast => {
            // sequential so "first failure" is well-defined
            let mut results = Vec::with_capacity(records.len());
            for record in records {
                match process_record(record, config, &vocab) {
                    Ok(()) => results.push(Ok(())),
                    Err(source) => {
                        return Err(PipelineError::FailFast { id: record.id.clone(), source })
                    }
                }
            }
            results
        }
        Strictness::SkipAndLog => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(config.parallelism)
                .build()
                .map_err(|e| PipelineError::Config(format!("cannot build thread pool: {e}")))?;
            pool.install(|| {
                records
                    .par_iter()
                    .map(|record| process_record(record, config, &vocab))
                    .collect()
            })
        }
    };

    let mut report = PipelineReport {
        processed: 0,
        skipped: 0,
        errored: 0,
        error_kinds: BTreeMap::new(),
        outcomes: Vec::with_capacity(records.len()),
        elapsed_ms: 0,
    };
    for (record, result) in records.iter().zip(results) {
        let outcome = match result {
            Ok(()) => {
                report.processed += 1;
                RecordOutcome { id: record.id.clone(), status: OutcomeStatus::Processed, detail: None }
            }
            Err(error) => {
                let status = if matches!(error, RecordError::Io(_)) {
                    report.errored += 1;
                    OutcomeStatus::Errored
                } else {
                    report.skipped += 1;
                    OutcomeStatus::Skipped
                };
                *report.error_kinds.entry(error.kind().to_string()).or_insert(0) += 1;
                RecordOutcome { id: record.id.clone(), status, detail: Some(error.to_string()) }
            }
        };
        report.outcomes.push(outcome);
    }
    report.elapsed_ms = started.elapsed().as_millis();
    Ok(report)
}

/// One training-plus-evaluation run of the lexical baseline at a given
/// seed: TF-IDF fitted on the train split, one-vs-all training, metrics
/// on the test split.
pub fn baseline_run(
    train: &[DatasetRecord],
    test: &[DatasetRecord],
    seed: u64,
) -> Result<baseline::Metrics, baseline::BaselineError> {
    let model =
        baseline::train_baseline_model(train, baseline::TrainConfig::with_seed(seed))?;
    let preds = model.predict_records(test);
    let golds: Vec<_> = test.iter().map(|r| r.labels).collect();
    baseline::evaluate(&preds, &golds)
}

/// Split records into (train, test) by their split tag.
pub fn split_records(records: &[DatasetRecord]) -> (Vec<DatasetRecord>, Vec<DatasetRecord>) {
    let train = records.iter().filter(|r| r.split == Split::Train).cloned().collect();
    let test = records.iter().filter(|r| r.split == Split::Test).cloned().collect();
    (train, test)
}
