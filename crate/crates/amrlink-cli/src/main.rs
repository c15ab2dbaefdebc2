//! Command-line front end for the amrlink toolkit.

use std::io::Read;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use amrlink::alignment::parse_alignment;
use amrlink::amr::{parse_penman, serialize_penman, validate};
use amrlink::baseline::{
    aggregate_runs, evaluate, positive_rate, random_guess, render_aggregate_table,
    render_metrics_table, train_baseline_model, BaselineModel, TrainConfig,
};
use amrlink::dataset::{
    dataset_stats, generate_toy, load_records, records_to_jsonl, ConflictLabels, ToyConfig,
    LABEL_NAMES,
};
use amrlink::matrix::{build_matrix, build_vocab, serialize_matrix, RelationVocab, SubtokenMap};
use amrlink::pipeline::{
    baseline_run, run_pipeline, split_records, PipelineConfig, Strictness, SubtokenMode,
    VocabSource,
};
use amrlink::similarity::{EmbeddingTable, SimilarityKind, SimilarityProvider};
use amrlink::tdgl::{link_graphs_with_threshold, LinkedGraph};

#[derive(Parser)]
#[command(
    name = "amrlink",
    version,
    about = "Graph preprocessing and baseline evaluation for pairwise advice-conflict inputs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SimilarityArgs {
    /// Similarity metric: exact, trigram, or embedding
    #[arg(long, default_value = "trigram")]
    similarity: String,
    /// Embedding table ("word v1 v2 ..." per line); required for --similarity embedding
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Minimum similarity score an aligned token must reach
    #[arg(long, default_value_t = 0.0)]
    threshold: f64,
}

impl SimilarityArgs {
    fn provider(&self) -> Result<SimilarityProvider> {
        let kind: SimilarityKind =
            self.similarity.parse().map_err(|e: String| anyhow::anyhow!(e))?;
        let table = match (&kind, &self.embeddings) {
            (SimilarityKind::Embedding, Some(path)) => Some(
                EmbeddingTable::load(path)
                    .with_context(|| format!("loading embeddings from {}", path.display()))?,
            ),
            (SimilarityKind::Embedding, None) => {
                bail!("--similarity embedding requires --embeddings <file>")
            }
            _ => None,
        };
        Ok(SimilarityProvider { kind, table })
    }
}

#[derive(Args)]
struct SubtokenArgs {
    /// Subtoken layout: whole (one position per word) or naive (long words split in two)
    #[arg(long, default_value = "whole")]
    subtoken: String,
    /// Character length above which the naive splitter breaks a word
    #[arg(long, default_value_t = 8)]
    naive_threshold: usize,
}

impl SubtokenArgs {
    fn mode(&self) -> Result<SubtokenMode> {
        match self.subtoken.as_str() {
            "whole" => Ok(SubtokenMode::WholeWord),
            "naive" => Ok(SubtokenMode::NaiveSplit { threshold: self.naive_threshold }),
            other => bail!("unknown subtoken mode `{other}` (expected whole or naive)"),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse a PENMAN file, report problems, and reprint it normalized
    Parse {
        /// PENMAN file, or - for stdin
        #[arg(long)]
        input: PathBuf,
        /// Print the graph as JSON instead of PENMAN
        #[arg(long)]
        json: bool,
        /// Also run the graph validator and fail on violations
        #[arg(long)]
        check: bool,
    },
    /// Validate an alignment spec against its graph
    AlignCheck {
        /// PENMAN file for the advice
        #[arg(long)]
        amr: PathBuf,
        /// Alignment items "start-end|var ...", or @file to read them
        #[arg(long)]
        alignment: String,
        /// Number of words in the advice text
        #[arg(long)]
        tokens: usize,
    },
    /// Link two advice graphs on a topic and emit the merged graph JSON
    Link {
        #[arg(long)]
        amr1: PathBuf,
        #[arg(long)]
        amr2: PathBuf,
        /// Alignment items for advice 1, or @file
        #[arg(long)]
        align1: String,
        /// Alignment items for advice 2, or @file
        #[arg(long)]
        align2: String,
        /// Advice-1 text (tokens are whitespace-separated words)
        #[arg(long)]
        text1: String,
        /// Advice-2 text
        #[arg(long)]
        text2: String,
        #[arg(long)]
        topic: String,
        #[command(flatten)]
        similarity: SimilarityArgs,
        /// Pretty-print the JSON
        #[arg(long)]
        pretty: bool,
        /// Also print the lossy single-rooted PENMAN export to stderr
        #[arg(long)]
        penman: bool,
        /// Output file (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the relation matrix for a linked graph
    Matrix {
        /// Linked-graph JSON file produced by `link` or `run`
        #[arg(long)]
        linked: PathBuf,
        #[arg(long)]
        align1: String,
        #[arg(long)]
        align2: String,
        #[arg(long)]
        text1: String,
        #[arg(long)]
        text2: String,
        /// Vocabulary file (one label per line, line number = id)
        #[arg(long)]
        vocab: PathBuf,
        #[command(flatten)]
        subtokens: SubtokenArgs,
        /// Output file (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Collect the relation vocabulary from a dataset's train split
    Vocab {
        /// Dataset JSONL file
        #[arg(long)]
        data: PathBuf,
        /// Output vocabulary file (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a seeded toy dataset
    GenToy {
        /// JSON config with the per-kind counts; overrides the count flags
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 25)]
        direct: usize,
        #[arg(long, default_value_t = 25)]
        subtypical: usize,
        #[arg(long, default_value_t = 25)]
        conditional: usize,
        #[arg(long, default_value_t = 25)]
        temporal: usize,
        #[arg(long, default_value_t = 25)]
        negatives: usize,
        #[arg(long, default_value_t = 0.8)]
        train_fraction: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Output JSONL file (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print corpus statistics for a dataset
    Stats {
        #[arg(long)]
        data: PathBuf,
        /// Emit JSON instead of the plain-text summary
        #[arg(long)]
        json: bool,
    },
    /// Train the TF-IDF one-vs-all baseline and save the model
    TrainBaseline {
        #[arg(long)]
        data: PathBuf,
        /// Model output file (JSON)
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 300)]
        epochs: usize,
        #[arg(long, default_value_t = 0.5)]
        learning_rate: f64,
    },
    /// Evaluate on the test split: a saved model, or fresh seeded runs
    Eval {
        #[arg(long)]
        data: PathBuf,
        /// Saved model from train-baseline; overrides --seeds
        #[arg(long)]
        model: Option<PathBuf>,
        /// Comma-separated seeds; each trains and evaluates one run
        #[arg(long, default_value = "1,2,3")]
        seeds: String,
        /// Also report the seeded random-guess baseline
        #[arg(long)]
        with_random: bool,
        /// Emit JSON instead of tables
        #[arg(long)]
        json: bool,
    },
    /// Run the full pipeline: records in, linked graphs and matrices out
    Run {
        #[arg(long)]
        data: PathBuf,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        similarity: SimilarityArgs,
        /// Vocabulary file; collected from the train split when omitted
        #[arg(long)]
        vocab: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        parallelism: usize,
        /// Abort on the first record failure instead of skip-and-log
        #[arg(long)]
        fail_fast: bool,
        #[command(flatten)]
        subtokens: SubtokenArgs,
        /// Emit the report as JSON
        #[arg(long)]
        json: bool,
    },
}

fn read_input(path: &PathBuf) -> Result<String> {
    if path.as_os_str() == "-" {
        let mut text = String::new();
        std::io::stdin().read_to_string(&mut text)?;
        Ok(text)
    } else {
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
    }
}

/// Alignment argument: literal items, or `@file` to load them.
fn read_alignment_arg(arg: &str) -> Result<String> {
    match arg.strip_prefix('@') {
        Some(path) => {
            std::fs::read_to_string(path).with_context(|| format!("reading alignment {path}"))
        }
        None => Ok(arg.to_string()),
    }
}

fn write_or_print(out: Option<&PathBuf>, contents: &str) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, contents)
                .with_context(|| format!("writing {}", path.display()))?;
        }
        None => print!("{contents}"),
    }
    Ok(())
}

fn tokens_of(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_string).collect()
}

/// Reconstruct the per-side graph views a linked-graph file implies, so
/// alignment specs written against the original variables still check.
fn sides_of(lg: &LinkedGraph) -> (amrlink::amr::AmrGraph, amrlink::amr::AmrGraph) {
    let renamed: std::collections::BTreeSet<&String> = lg.rename_map.values().collect();
    let g1 = amrlink::amr::AmrGraph {
        nodes: lg
            .nodes
            .iter()
            .filter(|n| !renamed.contains(&n.variable))
            .cloned()
            .collect(),
        edges: vec![],
        attributes: vec![],
        root: lg.roots.0.clone(),
    };
    let g2 = amrlink::amr::AmrGraph {
        nodes: lg
            .rename_map
            .iter()
            .map(|(original, renamed)| amrlink::amr::AmrNode {
                variable: original.clone(),
                concept: lg
                    .nodes
                    .iter()
                    .find(|n| &n.variable == renamed)
                    .map(|n| n.concept.clone())
                    .unwrap_or_default(),
            })
            .collect(),
        edges: vec![],
        attributes: vec![],
        root: lg.roots.1.clone(),
    };
    (g1, g2)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Parse { input, json, check } => {
            let text = read_input(&input)?;
            let graph = parse_penman(&text)?;
            if check {
                let violations = validate(&graph);
                if !violations.is_empty() {
                    for violation in &violations {
                        eprintln!("{violation}");
                    }
                    bail!("{} invariant violation(s)", violations.len());
                }
            }
            if json {
                println!("{}", serde_json::to_string_pretty(&graph)?);
            } else {
                println!("{}", serialize_penman(&graph)?);
            }
        }
        Command::AlignCheck { amr, alignment, tokens } => {
            let graph = parse_penman(&read_input(&amr)?)?;
            let spec = read_alignment_arg(&alignment)?;
            let aligned = parse_alignment(&spec, &graph, tokens)?;
            println!("{} alignment item(s) over {tokens} token(s)", aligned.entries.len());
            for entry in &aligned.entries {
                println!("  words {}..{} -> {}", entry.start, entry.end, entry.node);
            }
        }
        Command::Link {
            amr1,
            amr2,
            align1,
            align2,
            text1,
            text2,
            topic,
            similarity,
            pretty,
            penman,
            out,
        } => {
            let g1 = parse_penman(&read_input(&amr1)?)?;
            let g2 = parse_penman(&read_input(&amr2)?)?;
            let t1 = tokens_of(&text1);
            let t2 = tokens_of(&text2);
            let a1 = parse_alignment(&read_alignment_arg(&align1)?, &g1, t1.len())?;
            let a2 = parse_alignment(&read_alignment_arg(&align2)?, &g2, t2.len())?;
            let provider = similarity.provider()?;
            let linked = link_graphs_with_threshold(
                &g1,
                &a1,
                &t1,
                &g2,
                &a2,
                &t2,
                &topic,
                &provider,
                similarity.threshold,
            )?;
            if penman {
                eprintln!("{}", linked.to_lossy_penman()?);
            }
            let json_text =
                if pretty { linked.to_json_pretty() } else { linked.to_json() } + "\n";
            write_or_print(out.as_ref(), &json_text)?;
        }
        Command::Matrix { linked, align1, align2, text1, text2, vocab, subtokens, out } => {
            let lg = LinkedGraph::from_json(&read_input(&linked)?)?;
            let t1 = tokens_of(&text1);
            let t2 = tokens_of(&text2);
            let (g1, g2) = sides_of(&lg);
            let a1 = parse_alignment(&read_alignment_arg(&align1)?, &g1, t1.len())?;
            let a2 = parse_alignment(&read_alignment_arg(&align2)?, &g2, t2.len())?;
            let vocab = RelationVocab::from_file_format(&read_input(&vocab)?)?;
            let sm = match subtokens.mode()? {
                SubtokenMode::WholeWord => SubtokenMap::whole_words(t1.len(), t2.len()),
                SubtokenMode::NaiveSplit { threshold } => {
                    SubtokenMap::naive_split(&t1, &t2, threshold)
                }
            };
            let matrix = build_matrix(&lg, &a1, &a2, &sm, &vocab)?;
            write_or_print(out.as_ref(), &serialize_matrix(&matrix, &vocab))?;
        }
        Command::Vocab { data, out } => {
            let records = load_records(&data)?;
            let graphs: Vec<_> = records
                .iter()
                .filter(|r| r.split == amrlink::dataset::Split::Train)
                .flat_map(|r| [r.amr1.as_deref(), r.amr2.as_deref()])
                .flatten()
                .map(|text| parse_penman(text).map_err(anyhow::Error::from))
                .collect::<Result<Vec<_>>>()?;
            let vocab = build_vocab(graphs.iter());
            write_or_print(out.as_ref(), &vocab.to_file_format())?;
        }
        Command::GenToy {
            config,
            direct,
            subtypical,
            conditional,
            temporal,
            negatives,
            train_fraction,
            seed,
            out,
        } => {
            let config = match config {
                Some(path) => serde_json::from_str(&std::fs::read_to_string(&path)?)
                    .with_context(|| format!("reading config {}", path.display()))?,
                None => ToyConfig {
                    direct,
                    subtypical,
                    conditional,
                    temporal,
                    negatives,
                    train_fraction,
                },
            };
            let records = generate_toy(&config, seed);
            write_or_print(out.as_ref(), &records_to_jsonl(&records))?;
            eprintln!("{} record(s) generated with seed {seed}", records.len());
        }
        Command::Stats { data, json } => {
            let records = load_records(&data)?;
            let stats = dataset_stats(&records);
            if json {
                println!("{}", serde_json::to_string_pretty(&stats)?);
            } else {
                println!("records:             {}", stats.total);
                println!("  train real:        {}", stats.train_real);
                println!("  train synthetic:   {}", stats.train_synthetic);
                println!("  test real:         {}", stats.test_real);
                println!("  test synthetic:    {}", stats.test_synthetic);
                for (label, count) in &stats.label_counts {
                    println!("  {label:<18} {count}");
                }
                println!("  negatives:         {}", stats.negatives);
                println!("mean words/advice:   {:.2}", stats.mean_words_per_advice);
                match stats.single_to_multi_ratio {
                    Some(ratio) => println!("single/multi ratio:  {ratio:.2}"),
                    None => println!("single/multi ratio:  n/a (no multi-sentence advice)"),
                }
            }
        }
        Command::TrainBaseline { data, out, seed, epochs, learning_rate } => {
            let records = load_records(&data)?;
            let (train, _) = split_records(&records);
            if train.is_empty() {
                bail!("dataset has no train-split records");
            }
            let config = TrainConfig { epochs, learning_rate, seed };
            let model = train_baseline_model(&train, config)?;
            std::fs::write(&out, serde_json::to_string(&model)?)
                .with_context(|| format!("writing {}", out.display()))?;
            eprintln!(
                "trained on {} record(s), vocabulary of {} term(s), saved to {}",
                train.len(),
                model.tfidf.vocabulary.len(),
                out.display()
            );
        }
        Command::Eval { data, model, seeds, with_random, json } => {
            let records = load_records(&data)?;
            let (train, test) = split_records(&records);
            if test.is_empty() {
                bail!("dataset has no test-split records");
            }
            let golds: Vec<ConflictLabels> = test.iter().map(|r| r.labels).collect();
            if let Some(path) = model {
                let model: BaselineModel =
                    serde_json::from_str(&std::fs::read_to_string(&path)?)
                        .with_context(|| format!("reading model {}", path.display()))?;
                let preds = model.predict_records(&test);
                let metrics = evaluate(&preds, &golds)?;
                if json {
                    println!("{}", serde_json::to_string_pretty(&metrics)?);
                } else {
                    print!("{}", render_metrics_table(&metrics));
                }
            } else {
                let seeds: Vec<u64> = seeds
                    .split(',')
                    .map(|s| s.trim().parse().context("bad --seeds value"))
                    .collect::<Result<_>>()?;
                if seeds.is_empty() {
                    bail!("--seeds must name at least one seed");
                }
                let runs: Vec<_> = seeds
                    .iter()
                    .map(|&seed| baseline_run(&train, &test, seed))
                    .collect::<Result<_, _>>()?;
                let aggregate = aggregate_runs(&runs)?;
                if json {
                    println!("{}", serde_json::to_string_pretty(&aggregate)?);
                } else {
                    print!("{}", render_aggregate_table(&aggregate));
                }
                if with_random {
                    let train_labels: Vec<ConflictLabels> =
                        train.iter().map(|r| r.labels).collect();
                    let random_runs: Vec<_> = seeds
                        .iter()
                        .map(|&seed| {
                            let per: Vec<Vec<bool>> = LABEL_NAMES
                                .iter()
                                .map(|name| {
                                    let rate = positive_rate(&train_labels, name);
                                    random_guess(test.len(), rate, seed)
                                })
                                .collect();
                            let preds: Vec<ConflictLabels> = (0..test.len())
                                .map(|i| ConflictLabels {
                                    direct: per[0][i],
                                    subtypical: per[1][i],
                                    conditional: per[2][i],
                                    temporal: per[3][i],
                                })
                                .collect();
                            evaluate(&preds, &golds)
                        })
                        .collect::<Result<_, _>>()?;
                    let random_aggregate = aggregate_runs(&random_runs)?;
                    if json {
                        println!("{}", serde_json::to_string_pretty(&random_aggregate)?);
                    } else {
                        println!("random guess at training positive rates:");
                        print!("{}", render_aggregate_table(&random_aggregate));
                    }
                }
            }
        }
        Command::Run { data, out, similarity, vocab, parallelism, fail_fast, subtokens, json } => {
            let records = load_records(&data)?;
            let config = PipelineConfig {
                similarity: similarity.provider()?,
                similarity_threshold: similarity.threshold,
                vocab: match vocab {
                    Some(path) => VocabSource::Path(path),
                    None => VocabSource::BuildFromTrain,
                },
                output_dir: out,
                parallelism,
                strictness: if fail_fast { Strictness::FailFast } else { Strictness::SkipAndLog },
                subtokens: subtokens.mode()?,
            };
            let report = run_pipeline(&records, &config)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                println!(
                    "processed {}, skipped {}, errored {} of {} record(s) in {} ms",
                    report.processed,
                    report.skipped,
                    report.errored,
                    records.len(),
                    report.elapsed_ms
                );
                for (kind, count) in &report.error_kinds {
                    println!("  {kind}: {count}");
                }
            }
            if report.errored > 0 {
                std::process::exit(1);
            }
        }
    }
    Ok(())
}
