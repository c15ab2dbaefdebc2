//! Lexical baseline and evaluation protocol: TF-IDF pair features, a
//! one-vs-all class-weighted logistic classifier per conflict type, a
//! seeded random-guess baseline, positive-class precision/recall/F1 with
//! support-weighted multilabel F1, and mean/std aggregation over seeded
//! runs.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{ConflictLabels, DatasetRecord, LABEL_NAMES};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BaselineError {
    #[error("cannot fit TF-IDF on an empty corpus")]
    EmptyCorpus,
    #[error("label `{label}` is degenerate: all-{polarity} in the training data")]
    DegenerateLabel { label: &'static str, polarity: &'static str },
    #[error("prediction and gold lengths differ: {preds} vs {golds}")]
    LengthMismatch { preds: usize, golds: usize },
    #[error("cannot aggregate an empty list of runs")]
    EmptyList,
}

/// Case-fold and split on non-alphanumeric runs.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// TF-IDF model fitted on the training split only. Each advice text is
/// one document; idf uses the smoothed formula
/// `ln((1 + N) / (1 + df)) + 1` and output vectors are L2-normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfModel {
    pub vocabulary: Vec<String>,
    pub idf: Vec<f64>,
}

pub fn fit_tfidf(train_records: &[DatasetRecord]) -> Result<TfidfModel, BaselineError> {
    let documents: Vec<Vec<String>> = train_records
        .iter()
        .flat_map(|r| [tokenize(&r.advice1), tokenize(&r.advice2)])
        .collect();
    if documents.is_empty() {
        return Err(BaselineError::EmptyCorpus);
    }
    let mut vocabulary: Vec<String> = Vec::new();
    let mut index = std::collections::HashMap::new();
    let mut document_frequency: Vec<usize> = Vec::new();
    for doc in &documents {
        let mut seen = std::collections::HashSet::new();
        for term in doc {
            let &mut id = index.entry(term.clone()).or_insert_with(|| {
                vocabulary.push(term.clone());
                document_frequency.push(0);
                vocabulary.len() - 1
            });
            if seen.insert(id) {
                document_frequency[id] += 1;
            }
        }
    }
    let n = documents.len() as f64;
    let idf = document_frequency
        .iter()
        .map(|&df| ((1.0 + n) / (1.0 + df as f64)).ln() + 1.0)
        .collect();
    Ok(TfidfModel { vocabulary, idf })
}

impl TfidfModel {
    fn term_index(&self) -> std::collections::HashMap<&str, usize> {
        self.vocabulary
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), i))
            .collect()
    }

    /// Dense TF-IDF vector of one text, unit L2 norm unless all-zero.
    pub fn vectorize_text(&self, text: &str) -> Vec<f64> {
        let index = self.term_index();
        let mut vector = vec![0.0; self.vocabulary.len()];
        for term in tokenize(text) {
            if let Some(&id) = index.get(term.as_str()) {
                vector[id] += self.idf[id];
            }
        }
        let norm = vector.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in &mut vector {
                *v /= norm;
            }
        }
        vector
    }

    /// Pair features: the advice-1 vector concatenated with the advice-2
    /// vector, each normalized independently.
    pub fn vectorize_pair(&self, record: &DatasetRecord) -> Vec<f64> {
        let mut features = self.vectorize_text(&record.advice1);
        features.extend(self.vectorize_text(&record.advice2));
        features
    }

    pub fn dimension(&self) -> usize {
        self.vocabulary.len() * 2
    }
}

/// Training hyperparameters for the logistic classifiers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl TrainConfig {
    pub fn with_seed(seed: u64) -> Self {
        TrainConfig { epochs: 300, learning_rate: 0.5, seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    fn score(&self, features: &[f64]) -> f64 {
        let z: f64 = self
            .weights
            .iter()
            .zip(features)
            .map(|(w, x)| w * x)
            .sum::<f64>()
            + self.bias;
        sigmoid(z)
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Loss weights of one label's binary problem, inversely proportional to
/// class frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub positive: f64,
    pub negative: f64,
}

/// One class-weighted binary logistic classifier per conflict type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OvaClassifier {
    pub models: PerLabel<LinearModel>,
    pub class_weights: PerLabel<ClassWeights>,
    pub config: TrainConfig,
}

/// Train with full-batch gradient descent on class-weighted logistic
/// loss. Class weights are inversely proportional to class frequency, so
/// with 10 positives in 100 samples the positive class weighs 9 times the
/// negative. Deterministic given the seed.
pub fn train_ova(
    features: &[Vec<f64>],
    labels: &[ConflictLabels],
    config: TrainConfig,
) -> Result<OvaClassifier, BaselineError> {
    let mut trained = Vec::with_capacity(LABEL_NAMES.len());
    for name in LABEL_NAMES {
        trained.push(train_binary(features, labels, name, &config)?);
    }
    let mut it = trained.into_iter();
    let mut next = || it.next().expect("four labels");
    let (direct, direct_w) = next();
    let (subtypical, subtypical_w) = next();
    let (conditional, conditional_w) = next();
    let (temporal, temporal_w) = next();
    Ok(OvaClassifier {
        models: PerLabel { direct, subtypical, conditional, temporal },
        class_weights: PerLabel {
            direct: direct_w,
            subtypical: subtypical_w,
            conditional: conditional_w,
            temporal: temporal_w,
        },
        config,
    })
}

fn train_binary(
    features: &[Vec<f64>],
    labels: &[ConflictLabels],
    label: &'static str,
    config: &TrainConfig,
) -> Result<(LinearModel, ClassWeights), BaselineError> {
    let targets: Vec<f64> = labels
        .iter()
        .map(|l| if l.get(label) { 1.0 } else { 0.0 })
        .collect();
    let n = targets.len();
    let positives = targets.iter().filter(|&&t| t == 1.0).count();
    if positives == 0 {
        return Err(BaselineError::DegenerateLabel { label, polarity: "negative" });
    }
    if positives == n {
        return Err(BaselineError::DegenerateLabel { label, polarity: "positive" });
    }
    let weight_positive = n as f64 / (2.0 * positives as f64);
    let weight_negative = n as f64 / (2.0 * (n - positives) as f64);

    let dim = features.first().map_or(0, Vec::len);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ hash_label(label));
    let mut weights: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.01..0.01)).collect();
    let mut bias = 0.0;

    // features are mostly zero; iterate only the nonzero cells
    let sparse: Vec<Vec<(usize, f64)>> = features
        .iter()
        .map(|x| {
            x.iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(|(i, &v)| (i, v))
                .collect()
        })
        .collect();

    let mut gradient = vec![0.0; dim];
    for _ in 0..config.epochs {
        gradient.iter_mut().for_each(|g| *g = 0.0);
        let mut bias_gradient = 0.0;
        for (x, &y) in sparse.iter().zip(&targets) {
            let z: f64 = x.iter().map(|&(i, v)| weights[i] * v).sum::<f64>() + bias;
            let p = sigmoid(z);
            let weight = if y == 1.0 { weight_positive } else { weight_negative };
            let delta = weight * (p - y);
            for &(i, v) in x {
                gradient[i] += delta * v;
            }
            bias_gradient += delta;
        }
        let scale = config.learning_rate / n as f64;
        for (w, g) in weights.iter_mut().zip(&gradient) {
            *w -= scale * g;
        }
        bias -= scale * bias_gradient;
    }
    Ok((
        LinearModel { weights, bias },
        ClassWeights { positive: weight_positive, negative: weight_negative },
    ))
}

fn hash_label(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |acc, b| {
        (acc ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

impl OvaClassifier {
    pub fn predict_one(&self, features: &[f64]) -> ConflictLabels {
        ConflictLabels {
            direct: self.models.direct.score(features) >= 0.5,
            subtypical: self.models.subtypical.score(features) >= 0.5,
            conditional: self.models.conditional.score(features) >= 0.5,
            temporal: self.models.temporal.score(features) >= 0.5,
        }
    }

    pub fn predict(&self, features: &[Vec<f64>]) -> Vec<ConflictLabels> {
        features.iter().map(|f| self.predict_one(f)).collect()
    }
}

/// A value for each of the four conflict types.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerLabel<T> {
    pub direct: T,
    pub subtypical: T,
    pub conditional: T,
    pub temporal: T,
}

impl<T> PerLabel<T> {
    pub fn get(&self, name: &str) -> Option<&T> {
        match name {
            "direct" => Some(&self.direct),
            "subtypical" => Some(&self.subtypical),
            "conditional" => Some(&self.conditional),
            "temporal" => Some(&self.temporal),
            _ => None,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, &T)> {
        [
            ("direct", &self.direct),
            ("subtypical", &self.subtypical),
            ("conditional", &self.conditional),
            ("temporal", &self.temporal),
        ]
        .into_iter()
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> PerLabel<U> {
        PerLabel {
            direct: f(&self.direct),
            subtypical: f(&self.subtypical),
            conditional: f(&self.conditional),
            temporal: f(&self.temporal),
        }
    }
}

/// Positive-class metrics of one label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Number of positive golds.
    pub support: usize,
}

/// Positive-class precision, recall and F1 over one label's booleans.
/// Ratios with zero denominators are 0, including F1 when P + R = 0.
pub fn binary_metrics(preds: &[bool], golds: &[bool]) -> Result<LabelMetrics, BaselineError> {
    if preds.len() != golds.len() {
        return Err(BaselineError::LengthMismatch { preds: preds.len(), golds: golds.len() });
    }
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    for (&p, &g) in preds.iter().zip(golds) {
        match (p, g) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(LabelMetrics { precision, recall, f1, support: tp + fn_ })
}

fn ratio(numerator: usize, denominator: usize) -> f64 {
    if denominator == 0 {
        0.0
    } else {
        numerator as f64 / denominator as f64
    }
}

/// Metrics over all four labels plus the support-weighted F1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub per_label: PerLabel<LabelMetrics>,
    /// `Σ support·F1 / Σ support`; None when every label has support 0.
    pub weighted_f1: Option<f64>,
}

pub fn evaluate(
    preds: &[ConflictLabels],
    golds: &[ConflictLabels],
) -> Result<Metrics, BaselineError> {
    if preds.len() != golds.len() {
        return Err(BaselineError::LengthMismatch { preds: preds.len(), golds: golds.len() });
    }
    let metrics_for = |name: &str| -> Result<LabelMetrics, BaselineError> {
        let p: Vec<bool> = preds.iter().map(|l| l.get(name)).collect();
        let g: Vec<bool> = golds.iter().map(|l| l.get(name)).collect();
        binary_metrics(&p, &g)
    };
    let per_label = PerLabel {
        direct: metrics_for("direct")?,
        subtypical: metrics_for("subtypical")?,
        conditional: metrics_for("conditional")?,
        temporal: metrics_for("temporal")?,
    };
    Ok(Metrics { weighted_f1: weighted_f1(&per_label), per_label })
}

/// Support-weighted mean of per-label F1 scores.
pub fn weighted_f1(per_label: &PerLabel<LabelMetrics>) -> Option<f64> {
    let total: usize = per_label.iter().map(|(_, m)| m.support).sum();
    if total == 0 {
        return None;
    }
    let sum: f64 = per_label
        .iter()
        .map(|(_, m)| m.support as f64 * m.f1)
        .sum();
    Some(sum / total as f64)
}

/// Seeded independent Bernoulli draws at the training positive rate.
pub fn random_guess(n: usize, positive_rate: f64, seed: u64) -> Vec<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_bool(positive_rate.clamp(0.0, 1.0))).collect()
}

/// Fraction of training records positive for `label`.
pub fn positive_rate(labels: &[ConflictLabels], label: &str) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    labels.iter().filter(|l| l.get(label)).count() as f64 / labels.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

/// Arithmetic mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> Result<MeanStd, BaselineError> {
    if values.is_empty() {
        return Err(BaselineError::EmptyList);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Ok(MeanStd { mean, std: variance.sqrt() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelAggregate {
    pub precision: MeanStd,
    pub recall: MeanStd,
    pub f1: MeanStd,
}

/// Mean and standard deviation of every metric over k seeded runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunAggregate {
    pub runs: usize,
    pub per_label: PerLabel<LabelAggregate>,
    pub weighted_f1: Option<MeanStd>,
}

pub fn aggregate_runs(runs: &[Metrics]) -> Result<RunAggregate, BaselineError> {
    if runs.is_empty() {
        return Err(BaselineError::EmptyList);
    }
    let aggregate_label = |name: &str| -> LabelAggregate {
        let collect = |f: fn(&LabelMetrics) -> f64| -> MeanStd {
            let values: Vec<f64> = runs
                .iter()
                .map(|m| f(m.per_label.get(name).expect("known label")))
                .collect();
            mean_std(&values).expect("runs is non-empty")
        };
        LabelAggregate {
            precision: collect(|m| m.precision),
            recall: collect(|m| m.recall),
            f1: collect(|m| m.f1),
        }
    };
    let weighted: Vec<f64> = runs.iter().filter_map(|m| m.weighted_f1).collect();
    Ok(RunAggregate {
        runs: runs.len(),
        per_label: PerLabel {
            direct: aggregate_label("direct"),
            subtypical: aggregate_label("subtypical"),
            conditional: aggregate_label("conditional"),
            temporal: aggregate_label("temporal"),
        },
        weighted_f1: if weighted.is_empty() { None } else { Some(mean_std(&weighted).expect("non-empty")) },
    })
}

/// A fitted TF-IDF vocabulary together with its trained classifiers, as
/// persisted by `train-baseline` and consumed by `eval`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineModel {
    pub tfidf: TfidfModel,
    pub classifier: OvaClassifier,
}

/// Fit TF-IDF on the training records and train the one-vs-all
/// classifiers on their pair features.
pub fn train_baseline_model(
    train: &[DatasetRecord],
    config: TrainConfig,
) -> Result<BaselineModel, BaselineError> {
    let tfidf = fit_tfidf(train)?;
    let features: Vec<Vec<f64>> = train.iter().map(|r| tfidf.vectorize_pair(r)).collect();
    let labels: Vec<ConflictLabels> = train.iter().map(|r| r.labels).collect();
    let classifier = train_ova(&features, &labels, config)?;
    Ok(BaselineModel { tfidf, classifier })
}

impl BaselineModel {
    pub fn predict_records(&self, records: &[DatasetRecord]) -> Vec<ConflictLabels> {
        records
            .iter()
            .map(|r| self.classifier.predict_one(&self.tfidf.vectorize_pair(r)))
            .collect()
    }
}

/// Render metrics as an aligned plain-text table.
pub fn render_metrics_table(metrics: &Metrics) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<12} {:>9} {:>9} {:>9} {:>8}", "label", "precision", "recall", "f1", "support");
    for (name, m) in metrics.per_label.iter() {
        let _ = writeln!(
            out,
            "{name:<12} {:>9.4} {:>9.4} {:>9.4} {:>8}",
            m.precision, m.recall, m.f1, m.support
        );
    }
    match metrics.weighted_f1 {
        Some(w) => {
            let _ = writeln!(out, "{:<12} {:>9} {:>9} {:>9.4}", "weighted", "", "", w);
        }
        None => {
            let _ = writeln!(out, "{:<12} {:>9} {:>9} {:>9}", "weighted", "", "", "n/a");
        }
    }
    out
}

/// Render a run aggregate as an aligned plain-text table.
pub fn render_aggregate_table(aggregate: &RunAggregate) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<12} {:>17} {:>17} {:>17}   ({} runs)",
        "label", "precision", "recall", "f1", aggregate.runs
    );
    let cell = |m: MeanStd| format!("{:.4}/{:.4}", m.mean, m.std);
    for (name, a) in aggregate.per_label.iter() {
        let _ = writeln!(
            out,
            "{name:<12} {:>17} {:>17} {:>17}",
            cell(a.precision),
            cell(a.recall),
            cell(a.f1)
        );
    }
    if let Some(w) = aggregate.weighted_f1 {
        let _ = writeln!(out, "{:<12} {:>17} {:>17} {:>17}", "weighted", "", "", cell(w));
    }
    out
}
