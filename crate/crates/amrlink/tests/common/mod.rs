//! Shared test fixtures: a seeded random-graph generator and independent
//! oracle implementations kept deliberately separate from the library's
//! code paths.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashSet};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use amrlink::alignment::TokenAlignment;
use amrlink::amr::{AmrAttribute, AmrEdge, AmrGraph, AmrNode};
use amrlink::matrix::{RelationVocab, SubtokenMap};
use amrlink::similarity::SimilarityProvider;

pub const CONCEPTS: [&str; 12] = [
    "drink-01", "advise-01", "alcohol", "milk", "person", "eat-01", "run-02", "moderate-03",
    "beverage", "medicine", "possible-01", "have-03",
];

pub const RELATIONS: [&str; 12] = [
    ":ARG0", ":ARG1", ":ARG2", ":mod", ":time", ":op1", ":op2", ":manner", ":ARG0-of",
    ":part-of", ":quant", ":condition",
];

pub const ATTR_RELATIONS: [&str; 3] = [":mode", ":polarity", ":quant"];
// "too much" exercises quoting; "v1" exercises variable-name collisions
pub const ATTR_VALUES: [&str; 6] = ["imperative", "-", "3", "expressive", "too much", "v1"];

/// A random connected graph with up to `max_nodes` nodes, reentrant extra
/// edges, and attributes. Node 0 is the root and every node hangs off an
/// earlier one, so the graph serializes without edge inversion.
pub fn random_graph(rng: &mut ChaCha8Rng, max_nodes: usize) -> AmrGraph {
    let n = rng.gen_range(1..=max_nodes);
    let nodes: Vec<AmrNode> = (0..n)
        .map(|i| AmrNode {
            variable: format!("v{i}"),
            concept: CONCEPTS.choose(rng).unwrap().to_string(),
        })
        .collect();
    let mut edges = Vec::new();
    let mut triples = HashSet::new();
    for i in 1..n {
        let parent = rng.gen_range(0..i);
        let relation = RELATIONS.choose(rng).unwrap().to_string();
        triples.insert((parent, relation.clone(), i));
        edges.push(AmrEdge {
            source: format!("v{parent}"),
            relation,
            target: format!("v{i}"),
        });
    }
    // reentrant extras between random distinct nodes
    if n > 1 {
        for _ in 0..rng.gen_range(0..n) {
            let s = rng.gen_range(0..n);
            let t = rng.gen_range(0..n);
            if s == t {
                continue;
            }
            let relation = RELATIONS.choose(rng).unwrap().to_string();
            if triples.insert((s, relation.clone(), t)) {
                edges.push(AmrEdge {
                    source: format!("v{s}"),
                    relation,
                    target: format!("v{t}"),
                });
            }
        }
    }
    let mut attributes = Vec::new();
    for _ in 0..rng.gen_range(0..3) {
        attributes.push(AmrAttribute {
            owner: format!("v{}", rng.gen_range(0..n)),
            relation: ATTR_RELATIONS.choose(rng).unwrap().to_string(),
            value: ATTR_VALUES.choose(rng).unwrap().to_string(),
        });
    }
    AmrGraph {
        nodes,
        edges,
        attributes,
        root: "v0".to_string(),
    }
}

/// Count concept introductions and node-valued roles by scanning tokens
/// of PENMAN text, without parsing. Returns (node_count, edge_count).
pub fn token_scan_counts(text: &str) -> (usize, usize) {
    // split into tokens the same way a reader would, tracking quotes
    let mut tokens: Vec<String> = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if c.is_whitespace() {
            continue;
        }
        match c {
            '(' | ')' | '/' => tokens.push(c.to_string()),
            '"' => {
                let mut s = String::from("\"");
                for q in chars.by_ref() {
                    if q == '"' {
                        break;
                    }
                    s.push(q);
                }
                tokens.push(s);
            }
            other => {
                let mut s = String::from(other);
                while let Some(&next) = chars.peek() {
                    if next.is_whitespace() || matches!(next, '(' | ')' | '/' | '"') {
                        break;
                    }
                    s.push(next);
                    chars.next();
                }
                tokens.push(s);
            }
        }
    }
    let defined: HashSet<&str> = tokens
        .windows(3)
        .filter(|w| w[0] == "(" && w[2] == "/")
        .map(|w| w[1].as_str())
        .collect();
    let node_count = tokens.iter().filter(|t| *t == "/").count();
    let mut edge_count = 0;
    for (i, token) in tokens.iter().enumerate() {
        if !token.starts_with(':') {
            continue;
        }
        match tokens.get(i + 1) {
            Some(next) if next == "(" => edge_count += 1,
            Some(next) if defined.contains(next.as_str()) && !next.starts_with('"') => {
                edge_count += 1
            }
            _ => {}
        }
    }
    (node_count, edge_count)
}

/// Exhaustive reference for topic selection: score every token, drop the
/// unaligned, take the maximum with ties broken by lowest index.
pub fn brute_force_topic(
    tokens: &[String],
    topic: &str,
    alignment: &TokenAlignment,
    provider: &SimilarityProvider,
) -> Option<(usize, String, f64)> {
    let mut best: Option<(usize, String, f64)> = None;
    for (index, token) in tokens.iter().enumerate() {
        let concepts = alignment.concepts_for_token(index).unwrap_or_default();
        if concepts.is_empty() {
            continue;
        }
        let score = topic
            .split_whitespace()
            .map(|w| provider.score(token, w))
            .fold(0.0f64, f64::max);
        let replace = match &best {
            None => true,
            Some((_, _, s)) => score > *s,
        };
        if replace {
            best = Some((index, concepts[0].to_string(), score));
        }
    }
    best
}

/// Where a packed position sits: a marker or a word on one side.
enum Position {
    Cls,
    Sep1,
    Sep2,
    Word { word: usize },
}

fn classify(sm: &SubtokenMap, pos: usize) -> Position {
    if pos == sm.cls() {
        return Position::Cls;
    }
    if pos == sm.sep1() {
        return Position::Sep1;
    }
    if pos == sm.sep2() {
        return Position::Sep2;
    }
    for (w, group) in sm.groups().iter().enumerate() {
        if group.contains(&pos) {
            return Position::Word { word: w };
        }
    }
    panic!("position {pos} not covered by the layout");
}

/// Independent rule-by-rule reference for the relation matrix: each cell
/// is decided on its own by walking the construction rules in order,
/// with no block-assignment machinery shared with the implementation.
#[allow(clippy::too_many_arguments)]
pub fn matrix_oracle_cell(
    edges: &[AmrEdge],
    attributes: &[AmrAttribute],
    a1: &TokenAlignment,
    a2: &TokenAlignment,
    sm: &SubtokenMap,
    vocab: &RelationVocab,
    row: usize,
    col: usize,
) -> u32 {
    let concepts_of = |word: usize| -> Vec<String> {
        if word < sm.advice1_words() {
            a1.concepts_for_token(word)
                .unwrap_or_default()
                .into_iter()
                .map(str::to_string)
                .collect()
        } else {
            a2.concepts_for_token(word - sm.advice1_words())
                .unwrap_or_default()
                .into_iter()
                .map(str::to_string)
                .collect()
        }
    };
    let row_pos = classify(sm, row);
    let col_pos = classify(sm, col);

    // diagonal: markers are `self`; a word carries its first concept's
    // first attribute value when one exists, else `self`
    if row == col {
        return match row_pos {
            Position::Word { word } => {
                let concepts = concepts_of(word);
                match concepts.first() {
                    Some(c) => attributes
                        .iter()
                        .find(|a| &a.owner == c)
                        .map_or(amrlink::matrix::SELF_ID, |a| vocab.lookup(&a.value)),
                    None => amrlink::matrix::SELF_ID,
                }
            }
            _ => amrlink::matrix::SELF_ID,
        };
    }
    // bos: a word row pointing at its own sentence-start column
    if let Position::Word { word } = row_pos {
        let bos = if word < sm.advice1_words() { sm.cls() } else { sm.sep1() };
        if col == bos {
            return amrlink::matrix::BOS_ID;
        }
    }
    // relations between two distinct words
    if let (Position::Word { word: u }, Position::Word { word: w }) = (row_pos, col_pos) {
        if u != w {
            let cu = concepts_of(u);
            let cw = concepts_of(w);
            for edge in edges {
                if edge.source == edge.target {
                    continue;
                }
                if cu.iter().any(|c| c == &edge.source) && cw.iter().any(|c| c == &edge.target) {
                    return vocab.lookup(&edge.relation);
                }
                if cu.iter().any(|c| c == &edge.target) && cw.iter().any(|c| c == &edge.source) {
                    if edge.relation == ":conflict" {
                        return vocab.lookup(":conflict");
                    }
                    return vocab.lookup(&amrlink::amr::invert_relation(&edge.relation));
                }
            }
        }
    }
    amrlink::matrix::NONE_ID
}

/// Positive-class precision/recall/F1 from totals rather than a
/// confusion-matrix walk.
pub fn oracle_prf(preds: &[bool], golds: &[bool]) -> (f64, f64, f64) {
    assert_eq!(preds.len(), golds.len());
    let tp = preds.iter().zip(golds).filter(|(p, g)| **p && **g).count();
    let predicted_positive = preds.iter().filter(|p| **p).count();
    let gold_positive = golds.iter().filter(|g| **g).count();
    let precision = if predicted_positive == 0 { 0.0 } else { tp as f64 / predicted_positive as f64 };
    let recall = if gold_positive == 0 { 0.0 } else { tp as f64 / gold_positive as f64 };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    (precision, recall, f1)
}

/// Every file under `dir` (recursively) with its contents, keyed by
/// path relative to `dir`.
pub fn snapshot_tree(dir: &std::path::Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &std::path::Path, dir: &std::path::Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).expect("readable dir") {
            let entry = entry.expect("dir entry");
            let path = entry.path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path.strip_prefix(root).expect("under root");
                out.insert(
                    rel.to_string_lossy().into_owned(),
                    std::fs::read(&path).expect("readable file"),
                );
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}
