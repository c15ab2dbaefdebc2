//! Topic-driven graph linking.
//!
//! Given a pair of advice texts with their graphs and alignments, pick the
//! token in each advice most similar to the conflict topic, look up the
//! concepts those tokens produced, and join the two graphs with a single
//! `:conflict` edge between them. The merged graph keeps every node and
//! edge of both inputs; graph-2 variables are renamed to stay disjoint.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::TokenAlignment;
use crate::amr::{serialize_penman, AmrAttribute, AmrEdge, AmrGraph, AmrNode, SerializeError};
use crate::similarity::SimilarityProvider;

pub const CONFLICT_RELATION: &str = ":conflict";

/// Which advice of the pair something refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdviceSide {
    First,
    Second,
}

impl std::fmt::Display for AdviceSide {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AdviceSide::First => write!(f, "advice 1"),
            AdviceSide::Second => write!(f, "advice 2"),
        }
    }
}

/// The topic-bearing token of one advice and the concept it aligns to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicSelection {
    pub token_index: usize,
    pub node: String,
    pub score: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum TopicError {
    #[error("no tokens to select from")]
    NoTokens,
    #[error("no aligned token reaches the similarity threshold {threshold}")]
    TopicUnalignable { threshold: f64 },
}

#[derive(Debug, Error, PartialEq)]
pub enum LinkError {
    #[error("{side}: {source}")]
    Topic {
        side: AdviceSide,
        source: TopicError,
    },
}

/// The merged pairwise graph: both node sets, both edge sets, and one
/// `:conflict` edge (included in `edges` and repeated in `conflict_edge`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkedGraph {
    pub nodes: Vec<AmrNode>,
    pub edges: Vec<AmrEdge>,
    pub attributes: Vec<AmrAttribute>,
    pub roots: (String, String),
    pub conflict_edge: AmrEdge,
    /// Original graph-2 variable -> merged variable.
    pub rename_map: BTreeMap<String, String>,
}

/// Score one token against a (possibly multi-word) topic: the maximum
/// similarity over the topic's whitespace-separated words.
pub fn topic_score(token: &str, topic: &str, provider: &SimilarityProvider) -> f64 {
    topic
        .split_whitespace()
        .map(|w| provider.score(token, w))
        .fold(0.0, f64::max)
}

/// Pick the topic-bearing token: the highest-scoring token that has at
/// least one aligned concept and reaches `threshold`, breaking score ties
/// by lowest token index. The selected node is the first variable in
/// `concepts_for_token` order.
pub fn select_topic_token_with_threshold(
    tokens: &[String],
    topic: &str,
    alignment: &TokenAlignment,
    provider: &SimilarityProvider,
    threshold: f64,
) -> Result<TopicSelection, TopicError> {
    if tokens.is_empty() {
        return Err(TopicError::NoTokens);
    }
    let mut best: Option<TopicSelection> = None;
    for (index, token) in tokens.iter().enumerate() {
        let concepts = alignment
            .concepts_for_token(index)
            .unwrap_or_default();
        let Some(first) = concepts.first() else {
            continue;
        };
        let score = topic_score(token, topic, provider);
        if score < threshold {
            continue;
        }
        let better = match &best {
            None => true,
            Some(b) => score > b.score,
        };
        if better {
            best = Some(TopicSelection {
                token_index: index,
                node: first.to_string(),
                score,
            });
        }
    }
    best.ok_or(TopicError::TopicUnalignable { threshold })
}

/// [`select_topic_token_with_threshold`] with the default threshold of 0,
/// under which the argmax over aligned tokens is always accepted.
pub fn select_topic_token(
    tokens: &[String],
    topic: &str,
    alignment: &TokenAlignment,
    provider: &SimilarityProvider,
) -> Result<TopicSelection, TopicError> {
    select_topic_token_with_threshold(tokens, topic, alignment, provider, 0.0)
}

const RENAME_SUFFIX: &str = "_2";

fn build_rename_map(g1: &AmrGraph, g2: &AmrGraph) -> BTreeMap<String, String> {
    let mut taken: BTreeSet<String> =
        g1.nodes.iter().map(|n| n.variable.clone()).collect();
    let mut map = BTreeMap::new();
    for node in &g2.nodes {
        let base = format!("{}{}", node.variable, RENAME_SUFFIX);
        let mut candidate = base.clone();
        let mut counter = 2usize;
        while taken.contains(&candidate) {
            candidate = format!("{base}_{counter}");
            counter += 1;
        }
        taken.insert(candidate.clone());
        map.insert(node.variable.clone(), candidate);
    }
    map
}

/// Fuse two advice graphs into one [`LinkedGraph`].
///
/// Graph-2 variables are renamed by appending `_2` (with a numeric suffix
/// when that name is already taken). The conflict edge runs from the
/// advice-1 topic concept to the renamed advice-2 topic concept and is
/// appended last to `edges`.
#[allow(clippy::too_many_arguments)]
pub fn link_graphs(
    g1: &AmrGraph,
    a1: &TokenAlignment,
    tokens1: &[String],
    g2: &AmrGraph,
    a2: &TokenAlignment,
    tokens2: &[String],
    topic: &str,
    provider: &SimilarityProvider,
) -> Result<LinkedGraph, LinkError> {
    link_graphs_with_threshold(g1, a1, tokens1, g2, a2, tokens2, topic, provider, 0.0)
}

#[allow(clippy::too_many_arguments)]
pub fn link_graphs_with_threshold(
    g1: &AmrGraph,
    a1: &TokenAlignment,
    tokens1: &[String],
    g2: &AmrGraph,
    a2: &TokenAlignment,
    tokens2: &[String],
    topic: &str,
    provider: &SimilarityProvider,
    threshold: f64,
) -> Result<LinkedGraph, LinkError> {
    let pick1 = select_topic_token_with_threshold(tokens1, topic, a1, provider, threshold)
        .map_err(|source| LinkError::Topic { side: AdviceSide::First, source })?;
    let pick2 = select_topic_token_with_threshold(tokens2, topic, a2, provider, threshold)
        .map_err(|source| LinkError::Topic { side: AdviceSide::Second, source })?;

    let rename_map = build_rename_map(g1, g2);
    let renamed = |v: &str| -> String {
        rename_map.get(v).cloned().unwrap_or_else(|| v.to_string())
    };

    let mut nodes = g1.nodes.clone();
    nodes.extend(g2.nodes.iter().map(|n| AmrNode {
        variable: renamed(&n.variable),
        concept: n.concept.clone(),
    }));
    let mut edges = g1.edges.clone();
    edges.extend(g2.edges.iter().map(|e| AmrEdge {
        source: renamed(&e.source),
        relation: e.relation.clone(),
        target: renamed(&e.target),
    }));
    let mut attributes = g1.attributes.clone();
    attributes.extend(g2.attributes.iter().map(|a| AmrAttribute {
        owner: renamed(&a.owner),
        relation: a.relation.clone(),
        value: a.value.clone(),
    }));

    let conflict_edge = AmrEdge {
        source: pick1.node.clone(),
        relation: CONFLICT_RELATION.to_string(),
        target: renamed(&pick2.node),
    };
    edges.push(conflict_edge.clone());

    Ok(LinkedGraph {
        nodes,
        edges,
        attributes,
        roots: (g1.root.clone(), renamed(&g2.root)),
        conflict_edge,
        rename_map,
    })
}

impl LinkedGraph {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("LinkedGraph serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("LinkedGraph serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Export as one PENMAN expression under a synthetic `link` root.
    ///
    /// Lossy: the synthetic root adds one node and two edges, so the
    /// merged graph's cardinalities are not preserved. The JSON form is
    /// the faithful surface.
    pub fn to_lossy_penman(&self) -> Result<String, SerializeError> {
        let mut root_var = "lnk".to_string();
        let mut counter = 0usize;
        while self.nodes.iter().any(|n| n.variable == root_var) {
            counter += 1;
            root_var = format!("lnk{counter}");
        }
        let mut nodes = vec![AmrNode { variable: root_var.clone(), concept: "link".to_string() }];
        nodes.extend(self.nodes.iter().cloned());
        let mut edges = vec![
            AmrEdge {
                source: root_var.clone(),
                relation: ":op1".to_string(),
                target: self.roots.0.clone(),
            },
            AmrEdge {
                source: root_var.clone(),
                relation: ":op2".to_string(),
                target: self.roots.1.clone(),
            },
        ];
        edges.extend(self.edges.iter().cloned());
        let graph = AmrGraph {
            nodes,
            edges,
            attributes: self.attributes.clone(),
            root: root_var,
        };
        serialize_penman(&graph)
    }
}
