//! Token-to-concept alignments.
//!
//! An alignment maps word indices of an advice text to the graph variables
//! produced from them. The surface format is JAMR-style items
//! `start-end|var` over word indices (start inclusive, end exclusive),
//! whitespace-separated. A token may map to several nodes and a node may
//! own several spans; overlapping spans are allowed.

use std::collections::BTreeSet;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amr::AmrGraph;

/// One aligned span: word indices `span` produced concept `node`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignEntry {
    pub start: usize,
    pub end: usize,
    pub node: String,
}

impl AlignEntry {
    pub fn span(&self) -> Range<usize> {
        self.start..self.end
    }
}

/// The alignment of one advice text to its graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenAlignment {
    pub entries: Vec<AlignEntry>,
    pub token_count: usize,
    /// Variable universe of the companion graph, captured at parse time so
    /// lookups can distinguish "unaligned" from "unknown".
    variables: BTreeSet<String>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AlignmentError {
    #[error("span out of range in item `{item}` (token count {token_count})")]
    SpanOutOfRange { item: String, token_count: usize },
    #[error("unknown variable in item `{item}`")]
    UnknownVariable { item: String },
    #[error("malformed alignment item `{item}`")]
    MalformedItem { item: String },
    #[error("token index {index} out of range (token count {token_count})")]
    IndexOutOfRange { index: usize, token_count: usize },
}

/// Parse a whitespace-separated list of `start-end|var` items.
/// Tokens not mentioned by any item are unaligned.
pub fn parse_alignment(
    spec: &str,
    graph: &AmrGraph,
    token_count: usize,
) -> Result<TokenAlignment, AlignmentError> {
    let variables: BTreeSet<String> = graph.nodes.iter().map(|n| n.variable.clone()).collect();
    let mut entries = Vec::new();
    for item in spec.split_whitespace() {
        let malformed = || AlignmentError::MalformedItem { item: item.to_string() };
        let (span, var) = item.split_once('|').ok_or_else(malformed)?;
        let (start, end) = span.split_once('-').ok_or_else(malformed)?;
        let start: usize = start.parse().map_err(|_| malformed())?;
        let end: usize = end.parse().map_err(|_| malformed())?;
        if var.is_empty() {
            return Err(malformed());
        }
        if start >= end || end > token_count {
            return Err(AlignmentError::SpanOutOfRange {
                item: item.to_string(),
                token_count,
            });
        }
        if !variables.contains(var) {
            return Err(AlignmentError::UnknownVariable { item: item.to_string() });
        }
        entries.push(AlignEntry {
            start,
            end,
            node: var.to_string(),
        });
    }
    Ok(TokenAlignment {
        entries,
        token_count,
        variables,
    })
}

impl TokenAlignment {
    /// An alignment with no entries over `token_count` tokens of `graph`.
    pub fn empty(graph: &AmrGraph, token_count: usize) -> Self {
        TokenAlignment {
            entries: Vec::new(),
            token_count,
            variables: graph.nodes.iter().map(|n| n.variable.clone()).collect(),
        }
    }

    /// Variables of all entries whose span contains `index`, in entry order.
    pub fn concepts_for_token(&self, index: usize) -> Result<Vec<&str>, AlignmentError> {
        if index >= self.token_count {
            return Err(AlignmentError::IndexOutOfRange {
                index,
                token_count: self.token_count,
            });
        }
        Ok(self
            .entries
            .iter()
            .filter(|e| e.span().contains(&index))
            .map(|e| e.node.as_str())
            .collect())
    }

    /// Sorted, de-duplicated word indices covered by spans aligned to `node`.
    pub fn tokens_for_concept(&self, node: &str) -> Result<Vec<usize>, AlignmentError> {
        if !self.variables.contains(node) {
            return Err(AlignmentError::UnknownVariable { item: node.to_string() });
        }
        let indices: BTreeSet<usize> = self
            .entries
            .iter()
            .filter(|e| e.node == node)
            .flat_map(|e| e.span())
            .collect();
        Ok(indices.into_iter().collect())
    }

    /// Render back to the `start-end|var` item format, in entry order.
    pub fn to_spec(&self) -> String {
        self.entries
            .iter()
            .map(|e| format!("{}-{}|{}", e.start, e.end, e.node))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Rewrite every entry's variable through `rename`, keeping entries
    /// whose variable has no mapping unchanged.
    pub fn renamed(&self, rename: &std::collections::BTreeMap<String, String>) -> TokenAlignment {
        TokenAlignment {
            entries: self
                .entries
                .iter()
                .map(|e| AlignEntry {
                    start: e.start,
                    end: e.end,
                    node: rename.get(&e.node).cloned().unwrap_or_else(|| e.node.clone()),
                })
                .collect(),
            token_count: self.token_count,
            variables: self
                .variables
                .iter()
                .map(|v| rename.get(v).cloned().unwrap_or_else(|| v.clone()))
                .collect(),
        }
    }
}
