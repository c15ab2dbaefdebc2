//! Token-by-token relation matrices over the packed pairwise input.
//!
//! The packed sequence is `[CLS] advice-1 words [SEP] advice-2 words
//! [SEP]`, expanded to subtoken positions by a [`SubtokenMap`]. Cell
//! labels come from a [`RelationVocab`] whose first five entries are
//! reserved: `None`, `self`, `bos`, `<unk>`, `:conflict`.
//!
//! Construction rules, applied per ordered word pair and then duplicated
//! over each word's full subtoken block:
//!
//! 1. words whose concepts are joined by a relation get that relation's
//!    vocabulary id, falling back to `<unk>` for labels outside the
//!    training vocabulary; the reverse direction gets the `-of` inverse;
//! 2. a word's diagonal carries its concept's first attribute value when
//!    one exists, otherwise `self`;
//! 3. every non-special position points at its sentence start with `bos`
//!    (`[CLS]` for advice 1, the first `[SEP]` for advice 2);
//! 4. everything else is `None`;
//! 5. the `:conflict` edge fills both directions between the two topic
//!    words.

use std::collections::HashMap;
use std::ops::Range;

use thiserror::Error;

use crate::alignment::TokenAlignment;
use crate::amr::{invert_relation, AmrAttribute, AmrEdge, AmrGraph};
use crate::tdgl::{LinkedGraph, CONFLICT_RELATION};

pub const LABEL_NONE: &str = "None";
pub const LABEL_SELF: &str = "self";
pub const LABEL_BOS: &str = "bos";
pub const LABEL_UNK: &str = "<unk>";

pub const NONE_ID: u32 = 0;
pub const SELF_ID: u32 = 1;
pub const BOS_ID: u32 = 2;
pub const UNK_ID: u32 = 3;
pub const CONFLICT_ID: u32 = 4;

const RESERVED: [&str; 5] = [LABEL_NONE, LABEL_SELF, LABEL_BOS, LABEL_UNK, CONFLICT_RELATION];

/// Relation-label vocabulary with fixed reserved ids 0..4.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationVocab {
    labels: Vec<String>,
    index: HashMap<String, u32>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VocabError {
    #[error("vocabulary file does not begin with the reserved labels (line {line})")]
    ReservedMismatch { line: usize },
    #[error("duplicate vocabulary label `{label}` on line {line}")]
    DuplicateLabel { label: String, line: usize },
}

impl RelationVocab {
    /// Just the five reserved labels.
    pub fn reserved() -> Self {
        let mut vocab = RelationVocab { labels: Vec::new(), index: HashMap::new() };
        for label in RESERVED {
            vocab.insert(label);
        }
        vocab
    }

    fn insert(&mut self, label: &str) -> u32 {
        if let Some(&id) = self.index.get(label) {
            return id;
        }
        let id = self.labels.len() as u32;
        self.labels.push(label.to_string());
        self.index.insert(label.to_string(), id);
        id
    }

    /// Id of `label`, or the id of `<unk>` when the label is unknown.
    pub fn lookup(&self, label: &str) -> u32 {
        self.index.get(label).copied().unwrap_or(UNK_ID)
    }

    pub fn label(&self, id: u32) -> &str {
        &self.labels[id as usize]
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// One label per line; the line number is the id.
    pub fn to_file_format(&self) -> String {
        let mut out = String::new();
        for label in &self.labels {
            out.push_str(label);
            out.push('\n');
        }
        out
    }

    pub fn from_file_format(text: &str) -> Result<Self, VocabError> {
        let mut vocab = RelationVocab { labels: Vec::new(), index: HashMap::new() };
        for (idx, line) in text.lines().enumerate() {
            if idx < RESERVED.len() && line != RESERVED[idx] {
                return Err(VocabError::ReservedMismatch { line: idx + 1 });
            }
            if vocab.index.contains_key(line) {
                return Err(VocabError::DuplicateLabel { label: line.to_string(), line: idx + 1 });
            }
            vocab.insert(line);
        }
        if vocab.labels.len() < RESERVED.len() {
            return Err(VocabError::ReservedMismatch { line: vocab.labels.len() + 1 });
        }
        Ok(vocab)
    }
}

/// Collect the relation vocabulary of a training split: reserved labels,
/// then every edge relation with its `-of` inverse, then every attribute
/// constant, in first-seen order.
pub fn build_vocab<'a, I>(training_graphs: I) -> RelationVocab
where
    I: IntoIterator<Item = &'a AmrGraph>,
{
    let mut vocab = RelationVocab::reserved();
    for graph in training_graphs {
        for edge in &graph.edges {
            vocab.insert(&edge.relation);
            vocab.insert(&invert_relation(&edge.relation));
        }
        for attr in &graph.attributes {
            vocab.insert(&attr.value);
        }
    }
    vocab
}

/// How the packed sequence positions break down into words and markers.
///
/// `groups[w]` is the contiguous subtoken range of packed word `w`, where
/// words 0..`advice1_words` belong to advice 1 and the rest to advice 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubtokenMap {
    groups: Vec<Range<usize>>,
    advice1_words: usize,
    cls: usize,
    sep1: usize,
    sep2: usize,
    len: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MatrixError {
    #[error("subtoken map does not tile the packed sequence: {detail}")]
    LayoutMismatch { detail: String },
    #[error("alignment covers {alignment_tokens} tokens but the layout has {layout_words} {side} words")]
    AlignmentOutOfRange {
        side: &'static str,
        alignment_tokens: usize,
        layout_words: usize,
    },
}

impl SubtokenMap {
    /// Layout `[CLS] w1.. [SEP] w2.. [SEP]` from per-word subtoken counts.
    pub fn from_group_sizes(sizes1: &[usize], sizes2: &[usize]) -> Result<Self, MatrixError> {
        if sizes1.iter().chain(sizes2).any(|&s| s == 0) {
            return Err(MatrixError::LayoutMismatch {
                detail: "zero-width subtoken group".to_string(),
            });
        }
        let mut groups = Vec::with_capacity(sizes1.len() + sizes2.len());
        let cls = 0usize;
        let mut pos = 1usize;
        for &size in sizes1 {
            groups.push(pos..pos + size);
            pos += size;
        }
        let sep1 = pos;
        pos += 1;
        for &size in sizes2 {
            groups.push(pos..pos + size);
            pos += size;
        }
        let sep2 = pos;
        Ok(SubtokenMap {
            groups,
            advice1_words: sizes1.len(),
            cls,
            sep1,
            sep2,
            len: pos + 1,
        })
    }

    /// One position per word: no subword splitting.
    pub fn whole_words(words1: usize, words2: usize) -> Self {
        Self::from_group_sizes(&vec![1; words1], &vec![1; words2])
            .expect("whole-word layout always tiles")
    }

    /// Test splitter: words strictly longer than `threshold` characters
    /// occupy two subtoken positions, everything else one.
    pub fn naive_split(tokens1: &[String], tokens2: &[String], threshold: usize) -> Self {
        let sizes = |tokens: &[String]| -> Vec<usize> {
            tokens.iter().map(|t| if t.chars().count() > threshold { 2 } else { 1 }).collect()
        };
        Self::from_group_sizes(&sizes(tokens1), &sizes(tokens2))
            .expect("naive split layout always tiles")
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cls(&self) -> usize {
        self.cls
    }

    pub fn sep1(&self) -> usize {
        self.sep1
    }

    pub fn sep2(&self) -> usize {
        self.sep2
    }

    pub fn advice1_words(&self) -> usize {
        self.advice1_words
    }

    pub fn advice2_words(&self) -> usize {
        self.groups.len() - self.advice1_words
    }

    pub fn groups(&self) -> &[Range<usize>] {
        &self.groups
    }

    /// Subtoken range of advice-1 word `w`.
    pub fn advice1_group(&self, w: usize) -> Range<usize> {
        self.groups[w].clone()
    }

    /// Subtoken range of advice-2 word `w`.
    pub fn advice2_group(&self, w: usize) -> Range<usize> {
        self.groups[self.advice1_words + w].clone()
    }
}

/// A dense L-by-L matrix of vocabulary ids, default `None`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationMatrix {
    size: usize,
    cells: Vec<u32>,
}

impl RelationMatrix {
    fn filled_none(size: usize) -> Self {
        RelationMatrix { size, cells: vec![NONE_ID; size * size] }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.cells[row * self.size + col]
    }

    fn set(&mut self, row: usize, col: usize, id: u32) {
        self.cells[row * self.size + col] = id;
    }

    /// Set only if the cell still holds `None`; first assignment wins.
    fn set_if_none(&mut self, row: usize, col: usize, id: u32) {
        let cell = &mut self.cells[row * self.size + col];
        if *cell == NONE_ID {
            *cell = id;
        }
    }

    pub fn non_none_cells(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        (0..self.size).flat_map(move |i| {
            (0..self.size).filter_map(move |j| {
                let id = self.get(i, j);
                (id != NONE_ID).then_some((i, j, id))
            })
        })
    }
}

struct WordView<'a> {
    /// Subtoken block of this word in the packed sequence.
    block: Range<usize>,
    /// Concepts aligned to the word, in alignment-entry order.
    concepts: Vec<&'a str>,
    /// Packed position of the word's sentence-start marker.
    bos: usize,
}

/// Assemble the matrix from an explicit edge/attribute pool and per-side
/// alignments whose variables already live in one shared namespace.
pub fn assemble_matrix(
    edges: &[AmrEdge],
    attributes: &[AmrAttribute],
    a1: &TokenAlignment,
    a2: &TokenAlignment,
    sm: &SubtokenMap,
    vocab: &RelationVocab,
) -> Result<RelationMatrix, MatrixError> {
    if a1.token_count != sm.advice1_words() {
        return Err(MatrixError::AlignmentOutOfRange {
            side: "advice-1",
            alignment_tokens: a1.token_count,
            layout_words: sm.advice1_words(),
        });
    }
    if a2.token_count != sm.advice2_words() {
        return Err(MatrixError::AlignmentOutOfRange {
            side: "advice-2",
            alignment_tokens: a2.token_count,
            layout_words: sm.advice2_words(),
        });
    }
    check_tiling(sm)?;

    let mut words: Vec<WordView<'_>> = Vec::with_capacity(sm.groups().len());
    for w in 0..sm.advice1_words() {
        words.push(WordView {
            block: sm.advice1_group(w),
            concepts: a1.concepts_for_token(w).unwrap_or_default(),
            bos: sm.cls(),
        });
    }
    for w in 0..sm.advice2_words() {
        words.push(WordView {
            block: sm.advice2_group(w),
            concepts: a2.concepts_for_token(w).unwrap_or_default(),
            bos: sm.sep1(),
        });
    }

    let mut attrs_by_owner: HashMap<&str, &str> = HashMap::new();
    for attr in attributes {
        // first attribute in graph order wins
        attrs_by_owner.entry(attr.owner.as_str()).or_insert(attr.value.as_str());
    }

    let mut matrix = RelationMatrix::filled_none(sm.len());

    // rule 2 diagonals: first aligned concept's first attribute, else self
    for word in &words {
        let id = word
            .concepts
            .first()
            .and_then(|c| attrs_by_owner.get(c))
            .map_or(SELF_ID, |value| vocab.lookup(value));
        for pos in word.block.clone() {
            matrix.set(pos, pos, id);
        }
    }
    for special in [sm.cls(), sm.sep1(), sm.sep2()] {
        matrix.set(special, special, SELF_ID);
    }

    // rule 3: every word position points at its sentence start
    for word in &words {
        for pos in word.block.clone() {
            matrix.set(pos, word.bos, BOS_ID);
        }
    }

    // rules 1 and 5: relations between distinct words, duplicated over
    // both subtoken blocks; the first matching edge in graph order wins
    for (u, word_u) in words.iter().enumerate() {
        for (w, word_w) in words.iter().enumerate() {
            if u == w {
                continue;
            }
            let Some(label) = relation_between(edges, &word_u.concepts, &word_w.concepts) else {
                continue;
            };
            let id = vocab.lookup(&label);
            for row in word_u.block.clone() {
                for col in word_w.block.clone() {
                    matrix.set_if_none(row, col, id);
                }
            }
        }
    }

    Ok(matrix)
}

/// Label relating `from` concepts to `to` concepts, scanning edges in
/// graph order: a forward edge contributes its relation, a reverse edge
/// its `-of` inverse, and `:conflict` reads the same both ways.
fn relation_between(edges: &[AmrEdge], from: &[&str], to: &[&str]) -> Option<String> {
    for edge in edges {
        let fwd = from.contains(&edge.source.as_str()) && to.contains(&edge.target.as_str());
        let rev = from.contains(&edge.target.as_str()) && to.contains(&edge.source.as_str());
        if edge.source == edge.target {
            continue;
        }
        if fwd {
            return Some(edge.relation.clone());
        }
        if rev {
            if edge.relation == CONFLICT_RELATION {
                return Some(edge.relation.clone());
            }
            return Some(invert_relation(&edge.relation));
        }
    }
    None
}

fn check_tiling(sm: &SubtokenMap) -> Result<(), MatrixError> {
    let mut covered = vec![false; sm.len()];
    let mut mark = |pos: usize, what: &str| -> Result<(), MatrixError> {
        if pos >= covered.len() || covered[pos] {
            return Err(MatrixError::LayoutMismatch {
                detail: format!("{what} at position {pos} overlaps or exceeds length {}", sm.len()),
            });
        }
        covered[pos] = true;
        Ok(())
    };
    mark(sm.cls(), "[CLS]")?;
    mark(sm.sep1(), "[SEP]")?;
    mark(sm.sep2(), "[SEP]")?;
    for group in sm.groups() {
        for pos in group.clone() {
            mark(pos, "word group")?;
        }
    }
    if let Some(hole) = covered.iter().position(|&c| !c) {
        return Err(MatrixError::LayoutMismatch {
            detail: format!("position {hole} is covered by neither a word nor a marker"),
        });
    }
    Ok(())
}

/// Build the matrix for a linked pair. Advice-2 alignment variables are
/// rewritten through the link's rename map before assembly.
pub fn build_matrix(
    lg: &LinkedGraph,
    a1: &TokenAlignment,
    a2: &TokenAlignment,
    sm: &SubtokenMap,
    vocab: &RelationVocab,
) -> Result<RelationMatrix, MatrixError> {
    let a2 = a2.renamed(&lg.rename_map);
    assemble_matrix(&lg.edges, &lg.attributes, a1, &a2, sm, vocab)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MatrixReadError {
    #[error("missing or malformed matrix header")]
    MalformedHeader,
    #[error("malformed matrix record on line {line}")]
    MalformedRecord { line: usize },
    #[error("cell ({row}, {col}) outside matrix of size {size}")]
    CellOutOfRange { row: usize, col: usize, size: usize },
}

/// Emit the sparse record stream: a `L<TAB>vocab_size` header, then one
/// `i<TAB>j<TAB>label_id` line per non-`None` cell in row-major order.
pub fn serialize_matrix(matrix: &RelationMatrix, vocab: &RelationVocab) -> String {
    let mut out = format!("{}\t{}\n", matrix.size(), vocab.len());
    for (i, j, id) in matrix.non_none_cells() {
        out.push_str(&format!("{i}\t{j}\t{id}\n"));
    }
    out
}

/// Read a stream produced by [`serialize_matrix`].
pub fn read_matrix(text: &str) -> Result<RelationMatrix, MatrixReadError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(MatrixReadError::MalformedHeader)?;
    let mut parts = header.split('\t');
    let size: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or(MatrixReadError::MalformedHeader)?;
    let _vocab_size: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or(MatrixReadError::MalformedHeader)?;
    let mut matrix = RelationMatrix::filled_none(size);
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let mut next = || -> Result<usize, MatrixReadError> {
            fields
                .next()
                .and_then(|f| f.parse().ok())
                .ok_or(MatrixReadError::MalformedRecord { line: idx + 1 })
        };
        let (row, col, id) = (next()?, next()?, next()?);
        if row >= size || col >= size {
            return Err(MatrixReadError::CellOutOfRange { row, col, size });
        }
        matrix.set(row, col, id as u32);
    }
    Ok(matrix)
}
