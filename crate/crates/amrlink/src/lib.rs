//! Semantic-graph preprocessing and evaluation for pairwise health-advice
//! conflict detection.
//!
//! The crate covers the path from raw advice pairs to model-ready
//! structures:
//!
//! * [`amr`] — AMR graphs in PENMAN notation (parse, validate, serialize);
//! * [`alignment`] — token-to-concept alignments in `start-end|var` form;
//! * [`similarity`] + [`tdgl`] — topic-driven graph linking: find the
//!   topic-bearing token of each advice and fuse the two graphs with a
//!   `:conflict` edge;
//! * [`matrix`] — the token-by-token relation matrix over the packed
//!   `[CLS] … [SEP] … [SEP]` sequence, with its sparse file format;
//! * [`dataset`] — the JSONL record schema, corpus statistics, and a
//!   seeded toy-pair generator;
//! * [`baseline`] — TF-IDF features, one-vs-all class-weighted logistic
//!   classifiers, positive-class and weighted F1, seeded aggregation;
//! * [`pipeline`] — deterministic batch orchestration of all of the above.

pub mod alignment;
pub mod amr;
pub mod baseline;
pub mod dataset;
pub mod matrix;
pub mod pipeline;
pub mod similarity;
pub mod tdgl;

pub use alignment::{parse_alignment, TokenAlignment};
pub use amr::{parse_penman, serialize_penman, validate, AmrGraph};
pub use matrix::{build_matrix, build_vocab, serialize_matrix, RelationMatrix, RelationVocab};
pub use similarity::{SimilarityKind, SimilarityProvider};
pub use tdgl::{link_graphs, select_topic_token, LinkedGraph, TopicSelection};
