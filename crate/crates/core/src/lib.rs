//! Emoji usage analytics over message corpora.
//!
//! The crate covers the full pipeline: a data-driven emoji lexicon with a
//! normalization policy ([`lexicon`]), emoji/text tokenization and message
//! pattern flags ([`segment`]), JSONL corpus ingestion with per-user
//! aggregation and a seeded synthetic generator ([`corpus`]), the
//! gender-difference statistics (mutual information, PMI co-occurrence
//! graphs, Louvain communities, z-tests) ([`stats`]), the per-user feature
//! schema ([`features`]), and in-repo classifiers with an evaluation
//! protocol ([`model`]).

pub mod corpus;
pub mod error;
pub mod features;
pub mod lexicon;
pub mod model;
pub mod segment;
pub mod stats;

pub use error::{Error, Result};
pub use lexicon::{EmojiLexicon, EmojiSeq, NormalizationPolicy, SentimentLabel, SentimentLexicon};
