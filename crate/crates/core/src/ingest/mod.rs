//! Corpus ingestion: MusicXML reading, quality filtering and splitting.

mod corpus;
pub mod demo;
mod musicxml;

pub use corpus::{corpus_filter, filter_reason, split_corpus, Corpus, CorpusError, FilterReason};
pub use demo::{demo_corpus, demo_piece};
pub use musicxml::{parse_musicxml, write_musicxml, IngestError};
