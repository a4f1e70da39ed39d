//! Corpus-level statistics: document count, mean whitespace-token length,
//! and gold item count.

use serde::{Deserialize, Serialize};

use super::Transcript;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_documents: usize,
    /// Mean whitespace-separated token count per document.
    pub avg_length: f64,
    pub n_gold_items: usize,
}

/// Number of whitespace-separated tokens in a document's raw text.
pub fn token_length(transcript: &Transcript) -> usize {
    transcript.raw_text.split_whitespace().count()
}

/// Aggregate statistics over a corpus; an empty corpus yields all zeros.
pub fn corpus_stats(documents: &[Transcript], n_gold_items: Option<usize>) -> CorpusStats {
    let n_documents = documents.len();
    let avg_length = if n_documents == 0 {
        0.0
    } else {
        documents.iter().map(token_length).sum::<usize>() as f64 / n_documents as f64
    };
    CorpusStats {
        n_documents,
        avg_length,
        n_gold_items: n_gold_items.unwrap_or(0),
    }
}
