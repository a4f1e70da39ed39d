//! Lexical top-N retrieval over flowsheet schema rows and few-shot example
//! databases: a small BM25 (k1=1.2, b=0.75) inverted index. Indexes are
//! immutable after build and safe to query concurrently.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{FewShotExample, FlowsheetSchema, FormatError, GoldItems};

pub const BM25_K1: f64 = 1.2;
pub const BM25_B: f64 = 0.75;

const INDEX_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("duplicate doc_id {0:?}")]
    DuplicateDocId(String),
    #[error("index needs at least one document")]
    EmptyIndex,
    #[error("n must be positive")]
    ZeroN,
    #[error("unsupported index file version {0}")]
    Version(u32),
    #[error("{0}")]
    Format(#[from] FormatError),
}

/// One indexed document: a schema row's verbalizations or an example
/// transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexDoc {
    pub doc_id: String,
    pub text: String,
}

/// One retrieval result; hits are sorted by non-increasing score with ties
/// broken by ascending doc_id.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedHit {
    pub doc_id: String,
    pub score: f64,
}

/// Lowercase, split on any non-alphanumeric character, drop empties.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_string())
        .collect()
}

#[derive(Debug)]
struct Posting {
    doc: usize,
    term_frequency: u32,
}

/// Immutable BM25 inverted index.
#[derive(Debug)]
pub struct Index {
    docs: Vec<IndexDoc>,
    postings: HashMap<String, Vec<Posting>>,
    doc_lengths: Vec<usize>,
    avg_doc_length: f64,
}

/// Build an index over the given documents. Doc ids must be unique.
pub fn build_index(docs: Vec<IndexDoc>) -> Result<Index, RetrievalError> {
    if docs.is_empty() {
        return Err(RetrievalError::EmptyIndex);
    }
    let mut seen = std::collections::HashSet::new();
    for d in &docs {
        if !seen.insert(d.doc_id.as_str()) {
            return Err(RetrievalError::DuplicateDocId(d.doc_id.clone()));
        }
    }

    let mut postings: HashMap<String, Vec<Posting>> = HashMap::new();
    let mut doc_lengths = Vec::with_capacity(docs.len());
    for (i, d) in docs.iter().enumerate() {
        let tokens = tokenize(&d.text);
        doc_lengths.push(tokens.len());
        let mut counts: BTreeMap<String, u32> = BTreeMap::new();
        for t in tokens {
            *counts.entry(t).or_insert(0) += 1;
        }
        for (term, term_frequency) in counts {
            postings
                .entry(term)
                .or_default()
                .push(Posting { doc: i, term_frequency });
        }
    }
    let avg_doc_length = doc_lengths.iter().sum::<usize>() as f64 / docs.len() as f64;
    Ok(Index {
        docs,
        postings,
        doc_lengths,
        avg_doc_length,
    })
}

impl Index {
    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn docs(&self) -> &[IndexDoc] {
        &self.docs
    }

    /// BM25 score of every document sharing at least one token with the
    /// query. The IDF variant `ln(1 + (N - df + 0.5)/(df + 0.5))` keeps all
    /// scores strictly positive, so token overlap and a nonzero score
    /// coincide.
    fn score(&self, query: &str) -> Vec<(usize, f64)> {
        let n = self.docs.len() as f64;
        let mut scores: HashMap<usize, f64> = HashMap::new();
        for term in tokenize(query) {
            let Some(postings) = self.postings.get(&term) else {
                continue;
            };
            let df = postings.len() as f64;
            let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
            for p in postings {
                let dl = self.doc_lengths[p.doc] as f64;
                let tf = p.term_frequency as f64;
                let tf_norm =
                    tf * (BM25_K1 + 1.0) / (tf + BM25_K1 * (1.0 - BM25_B + BM25_B * dl / self.avg_doc_length));
                *scores.entry(p.doc).or_insert(0.0) += idf * tf_norm;
            }
        }
        scores.into_iter().collect()
    }
}

/// Top-n hits for a query. Only documents sharing at least one token with
/// the query appear; fewer than n hits may be returned.
pub fn top_n(index: &Index, query: &str, n: usize) -> Result<Vec<RankedHit>, RetrievalError> {
    if n == 0 {
        return Err(RetrievalError::ZeroN);
    }
    let mut hits: Vec<RankedHit> = index
        .score(query)
        .into_iter()
        .map(|(doc, score)| RankedHit {
            doc_id: index.docs[doc].doc_id.clone(),
            score,
        })
        .collect();
    hits.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.doc_id.cmp(&b.doc_id))
    });
    hits.truncate(n);
    Ok(hits)
}

/// Build the index documents for a flowsheet schema: each row's text is its
/// key, allowed values, and phrasings. When an example database is supplied,
/// the raw spans of gold observations are folded into their row's document
/// so the index sees real verbalizations.
pub fn schema_row_docs(schema: &FlowsheetSchema, examples: Option<&[FewShotExample]>) -> Vec<IndexDoc> {
    let mut extra: HashMap<&str, Vec<&str>> = HashMap::new();
    if let Some(examples) = examples {
        for ex in examples {
            if let GoldItems::Observations(obs) = &ex.gold {
                for o in obs {
                    extra.entry(o.row_key.as_str()).or_default().push(o.raw_span.as_str());
                }
            }
        }
    }
    schema
        .rows
        .iter()
        .map(|row| {
            let mut parts = vec![row.key.clone()];
            parts.extend(row.allowed_values.iter().cloned());
            if let Some(phrasings) = &row.phrasings {
                parts.extend(phrasings.iter().cloned());
            }
            if let Some(spans) = extra.get(row.key.as_str()) {
                parts.extend(spans.iter().map(|s| s.to_string()));
            }
            IndexDoc {
                doc_id: row.key.clone(),
                text: parts.join(" "),
            }
        })
        .collect()
}

/// Index documents for a few-shot example database.
pub fn example_docs(examples: &[FewShotExample]) -> Vec<IndexDoc> {
    examples
        .iter()
        .map(|ex| IndexDoc {
            doc_id: ex.id.clone(),
            text: ex.transcript_text.clone(),
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct IndexFile {
    version: u32,
    docs: Vec<IndexDoc>,
}

/// Persist an index as a versioned JSON sidecar. Statistics are recomputed
/// deterministically on load, so only the documents are stored.
pub fn save_index(index: &Index, path: &Path) -> Result<(), RetrievalError> {
    let file = IndexFile {
        version: INDEX_FORMAT_VERSION,
        docs: index.docs.clone(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("index serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| FormatError::Io(format!("{}: {e}", path.display())))?;
    Ok(())
}

pub fn load_index(path: &Path) -> Result<Index, RetrievalError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| FormatError::Io(format!("{}: {e}", path.display())))?;
    let file: IndexFile =
        serde_json::from_str(&text).map_err(|e| FormatError::Json(e.to_string()))?;
    if file.version != INDEX_FORMAT_VERSION {
        return Err(RetrievalError::Version(file.version));
    }
    build_index(file.docs)
}
