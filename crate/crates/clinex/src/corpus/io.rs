//! Loaders and serializers for the persisted corpus formats.
//!
//! Transcripts are line-oriented TSV (`<line_no>\t<speaker>\t<text>`).
//! Everything else is UTF-8 JSON with the field names of the domain types;
//! multi-document corpora are directories of TSV files or JSON-lines files.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{
    FewShotExample, FlowsheetSchema, FormatError, MedicalOrder, Observation, OrderType, Source,
    Speaker, Transcript, Turn,
};

/// Parse a transcript from its TSV rendering.
pub fn parse_transcript_tsv(id: &str, source: Source, text: &str) -> Result<Transcript, FormatError> {
    if text.trim().is_empty() {
        return Err(FormatError::Empty);
    }
    let mut turns = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.splitn(3, '\t');
        let (no, speaker, body) = match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), Some(c)) => (a, b, c),
            _ => {
                return Err(FormatError::Malformed {
                    line: idx + 1,
                    msg: "expected <line_no>\\t<speaker>\\t<text>".into(),
                })
            }
        };
        let line_no: u32 = no.trim().parse().map_err(|_| FormatError::Malformed {
            line: idx + 1,
            msg: format!("bad line number {no:?}"),
        })?;
        let speaker = Speaker::from_label(speaker)
            .ok_or_else(|| FormatError::UnknownSpeaker(speaker.to_string()))?;
        turns.push(Turn {
            line_no,
            speaker,
            text: body.to_string(),
        });
    }
    Transcript::new(id, source, turns)
}

/// Canonical TSV rendering; `parse_transcript_tsv` is its exact inverse.
pub fn render_transcript_tsv(transcript: &Transcript) -> String {
    let mut out = String::new();
    for turn in &transcript.turns {
        out.push_str(&format!("{}\t{}\t{}\n", turn.line_no, turn.speaker.label(), turn.text));
    }
    out
}

/// Load one TSV transcript file; the id is the file stem.
pub fn load_transcript_file(path: &Path, source: Source) -> Result<Transcript, FormatError> {
    let text = fs::read_to_string(path).map_err(|e| FormatError::Io(format!("{}: {e}", path.display())))?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    parse_transcript_tsv(&id, source, &text)
}

#[derive(Serialize, Deserialize)]
struct TranscriptRecord {
    id: String,
    #[serde(default)]
    source: Source,
    turns: Vec<Turn>,
}

/// Parse one JSON transcript record (a JSONL corpus line).
pub fn parse_transcript_json(line: &str) -> Result<Transcript, FormatError> {
    let rec: TranscriptRecord =
        serde_json::from_str(line).map_err(|e| FormatError::Json(e.to_string()))?;
    Transcript::new(rec.id, rec.source, rec.turns)
}

/// Canonical one-line JSON rendering of a transcript.
pub fn render_transcript_json(transcript: &Transcript) -> String {
    let rec = TranscriptRecord {
        id: transcript.id.clone(),
        source: transcript.source,
        turns: transcript.turns.clone(),
    };
    serde_json::to_string(&rec).expect("transcript serializes")
}

/// Load a corpus: either a directory of `.tsv` transcripts (sorted by file
/// name) or a `.jsonl` file with one transcript record per line.
pub fn load_transcript_corpus(path: &Path, source: Source) -> Result<Vec<Transcript>, FormatError> {
    if path.is_dir() {
        let mut files: Vec<_> = fs::read_dir(path)
            .map_err(|e| FormatError::Io(format!("{}: {e}", path.display())))?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.extension().map(|x| x == "tsv").unwrap_or(false))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(FormatError::Io(format!(
                "{}: no .tsv transcripts found",
                path.display()
            )));
        }
        files.iter().map(|p| load_transcript_file(p, source)).collect()
    } else {
        let text =
            fs::read_to_string(path).map_err(|e| FormatError::Io(format!("{}: {e}", path.display())))?;
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(parse_transcript_json)
            .collect()
    }
}

/// Parse a flowsheet schema JSON document and validate its invariants.
pub fn parse_flowsheet_schema(text: &str) -> Result<FlowsheetSchema, FormatError> {
    let schema: FlowsheetSchema =
        serde_json::from_str(text).map_err(|e| FormatError::Json(e.to_string()))?;
    schema.validate()?;
    Ok(schema)
}

pub fn load_flowsheet_schema(path: &Path) -> Result<FlowsheetSchema, FormatError> {
    let text = fs::read_to_string(path).map_err(|e| FormatError::Io(format!("{}: {e}", path.display())))?;
    parse_flowsheet_schema(&text)
}

/// Canonical pretty rendering; `parse_flowsheet_schema` round-trips it.
pub fn render_flowsheet_schema(schema: &FlowsheetSchema) -> String {
    let mut out = serde_json::to_string_pretty(schema).expect("schema serializes");
    out.push('\n');
    out
}

#[derive(Deserialize)]
struct RawOrder {
    description: String,
    order_type: String,
    #[serde(default)]
    reason: Option<String>,
    #[serde(default)]
    provenance: Vec<i64>,
}

fn validate_order(raw: RawOrder) -> Result<MedicalOrder, FormatError> {
    if raw.description.trim().is_empty() {
        return Err(FormatError::EmptyDescription);
    }
    let order_type = OrderType::from_label(&raw.order_type)
        .ok_or_else(|| FormatError::UnknownOrderType(raw.order_type.clone()))?;
    let mut provenance = Vec::with_capacity(raw.provenance.len());
    for p in raw.provenance {
        if p <= 0 || p > u32::MAX as i64 {
            return Err(FormatError::BadProvenance(p));
        }
        provenance.push(p as u32);
    }
    let reason = raw.reason.filter(|r| !r.trim().is_empty());
    let mut order = MedicalOrder {
        description: raw.description,
        order_type,
        reason,
        provenance,
    };
    order.normalize();
    Ok(order)
}

/// Parse a gold order file: a JSON array of order objects. Order types are
/// coerced through the synonym table; anything unresolvable is a
/// `FormatError` (gold loading is strict where model-output coercion is not).
pub fn parse_gold_orders(text: &str) -> Result<Vec<MedicalOrder>, FormatError> {
    let raws: Vec<RawOrder> =
        serde_json::from_str(text).map_err(|e| FormatError::Json(e.to_string()))?;
    raws.into_iter().map(validate_order).collect()
}

/// One corpus document's orders, keyed by transcript id (a JSONL line).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderSet {
    pub transcript_id: String,
    pub orders: Vec<MedicalOrder>,
}

/// One corpus document's observations, keyed by transcript id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationSet {
    pub transcript_id: String,
    pub observations: Vec<Observation>,
}

#[derive(Deserialize)]
struct RawOrderSet {
    transcript_id: String,
    orders: Vec<RawOrder>,
}

/// Load a JSONL file of `{transcript_id, orders}` records (extra fields on a
/// line, such as parse diagnostics, are ignored).
pub fn load_order_sets(path: &Path) -> Result<Vec<OrderSet>, FormatError> {
    let text = fs::read_to_string(path).map_err(|e| FormatError::Io(format!("{}: {e}", path.display())))?;
    parse_order_sets(&text)
}

pub fn parse_order_sets(text: &str) -> Result<Vec<OrderSet>, FormatError> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let raw: RawOrderSet =
                serde_json::from_str(line).map_err(|e| FormatError::Json(e.to_string()))?;
            Ok(OrderSet {
                transcript_id: raw.transcript_id,
                orders: raw
                    .orders
                    .into_iter()
                    .map(validate_order)
                    .collect::<Result<Vec<_>, _>>()?,
            })
        })
        .collect()
}

/// Load a JSONL file of `{transcript_id, observations}` records.
pub fn load_observation_sets(path: &Path) -> Result<Vec<ObservationSet>, FormatError> {
    let text = fs::read_to_string(path).map_err(|e| FormatError::Io(format!("{}: {e}", path.display())))?;
    parse_observation_sets(&text)
}

pub fn parse_observation_sets(text: &str) -> Result<Vec<ObservationSet>, FormatError> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|line| serde_json::from_str(line).map_err(|e| FormatError::Json(e.to_string())))
        .collect()
}

/// Load a few-shot example database (JSONL, one example per line).
pub fn load_examples(path: &Path) -> Result<Vec<FewShotExample>, FormatError> {
    let text = fs::read_to_string(path).map_err(|e| FormatError::Io(format!("{}: {e}", path.display())))?;
    parse_examples(&text)
}

pub fn parse_examples(text: &str) -> Result<Vec<FewShotExample>, FormatError> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let ex: FewShotExample =
                serde_json::from_str(line).map_err(|e| FormatError::Json(e.to_string()))?;
            ex.validate()?;
            Ok(ex)
        })
        .collect()
}

/// Render a slice of serializable records as a JSONL document.
pub fn render_jsonl<T: Serialize>(records: &[T]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

/// Parse a JSONL document into records, skipping blank lines.
pub fn parse_jsonl<T: DeserializeOwned>(text: &str) -> Result<Vec<T>, FormatError> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|line| serde_json::from_str(line).map_err(|e| FormatError::Json(e.to_string())))
        .collect()
}
