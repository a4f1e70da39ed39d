//! Canonical data types for both extraction tasks: transcripts, medical
//! orders, flowsheet schemas, observations, few-shot examples, and corpus
//! statistics. Loaders validate every invariant at construction time; all
//! values are immutable afterwards and safe to share across threads.

pub mod io;
pub mod stats;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use stats::{corpus_stats, CorpusStats};

/// Validation or format failure while loading a corpus document.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("empty document")]
    Empty,
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("turn numbering must be consecutive from 1: expected {expected}, found {found}")]
    NonConsecutive { expected: u32, found: u32 },
    #[error("unknown speaker label {0:?}")]
    UnknownSpeaker(String),
    #[error("unknown source label {0:?}")]
    UnknownSource(String),
    #[error("turn {0} has empty text")]
    EmptyTurnText(u32),
    #[error("turn {0} text contains a line break")]
    TurnTextLineBreak(u32),
    #[error("duplicate schema row key {0:?}")]
    DuplicateRowKey(String),
    #[error("row {0:?}: selection rows need at least one allowed value")]
    EmptyAllowedValues(String),
    #[error("row {0:?}: allowed values are only valid on picklist/multi_select rows")]
    UnexpectedAllowedValues(String),
    #[error("unknown order type {0:?}")]
    UnknownOrderType(String),
    #[error("order description must be non-empty")]
    EmptyDescription,
    #[error("provenance entry {0} is not a positive integer")]
    BadProvenance(i64),
    #[error("few-shot example {0:?} has empty gold")]
    EmptyGold(String),
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("{0}")]
    Io(String),
}

/// Who produced a transcript turn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    Doctor,
    Patient,
    Nurse,
    Other,
}

impl Speaker {
    pub fn from_label(label: &str) -> Option<Speaker> {
        match label.trim().to_ascii_lowercase().as_str() {
            "doctor" => Some(Speaker::Doctor),
            "patient" => Some(Speaker::Patient),
            "nurse" => Some(Speaker::Nurse),
            "other" => Some(Speaker::Other),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Speaker::Doctor => "doctor",
            Speaker::Patient => "patient",
            Speaker::Nurse => "nurse",
            Speaker::Other => "other",
        }
    }
}

/// Where a transcript came from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Acibench,
    Primock,
    Hospital,
    Synur,
    #[default]
    Other,
}

/// One numbered, speaker-attributed line of a transcript.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub line_no: u32,
    pub speaker: Speaker,
    pub text: String,
}

/// A consultation dialogue or nurse dictation monologue with stable line
/// numbering. `raw_text` is the newline join of the turn texts and is the
/// string that character-offset segments index into.
#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub id: String,
    pub source: Source,
    pub turns: Vec<Turn>,
    pub raw_text: String,
}

impl Transcript {
    /// Build a transcript, validating numbering and turn contents.
    pub fn new(id: impl Into<String>, source: Source, turns: Vec<Turn>) -> Result<Transcript, FormatError> {
        if turns.is_empty() {
            return Err(FormatError::Empty);
        }
        for (i, turn) in turns.iter().enumerate() {
            let expected = (i + 1) as u32;
            if turn.line_no != expected {
                return Err(FormatError::NonConsecutive {
                    expected,
                    found: turn.line_no,
                });
            }
            if turn.text.trim().is_empty() {
                return Err(FormatError::EmptyTurnText(turn.line_no));
            }
            if turn.text.contains('\n') || turn.text.contains('\r') {
                return Err(FormatError::TurnTextLineBreak(turn.line_no));
            }
        }
        let raw_text = turns
            .iter()
            .map(|t| t.text.as_str())
            .collect::<Vec<_>>()
            .join("\n");
        Ok(Transcript {
            id: id.into(),
            source,
            turns,
            raw_text,
        })
    }

    /// Highest line number (== number of turns, by the numbering invariant).
    pub fn max_line(&self) -> u32 {
        self.turns.len() as u32
    }

    /// `<line_no>: <speaker>: <text>` rendering used inside prompts.
    pub fn numbered_rendering(&self) -> String {
        self.turns
            .iter()
            .map(|t| format!("{}: {}: {}", t.line_no, t.speaker.label(), t.text))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// The four order categories plus label coercion. The synonym table is the
/// single source of truth for mapping loose labels ("follow-up",
/// "laboratory", "Imaging") onto canonical types; both gold loading and
/// model-output coercion go through it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderType {
    Medication,
    Lab,
    Followup,
    Imaging,
}

impl OrderType {
    pub fn from_label(label: &str) -> Option<OrderType> {
        let norm = label.trim().to_ascii_lowercase();
        match norm.as_str() {
            "medication" | "medications" | "med" | "meds" | "medicine" | "drug" | "prescription" => {
                Some(OrderType::Medication)
            }
            "lab" | "labs" | "laboratory" | "lab test" | "lab_test" | "laboratory test" => {
                Some(OrderType::Lab)
            }
            "followup" | "follow-up" | "follow up" | "follow_up" => Some(OrderType::Followup),
            "imaging" | "radiology" | "scan" => Some(OrderType::Imaging),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            OrderType::Medication => "medication",
            OrderType::Lab => "lab",
            OrderType::Followup => "followup",
            OrderType::Imaging => "imaging",
        }
    }
}

/// One actionable clinical instruction extracted from a consultation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedicalOrder {
    pub description: String,
    pub order_type: OrderType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(default)]
    pub provenance: Vec<u32>,
}

impl MedicalOrder {
    /// Sort and deduplicate provenance in place.
    pub fn normalize(&mut self) {
        self.provenance.sort_unstable();
        self.provenance.dedup();
    }
}

/// Data type of a flowsheet row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowDataType {
    Numeric,
    Boolean,
    FreeText,
    Picklist,
    MultiSelect,
}

impl RowDataType {
    pub fn is_selection(&self) -> bool {
        matches!(self, RowDataType::Picklist | RowDataType::MultiSelect)
    }
}

/// One flowsheet row: key, type, and (for selection rows) the allowed values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaRow {
    pub key: String,
    pub data_type: RowDataType,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub allowed_values: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phrasings: Option<Vec<String>>,
}

/// Hospital chart structure: the list of rows a dictation can populate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowsheetSchema {
    pub hospital_id: String,
    pub rows: Vec<SchemaRow>,
}

impl FlowsheetSchema {
    /// Check row-key uniqueness and allowed-value shape.
    pub fn validate(&self) -> Result<(), FormatError> {
        let mut seen = std::collections::HashSet::new();
        for row in &self.rows {
            if !seen.insert(row.key.as_str()) {
                return Err(FormatError::DuplicateRowKey(row.key.clone()));
            }
            if row.data_type.is_selection() {
                if row.allowed_values.is_empty() {
                    return Err(FormatError::EmptyAllowedValues(row.key.clone()));
                }
            } else if !row.allowed_values.is_empty() {
                return Err(FormatError::UnexpectedAllowedValues(row.key.clone()));
            }
        }
        Ok(())
    }

    pub fn row(&self, key: &str) -> Option<&SchemaRow> {
        self.rows.iter().find(|r| r.key == key)
    }

    /// Case-insensitive row lookup, used when matching model-output keys.
    pub fn row_ci(&self, key: &str) -> Option<&SchemaRow> {
        self.rows
            .iter()
            .find(|r| r.key.eq_ignore_ascii_case(key.trim()))
    }
}

/// A typed, normalized flowsheet value.
#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum CanonicalValue {
    Bool(bool),
    Number(f64),
    /// Free-text and picklist values.
    Text(String),
    /// Multi-select values, kept sorted and deduplicated.
    Set(Vec<String>),
}

impl CanonicalValue {
    pub fn set(mut values: Vec<String>) -> CanonicalValue {
        values.sort();
        values.dedup();
        CanonicalValue::Set(values)
    }
}

impl<'de> Deserialize<'de> for CanonicalValue {
    fn deserialize<D>(deserializer: D) -> Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        use serde::de::Error;
        let value = serde_json::Value::deserialize(deserializer)?;
        match value {
            serde_json::Value::Bool(b) => Ok(CanonicalValue::Bool(b)),
            serde_json::Value::Number(n) => n
                .as_f64()
                .map(CanonicalValue::Number)
                .ok_or_else(|| D::Error::custom("numeric value out of f64 range")),
            serde_json::Value::String(s) => Ok(CanonicalValue::Text(s)),
            serde_json::Value::Array(items) => {
                let strings = items
                    .into_iter()
                    .map(|v| match v {
                        serde_json::Value::String(s) => Ok(s),
                        other => Err(D::Error::custom(format!(
                            "multi-select entries must be strings, found {other}"
                        ))),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(CanonicalValue::set(strings))
            }
            other => Err(D::Error::custom(format!("unsupported canonical value {other}"))),
        }
    }
}

impl PartialEq for CanonicalValue {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (CanonicalValue::Bool(a), CanonicalValue::Bool(b)) => a == b,
            (CanonicalValue::Number(a), CanonicalValue::Number(b)) => a == b,
            (CanonicalValue::Text(a), CanonicalValue::Text(b)) => a == b,
            (CanonicalValue::Set(a), CanonicalValue::Set(b)) => a == b,
            _ => false,
        }
    }
}

/// One extracted (row key, canonical value) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub row_key: String,
    pub raw_span: String,
    pub value: CanonicalValue,
}

impl Observation {
    /// Whether this observation's value lies in the row's domain.
    pub fn conforms_to(&self, row: &SchemaRow) -> bool {
        match (row.data_type, &self.value) {
            (RowDataType::Numeric, CanonicalValue::Number(_)) => true,
            (RowDataType::Boolean, CanonicalValue::Bool(_)) => true,
            (RowDataType::FreeText, CanonicalValue::Text(_)) => true,
            (RowDataType::Picklist, CanonicalValue::Text(v)) => row.allowed_values.contains(v),
            (RowDataType::MultiSelect, CanonicalValue::Set(vs)) => {
                !vs.is_empty() && vs.iter().all(|v| row.allowed_values.contains(v))
            }
            _ => false,
        }
    }
}

/// Gold payload of a few-shot example: one of the two task outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GoldItems {
    Orders(Vec<MedicalOrder>),
    Observations(Vec<Observation>),
}

impl GoldItems {
    pub fn len(&self) -> usize {
        match self {
            GoldItems::Orders(v) => v.len(),
            GoldItems::Observations(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A (transcript, gold output) pair injected into prompts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FewShotExample {
    pub id: String,
    pub transcript_text: String,
    pub gold: GoldItems,
}

impl FewShotExample {
    pub fn validate(&self) -> Result<(), FormatError> {
        if self.gold.is_empty() {
            return Err(FormatError::EmptyGold(self.id.clone()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn turn(line_no: u32, speaker: Speaker, text: &str) -> Turn {
        Turn {
            line_no,
            speaker,
            text: text.to_string(),
        }
    }

    #[test]
    fn transcript_accepts_consecutive_numbering() {
        let t = Transcript::new(
            "t1",
            Source::Other,
            vec![
                turn(1, Speaker::Doctor, "Hello."),
                turn(2, Speaker::Patient, "Hi."),
                turn(3, Speaker::Doctor, "What brings you in?"),
            ],
        )
        .unwrap();
        assert_eq!(t.max_line(), 3);
        assert_eq!(t.raw_text, "Hello.\nHi.\nWhat brings you in?");
    }

    #[test]
    fn transcript_rejects_gap_in_numbering() {
        let err = Transcript::new(
            "t1",
            Source::Other,
            vec![turn(1, Speaker::Doctor, "Hello."), turn(3, Speaker::Patient, "Hi.")],
        )
        .unwrap_err();
        assert!(matches!(err, FormatError::NonConsecutive { expected: 2, found: 3 }));
    }

    #[test]
    fn transcript_rejects_empty_turn_text() {
        let err = Transcript::new(
            "t1",
            Source::Other,
            vec![turn(1, Speaker::Nurse, "  ")],
        )
        .unwrap_err();
        assert!(matches!(err, FormatError::EmptyTurnText(1)));
    }

    #[test]
    fn transcript_rejects_empty_turn_list() {
        assert!(matches!(
            Transcript::new("t1", Source::Other, vec![]),
            Err(FormatError::Empty)
        ));
    }

    #[test]
    fn numbered_rendering_includes_speaker_tags() {
        let t = Transcript::new(
            "t1",
            Source::Acibench,
            vec![
                turn(1, Speaker::Doctor, "Any pain?"),
                turn(2, Speaker::Patient, "A little."),
            ],
        )
        .unwrap();
        assert_eq!(t.numbered_rendering(), "1: doctor: Any pain?\n2: patient: A little.");
    }

    #[test]
    fn order_type_synonyms() {
        assert_eq!(OrderType::from_label("Imaging"), Some(OrderType::Imaging));
        assert_eq!(OrderType::from_label("laboratory"), Some(OrderType::Lab));
        assert_eq!(OrderType::from_label("follow-up"), Some(OrderType::Followup));
        assert_eq!(OrderType::from_label("Follow Up"), Some(OrderType::Followup));
        assert_eq!(OrderType::from_label("meds"), Some(OrderType::Medication));
        assert_eq!(OrderType::from_label("surgery"), None);
    }

    #[test]
    fn order_normalize_sorts_and_dedups_provenance() {
        let mut order = MedicalOrder {
            description: "CT of Chest".into(),
            order_type: OrderType::Imaging,
            reason: None,
            provenance: vec![46, 45, 45],
        };
        order.normalize();
        assert_eq!(order.provenance, vec![45, 46]);
    }

    #[test]
    fn schema_validation_catches_duplicates_and_empty_picklists() {
        let schema = FlowsheetSchema {
            hospital_id: "h1".into(),
            rows: vec![
                SchemaRow {
                    key: "Pulse rate".into(),
                    data_type: RowDataType::Numeric,
                    allowed_values: vec![],
                    phrasings: None,
                },
                SchemaRow {
                    key: "Pulse rate".into(),
                    data_type: RowDataType::Numeric,
                    allowed_values: vec![],
                    phrasings: None,
                },
            ],
        };
        assert!(matches!(schema.validate(), Err(FormatError::DuplicateRowKey(_))));

        let schema = FlowsheetSchema {
            hospital_id: "h1".into(),
            rows: vec![SchemaRow {
                key: "Urine colour".into(),
                data_type: RowDataType::Picklist,
                allowed_values: vec![],
                phrasings: None,
            }],
        };
        assert!(matches!(schema.validate(), Err(FormatError::EmptyAllowedValues(_))));
    }

    #[test]
    fn observation_conformance() {
        let picklist = SchemaRow {
            key: "Urine colour".into(),
            data_type: RowDataType::Picklist,
            allowed_values: vec!["pale yellow".into(), "dark yellow".into(), "amber".into()],
            phrasings: None,
        };
        let obs = Observation {
            row_key: "Urine colour".into(),
            raw_span: "Dark Yellow".into(),
            value: CanonicalValue::Text("dark yellow".into()),
        };
        assert!(obs.conforms_to(&picklist));

        let bad = Observation {
            row_key: "Urine colour".into(),
            raw_span: "x".into(),
            value: CanonicalValue::Text("green".into()),
        };
        assert!(!bad.conforms_to(&picklist));
    }

    #[test]
    fn canonical_set_is_sorted_and_deduped() {
        let v = CanonicalValue::set(vec!["b".into(), "a".into(), "b".into()]);
        assert_eq!(v, CanonicalValue::Set(vec!["a".into(), "b".into()]));
    }
}
