//! The dictation-to-flowsheet pipeline: segmentation, schema filtering,
//! extraction, canonicalization.
//!
//! A dictation is split into segments (see [`segmenter`]), each segment
//! retrieves the most promising schema rows and few-shot examples, the
//! extraction prompt runs against the backend, and raw spans are
//! canonicalized into typed values. Per-segment parse failures downgrade to
//! diagnostics; only backend failures abort a run.

pub mod canonical;
pub mod segmenter;

use serde::{Deserialize, Serialize};

use crate::corpus::{FewShotExample, FlowsheetSchema, GoldItems, Observation, Transcript};
use crate::gateway::{bindings, complete, ChatBackend, ChatRequest, GatewayError, DEFAULT_MAX_NEW_TOKENS, DEFAULT_TEMPERATURE};
use crate::parse::{coerce_observations, extract_json_payload, Diagnostic};
use crate::prompts;
use crate::retrieval::{build_index, example_docs, schema_row_docs, top_n, Index};

pub use canonical::{canonicalize_value, normalized_edit_distance, CanonicalizationError};
pub use segmenter::{is_valid_partition, segment_transcript, whole_transcript_segment};

/// One contiguous piece of a dictation; offsets are zero-based char
/// positions into the transcript's raw text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub transcript_id: String,
    pub start_char: usize,
    pub end_char: usize,
    pub text: String,
}

/// Pipeline knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NursePipelineConfig {
    /// Candidate schema rows kept per segment.
    pub top_n_rows: usize,
    /// Few-shot examples retrieved per segment (0 = zero-shot).
    pub n_examples: usize,
    /// Re-asks after an invalid segmentation before falling back.
    pub segment_retries: usize,
    /// Normalized edit-distance bound for fuzzy picklist matching.
    pub fuzzy_threshold: f64,
    pub model_id: String,
    pub max_new_tokens: u32,
    pub temperature: f64,
}

impl Default for NursePipelineConfig {
    fn default() -> Self {
        NursePipelineConfig {
            top_n_rows: 25,
            n_examples: 3,
            segment_retries: 1,
            fuzzy_threshold: 0.2,
            model_id: String::new(),
            max_new_tokens: DEFAULT_MAX_NEW_TOKENS,
            temperature: DEFAULT_TEMPERATURE,
        }
    }
}

/// Reduce a schema to the rows most relevant to one segment, at most
/// `top_n_rows`, in retrieval rank order. An empty reduction is allowed and
/// means extraction is skipped for the segment.
pub fn filter_schema_rows(
    segment_text: &str,
    row_index: &Index,
    schema: &FlowsheetSchema,
    top_n_rows: usize,
) -> FlowsheetSchema {
    let hits = top_n(row_index, segment_text, top_n_rows.max(1)).unwrap_or_default();
    let rows = hits
        .iter()
        .filter_map(|hit| schema.row(&hit.doc_id).cloned())
        .collect();
    FlowsheetSchema { hospital_id: schema.hospital_id.clone(), rows }
}

/// Serialize a reduced schema for the `%SCHEMA%` slot.
fn schema_for_prompt(schema: &FlowsheetSchema) -> String {
    serde_json::to_string_pretty(&schema.rows).expect("schema serializes")
}

/// Serialize gold observations the way the model is asked to answer.
fn gold_observations_for_prompt(observations: &[Observation]) -> String {
    let mut map = serde_json::Map::new();
    for o in observations {
        map.insert(o.row_key.clone(), serde_json::to_value(&o.value).expect("value serializes"));
    }
    serde_json::to_string(&serde_json::Value::Object(map)).expect("map serializes")
}

/// Worked-examples block for the extraction prompt; empty for zero-shot.
fn examples_block(examples: &[&FewShotExample]) -> String {
    let mut out = String::new();
    for ex in examples {
        let GoldItems::Observations(gold) = &ex.gold else {
            continue;
        };
        out.push_str("--EXAMPLE--\n\nTRANSCRIPT: ");
        out.push_str(&ex.transcript_text);
        out.push_str("\n\nOUTPUT: ");
        out.push_str(&gold_observations_for_prompt(gold));
        out.push_str("\n\n");
    }
    out
}

/// Extract observations from one segment against a reduced schema.
/// Zero-shot and few-shot prompts differ only by the examples block. Parse
/// failures yield an empty list plus a diagnostic.
pub fn extract_observations_from_segment(
    segment: &Segment,
    reduced_schema: &FlowsheetSchema,
    examples: &[&FewShotExample],
    backend: &dyn ChatBackend,
    config: &NursePipelineConfig,
    diagnostics: &mut Vec<Diagnostic>,
) -> Result<Vec<Observation>, GatewayError> {
    let template = prompts::nursing_extraction();
    let prompt = template
        .render(&bindings(&[
            ("EXAMPLES", &examples_block(examples)),
            ("SCHEMA", &schema_for_prompt(reduced_schema)),
            ("TRANSCRIPT", &segment.text),
        ]))
        .expect("extraction template renders");

    let mut request = ChatRequest::new(prompt);
    request.model_id = config.model_id.clone();
    request.max_new_tokens = config.max_new_tokens;
    request.temperature = config.temperature;
    let response = complete(backend, &request)?;

    let outcome = extract_json_payload(&response.text, 200);
    let Some(value) = outcome.value else {
        diagnostics.push(Diagnostic::new(
            "extraction",
            format!("{}: unparseable extraction output, segment skipped", segment.transcript_id),
        ));
        return Ok(Vec::new());
    };
    let (raw, mut coerce_diags) = match coerce_observations(&value, reduced_schema) {
        Ok(v) => v,
        Err(e) => {
            diagnostics.push(Diagnostic::new(
                "extraction",
                format!("{}: {e}, segment skipped", segment.transcript_id),
            ));
            return Ok(Vec::new());
        }
    };
    diagnostics.append(&mut coerce_diags);

    let mut observations = Vec::new();
    for candidate in raw {
        let row = reduced_schema
            .row(&candidate.row_key)
            .expect("coercion only returns schema rows");
        match canonicalize_value(&candidate.value_text, row, config.fuzzy_threshold) {
            Ok(value) => observations.push(Observation {
                row_key: candidate.row_key,
                raw_span: candidate.raw_span,
                value,
            }),
            Err(e) => diagnostics.push(Diagnostic::new("canonicalize", e.to_string())),
        }
    }
    Ok(observations)
}

/// Output of one dictation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NurseRun {
    pub transcript_id: String,
    pub observations: Vec<Observation>,
    pub n_segments: usize,
    pub diagnostics: Vec<Diagnostic>,
}

/// The configured pipeline, reusable across transcripts: indexes are built
/// (or supplied) once.
pub struct NursePipeline<'a> {
    backend: &'a dyn ChatBackend,
    schema: &'a FlowsheetSchema,
    example_db: &'a [FewShotExample],
    row_index: Index,
    example_index: Option<Index>,
    config: NursePipelineConfig,
}

impl<'a> NursePipeline<'a> {
    pub fn new(
        backend: &'a dyn ChatBackend,
        schema: &'a FlowsheetSchema,
        example_db: &'a [FewShotExample],
        config: NursePipelineConfig,
    ) -> Result<NursePipeline<'a>, GatewayError> {
        let row_index = build_index(schema_row_docs(schema, Some(example_db)))
            .map_err(|e| GatewayError::Config(format!("row index: {e}")))?;
        Self::with_row_index(backend, schema, example_db, row_index, config)
    }

    /// Use a prebuilt (possibly persisted) row index instead of indexing the
    /// schema on the spot.
    pub fn with_row_index(
        backend: &'a dyn ChatBackend,
        schema: &'a FlowsheetSchema,
        example_db: &'a [FewShotExample],
        row_index: Index,
        config: NursePipelineConfig,
    ) -> Result<NursePipeline<'a>, GatewayError> {
        let example_index = if config.n_examples > 0 && !example_db.is_empty() {
            Some(
                build_index(example_docs(example_db))
                    .map_err(|e| GatewayError::Config(format!("example index: {e}")))?,
            )
        } else {
            None
        };
        Ok(NursePipeline { backend, schema, example_db, row_index, example_index, config })
    }

    /// Run the full pipeline over one dictation: segment, filter rows per
    /// segment, retrieve examples, extract, canonicalize. Observations come
    /// back in segment order.
    pub fn run(&self, transcript: &Transcript) -> Result<NurseRun, GatewayError> {
        let mut diagnostics = Vec::new();
        let segments = segment_transcript(transcript, self.backend, &self.config, &mut diagnostics);
        debug_assert!(is_valid_partition(transcript, &segments));

        let mut observations = Vec::new();
        for segment in &segments {
            let reduced =
                filter_schema_rows(&segment.text, &self.row_index, self.schema, self.config.top_n_rows);
            if reduced.rows.is_empty() {
                diagnostics.push(Diagnostic::new(
                    "filter",
                    format!(
                        "{}: segment at {}..{} shares no vocabulary with the schema, skipped",
                        transcript.id, segment.start_char, segment.end_char
                    ),
                ));
                continue;
            }
            let examples: Vec<&FewShotExample> = match &self.example_index {
                Some(index) => top_n(index, &segment.text, self.config.n_examples)
                    .unwrap_or_default()
                    .iter()
                    .filter_map(|hit| self.example_db.iter().find(|e| e.id == hit.doc_id))
                    .collect(),
                None => Vec::new(),
            };
            let mut extracted = extract_observations_from_segment(
                segment,
                &reduced,
                &examples,
                self.backend,
                &self.config,
                &mut diagnostics,
            )?;
            observations.append(&mut extracted);
        }

        Ok(NurseRun {
            transcript_id: transcript.id.clone(),
            observations,
            n_segments: segments.len(),
            diagnostics,
        })
    }
}

/// One-shot convenience over [`NursePipeline`].
pub fn run_nurse_pipeline(
    transcript: &Transcript,
    schema: &FlowsheetSchema,
    example_db: &[FewShotExample],
    backend: &dyn ChatBackend,
    config: &NursePipelineConfig,
) -> Result<NurseRun, GatewayError> {
    NursePipeline::new(backend, schema, example_db, config.clone())?.run(transcript)
}
