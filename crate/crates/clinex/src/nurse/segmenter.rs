//! Dictation segmentation. The model proposes verbatim segment openings; a
//! validator maps them to offsets and enforces that the segments are
//! contiguous, non-overlapping, and cover the whole dictation. Validation
//! failures are retried, then fall back to a single whole-transcript
//! segment, so every call returns a valid partition.

use crate::corpus::Transcript;
use crate::gateway::{bindings, complete, ChatBackend, ChatRequest};
use crate::parse::{extract_json_payload, Diagnostic};
use crate::prompts;

use super::{NursePipelineConfig, Segment};

/// Character count of the transcript text (segments index by char).
fn char_len(text: &str) -> usize {
    text.chars().count()
}

fn byte_to_char(text: &str, byte: usize) -> usize {
    text[..byte].chars().count()
}

fn char_slice(text: &str, start: usize, end: usize) -> String {
    text.chars().skip(start).take(end - start).collect()
}

/// Build segments from validated char boundaries (0 excluded, sorted).
fn segments_from_boundaries(transcript: &Transcript, boundaries: &[usize]) -> Vec<Segment> {
    let total = char_len(&transcript.raw_text);
    let mut starts = vec![0usize];
    starts.extend_from_slice(boundaries);
    let mut segments = Vec::with_capacity(starts.len());
    for (i, &start) in starts.iter().enumerate() {
        let end = starts.get(i + 1).copied().unwrap_or(total);
        segments.push(Segment {
            transcript_id: transcript.id.clone(),
            start_char: start,
            end_char: end,
            text: char_slice(&transcript.raw_text, start, end),
        });
    }
    segments
}

/// The whole transcript as one segment (the fallback result).
pub fn whole_transcript_segment(transcript: &Transcript) -> Vec<Segment> {
    segments_from_boundaries(transcript, &[])
}

/// Map one model response to char boundaries. `None` means the response
/// failed validation.
fn validate_response(transcript: &Transcript, response: &str) -> Option<Vec<usize>> {
    let outcome = extract_json_payload(response, 200);
    let value = outcome.value?;
    let openings: Vec<String> = value
        .as_array()?
        .iter()
        .map(|v| v.as_str().map(str::to_string))
        .collect::<Option<Vec<_>>>()?;
    if openings.is_empty() || openings.iter().any(|o| o.trim().is_empty()) {
        return None;
    }

    let text = &transcript.raw_text;
    // The first opening must sit at the very start of the dictation.
    if !text.starts_with(openings[0].as_str()) {
        return None;
    }
    let mut boundaries = Vec::new();
    let mut search_from = openings[0].len().min(text.len());
    let mut prev_start_char = 0usize;
    for opening in &openings[1..] {
        let found = text.get(search_from..)?.find(opening.as_str())?;
        let byte_start = search_from + found;
        let char_start = byte_to_char(text, byte_start);
        if char_start <= prev_start_char || char_start >= char_len(text) {
            return None;
        }
        boundaries.push(char_start);
        prev_start_char = char_start;
        search_from = byte_start + opening.len();
    }
    Some(boundaries)
}

/// Segment a transcript with the model, retrying failed validations up to
/// `config.segment_retries` times before falling back to one segment.
pub fn segment_transcript(
    transcript: &Transcript,
    backend: &dyn ChatBackend,
    config: &NursePipelineConfig,
    diagnostics: &mut Vec<Diagnostic>,
) -> Vec<Segment> {
    let template = prompts::segmentation();
    let prompt = template
        .render(&bindings(&[("TRANSCRIPT", &transcript.raw_text)]))
        .expect("segmentation template renders");

    for attempt in 0..=config.segment_retries {
        let mut request = ChatRequest::new(prompt.clone());
        request.model_id = config.model_id.clone();
        request.max_new_tokens = config.max_new_tokens;
        request.temperature = config.temperature;
        let response = match complete(backend, &request) {
            Ok(r) => r,
            Err(e) => {
                diagnostics.push(Diagnostic::new(
                    "segmentation",
                    format!("{}: backend error on attempt {attempt}: {e}", transcript.id),
                ));
                continue;
            }
        };
        match validate_response(transcript, &response.text) {
            Some(boundaries) => return segments_from_boundaries(transcript, &boundaries),
            None => diagnostics.push(Diagnostic::new(
                "segmentation",
                format!("{}: invalid segmentation on attempt {attempt}", transcript.id),
            )),
        }
    }
    diagnostics.push(Diagnostic::new(
        "segmentation",
        format!("{}: falling back to a single whole-transcript segment", transcript.id),
    ));
    whole_transcript_segment(transcript)
}

/// Check the partition invariant: ordered, pairwise disjoint, exact cover.
pub fn is_valid_partition(transcript: &Transcript, segments: &[Segment]) -> bool {
    let total = char_len(&transcript.raw_text);
    if segments.is_empty() {
        return false;
    }
    let mut cursor = 0usize;
    for seg in segments {
        if seg.start_char != cursor || seg.end_char <= seg.start_char || seg.end_char > total {
            return false;
        }
        if seg.text != char_slice(&transcript.raw_text, seg.start_char, seg.end_char) {
            return false;
        }
        cursor = seg.end_char;
    }
    cursor == total
}
