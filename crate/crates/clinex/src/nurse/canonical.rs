//! Canonicalization of raw extracted spans into typed flowsheet values.

use thiserror::Error;

use crate::corpus::{CanonicalValue, RowDataType, SchemaRow};
use crate::retrieval::tokenize;

#[derive(Debug, Error, PartialEq)]
pub enum CanonicalizationError {
    #[error("row {row:?}: no decimal number in {raw:?}")]
    NoNumber { row: String, raw: String },
    #[error("row {row:?}: no boolean cue in {raw:?}")]
    NoBooleanCue { row: String, raw: String },
    #[error("row {row:?}: {raw:?} matches no allowed value within distance {threshold}")]
    NoAllowedValue { row: String, raw: String, threshold: f64 },
    #[error("row {row:?}: empty raw value")]
    EmptyRaw { row: String },
}

/// Levenshtein distance over chars, case-folded, divided by the longer
/// length (0 when both strings are empty).
pub fn normalized_edit_distance(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.to_lowercase().chars().collect();
    let b: Vec<char> = b.to_lowercase().chars().collect();
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 0.0;
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()] as f64 / longest as f64
}

/// First decimal number in the text, if any ("127/66" yields 127; spelled
/// out numbers are out of scope).
pub(crate) fn first_number(raw: &str) -> Option<f64> {
    let bytes = raw.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i].is_ascii_digit()
            || ((bytes[i] == b'-' || bytes[i] == b'+')
                && bytes.get(i + 1).map(|c| c.is_ascii_digit()).unwrap_or(false))
        {
            let start = i;
            if bytes[i] == b'-' || bytes[i] == b'+' {
                i += 1;
            }
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len()
                && bytes[i] == b'.'
                && bytes.get(i + 1).map(|c| c.is_ascii_digit()).unwrap_or(false)
            {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            return raw[start..i].parse().ok();
        }
        i += 1;
    }
    None
}

const NEGATIVE_CUES: &[&str] = &["no", "not", "absent", "denies", "denied", "negative", "false", "none", "without"];
const POSITIVE_CUES: &[&str] = &["yes", "present", "true", "positive", "confirmed", "noted", "reports", "reported"];

/// Boolean from cue tokens; negation cues win over presence cues ("denies
/// pain present" is false).
fn boolean_cue(raw: &str) -> Option<bool> {
    let tokens = tokenize(raw);
    if tokens.iter().any(|t| NEGATIVE_CUES.contains(&t.as_str())) {
        return Some(false);
    }
    if tokens.iter().any(|t| POSITIVE_CUES.contains(&t.as_str())) {
        return Some(true);
    }
    None
}

/// Best allowed value: case-insensitive exact match first, then the closest
/// value by normalized edit distance when it clears the threshold. Ties go
/// to the earlier allowed value.
fn match_allowed(raw: &str, row: &SchemaRow, threshold: f64) -> Option<String> {
    let needle = raw.trim();
    for v in &row.allowed_values {
        if v.eq_ignore_ascii_case(needle) {
            return Some(v.clone());
        }
    }
    let mut best: Option<(f64, &String)> = None;
    for v in &row.allowed_values {
        let d = normalized_edit_distance(needle, v);
        if best.map(|(bd, _)| d < bd).unwrap_or(true) {
            best = Some((d, v));
        }
    }
    match best {
        Some((d, v)) if d <= threshold => Some(v.clone()),
        _ => None,
    }
}

fn collapse_whitespace(raw: &str) -> String {
    raw.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Canonicalize a raw span against its schema row.
pub fn canonicalize_value(
    raw: &str,
    row: &SchemaRow,
    fuzzy_threshold: f64,
) -> Result<CanonicalValue, CanonicalizationError> {
    if raw.trim().is_empty() {
        return Err(CanonicalizationError::EmptyRaw { row: row.key.clone() });
    }
    match row.data_type {
        RowDataType::Numeric => first_number(raw)
            .map(CanonicalValue::Number)
            .ok_or_else(|| CanonicalizationError::NoNumber { row: row.key.clone(), raw: raw.into() }),
        RowDataType::Boolean => {
            if let Ok(b) = raw.trim().to_ascii_lowercase().parse::<bool>() {
                return Ok(CanonicalValue::Bool(b));
            }
            boolean_cue(raw)
                .map(CanonicalValue::Bool)
                .ok_or_else(|| CanonicalizationError::NoBooleanCue { row: row.key.clone(), raw: raw.into() })
        }
        RowDataType::FreeText => Ok(CanonicalValue::Text(collapse_whitespace(raw))),
        RowDataType::Picklist => match_allowed(raw, row, fuzzy_threshold)
            .map(CanonicalValue::Text)
            .ok_or_else(|| CanonicalizationError::NoAllowedValue {
                row: row.key.clone(),
                raw: raw.into(),
                threshold: fuzzy_threshold,
            }),
        RowDataType::MultiSelect => {
            let parts: Vec<String> = split_selections(raw);
            let mut matched = Vec::new();
            for part in &parts {
                if let Some(v) = match_allowed(part, row, fuzzy_threshold) {
                    matched.push(v);
                }
            }
            if matched.is_empty() {
                return Err(CanonicalizationError::NoAllowedValue {
                    row: row.key.clone(),
                    raw: raw.into(),
                    threshold: fuzzy_threshold,
                });
            }
            Ok(CanonicalValue::set(matched))
        }
    }
}

/// Split a multi-select span on list delimiters and the word "and".
pub(crate) fn split_selections(raw: &str) -> Vec<String> {
    raw.split([',', ';', '/'])
        .flat_map(|chunk| chunk.split(" and "))
        .map(|p| p.trim().to_string())
        .filter(|p| !p.is_empty())
        .collect()
}
