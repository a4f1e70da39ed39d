//! Recovery of structured payloads from imperfect model text output.
//!
//! `extract_json_payload` applies a fixed ladder of repairs — code-fence
//! stripping, prose stripping around the first bracket, trailing-comma
//! removal, run-on numeric-array truncation, bracket balancing — trying a
//! strict parse after each step and recording every repair that fired. It
//! never raises: unrecoverable input comes back as `failed = true`.

mod coerce;
mod repair;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use coerce::{coerce_observations, coerce_orders, RawObservation};

/// A record dropped or adjusted during coercion. Coercion never fails
/// silently; every drop is reported.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub stage: String,
    pub message: String,
}

impl Diagnostic {
    pub fn new(stage: impl Into<String>, message: impl Into<String>) -> Diagnostic {
        Diagnostic { stage: stage.into(), message: message.into() }
    }
}

#[derive(Debug, Error)]
pub enum CoercionError {
    #[error("expected a JSON array or object at the root, found {0}")]
    BadRoot(&'static str),
    #[error("expected a JSON object mapping row keys to values, found {0}")]
    NotAnObject(&'static str),
}

/// One repair applied by `extract_json_payload`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Repair {
    FenceStripped,
    BracketBalanced,
    TrailingCommaRemoved,
    RunonTruncated,
    ProseStripped,
}

/// Per-repair toggles for ablation; everything on by default.
#[derive(Debug, Clone, Copy)]
pub struct RepairConfig {
    pub fence: bool,
    pub prose: bool,
    pub trailing_comma: bool,
    pub runon: bool,
    pub balance: bool,
}

impl Default for RepairConfig {
    fn default() -> Self {
        RepairConfig { fence: true, prose: true, trailing_comma: true, runon: true, balance: true }
    }
}

/// Outcome of one payload extraction: the parsed document (when recoverable),
/// the repairs that fired, and the failure flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParseOutcome {
    pub value: Option<serde_json::Value>,
    pub repairs: Vec<Repair>,
    pub failed: bool,
}

/// Extract a JSON payload from raw model text. `max_provenance_len` bounds
/// run-on numeric arrays (use the transcript line count when known).
pub fn extract_json_payload(text: &str, max_provenance_len: usize) -> ParseOutcome {
    extract_json_payload_with(text, max_provenance_len, &RepairConfig::default())
}

/// As `extract_json_payload`, with individual repairs toggleable.
pub fn extract_json_payload_with(
    text: &str,
    max_provenance_len: usize,
    config: &RepairConfig,
) -> ParseOutcome {
    // A candidate is accepted only when it parses AND (unless the run-on
    // repair is ablated) contains no numeric array over the length bound: an
    // over-long line-number list is malformed by contract even when it is
    // syntactically valid JSON.
    let accept = |s: &str| -> Option<serde_json::Value> {
        if config.runon && repair::truncate_runon_arrays(s, max_provenance_len) != s {
            return None;
        }
        serde_json::from_str(s).ok()
    };

    let mut current = text.trim().to_string();
    let mut repairs = Vec::new();

    if let Some(value) = accept(&current) {
        return ParseOutcome { value: Some(value), repairs, failed: false };
    }

    type Stage = (bool, Repair, fn(&str, usize) -> String);
    let stages: [Stage; 5] = [
        (config.fence, Repair::FenceStripped, |s, _| repair::strip_fences(s)),
        (config.prose, Repair::ProseStripped, |s, _| repair::strip_prose(s)),
        (config.trailing_comma, Repair::TrailingCommaRemoved, |s, _| {
            repair::remove_trailing_commas(s)
        }),
        (config.runon, Repair::RunonTruncated, repair::truncate_runon_arrays),
        (config.balance, Repair::BracketBalanced, |s, _| repair::balance_brackets(s)),
    ];

    for (enabled, kind, apply) in stages {
        if !enabled {
            continue;
        }
        let next = apply(&current, max_provenance_len);
        if next != current {
            current = next;
            repairs.push(kind);
            if let Some(value) = accept(&current) {
                return ParseOutcome { value: Some(value), repairs, failed: false };
            }
        }
    }

    ParseOutcome { value: None, repairs, failed: true }
}

/// Running totals of parse attempts and failures.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ParseStats {
    pub n_attempts: usize,
    pub n_failures: usize,
}

impl ParseStats {
    pub fn record(&mut self, outcome: &ParseOutcome) {
        self.n_attempts += 1;
        if outcome.failed {
            self.n_failures += 1;
        }
    }

    /// Failures over attempts, 0 when nothing was attempted.
    pub fn error_rate(&self) -> f64 {
        if self.n_attempts == 0 {
            0.0
        } else {
            self.n_failures as f64 / self.n_attempts as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn clean_input_needs_no_repairs() {
        let out = extract_json_payload(r#"[{"description":"CT of Chest"}]"#, 200);
        assert!(!out.failed);
        assert!(out.repairs.is_empty());
        assert_eq!(out.value.unwrap(), json!([{"description": "CT of Chest"}]));
    }

    #[test]
    fn fenced_payload_strips_the_fence() {
        let out = extract_json_payload("```json\n[]\n```", 200);
        assert_eq!(out.value.unwrap(), json!([]));
        assert_eq!(out.repairs, vec![Repair::FenceStripped]);
    }

    #[test]
    fn bare_fence_without_language_tag() {
        let out = extract_json_payload("```\n{\"a\": 1}\n```", 200);
        assert_eq!(out.value.unwrap(), json!({"a": 1}));
        assert_eq!(out.repairs, vec![Repair::FenceStripped]);
    }

    // Oracle: applying the documented repair sequence by hand. Prose strip
    // yields `[{"description":"x",}]`, trailing-comma removal then makes it
    // parse.
    #[test]
    fn prose_then_trailing_comma() {
        let out = extract_json_payload("Here are the orders: [{\"description\":\"x\",}]", 200);
        assert!(!out.failed);
        assert_eq!(out.repairs, vec![Repair::ProseStripped, Repair::TrailingCommaRemoved]);
        assert_eq!(out.value.unwrap(), json!([{"description": "x"}]));
    }

    #[test]
    fn runon_provenance_is_truncated() {
        let numbers: Vec<String> = (1..=10_000).map(|n| n.to_string()).collect();
        let text = format!(
            "[{{\"description\":\"cbc\",\"order_type\":\"lab\",\"provenance\":[{}]}}]",
            numbers.join(", ")
        );
        let out = extract_json_payload(&text, 200);
        assert!(!out.failed);
        assert!(out.repairs.contains(&Repair::RunonTruncated));
        let prov = &out.value.unwrap()[0]["provenance"];
        assert_eq!(prov.as_array().unwrap().len(), 200);
        assert_eq!(prov[0], json!(1));
        assert_eq!(prov[199], json!(200));
    }

    #[test]
    fn truncated_output_is_balanced() {
        let out = extract_json_payload(r#"[{"description":"chest x-ray","provenance":[12, 13"#, 200);
        assert!(!out.failed);
        assert!(out.repairs.contains(&Repair::BracketBalanced));
        assert_eq!(out.value.unwrap()[0]["provenance"], json!([12, 13]));
    }

    #[test]
    fn output_cut_mid_string_is_balanced() {
        let out = extract_json_payload(r#"[{"description":"amoxicil"#, 50);
        assert!(!out.failed);
        assert_eq!(out.value.unwrap()[0]["description"], json!("amoxicil"));
    }

    #[test]
    fn hopeless_input_fails_without_panicking() {
        let out = extract_json_payload("no structure here at all", 200);
        assert!(out.failed);
        assert!(out.value.is_none());
    }

    #[test]
    fn disabled_repair_is_skipped() {
        let config = RepairConfig { fence: false, ..RepairConfig::default() };
        let out = extract_json_payload_with("```json\n[]\n```", 200, &config);
        // Prose stripping cannot rescue it either: the fence chars sit outside
        // the brackets, so `[` .. `]` still parses. Actually `[]` is inside,
        // so prose stripping recovers it.
        assert!(!out.failed);
        assert_eq!(out.repairs, vec![Repair::ProseStripped]);
    }

    #[test]
    fn trailing_comma_inside_string_is_untouched() {
        let out = extract_json_payload(r#"{"a": "value, }"}"#, 200);
        assert!(!out.failed);
        assert!(out.repairs.is_empty());
    }

    #[test]
    fn stats_error_rate() {
        let mut stats = ParseStats::default();
        assert_eq!(stats.error_rate(), 0.0);
        stats.record(&extract_json_payload("[]", 10));
        stats.record(&extract_json_payload("garbage", 10));
        assert_eq!(stats.n_attempts, 2);
        assert_eq!(stats.n_failures, 1);
        assert_eq!(stats.error_rate(), 0.5);
    }

    #[cfg(test)]
    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            // Totality: never panics, failed iff value absent.
            #[test]
            fn never_panics_on_arbitrary_input(text in ".*", max_len in 1usize..500) {
                let out = extract_json_payload(&text, max_len);
                prop_assert_eq!(out.failed, out.value.is_none());
            }

            #[test]
            fn clean_json_arrays_pass_through(nums in proptest::collection::vec(0i64..1000, 0..20)) {
                let text = serde_json::to_string(&nums).unwrap();
                let out = extract_json_payload(&text, 1000);
                prop_assert!(!out.failed);
                prop_assert!(out.repairs.is_empty());
            }
        }
    }
}
