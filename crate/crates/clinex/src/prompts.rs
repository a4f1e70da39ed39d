//! The shipped prompt templates. Each constructor returns a validated
//! [`PromptTemplate`](crate::gateway::PromptTemplate) with its declared
//! slots; the template bodies live as plain text next to this module.

use crate::gateway::PromptTemplate;

/// Medical-order extraction. Slots: `EXAMPLES` (worked examples block, empty
/// for zero-shot), `TRANSCRIPT` (numbered rendering).
pub fn order_extraction() -> PromptTemplate {
    PromptTemplate::new(
        "order_extraction",
        include_str!("prompts/order_extraction.txt"),
        &["EXAMPLES", "TRANSCRIPT"],
    )
    .expect("shipped template is valid")
}

/// Nursing observation extraction. Slots: `EXAMPLES`, `SCHEMA` (reduced
/// schema JSON), `TRANSCRIPT` (segment text).
pub fn nursing_extraction() -> PromptTemplate {
    PromptTemplate::new(
        "nursing_extraction",
        include_str!("prompts/nursing_extraction.txt"),
        &["EXAMPLES", "SCHEMA", "TRANSCRIPT"],
    )
    .expect("shipped template is valid")
}

/// Dictation segmentation: asks for a JSON array of verbatim segment
/// openings. Slot: `TRANSCRIPT`.
pub fn segmentation() -> PromptTemplate {
    PromptTemplate::new("segmentation", include_str!("prompts/segmentation.txt"), &["TRANSCRIPT"])
        .expect("shipped template is valid")
}

/// Observation mining over seed dictations. Slots: `EXAMPLES`,
/// `CONCEPT_POOL`, `SPEECH_DESCRIPTION`.
pub fn synth_mine() -> PromptTemplate {
    PromptTemplate::new(
        "synth_mine",
        include_str!("prompts/synth_step1_mine.txt"),
        &["EXAMPLES", "CONCEPT_POOL", "SPEECH_DESCRIPTION"],
    )
    .expect("shipped template is valid")
}

/// Concept consolidation. Slots: `CONCEPT`, `OBSERVATIONS`.
pub fn synth_consolidate() -> PromptTemplate {
    PromptTemplate::new(
        "synth_consolidate",
        include_str!("prompts/synth_step2_consolidate.txt"),
        &["CONCEPT", "OBSERVATIONS"],
    )
    .expect("shipped template is valid")
}

/// Ontology expansion. Slot: `CONCEPTS`.
pub fn synth_expand() -> PromptTemplate {
    PromptTemplate::new(
        "synth_expand",
        include_str!("prompts/synth_step3_expand.txt"),
        &["CONCEPTS"],
    )
    .expect("shipped template is valid")
}

/// Scenario generation. Slot: `CONCEPT_SET`.
pub fn synth_scenario() -> PromptTemplate {
    PromptTemplate::new(
        "synth_scenario",
        include_str!("prompts/synth_step4_scenario.txt"),
        &["CONCEPT_SET"],
    )
    .expect("shipped template is valid")
}

/// Dictation synthesis. Slots: `TRANSCRIPT` (style examples), `CONCEPT_LIST`.
pub fn synth_dictate() -> PromptTemplate {
    PromptTemplate::new(
        "synth_dictate",
        include_str!("prompts/synth_step5_dictate.txt"),
        &["TRANSCRIPT", "CONCEPT_LIST"],
    )
    .expect("shipped template is valid")
}
