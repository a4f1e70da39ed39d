//! Six-step synthetic dictation generation: mine observations from seed
//! dictations, consolidate them into typed concepts, expand the ontology,
//! generate patient scenarios, synthesize dictations, and export bundles
//! for human labeling.
//!
//! Mining is sequential because the concept pool grows as documents are
//! processed; scenario validation is a hard gate (invalid scenarios are
//! re-requested, then rejected) while dictation coverage checking only
//! warns.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::corpus::{FormatError, Transcript};
use crate::gateway::{bindings, complete, ChatBackend, ChatRequest, GatewayError, DEFAULT_MAX_NEW_TOKENS, DEFAULT_TEMPERATURE};
use crate::nurse::canonical::{first_number, split_selections};
use crate::parse::{extract_json_payload, Diagnostic};
use crate::prompts;
use crate::retrieval::tokenize;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("concept {concept:?}: {detail}")]
    Consolidation { concept: String, detail: String },
    #[error("scenario rejected after {attempts} attempts: {detail}")]
    Scenario { attempts: usize, detail: String },
    #[error("dictation synthesis failed: {0}")]
    Synthesis(String),
    #[error("{0}")]
    Argument(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Format(#[from] FormatError),
}

/// One mined (concept, span) pair and the seed document it came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinedObservation {
    pub concept: String,
    pub span: String,
    pub source_doc: String,
}

/// Concept data types used by the generation pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConceptType {
    Boolean,
    Numeric,
    String,
    SingleSelection,
    MultiSelection,
}

impl ConceptType {
    pub fn is_selection(&self) -> bool {
        matches!(self, ConceptType::SingleSelection | ConceptType::MultiSelection)
    }

    /// Coerce the labels that show up in model output ("multiple_selection",
    /// "integer", "single-choice", ...) onto the five canonical types.
    pub fn from_label(label: &str) -> Option<ConceptType> {
        match label.trim().to_ascii_lowercase().replace(['-', ' '], "_").as_str() {
            "boolean" | "bool" => Some(ConceptType::Boolean),
            "numeric" | "number" | "integer" | "float" => Some(ConceptType::Numeric),
            "string" | "text" | "free_text" => Some(ConceptType::String),
            "single_selection" | "single_choice" | "single_select" => Some(ConceptType::SingleSelection),
            "multiple_selection" | "multi_selection" | "multi_choice" | "multi_select" => {
                Some(ConceptType::MultiSelection)
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConceptProvenance {
    Mined,
    Expanded,
    Human,
}

/// One ontology concept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Concept {
    pub name: String,
    pub data_type: ConceptType,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<String>,
    pub provenance: ConceptProvenance,
}

impl Concept {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.data_type.is_selection() && self.values.is_empty() {
            return Err(SynthError::Consolidation {
                concept: self.name.clone(),
                detail: "selection concept without values".into(),
            });
        }
        if !self.data_type.is_selection() && !self.values.is_empty() {
            return Err(SynthError::Consolidation {
                concept: self.name.clone(),
                detail: "values assigned to a non-selection concept".into(),
            });
        }
        Ok(())
    }
}

/// The concept set driving scenario generation, with unique names.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Ontology {
    pub concepts: Vec<Concept>,
}

impl Ontology {
    pub fn validate(&self) -> Result<(), SynthError> {
        let mut seen = std::collections::HashSet::new();
        for c in &self.concepts {
            c.validate()?;
            if !seen.insert(c.name.to_lowercase()) {
                return Err(SynthError::Argument(format!("duplicate concept name {:?}", c.name)));
            }
        }
        Ok(())
    }

    pub fn get_ci(&self, name: &str) -> Option<&Concept> {
        let needle = name.trim();
        self.concepts.iter().find(|c| c.name.eq_ignore_ascii_case(needle))
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }
}

/// One (concept, value) pair of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioItem {
    pub concept: String,
    pub value: String,
}

/// A generated patient case: the rationale plus the concept/value list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub rationale: String,
    pub concept_list: Vec<ScenarioItem>,
}

/// A synthesized dictation with its scenario as provisional gold labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDictation {
    pub text: String,
    pub scenario: Scenario,
    pub style_example_ids: Vec<String>,
}

/// Knobs shared by the generation steps.
#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub model_id: String,
    pub max_new_tokens: u32,
    pub temperature: f64,
    /// Concepts sampled into each scenario prompt (0 = whole ontology).
    pub scenario_subset_size: usize,
    /// Example concepts text for the mining prompt's EXAMPLES slot.
    pub concept_examples: String,
}

pub const DEFAULT_CONCEPT_EXAMPLES: &str = "\
Blood pressure: \"127/66\", \"BP is 110 over 70\"\n\
Urine colour: \"dark yellow\", \"pale yellow\"\n\
Pain severity: \"7 out of 10\"\n\
Oxygen saturation: \"sats at 94 percent\"";

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            model_id: String::new(),
            max_new_tokens: DEFAULT_MAX_NEW_TOKENS,
            temperature: DEFAULT_TEMPERATURE,
            scenario_subset_size: 40,
            concept_examples: DEFAULT_CONCEPT_EXAMPLES.to_string(),
        }
    }
}

fn request(config: &SynthConfig, prompt: String) -> ChatRequest {
    let mut req = ChatRequest::new(prompt);
    req.model_id = config.model_id.clone();
    req.max_new_tokens = config.max_new_tokens;
    req.temperature = config.temperature;
    req
}

/// Output of the mining step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiningOutput {
    pub observations: Vec<MinedObservation>,
    /// Concept pool in first-seen order.
    pub pool: Vec<String>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Step 1: mine (concept, span) pairs from the seed dictations, processed
/// in sorted-id order with the growing concept pool injected into every
/// prompt. Observations are deduplicated on (concept, span); the pool is a
/// case-insensitive set of concept names that never shrinks.
pub fn mine_observations(
    seeds: &[Transcript],
    backend: &dyn ChatBackend,
    config: &SynthConfig,
) -> Result<MiningOutput, SynthError> {
    if seeds.is_empty() {
        return Err(SynthError::Argument("mining needs at least one seed dictation".into()));
    }
    let template = prompts::synth_mine();
    let mut docs: Vec<&Transcript> = seeds.iter().collect();
    docs.sort_by(|a, b| a.id.cmp(&b.id));

    // lowercase name -> first-seen casing, insertion-ordered
    let mut pool: Vec<String> = Vec::new();
    let mut pool_keys: std::collections::HashSet<String> = Default::default();
    let mut seen_pairs: std::collections::HashSet<(String, String)> = Default::default();
    let mut observations = Vec::new();
    let mut diagnostics = Vec::new();

    for doc in docs {
        let pool_json = serde_json::to_string(&pool).expect("pool serializes");
        let prompt = template
            .render(&bindings(&[
                ("EXAMPLES", &config.concept_examples),
                ("CONCEPT_POOL", &pool_json),
                ("SPEECH_DESCRIPTION", &doc.raw_text),
            ]))
            .expect("mining template renders");
        let response = complete(backend, &request(config, prompt))?;
        let outcome = extract_json_payload(&response.text, 200);
        let Some(Value::Array(items)) = outcome.value else {
            diagnostics.push(Diagnostic::new(
                "mine",
                format!("{}: unparseable mining output, document skipped", doc.id),
            ));
            continue;
        };
        for item in items {
            let concept = item.get("concept").and_then(Value::as_str).map(str::trim).unwrap_or("");
            let span = item
                .get("span")
                .or_else(|| item.get("text_span"))
                .and_then(Value::as_str)
                .map(str::trim)
                .unwrap_or("");
            if concept.is_empty() || span.is_empty() {
                diagnostics.push(Diagnostic::new(
                    "mine",
                    format!("{}: record without concept/span, dropped", doc.id),
                ));
                continue;
            }
            if pool_keys.insert(concept.to_lowercase()) {
                pool.push(concept.to_string());
            }
            if seen_pairs.insert((concept.to_lowercase(), span.to_lowercase())) {
                observations.push(MinedObservation {
                    concept: concept.to_string(),
                    span: span.to_string(),
                    source_doc: doc.id.clone(),
                });
            }
        }
    }
    Ok(MiningOutput { observations, pool, diagnostics })
}

/// Step 2: consolidate one concept's mined observations into a typed
/// concept. One retry on invalid output, then `Consolidation` failure (the
/// concept is flagged for human review).
pub fn consolidate_concept(
    concept_name: &str,
    observations: &[MinedObservation],
    backend: &dyn ChatBackend,
    config: &SynthConfig,
) -> Result<Concept, SynthError> {
    if observations.is_empty() {
        return Err(SynthError::Argument(format!(
            "concept {concept_name:?} has no observations to consolidate"
        )));
    }
    let template = prompts::synth_consolidate();
    let spans: Vec<&str> = observations.iter().map(|o| o.span.as_str()).collect();
    let prompt = template
        .render(&bindings(&[
            ("CONCEPT", concept_name),
            ("OBSERVATIONS", &serde_json::to_string(&spans).expect("spans serialize")),
        ]))
        .expect("consolidation template renders");

    let mut last_detail = String::new();
    for _attempt in 0..2 {
        let response = complete(backend, &request(config, prompt.clone()))?;
        match parse_concept(concept_name, &response.text) {
            Ok(concept) => return Ok(concept),
            Err(detail) => last_detail = detail,
        }
    }
    Err(SynthError::Consolidation { concept: concept_name.to_string(), detail: last_detail })
}

fn parse_concept(name: &str, text: &str) -> Result<Concept, String> {
    let outcome = extract_json_payload(text, 200);
    let Some(value) = outcome.value else {
        return Err("unparseable output".into());
    };
    let type_label = value.get("type").and_then(Value::as_str).unwrap_or("");
    let Some(data_type) = ConceptType::from_label(type_label) else {
        return Err(format!("unknown concept type {type_label:?}"));
    };
    let mut values: Vec<String> = match value.get("values") {
        Some(Value::Array(vs)) => vs
            .iter()
            .filter_map(Value::as_str)
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect(),
        _ => Vec::new(),
    };
    values.dedup();
    let concept = Concept {
        name: name.to_string(),
        data_type,
        values,
        provenance: ConceptProvenance::Mined,
    };
    concept.validate().map_err(|e| e.to_string())?;
    Ok(concept)
}

/// Step 3: ask for missing concepts. Proposals are deduplicated against the
/// ontology (case-insensitive) and marked `expanded`; they are never merged
/// automatically. A proposal with example phrasings becomes a
/// single-selection concept over those phrasings, otherwise an untyped
/// (string) concept — human validation settles both.
pub fn expand_ontology(
    ontology: &Ontology,
    backend: &dyn ChatBackend,
    config: &SynthConfig,
) -> Result<(Vec<Concept>, Vec<Diagnostic>), SynthError> {
    if ontology.is_empty() {
        return Err(SynthError::Argument("expansion needs a non-empty ontology".into()));
    }
    let names: Vec<&str> = ontology.concepts.iter().map(|c| c.name.as_str()).collect();
    let prompt = prompts::synth_expand()
        .render(&bindings(&[(
            "CONCEPTS",
            &serde_json::to_string(&names).expect("names serialize"),
        )]))
        .expect("expansion template renders");
    let response = complete(backend, &request(config, prompt))?;

    let mut diagnostics = Vec::new();
    let outcome = extract_json_payload(&response.text, 200);
    let Some(Value::Array(items)) = outcome.value else {
        diagnostics.push(Diagnostic::new("expand", "unparseable expansion output, no proposals"));
        return Ok((Vec::new(), diagnostics));
    };

    let mut proposals = Vec::new();
    let mut seen: std::collections::HashSet<String> = Default::default();
    for item in items {
        let name = match &item {
            Value::String(s) => s.trim().to_string(),
            Value::Object(map) => map
                .get("concept")
                .and_then(Value::as_str)
                .map(str::trim)
                .unwrap_or("")
                .to_string(),
            _ => String::new(),
        };
        if name.is_empty() {
            diagnostics.push(Diagnostic::new("expand", "proposal without a concept name, dropped"));
            continue;
        }
        if ontology.get_ci(&name).is_some() {
            diagnostics.push(Diagnostic::new("expand", format!("proposal {name:?} already exists, dropped")));
            continue;
        }
        if !seen.insert(name.to_lowercase()) {
            continue;
        }
        let phrasings: Vec<String> = item
            .get("phrasings")
            .and_then(Value::as_array)
            .map(|vs| {
                vs.iter()
                    .filter_map(Value::as_str)
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect()
            })
            .unwrap_or_default();
        let (data_type, values) = if phrasings.is_empty() {
            (ConceptType::String, Vec::new())
        } else {
            (ConceptType::SingleSelection, phrasings)
        };
        proposals.push(Concept {
            name,
            data_type,
            values,
            provenance: ConceptProvenance::Expanded,
        });
    }
    Ok((proposals, diagnostics))
}

/// Why a scenario failed validation.
fn scenario_violation(scenario: &Scenario, ontology: &Ontology) -> Option<String> {
    if scenario.concept_list.is_empty() {
        return Some("empty concept list".into());
    }
    for item in &scenario.concept_list {
        let Some(concept) = ontology.get_ci(&item.concept) else {
            return Some(format!("unknown concept {:?}", item.concept));
        };
        let value = item.value.trim();
        let ok = match concept.data_type {
            ConceptType::Boolean => value.eq_ignore_ascii_case("true") || value.eq_ignore_ascii_case("false"),
            ConceptType::Numeric => first_number(value).is_some(),
            ConceptType::String => !value.is_empty(),
            ConceptType::SingleSelection => {
                concept.values.iter().any(|v| v.eq_ignore_ascii_case(value))
            }
            ConceptType::MultiSelection => {
                let parts = split_selections(value);
                !parts.is_empty()
                    && parts
                        .iter()
                        .all(|p| concept.values.iter().any(|v| v.eq_ignore_ascii_case(p)))
            }
        };
        if !ok {
            return Some(format!(
                "value {:?} not admissible for {:?} ({:?})",
                item.value, concept.name, concept.data_type
            ));
        }
    }
    None
}

fn parse_scenario(text: &str, ontology: &Ontology) -> Result<Scenario, String> {
    let outcome = extract_json_payload(text, 200);
    let Some(value) = outcome.value else {
        return Err("unparseable scenario output".into());
    };
    let rationale = value
        .get("rationale")
        .and_then(Value::as_str)
        .unwrap_or("")
        .trim()
        .to_string();
    let Some(items) = value.get("concept_list").and_then(Value::as_array) else {
        return Err("missing concept_list".into());
    };
    let concept_list = items
        .iter()
        .map(|item| {
            let concept = item.get("concept").and_then(Value::as_str).unwrap_or("").trim();
            let value = match item.get("value") {
                Some(Value::String(s)) => s.trim().to_string(),
                Some(other) => other.to_string(),
                None => String::new(),
            };
            // Canonicalize the name to the ontology's casing when it exists;
            // validation rejects unknown names afterwards.
            let concept = ontology
                .get_ci(concept)
                .map(|c| c.name.clone())
                .unwrap_or_else(|| concept.to_string());
            ScenarioItem { concept, value }
        })
        .collect();
    let scenario = Scenario { rationale, concept_list };
    match scenario_violation(&scenario, ontology) {
        None => Ok(scenario),
        Some(v) => Err(v),
    }
}

/// Step 4: generate one validated scenario. The seed picks a deterministic
/// concept subset for the prompt; invalid responses are re-requested up to
/// two times before the scenario is rejected.
pub fn generate_scenario(
    ontology: &Ontology,
    backend: &dyn ChatBackend,
    seed: u64,
    config: &SynthConfig,
) -> Result<Scenario, SynthError> {
    ontology.validate()?;
    if ontology.is_empty() {
        return Err(SynthError::Argument("scenario generation needs a non-empty ontology".into()));
    }

    let subset: Vec<&Concept> = if config.scenario_subset_size == 0
        || config.scenario_subset_size >= ontology.len()
    {
        ontology.concepts.iter().collect()
    } else {
        use rand::seq::index::sample;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut picked: Vec<usize> =
            sample(&mut rng, ontology.len(), config.scenario_subset_size).into_vec();
        picked.sort_unstable();
        picked.into_iter().map(|i| &ontology.concepts[i]).collect()
    };

    #[derive(Serialize)]
    struct PromptConcept<'a> {
        concept: &'a str,
        #[serde(rename = "type")]
        data_type: ConceptType,
        #[serde(skip_serializing_if = "Vec::is_empty")]
        values: Vec<&'a str>,
    }
    let descriptors: Vec<PromptConcept> = subset
        .iter()
        .map(|c| PromptConcept {
            concept: &c.name,
            data_type: c.data_type,
            values: c.values.iter().map(String::as_str).collect(),
        })
        .collect();
    let prompt = prompts::synth_scenario()
        .render(&bindings(&[(
            "CONCEPT_SET",
            &serde_json::to_string_pretty(&descriptors).expect("descriptors serialize"),
        )]))
        .expect("scenario template renders");

    let attempts = 3;
    let mut last = String::new();
    for _ in 0..attempts {
        let response = complete(backend, &request(config, prompt.clone()))?;
        match parse_scenario(&response.text, ontology) {
            Ok(scenario) => return Ok(scenario),
            Err(detail) => last = detail,
        }
    }
    Err(SynthError::Scenario { attempts, detail: last })
}

/// Step 5: turn a validated scenario into a dictation, conditioned on one
/// to five style examples. Coverage checking is soft: concepts whose tokens
/// never appear in the text come back as warnings.
pub fn synthesize_dictation(
    scenario: &Scenario,
    style_examples: &[&Transcript],
    backend: &dyn ChatBackend,
    config: &SynthConfig,
) -> Result<(SyntheticDictation, Vec<Diagnostic>), SynthError> {
    if style_examples.is_empty() || style_examples.len() > 5 {
        return Err(SynthError::Argument(format!(
            "dictation synthesis takes 1 to 5 style examples, got {}",
            style_examples.len()
        )));
    }
    let styles: Vec<&str> = style_examples.iter().map(|t| t.raw_text.as_str()).collect();
    let prompt = prompts::synth_dictate()
        .render(&bindings(&[
            ("TRANSCRIPT", &styles.join("\n\n---\n\n")),
            (
                "CONCEPT_LIST",
                &serde_json::to_string_pretty(&scenario.concept_list).expect("list serializes"),
            ),
        ]))
        .expect("dictation template renders");
    let response = complete(backend, &request(config, prompt))?;
    let text = response.text.trim().to_string();
    if text.is_empty() {
        return Err(SynthError::Synthesis("model returned empty text".into()));
    }

    let mut diagnostics = Vec::new();
    let text_tokens: std::collections::HashSet<String> = tokenize(&text).into_iter().collect();
    for item in &scenario.concept_list {
        let mentioned = tokenize(&item.concept)
            .into_iter()
            .chain(tokenize(&item.value))
            .any(|t| text_tokens.contains(&t));
        if !mentioned {
            diagnostics.push(Diagnostic::new(
                "coverage",
                format!("concept {:?} has no token overlap with the dictation", item.concept),
            ));
        }
    }
    Ok((
        SyntheticDictation {
            text,
            scenario: scenario.clone(),
            style_example_ids: style_examples.iter().map(|t| t.id.clone()).collect(),
        },
        diagnostics,
    ))
}

/// One line of the labeling bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelingEntry {
    pub id: String,
    pub text: String,
    pub provisional_labels: Vec<ScenarioItem>,
}

/// Step 6: export dictations as a JSONL labeling bundle with their
/// scenarios as provisional labels. The human review itself happens outside
/// this toolkit.
pub fn export_for_labeling(dictations: &[SyntheticDictation]) -> Result<Vec<LabelingEntry>, SynthError> {
    if dictations.is_empty() {
        return Err(SynthError::Argument("nothing to export".into()));
    }
    Ok(dictations
        .iter()
        .enumerate()
        .map(|(i, d)| LabelingEntry {
            id: format!("synth-{:04}", i + 1),
            text: d.text.clone(),
            provisional_labels: d.scenario.concept_list.clone(),
        })
        .collect())
}

/// Group mined observations by concept name (case-insensitive), insertion
/// ordered — the unit of consolidation.
pub fn group_by_concept(observations: &[MinedObservation]) -> Vec<(String, Vec<MinedObservation>)> {
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, Vec<MinedObservation>> = BTreeMap::new();
    for obs in observations {
        let key = obs.concept.to_lowercase();
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(obs.clone());
    }
    order
        .into_iter()
        .map(|key| {
            let group = groups.remove(&key).expect("key recorded");
            (group[0].concept.clone(), group)
        })
        .collect()
}

pub fn load_ontology(path: &std::path::Path) -> Result<Ontology, SynthError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| FormatError::Io(format!("{}: {e}", path.display())))?;
    let ontology: Ontology =
        serde_json::from_str(&text).map_err(|e| FormatError::Json(e.to_string()))?;
    ontology.validate()?;
    Ok(ontology)
}

pub fn render_ontology(ontology: &Ontology) -> String {
    let mut out = serde_json::to_string_pretty(ontology).expect("ontology serializes");
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Source, Speaker, Turn};
    use crate::gateway::ScriptedBackend;

    fn seed(id: &str, text: &str) -> Transcript {
        Transcript::new(
            id,
            Source::Synur,
            vec![Turn { line_no: 1, speaker: Speaker::Nurse, text: text.into() }],
        )
        .unwrap()
    }

    fn ontology() -> Ontology {
        Ontology {
            concepts: vec![
                Concept {
                    name: "Pain severity".into(),
                    data_type: ConceptType::SingleSelection,
                    values: (0..=10).map(|n| format!("{n} out of 10")).collect(),
                    provenance: ConceptProvenance::Mined,
                },
                Concept {
                    name: "Urinary stone".into(),
                    data_type: ConceptType::Boolean,
                    values: vec![],
                    provenance: ConceptProvenance::Mined,
                },
                Concept {
                    name: "Pulse rate".into(),
                    data_type: ConceptType::Numeric,
                    values: vec![],
                    provenance: ConceptProvenance::Mined,
                },
            ],
        }
    }

    #[test]
    fn mining_grows_the_pool_without_duplicates() {
        let seeds = vec![
            seed("a", "Blood pressure is 127/66."),
            seed("b", "Blood pressure 110 over 70, urine dark yellow."),
        ];
        let backend = ScriptedBackend::from_queue(vec![
            r#"[{"concept": "Blood pressure", "span": "Blood pressure is 127/66"}]"#.into(),
            r#"[{"concept": "Blood pressure", "span": "Blood pressure 110 over 70"},
                {"concept": "Urine colour", "span": "urine dark yellow"}]"#
                .into(),
        ]);
        let out = mine_observations(&seeds, &backend, &SynthConfig::default()).unwrap();
        assert_eq!(out.observations.len(), 3);
        assert_eq!(out.pool, vec!["Blood pressure".to_string(), "Urine colour".to_string()]);
    }

    #[test]
    fn mining_processes_documents_in_sorted_id_order() {
        let seeds = vec![seed("zeta", "Respiration 18."), seed("alpha", "Pulse 88.")];
        // First response must land on "alpha".
        let backend = ScriptedBackend::from_queue(vec![
            r#"[{"concept": "Pulse rate", "span": "Pulse 88"}]"#.into(),
            r#"[{"concept": "Respiration rate", "span": "Respiration 18"}]"#.into(),
        ]);
        let out = mine_observations(&seeds, &backend, &SynthConfig::default()).unwrap();
        assert_eq!(out.observations[0].source_doc, "alpha");
        assert_eq!(out.observations[1].source_doc, "zeta");
    }

    #[test]
    fn mining_skips_unparseable_documents() {
        let seeds = vec![seed("a", "Pulse 88."), seed("b", "Temp 37.")];
        let backend = ScriptedBackend::from_queue(vec![
            "no json at all".into(),
            r#"[{"concept": "Temperature", "text_span": "Temp 37"}]"#.into(),
        ]);
        let out = mine_observations(&seeds, &backend, &SynthConfig::default()).unwrap();
        assert_eq!(out.observations.len(), 1);
        assert_eq!(out.observations[0].span, "Temp 37");
        assert_eq!(out.diagnostics.len(), 1);
    }

    #[test]
    fn consolidation_accepts_selection_with_values() {
        let obs = vec![
            MinedObservation { concept: "Urine colour".into(), span: "dark yellow".into(), source_doc: "a".into() },
            MinedObservation { concept: "Urine colour".into(), span: "amber".into(), source_doc: "b".into() },
        ];
        let backend = ScriptedBackend::from_queue(vec![
            r#"{"concept": "Urine colour", "type": "single_selection", "values": ["pale yellow", "dark yellow", "amber"]}"#.into(),
        ]);
        let c = consolidate_concept("Urine colour", &obs, &backend, &SynthConfig::default()).unwrap();
        assert_eq!(c.data_type, ConceptType::SingleSelection);
        assert!(c.values.len() >= 2);
        assert_eq!(c.provenance, ConceptProvenance::Mined);
    }

    #[test]
    fn consolidation_types_non_selection_without_values() {
        let obs = vec![MinedObservation {
            concept: "Blood pressure".into(),
            span: "127/66".into(),
            source_doc: "a".into(),
        }];
        let backend = ScriptedBackend::from_queue(vec![
            r#"{"concept": "Blood pressure", "type": "string"}"#.into(),
        ]);
        let c = consolidate_concept("Blood pressure", &obs, &backend, &SynthConfig::default()).unwrap();
        assert!(!c.data_type.is_selection());
        assert!(c.values.is_empty());
    }

    #[test]
    fn consolidation_retries_once_then_fails_on_invariant_violation() {
        let obs = vec![MinedObservation {
            concept: "Fever".into(),
            span: "febrile".into(),
            source_doc: "a".into(),
        }];
        // Values on a boolean violate the invariant, both times.
        let bad = r#"{"concept": "Fever", "type": "boolean", "values": ["yes", "no"]}"#;
        let backend = ScriptedBackend::from_queue(vec![bad.into(), bad.into()]);
        let err = consolidate_concept("Fever", &obs, &backend, &SynthConfig::default()).unwrap_err();
        assert!(matches!(err, SynthError::Consolidation { .. }));
        assert_eq!(backend.remaining(), Some(0));
    }

    #[test]
    fn consolidation_recovers_on_retry() {
        let obs = vec![MinedObservation {
            concept: "Fever".into(),
            span: "febrile".into(),
            source_doc: "a".into(),
        }];
        let backend = ScriptedBackend::from_queue(vec![
            "garbage".into(),
            r#"{"concept": "Fever", "type": "boolean"}"#.into(),
        ]);
        let c = consolidate_concept("Fever", &obs, &backend, &SynthConfig::default()).unwrap();
        assert_eq!(c.data_type, ConceptType::Boolean);
    }

    #[test]
    fn multiple_selection_label_maps_to_multi() {
        assert_eq!(ConceptType::from_label("multiple_selection"), Some(ConceptType::MultiSelection));
        assert_eq!(ConceptType::from_label("integer"), Some(ConceptType::Numeric));
        assert_eq!(ConceptType::from_label("single-choice"), Some(ConceptType::SingleSelection));
    }

    #[test]
    fn expansion_dedupes_against_existing_names() {
        let backend = ScriptedBackend::from_queue(vec![
            r#"[{"concept": "Pain severity"}, {"concept": "Wound drainage", "phrasings": ["serous", "purulent"]}, "Mobility level"]"#.into(),
        ]);
        let (proposals, diags) =
            expand_ontology(&ontology(), &backend, &SynthConfig::default()).unwrap();
        assert_eq!(proposals.len(), 2);
        assert_eq!(proposals[0].name, "Wound drainage");
        assert_eq!(proposals[0].data_type, ConceptType::SingleSelection);
        assert_eq!(proposals[1].name, "Mobility level");
        assert_eq!(proposals[1].data_type, ConceptType::String);
        assert!(proposals.iter().all(|p| p.provenance == ConceptProvenance::Expanded));
        assert!(diags.iter().any(|d| d.message.contains("already exists")));
    }

    #[test]
    fn expansion_with_empty_response_is_no_proposals() {
        let backend = ScriptedBackend::from_queue(vec!["[]".into()]);
        let (proposals, _) = expand_ontology(&ontology(), &backend, &SynthConfig::default()).unwrap();
        assert!(proposals.is_empty());
    }

    #[test]
    fn valid_scenario_is_accepted() {
        let backend = ScriptedBackend::from_queue(vec![
            r#"{"rationale": "renal colic case", "concept_list": [
                {"concept": "Pain severity", "value": "7 out of 10"},
                {"concept": "Urinary stone", "value": "True"}
            ]}"#
            .into(),
        ]);
        let s = generate_scenario(&ontology(), &backend, 1, &SynthConfig::default()).unwrap();
        assert_eq!(s.concept_list.len(), 2);
        assert_eq!(s.concept_list[0].concept, "Pain severity");
    }

    #[test]
    fn unknown_concept_is_retried_then_rejected() {
        let bad = r#"{"rationale": "x", "concept_list": [{"concept": "Made up", "value": "1"}]}"#;
        let backend =
            ScriptedBackend::from_queue(vec![bad.into(), bad.into(), bad.into()]);
        let err = generate_scenario(&ontology(), &backend, 1, &SynthConfig::default()).unwrap_err();
        assert!(matches!(err, SynthError::Scenario { attempts: 3, .. }));
        assert_eq!(backend.remaining(), Some(0));
    }

    #[test]
    fn out_of_set_selection_value_is_rejected() {
        let bad = r#"{"rationale": "x", "concept_list": [{"concept": "Pain severity", "value": "extreme"}]}"#;
        let good = r#"{"rationale": "x", "concept_list": [{"concept": "Pain severity", "value": "3 out of 10"}]}"#;
        let backend = ScriptedBackend::from_queue(vec![bad.into(), good.into()]);
        let s = generate_scenario(&ontology(), &backend, 1, &SynthConfig::default()).unwrap();
        assert_eq!(s.concept_list[0].value, "3 out of 10");
    }

    #[test]
    fn dictation_synthesis_attaches_scenario_and_style_ids() {
        let scenario = Scenario {
            rationale: "r".into(),
            concept_list: vec![ScenarioItem { concept: "Pain severity".into(), value: "7 out of 10".into() }],
        };
        let style = seed("style-1", "Patient resting, pain three out of ten this morning.");
        let backend = ScriptedBackend::from_queue(vec![
            "Okay so, patient reports pain at seven out of 10... will reassess.".into(),
        ]);
        let (d, warnings) =
            synthesize_dictation(&scenario, &[&style], &backend, &SynthConfig::default()).unwrap();
        assert!(d.text.contains("seven out of 10"));
        assert_eq!(d.style_example_ids, vec!["style-1".to_string()]);
        assert!(warnings.is_empty());
    }

    #[test]
    fn uncovered_concept_warns_but_does_not_fail() {
        let scenario = Scenario {
            rationale: "r".into(),
            concept_list: vec![
                ScenarioItem { concept: "Pain severity".into(), value: "7 out of 10".into() },
                ScenarioItem { concept: "Urinary stone".into(), value: "true".into() },
            ],
        };
        let style = seed("style-1", "Example note.");
        let backend = ScriptedBackend::from_queue(vec!["Pain is 7 out of 10 currently.".into()]);
        let (_, warnings) =
            synthesize_dictation(&scenario, &[&style], &backend, &SynthConfig::default()).unwrap();
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].message.contains("Urinary stone"));
    }

    #[test]
    fn empty_dictation_text_is_an_error() {
        let scenario = Scenario { rationale: "r".into(), concept_list: vec![] };
        let style = seed("style-1", "Example note.");
        let backend = ScriptedBackend::from_queue(vec!["   ".into()]);
        let err = synthesize_dictation(&scenario, &[&style], &backend, &SynthConfig::default())
            .unwrap_err();
        assert!(matches!(err, SynthError::Synthesis(_)));
    }

    #[test]
    fn six_style_examples_are_rejected() {
        let scenario = Scenario { rationale: "r".into(), concept_list: vec![] };
        let styles: Vec<Transcript> = (0..6).map(|i| seed(&format!("s{i}"), "note")).collect();
        let refs: Vec<&Transcript> = styles.iter().collect();
        let backend = ScriptedBackend::from_queue(vec![]);
        let err = synthesize_dictation(&scenario, &refs, &backend, &SynthConfig::default())
            .unwrap_err();
        assert!(matches!(err, SynthError::Argument(_)));
    }

    #[test]
    fn export_produces_one_line_per_dictation_and_round_trips() {
        let dictations: Vec<SyntheticDictation> = (0..3)
            .map(|i| SyntheticDictation {
                text: format!("dictation {i}"),
                scenario: Scenario {
                    rationale: "r".into(),
                    concept_list: vec![ScenarioItem { concept: "Pulse rate".into(), value: "88".into() }],
                },
                style_example_ids: vec![],
            })
            .collect();
        let entries = export_for_labeling(&dictations).unwrap();
        assert_eq!(entries.len(), 3);
        assert_eq!(entries[0].id, "synth-0001");

        let jsonl = crate::corpus::io::render_jsonl(&entries);
        let back: Vec<LabelingEntry> = crate::corpus::io::parse_jsonl(&jsonl).unwrap();
        assert_eq!(back, entries);
    }

    #[test]
    fn export_of_nothing_is_an_argument_error() {
        assert!(matches!(export_for_labeling(&[]), Err(SynthError::Argument(_))));
    }

    #[test]
    fn ontology_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ontology.json");
        let ont = ontology();
        std::fs::write(&path, render_ontology(&ont)).unwrap();
        let back = load_ontology(&path).unwrap();
        assert_eq!(back, ont);
    }

    #[test]
    fn grouping_is_case_insensitive_and_keeps_first_seen_name() {
        let obs = vec![
            MinedObservation { concept: "Pulse rate".into(), span: "88".into(), source_doc: "a".into() },
            MinedObservation { concept: "pulse Rate".into(), span: "92".into(), source_doc: "b".into() },
            MinedObservation { concept: "Temperature".into(), span: "37".into(), source_doc: "a".into() },
        ];
        let groups = group_by_concept(&obs);
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0].0, "Pulse rate");
        assert_eq!(groups[0].1.len(), 2);
    }
}
