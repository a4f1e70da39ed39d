//! Medical order extraction from numbered doctor-patient transcripts.
//!
//! Builds the scribe prompt (instruction block, optional worked examples,
//! the numbered transcript), sends it through a backend, and recovers the
//! order list with the repair parser. Provenance is clamped to the
//! transcript's line range; everything dropped is reported as a diagnostic.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{FewShotExample, GoldItems, MedicalOrder, Transcript};
use crate::gateway::{
    bindings, complete, ChatBackend, ChatRequest, GatewayError, PromptTemplate,
    DEFAULT_MAX_NEW_TOKENS, DEFAULT_TEMPERATURE,
};
use crate::parse::{coerce_orders, extract_json_payload, Diagnostic, ParseOutcome};
use crate::prompts;
use crate::retrieval::{build_index, example_docs, top_n, Index};

#[derive(Debug, Error)]
pub enum OrderPipelineError {
    #[error("example {0:?} carries no gold orders")]
    ExampleWithoutOrders(String),
    #[error("shots {shots} exceeds the training pool of {pool}")]
    NotEnoughExamples { shots: usize, pool: usize },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

/// How few-shot examples are chosen per transcript.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExampleSelection {
    /// Redrawn per transcript from the run seed.
    RandomSeeded,
    /// Top hits from a lexical index over the training pool.
    Retrieval,
}

/// Run configuration for order extraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderRunConfig {
    pub shots: usize,
    pub example_selection: ExampleSelection,
    pub seed: u64,
    pub max_new_tokens: u32,
    pub model_id: String,
    pub temperature: f64,
}

impl Default for OrderRunConfig {
    fn default() -> Self {
        OrderRunConfig {
            shots: 0,
            example_selection: ExampleSelection::RandomSeeded,
            seed: 0,
            max_new_tokens: DEFAULT_MAX_NEW_TOKENS,
            model_id: String::new(),
            temperature: DEFAULT_TEMPERATURE,
        }
    }
}

/// Worked example block: the numbered transcript and its gold order JSON.
fn example_block(example: &FewShotExample) -> Result<String, OrderPipelineError> {
    let GoldItems::Orders(gold) = &example.gold else {
        return Err(OrderPipelineError::ExampleWithoutOrders(example.id.clone()));
    };
    let gold_json = serde_json::to_string_pretty(gold).expect("orders serialize");
    Ok(format!(
        "===EXAMPLE ORDER EXTRACTION===\n\n---DOCTOR TRANSCRIPT---\n{}\n\n---ORDERS---\n{}\n\n",
        example.transcript_text, gold_json
    ))
}

/// Assemble the full prompt: instruction block, `examples.len()` worked
/// examples, then the current numbered transcript.
pub fn build_order_prompt(
    transcript: &Transcript,
    examples: &[&FewShotExample],
    template: &PromptTemplate,
) -> Result<String, OrderPipelineError> {
    let mut blocks = String::new();
    for ex in examples {
        blocks.push_str(&example_block(ex)?);
    }
    let prompt = template
        .render(&bindings(&[
            ("EXAMPLES", &blocks),
            ("TRANSCRIPT", &transcript.numbered_rendering()),
        ]))
        .map_err(GatewayError::from)?;
    Ok(prompt)
}

/// Result of one transcript's extraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderExtraction {
    pub transcript_id: String,
    pub orders: Vec<MedicalOrder>,
    pub parse: ParseOutcome,
    pub diagnostics: Vec<Diagnostic>,
}

/// Compact parse info persisted with run outputs (the parsed document
/// itself is not repeated there).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParseSummary {
    pub repairs: Vec<crate::parse::Repair>,
    pub failed: bool,
}

/// One line of an `extract-orders` output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderRunRecord {
    pub transcript_id: String,
    pub orders: Vec<MedicalOrder>,
    pub parse: ParseSummary,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<Diagnostic>,
}

impl From<OrderExtraction> for OrderRunRecord {
    fn from(extraction: OrderExtraction) -> OrderRunRecord {
        OrderRunRecord {
            transcript_id: extraction.transcript_id,
            orders: extraction.orders,
            parse: ParseSummary {
                repairs: extraction.parse.repairs,
                failed: extraction.parse.failed,
            },
            diagnostics: extraction.diagnostics,
        }
    }
}

/// The order-extraction pipeline: a backend, a training pool for few-shot
/// prompting, and a run configuration.
pub struct OrderPipeline<'a> {
    backend: &'a dyn ChatBackend,
    pool: &'a [FewShotExample],
    config: OrderRunConfig,
    template: PromptTemplate,
    pool_index: Option<Index>,
}

impl<'a> OrderPipeline<'a> {
    pub fn new(
        backend: &'a dyn ChatBackend,
        pool: &'a [FewShotExample],
        config: OrderRunConfig,
    ) -> Result<OrderPipeline<'a>, OrderPipelineError> {
        if config.shots > pool.len() {
            return Err(OrderPipelineError::NotEnoughExamples {
                shots: config.shots,
                pool: pool.len(),
            });
        }
        let pool_index = if config.shots > 0 && config.example_selection == ExampleSelection::Retrieval {
            Some(
                build_index(example_docs(pool))
                    .map_err(|e| GatewayError::Config(format!("example index: {e}")))?,
            )
        } else {
            None
        };
        Ok(OrderPipeline { backend, pool, config, template: prompts::order_extraction(), pool_index })
    }

    /// Deterministic per-transcript example choice: the run seed is folded
    /// with the transcript id so reruns pick identical examples while
    /// different transcripts draw independently.
    fn select_examples(&self, transcript: &Transcript) -> Vec<&'a FewShotExample> {
        if self.config.shots == 0 {
            return Vec::new();
        }
        match self.config.example_selection {
            ExampleSelection::RandomSeeded => {
                use rand::seq::index::sample;
                use rand::SeedableRng;
                let mut hasher = Sha256::new();
                hasher.update(self.config.seed.to_le_bytes());
                hasher.update(transcript.id.as_bytes());
                let digest = hasher.finalize();
                let mut seed_bytes = [0u8; 8];
                seed_bytes.copy_from_slice(&digest[..8]);
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(u64::from_le_bytes(seed_bytes));
                sample(&mut rng, self.pool.len(), self.config.shots)
                    .into_iter()
                    .map(|i| &self.pool[i])
                    .collect()
            }
            ExampleSelection::Retrieval => {
                let index = self.pool_index.as_ref().expect("index built for retrieval mode");
                top_n(index, &transcript.raw_text, self.config.shots)
                    .unwrap_or_default()
                    .iter()
                    .filter_map(|hit| self.pool.iter().find(|e| e.id == hit.doc_id))
                    .collect()
            }
        }
    }

    /// Extract orders from one transcript. Unrecoverable parses yield an
    /// empty order list with `parse.failed = true`; provenance outside the
    /// transcript's line range is dropped with a diagnostic.
    pub fn extract(&self, transcript: &Transcript) -> Result<OrderExtraction, OrderPipelineError> {
        let examples = self.select_examples(transcript);
        let prompt = build_order_prompt(transcript, &examples, &self.template)?;

        let mut request = ChatRequest::new(prompt);
        request.model_id = self.config.model_id.clone();
        request.max_new_tokens = self.config.max_new_tokens;
        request.temperature = self.config.temperature;
        let response = complete(self.backend, &request)?;

        let max_line = transcript.max_line();
        let parse = extract_json_payload(&response.text, max_line as usize);
        let mut diagnostics = Vec::new();
        let mut orders = Vec::new();
        if let Some(value) = &parse.value {
            match coerce_orders(value) {
                Ok((coerced, mut diags)) => {
                    diagnostics.append(&mut diags);
                    for mut order in coerced {
                        let before = order.provenance.len();
                        order.provenance.retain(|&line| line <= max_line);
                        if order.provenance.len() != before {
                            diagnostics.push(Diagnostic::new(
                                "provenance",
                                format!(
                                    "{}: order {:?} cited {} line number(s) beyond line {max_line}, dropped",
                                    transcript.id,
                                    order.description,
                                    before - order.provenance.len()
                                ),
                            ));
                        }
                        orders.push(order);
                    }
                }
                Err(e) => diagnostics.push(Diagnostic::new(
                    "coerce_orders",
                    format!("{}: {e}", transcript.id),
                )),
            }
        } else {
            diagnostics.push(Diagnostic::new(
                "parse",
                format!("{}: unrecoverable model output", transcript.id),
            ));
        }

        Ok(OrderExtraction {
            transcript_id: transcript.id.clone(),
            orders,
            parse,
            diagnostics,
        })
    }
}
