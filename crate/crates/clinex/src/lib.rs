//! Clinical unstructured-to-structured extraction toolkit.
//!
//! Two pipelines turn spoken-language transcripts into structured records:
//! nurse dictations into flowsheet observations (segmentation → schema
//! filtering → extraction → canonicalization) and doctor-patient
//! consultations into medical orders. Around them sit a corpus model with
//! validated loaders, a BM25 retrieval layer, a repair-based parser for
//! imperfect model output, a full scoring suite, and a six-step synthetic
//! dictation generator. Every pipeline runs against a real chat-completion
//! endpoint or a deterministic scripted backend.

pub mod corpus;
pub mod eval;
pub mod gateway;
pub mod guide;
pub mod nurse;
pub mod orders;
pub mod parse;
pub mod prompts;
pub mod retrieval;
pub mod synth;
