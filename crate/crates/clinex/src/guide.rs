//! The book, chapter by chapter. Each chapter is attached as module
//! documentation so its Rust snippets run under `cargo test --doc` and
//! cannot drift from the code. Render the browsable version with
//! `mdbook build book` from the workspace root.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/corpora.md")]
pub mod corpora {}

#[doc = include_str!("../../../book/src/retrieval.md")]
pub mod retrieval {}

#[doc = include_str!("../../../book/src/robust-parsing.md")]
pub mod robust_parsing {}

#[doc = include_str!("../../../book/src/observation-pipeline.md")]
pub mod observation_pipeline {}

#[doc = include_str!("../../../book/src/order-pipeline.md")]
pub mod order_pipeline {}

#[doc = include_str!("../../../book/src/scoring.md")]
pub mod scoring {}

#[doc = include_str!("../../../book/src/synthetic-dictations.md")]
pub mod synthetic_dictations {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
