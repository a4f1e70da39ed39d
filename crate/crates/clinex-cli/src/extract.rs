//! The two extraction commands; transcripts are processed in sorted-id
//! order so scripted runs replay byte-identically.

use std::path::Path;

use clinex::corpus::io::{
    load_examples, load_flowsheet_schema, load_transcript_corpus, render_jsonl,
};
use clinex::corpus::{FewShotExample, Source, Transcript};
use clinex::gateway::ChatBackend;
use clinex::nurse::{NursePipeline, NursePipelineConfig};
use clinex::orders::{OrderPipeline, OrderRunConfig, OrderRunRecord};
use clinex::parse::ParseStats;
use clinex::retrieval::load_index;

use crate::commands::write_output;
use crate::errors::CliResult;
use crate::manifest::ManifestBuilder;

fn load_sorted_corpus(path: &Path, source: Source) -> CliResult<Vec<Transcript>> {
    let mut corpus = load_transcript_corpus(path, source)?;
    corpus.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(corpus)
}

pub struct ExtractOrdersArgs<'a> {
    pub transcripts: &'a Path,
    pub train: Option<&'a Path>,
    pub out: &'a Path,
    pub config: OrderRunConfig,
}

pub fn cmd_extract_orders(backend: &dyn ChatBackend, args: &ExtractOrdersArgs) -> CliResult<()> {
    let mut manifest = ManifestBuilder::new("extract-orders");
    manifest.input(args.transcripts).output(args.out);
    manifest.seed = Some(args.config.seed);
    manifest.backend = Some(backend.identity());
    manifest.config = serde_json::to_value(&args.config).expect("config serializes");

    let corpus = load_sorted_corpus(args.transcripts, Source::Other)?;
    let pool: Vec<FewShotExample> = match args.train {
        Some(path) => {
            manifest.input(path);
            load_examples(path)?
        }
        None => Vec::new(),
    };

    let pipeline = OrderPipeline::new(backend, &pool, args.config.clone())?;
    let mut stats = ParseStats::default();
    let mut records = Vec::with_capacity(corpus.len());
    for transcript in &corpus {
        let extraction = pipeline.extract(transcript)?;
        stats.record(&extraction.parse);
        records.push(OrderRunRecord::from(extraction));
    }
    write_output(args.out, &render_jsonl(&records))?;
    println!(
        "extracted orders for {} transcript(s), parse error rate {:.3}",
        records.len(),
        stats.error_rate()
    );
    manifest.write()
}

pub struct ExtractObservationsArgs<'a> {
    pub schema: &'a Path,
    pub transcripts: &'a Path,
    pub index: Option<&'a Path>,
    pub examples: Option<&'a Path>,
    pub out: &'a Path,
    pub config: NursePipelineConfig,
}

pub fn cmd_extract_observations(
    backend: &dyn ChatBackend,
    args: &ExtractObservationsArgs,
) -> CliResult<()> {
    let mut manifest = ManifestBuilder::new("extract-observations");
    manifest.input(args.schema).input(args.transcripts).output(args.out);
    manifest.backend = Some(backend.identity());
    manifest.config = serde_json::to_value(&args.config).expect("config serializes");

    let schema = load_flowsheet_schema(args.schema)?;
    let corpus = load_sorted_corpus(args.transcripts, Source::Other)?;
    let example_db: Vec<FewShotExample> = match args.examples {
        Some(path) => {
            manifest.input(path);
            load_examples(path)?
        }
        None => Vec::new(),
    };

    let pipeline = match args.index {
        Some(path) => {
            manifest.input(path);
            let index = load_index(path)?;
            NursePipeline::with_row_index(backend, &schema, &example_db, index, args.config.clone())?
        }
        None => NursePipeline::new(backend, &schema, &example_db, args.config.clone())?,
    };

    let mut runs = Vec::with_capacity(corpus.len());
    for transcript in &corpus {
        runs.push(pipeline.run(transcript)?);
    }
    let n_observations: usize = runs.iter().map(|r| r.observations.len()).sum();
    write_output(args.out, &render_jsonl(&runs))?;
    println!(
        "extracted {} observation(s) from {} dictation(s)",
        n_observations,
        runs.len()
    );
    manifest.write()
}
