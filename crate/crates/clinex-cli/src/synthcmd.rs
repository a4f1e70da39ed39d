//! The `synth` subcommands: the six generation steps as batch operations.

use std::path::Path;

use rand::SeedableRng;

use clinex::corpus::io::{load_transcript_corpus, parse_jsonl, render_jsonl};
use clinex::corpus::Source;
use clinex::gateway::ChatBackend;
use clinex::synth::{
    consolidate_concept, expand_ontology, export_for_labeling, generate_scenario, group_by_concept,
    load_ontology, mine_observations, render_ontology, synthesize_dictation, MinedObservation,
    Ontology, Scenario, SynthConfig, SyntheticDictation,
};

use crate::commands::write_output;
use crate::errors::{CliError, CliResult};
use crate::manifest::ManifestBuilder;

fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Format(format!("{}: {e}", path.display())))
}

pub fn cmd_mine(
    backend: &dyn ChatBackend,
    seeds: &Path,
    out: &Path,
    config: &SynthConfig,
) -> CliResult<()> {
    let mut manifest = ManifestBuilder::new("synth mine");
    manifest.input(seeds).output(out);
    manifest.backend = Some(backend.identity());

    let corpus = load_transcript_corpus(seeds, Source::Synur)?;
    let output = mine_observations(&corpus, backend, config)?;
    for d in &output.diagnostics {
        eprintln!("warning: {}: {}", d.stage, d.message);
    }
    write_output(out, &render_jsonl(&output.observations))?;
    println!(
        "mined {} unique observation(s) across {} concept(s)",
        output.observations.len(),
        output.pool.len()
    );
    manifest.config = serde_json::json!({
        "seed_documents": corpus.len(),
        "observations": output.observations.len(),
        "pool": output.pool.len(),
    });
    manifest.write()
}

pub fn cmd_consolidate(
    backend: &dyn ChatBackend,
    mined: &Path,
    out: &Path,
    config: &SynthConfig,
) -> CliResult<()> {
    let mut manifest = ManifestBuilder::new("synth consolidate");
    manifest.input(mined).output(out);
    manifest.backend = Some(backend.identity());

    let observations: Vec<MinedObservation> = parse_jsonl(&read_text(mined)?)?;
    let groups = group_by_concept(&observations);
    let mut concepts = Vec::new();
    let mut failures = 0usize;
    for (name, group) in &groups {
        match consolidate_concept(name, group, backend, config) {
            Ok(concept) => concepts.push(concept),
            Err(e) => {
                failures += 1;
                eprintln!("warning: flagged for human review: {e}");
            }
        }
    }
    if concepts.is_empty() {
        return Err(CliError::Run("every concept failed consolidation".into()));
    }
    let ontology = Ontology { concepts };
    ontology.validate()?;
    write_output(out, &render_ontology(&ontology))?;
    println!(
        "consolidated {} concept(s) ({failures} flagged for review)",
        ontology.len()
    );
    manifest.config = serde_json::json!({"concepts": ontology.len(), "flagged": failures});
    manifest.write()
}

pub fn cmd_expand(
    backend: &dyn ChatBackend,
    ontology_path: &Path,
    out: &Path,
    config: &SynthConfig,
) -> CliResult<()> {
    let mut manifest = ManifestBuilder::new("synth expand");
    manifest.input(ontology_path).output(out);
    manifest.backend = Some(backend.identity());

    let ontology = load_ontology(ontology_path)?;
    let (proposals, diagnostics) = expand_ontology(&ontology, backend, config)?;
    for d in &diagnostics {
        eprintln!("warning: {}: {}", d.stage, d.message);
    }
    // Proposals are a review queue, not a merged ontology.
    write_output(out, &render_ontology(&Ontology { concepts: proposals.clone() }))?;
    println!(
        "proposed {} new concept(s) for human validation (existing: {})",
        proposals.len(),
        ontology.len()
    );
    manifest.config = serde_json::json!({"existing": ontology.len(), "proposals": proposals.len()});
    manifest.write()
}

pub fn cmd_scenario(
    backend: &dyn ChatBackend,
    ontology_path: &Path,
    out: &Path,
    seed: u64,
    count: usize,
    config: &SynthConfig,
) -> CliResult<()> {
    let mut manifest = ManifestBuilder::new("synth scenario");
    manifest.input(ontology_path).output(out);
    manifest.backend = Some(backend.identity());
    manifest.seed = Some(seed);

    let ontology = load_ontology(ontology_path)?;
    let mut scenarios = Vec::new();
    for i in 0..count {
        match generate_scenario(&ontology, backend, seed.wrapping_add(i as u64), config) {
            Ok(s) => scenarios.push(s),
            Err(e) => eprintln!("warning: scenario {i}: {e}"),
        }
    }
    if scenarios.is_empty() {
        return Err(CliError::Run("no scenario survived validation".into()));
    }
    write_output(out, &render_jsonl(&scenarios))?;
    println!("generated {} of {count} scenario(s)", scenarios.len());
    manifest.config =
        serde_json::json!({"requested": count, "kept": scenarios.len(), "subset_size": config.scenario_subset_size});
    manifest.write()
}

pub fn cmd_dictate(
    backend: &dyn ChatBackend,
    scenarios_path: &Path,
    style: &Path,
    out: &Path,
    seed: u64,
    config: &SynthConfig,
) -> CliResult<()> {
    let mut manifest = ManifestBuilder::new("synth dictate");
    manifest.input(scenarios_path).input(style).output(out);
    manifest.backend = Some(backend.identity());
    manifest.seed = Some(seed);

    let scenarios: Vec<Scenario> = parse_jsonl(&read_text(scenarios_path)?)?;
    let mut style_pool = load_transcript_corpus(style, Source::Synur)?;
    style_pool.sort_by(|a, b| a.id.cmp(&b.id));
    if style_pool.is_empty() {
        return Err(CliError::Usage("dictation needs at least one style example".into()));
    }

    let mut dictations = Vec::new();
    for (i, scenario) in scenarios.iter().enumerate() {
        // Up to five style examples, drawn per scenario from the run seed.
        let k = style_pool.len().min(5);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
        let mut picked: Vec<usize> =
            rand::seq::index::sample(&mut rng, style_pool.len(), k).into_vec();
        picked.sort_unstable();
        let styles: Vec<&clinex::corpus::Transcript> =
            picked.into_iter().map(|j| &style_pool[j]).collect();
        let (dictation, warnings) = synthesize_dictation(scenario, &styles, backend, config)?;
        for w in &warnings {
            eprintln!("warning: dictation {i}: {}", w.message);
        }
        dictations.push(dictation);
    }
    write_output(out, &render_jsonl(&dictations))?;
    println!("synthesized {} dictation(s)", dictations.len());
    manifest.config = serde_json::json!({"scenarios": scenarios.len(), "style_pool": style_pool.len()});
    manifest.write()
}

pub fn cmd_export(dictations_path: &Path, out: &Path) -> CliResult<()> {
    let mut manifest = ManifestBuilder::new("synth export");
    manifest.input(dictations_path).output(out);

    let dictations: Vec<SyntheticDictation> = parse_jsonl(&read_text(dictations_path)?)?;
    let entries = export_for_labeling(&dictations)?;
    write_output(out, &render_jsonl(&entries))?;
    println!("exported {} labeling bundle line(s)", entries.len());
    manifest.config = serde_json::json!({"dictations": dictations.len()});
    manifest.write()
}
