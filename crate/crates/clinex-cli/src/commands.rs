//! Non-LLM commands: corpus stats, index building, evaluation, reports.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use clinex::corpus::io::{
    load_observation_sets, load_order_sets, load_transcript_corpus, render_jsonl,
};
use clinex::corpus::{corpus_stats, io::load_flowsheet_schema, Source};
use clinex::eval::{
    evaluate_orders, render_obs_report, render_order_report, score_observations, ObsScores,
    OrderScores, ReportFormat,
};
use clinex::retrieval::{build_index, save_index, schema_row_docs};

use crate::errors::{CliError, CliResult};
use crate::manifest::ManifestBuilder;

pub fn write_output(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::Run(format!("{}: {e}", path.display())))
}

fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Format(format!("{}: {e}", path.display())))
}

/// Count gold items in a JSONL gold file; the per-line key ("orders" or
/// "observations") picks the task.
fn count_gold(path: &Path) -> CliResult<usize> {
    let text = read_text(path)?;
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    let probe: serde_json::Value = serde_json::from_str(first)
        .map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?;
    if probe.get("orders").is_some() {
        Ok(load_order_sets(path)?.iter().map(|s| s.orders.len()).sum())
    } else if probe.get("observations").is_some() {
        Ok(load_observation_sets(path)?.iter().map(|s| s.observations.len()).sum())
    } else {
        Err(CliError::Format(format!(
            "{}: gold lines need an \"orders\" or \"observations\" field",
            path.display()
        )))
    }
}

/// Stdout rendering for the printing commands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutFormat {
    Md,
    Csv,
    Jsonl,
}

pub fn cmd_stats(corpus: &Path, gold: Option<&Path>, format: OutFormat) -> CliResult<()> {
    let documents = load_transcript_corpus(corpus, Source::Other)?;
    let n_gold = gold.map(count_gold).transpose()?;
    let stats = corpus_stats(&documents, n_gold);
    match format {
        OutFormat::Md => {
            println!("| Corpus | Documents | AVG length | Gold items |");
            println!("|---|---|---|---|");
            println!(
                "| {} | {} | {:.1} | {} |",
                corpus.display(),
                stats.n_documents,
                stats.avg_length,
                stats.n_gold_items
            );
        }
        OutFormat::Csv => {
            println!("corpus,documents,avg_length,gold_items");
            println!(
                "{},{},{:.1},{}",
                corpus.display(),
                stats.n_documents,
                stats.avg_length,
                stats.n_gold_items
            );
        }
        OutFormat::Jsonl => {
            let mut line = serde_json::to_value(&stats).expect("stats serialize");
            line["corpus"] = serde_json::Value::String(corpus.display().to_string());
            println!("{line}");
        }
    }
    Ok(())
}

pub fn cmd_index_build(schema: &Path, examples: Option<&Path>, out: &Path) -> CliResult<()> {
    let mut manifest = ManifestBuilder::new("index build");
    manifest.input(schema).output(out);
    let schema_doc = load_flowsheet_schema(schema)?;
    let example_db = match examples {
        Some(path) => {
            manifest.input(path);
            clinex::corpus::io::load_examples(path)?
        }
        None => Vec::new(),
    };
    let docs = schema_row_docs(&schema_doc, if example_db.is_empty() { None } else { Some(&example_db) });
    let index = build_index(docs)?;
    save_index(&index, out)?;
    println!("indexed {} rows -> {}", index.len(), out.display());
    manifest.config = serde_json::json!({"rows": index.len()});
    manifest.write()
}

/// One scored document of an order run.
#[derive(Debug, Serialize, Deserialize)]
pub struct ScoredOrderDoc {
    pub transcript_id: String,
    #[serde(flatten)]
    pub scores: OrderScores,
}

/// One scored document of an observation run.
#[derive(Debug, Serialize, Deserialize)]
pub struct ScoredObsDoc {
    pub transcript_id: String,
    #[serde(flatten)]
    pub scores: ObsScores,
}

fn pair_by_id<T>(
    refs: Vec<(String, T)>,
    hyps: Vec<(String, T)>,
) -> CliResult<Vec<(String, T, T)>> {
    let mut hyp_map: std::collections::BTreeMap<String, T> = hyps.into_iter().collect();
    let mut pairs = Vec::new();
    let mut missing = Vec::new();
    let mut ref_ids = std::collections::BTreeSet::new();
    for (id, r) in refs {
        ref_ids.insert(id.clone());
        match hyp_map.remove(&id) {
            Some(h) => pairs.push((id, r, h)),
            None => missing.push(id),
        }
    }
    if !missing.is_empty() {
        return Err(CliError::Format(format!(
            "hypotheses missing for reference transcript(s): {}",
            missing.join(", ")
        )));
    }
    if let Some(extra) = hyp_map.keys().next() {
        return Err(CliError::Format(format!(
            "hypothesis transcript {extra:?} has no reference"
        )));
    }
    pairs.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(pairs)
}

pub struct EvalOutputs<'a> {
    pub report: Option<&'a Path>,
    pub csv: Option<&'a Path>,
    pub scores: Option<&'a Path>,
    pub label: String,
    pub format: OutFormat,
}

pub fn cmd_evaluate_orders(refs: &Path, hyps: &Path, outputs: &EvalOutputs) -> CliResult<()> {
    let ref_sets = load_order_sets(refs)?;
    let hyp_sets = load_order_sets(hyps)?;
    let pairs = pair_by_id(
        ref_sets.into_iter().map(|s| (s.transcript_id, s.orders)).collect(),
        hyp_sets.into_iter().map(|s| (s.transcript_id, s.orders)).collect(),
    )?;

    let scored: Vec<ScoredOrderDoc> = pairs
        .iter()
        .map(|(id, r, h)| ScoredOrderDoc {
            transcript_id: id.clone(),
            scores: evaluate_orders(r, h).1,
        })
        .collect();

    let groups = vec![(outputs.label.clone(), scored.iter().map(|d| d.scores).collect::<Vec<_>>())];
    let md = render_order_report(&groups, ReportFormat::Markdown);
    match outputs.format {
        OutFormat::Md => print!("{md}"),
        OutFormat::Csv => print!("{}", render_order_report(&groups, ReportFormat::Csv)),
        OutFormat::Jsonl => print!("{}", render_jsonl(&scored)),
    }

    let mut manifest = ManifestBuilder::new("evaluate-orders");
    manifest.input(refs).input(hyps);
    if let Some(path) = outputs.report {
        write_output(path, &md)?;
        manifest.output(path);
    }
    if let Some(path) = outputs.csv {
        write_output(path, &render_order_report(&groups, ReportFormat::Csv))?;
        manifest.output(path);
    }
    if let Some(path) = outputs.scores {
        write_output(path, &render_jsonl(&scored))?;
        manifest.output(path);
    }
    manifest.config = serde_json::json!({"label": outputs.label, "documents": scored.len()});
    manifest.write()
}

pub fn cmd_evaluate_observations(
    refs: &Path,
    hyps: &Path,
    schema: Option<&Path>,
    outputs: &EvalOutputs,
) -> CliResult<()> {
    let ref_sets = load_observation_sets(refs)?;
    let hyp_sets = load_observation_sets(hyps)?;

    if let Some(schema_path) = schema {
        let schema = load_flowsheet_schema(schema_path)?;
        for (name, sets) in [("refs", &ref_sets), ("hyps", &hyp_sets)] {
            for set in sets.iter() {
                for obs in &set.observations {
                    let row = schema.row(&obs.row_key).ok_or_else(|| {
                        CliError::Format(format!(
                            "{name} {}: row {:?} not in schema",
                            set.transcript_id, obs.row_key
                        ))
                    })?;
                    if !obs.conforms_to(row) {
                        return Err(CliError::Format(format!(
                            "{name} {}: value for {:?} is outside the row's domain",
                            set.transcript_id, obs.row_key
                        )));
                    }
                }
            }
        }
    }

    let pairs = pair_by_id(
        ref_sets.into_iter().map(|s| (s.transcript_id, s.observations)).collect(),
        hyp_sets.into_iter().map(|s| (s.transcript_id, s.observations)).collect(),
    )?;
    let scored: Vec<ScoredObsDoc> = pairs
        .iter()
        .map(|(id, r, h)| ScoredObsDoc { transcript_id: id.clone(), scores: score_observations(r, h) })
        .collect();

    let groups = vec![(outputs.label.clone(), scored.iter().map(|d| d.scores).collect::<Vec<_>>())];
    let md = render_obs_report(&groups, ReportFormat::Markdown);
    match outputs.format {
        OutFormat::Md => print!("{md}"),
        OutFormat::Csv => print!("{}", render_obs_report(&groups, ReportFormat::Csv)),
        OutFormat::Jsonl => print!("{}", render_jsonl(&scored)),
    }

    let mut manifest = ManifestBuilder::new("evaluate-observations");
    manifest.input(refs).input(hyps);
    if let Some(path) = outputs.report {
        write_output(path, &md)?;
        manifest.output(path);
    }
    if let Some(path) = outputs.csv {
        write_output(path, &render_obs_report(&groups, ReportFormat::Csv))?;
        manifest.output(path);
    }
    if let Some(path) = outputs.scores {
        write_output(path, &render_jsonl(&scored))?;
        manifest.output(path);
    }
    manifest.config = serde_json::json!({"label": outputs.label, "documents": scored.len()});
    manifest.write()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportTask {
    Orders,
    Observations,
}

/// Regroup previously written score files into one comparison table.
pub fn cmd_report(
    scores: &[PathBuf],
    labels: &[String],
    task: ReportTask,
    out: Option<&Path>,
    csv: Option<&Path>,
    format: OutFormat,
) -> CliResult<()> {
    if scores.is_empty() {
        return Err(CliError::Usage("report needs at least one --scores file".into()));
    }
    if format == OutFormat::Jsonl {
        return Err(CliError::Usage("report prints tables; use --format md or csv".into()));
    }
    if labels.len() != scores.len() {
        return Err(CliError::Usage(format!(
            "{} --scores file(s) but {} --label(s)",
            scores.len(),
            labels.len()
        )));
    }
    let (md, csv_text) = match task {
        ReportTask::Orders => {
            let mut groups = Vec::new();
            for (path, label) in scores.iter().zip(labels) {
                let docs: Vec<ScoredOrderDoc> = clinex::corpus::io::parse_jsonl(&read_text(path)?)?;
                groups.push((label.clone(), docs.into_iter().map(|d| d.scores).collect::<Vec<_>>()));
            }
            (
                render_order_report(&groups, ReportFormat::Markdown),
                render_order_report(&groups, ReportFormat::Csv),
            )
        }
        ReportTask::Observations => {
            let mut groups = Vec::new();
            for (path, label) in scores.iter().zip(labels) {
                let docs: Vec<ScoredObsDoc> = clinex::corpus::io::parse_jsonl(&read_text(path)?)?;
                groups.push((label.clone(), docs.into_iter().map(|d| d.scores).collect::<Vec<_>>()));
            }
            (
                render_obs_report(&groups, ReportFormat::Markdown),
                render_obs_report(&groups, ReportFormat::Csv),
            )
        }
    };
    match format {
        OutFormat::Csv => print!("{csv_text}"),
        _ => print!("{md}"),
    }
    let mut manifest = ManifestBuilder::new("report");
    for path in scores {
        manifest.input(path);
    }
    if let Some(path) = out {
        write_output(path, &md)?;
        manifest.output(path);
    }
    if let Some(path) = csv {
        write_output(path, &csv_text)?;
        manifest.output(path);
    }
    manifest.write()
}
