//! clinex: clinical unstructured-to-structured extraction from the command
//! line.
//!
//! ```bash
//! clinex stats --corpus fixtures/stats/synur/corpus.jsonl
//! clinex extract-orders --transcripts visits/ --backend scripted:responses.json --out out.jsonl
//! clinex evaluate-orders --refs refs.jsonl --hyps out.jsonl --report report.md
//! clinex synth scenario --ontology ontology.json --backend http:<url> --seed 7 --count 20 --out s.jsonl
//! ```

mod appcfg;
mod commands;
mod errors;
mod extract;
mod manifest;
mod synthcmd;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use clinex::nurse::NursePipelineConfig;
use clinex::orders::{ExampleSelection, OrderRunConfig};
use clinex::synth::SynthConfig;

use appcfg::{make_backend, AppConfig};
use commands::{EvalOutputs, OutFormat, ReportTask};
use errors::{CliError, CliResult};

#[derive(Parser)]
#[command(
    name = "clinex",
    version,
    about = "Clinical transcript extraction: orders, flowsheet observations, scoring, synthetic dictations",
    arg_required_else_help = true
)]
struct Cli {
    /// Flat key=value config file; flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct BackendArgs {
    /// Chat backend: `http:<url>` or `scripted:<path>`.
    #[arg(long)]
    backend: Option<String>,

    /// Model identifier sent with each request.
    #[arg(long)]
    model_id: Option<String>,

    #[arg(long)]
    max_new_tokens: Option<u32>,

    #[arg(long)]
    temperature: Option<f64>,

    /// Concurrent in-flight request limit for HTTP backends.
    #[arg(long)]
    max_in_flight: Option<usize>,
}

impl BackendArgs {
    fn resolve(&self, file: Option<&PathBuf>) -> CliResult<AppConfig> {
        let mut config = AppConfig::default();
        if let Some(path) = file {
            config.apply_file(path)?;
        }
        if let Some(m) = &self.model_id {
            config.model_id = m.clone();
        }
        if let Some(n) = self.max_new_tokens {
            config.max_new_tokens = n;
        }
        if let Some(t) = self.temperature {
            config.temperature = t;
        }
        if let Some(k) = self.max_in_flight {
            config.max_in_flight = k;
        }
        Ok(config)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SelectionArg {
    RandomSeeded,
    Retrieval,
}

#[derive(Subcommand)]
enum Command {
    /// Corpus statistics: document count, average token length, gold items.
    Stats {
        /// Directory of .tsv transcripts or a .jsonl corpus file.
        #[arg(long)]
        corpus: PathBuf,
        /// Gold JSONL ({transcript_id, orders|observations} lines).
        #[arg(long)]
        gold: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutFormat::Md)]
        format: OutFormat,
    },

    /// Build and persist retrieval indexes.
    Index {
        #[command(subcommand)]
        action: IndexAction,
    },

    /// Extract medical orders from doctor-patient transcripts.
    ExtractOrders {
        #[arg(long)]
        transcripts: PathBuf,
        /// Worked examples per prompt (0 = zero-shot).
        #[arg(long, default_value_t = 0)]
        shots: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Training pool (JSONL few-shot examples); required when shots > 0.
        #[arg(long)]
        train: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = SelectionArg::RandomSeeded)]
        selection: SelectionArg,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        backend: BackendArgs,
    },

    /// Extract flowsheet observations from nurse dictations.
    ExtractObservations {
        #[arg(long)]
        schema: PathBuf,
        #[arg(long)]
        transcripts: PathBuf,
        /// Prebuilt row index (see `index build`); built on the fly if absent.
        #[arg(long)]
        index: Option<PathBuf>,
        /// Few-shot example database (JSONL).
        #[arg(long)]
        examples: Option<PathBuf>,
        /// Examples retrieved per segment (0 = zero-shot).
        #[arg(long, default_value_t = 3)]
        shots: usize,
        /// Candidate schema rows kept per segment.
        #[arg(long = "top-n", default_value_t = 25)]
        top_n: usize,
        #[arg(long, default_value_t = 1)]
        segment_retries: usize,
        #[arg(long, default_value_t = 0.2)]
        fuzzy_threshold: f64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        backend: BackendArgs,
    },

    /// Score extracted orders against references.
    EvaluateOrders {
        #[arg(long)]
        refs: PathBuf,
        #[arg(long)]
        hyps: PathBuf,
        /// Markdown report output.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Per-document scores (JSONL) for later `report` regrouping.
        #[arg(long)]
        scores: Option<PathBuf>,
        #[arg(long, default_value = "run")]
        label: String,
        #[arg(long, value_enum, default_value_t = OutFormat::Md)]
        format: OutFormat,
    },

    /// Score extracted observations against references.
    EvaluateObservations {
        #[arg(long)]
        refs: PathBuf,
        #[arg(long)]
        hyps: PathBuf,
        /// Validate both sides against this flowsheet schema first.
        #[arg(long)]
        schema: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        scores: Option<PathBuf>,
        #[arg(long, default_value = "run")]
        label: String,
        #[arg(long, value_enum, default_value_t = OutFormat::Md)]
        format: OutFormat,
    },

    /// Regroup saved score files into one comparison table.
    Report {
        /// Score JSONL file (repeatable, paired with --label).
        #[arg(long, required = true)]
        scores: Vec<PathBuf>,
        /// Row label for the matching --scores file.
        #[arg(long, required = true)]
        label: Vec<String>,
        #[arg(long, value_enum, default_value_t = ReportTask::Orders)]
        task: ReportTask,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutFormat::Md)]
        format: OutFormat,
    },

    /// Synthetic dictation generation steps.
    Synth {
        #[command(subcommand)]
        step: SynthStep,
    },
}

#[derive(Subcommand)]
enum IndexAction {
    /// Index flowsheet schema rows (folding in example verbalizations).
    Build {
        #[arg(long)]
        schema: PathBuf,
        #[arg(long)]
        examples: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum SynthStep {
    /// Mine (concept, span) observations from seed dictations.
    Mine {
        #[arg(long)]
        seeds: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        backend: BackendArgs,
    },
    /// Consolidate mined observations into a typed ontology.
    Consolidate {
        #[arg(long)]
        mined: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        backend: BackendArgs,
    },
    /// Propose additional concepts (a review queue, never auto-merged).
    Expand {
        #[arg(long)]
        ontology: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        backend: BackendArgs,
    },
    /// Generate validated patient scenarios.
    Scenario {
        #[arg(long)]
        ontology: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        count: usize,
        /// Concepts sampled into each prompt (0 = whole ontology).
        #[arg(long, default_value_t = 40)]
        subset_size: usize,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        backend: BackendArgs,
    },
    /// Turn scenarios into dictations conditioned on style examples.
    Dictate {
        #[arg(long)]
        scenarios: PathBuf,
        /// Style-example corpus (directory of .tsv or .jsonl).
        #[arg(long)]
        style: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        backend: BackendArgs,
    },
    /// Export dictations as a human-labeling bundle.
    Export {
        #[arg(long)]
        dictations: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn synth_config(app: &AppConfig, subset_size: Option<usize>) -> SynthConfig {
    SynthConfig {
        model_id: app.model_id.clone(),
        max_new_tokens: app.max_new_tokens,
        temperature: app.temperature,
        scenario_subset_size: subset_size.unwrap_or(40),
        ..SynthConfig::default()
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Stats { corpus, gold, format } => commands::cmd_stats(&corpus, gold.as_deref(), format),

        Command::Index { action } => match action {
            IndexAction::Build { schema, examples, out } => {
                commands::cmd_index_build(&schema, examples.as_deref(), &out)
            }
        },

        Command::ExtractOrders { transcripts, shots, seed, train, selection, out, backend } => {
            if shots > 0 && train.is_none() {
                return Err(CliError::Usage("--shots > 0 needs --train".into()));
            }
            let app = backend.resolve(cli.config.as_ref())?;
            let chat = make_backend(backend.backend.as_deref(), &app)?;
            let config = OrderRunConfig {
                shots,
                example_selection: match selection {
                    SelectionArg::RandomSeeded => ExampleSelection::RandomSeeded,
                    SelectionArg::Retrieval => ExampleSelection::Retrieval,
                },
                seed,
                max_new_tokens: app.max_new_tokens,
                model_id: app.model_id.clone(),
                temperature: app.temperature,
            };
            extract::cmd_extract_orders(
                chat.as_ref(),
                &extract::ExtractOrdersArgs {
                    transcripts: &transcripts,
                    train: train.as_deref(),
                    out: &out,
                    config,
                },
            )
        }

        Command::ExtractObservations {
            schema,
            transcripts,
            index,
            examples,
            shots,
            top_n,
            segment_retries,
            fuzzy_threshold,
            out,
            backend,
        } => {
            let app = backend.resolve(cli.config.as_ref())?;
            let chat = make_backend(backend.backend.as_deref(), &app)?;
            let config = NursePipelineConfig {
                top_n_rows: top_n,
                n_examples: shots,
                segment_retries,
                fuzzy_threshold,
                model_id: app.model_id.clone(),
                max_new_tokens: app.max_new_tokens,
                temperature: app.temperature,
            };
            extract::cmd_extract_observations(
                chat.as_ref(),
                &extract::ExtractObservationsArgs {
                    schema: &schema,
                    transcripts: &transcripts,
                    index: index.as_deref(),
                    examples: examples.as_deref(),
                    out: &out,
                    config,
                },
            )
        }

        Command::EvaluateOrders { refs, hyps, report, csv, scores, label, format } => {
            commands::cmd_evaluate_orders(
                &refs,
                &hyps,
                &EvalOutputs {
                    report: report.as_deref(),
                    csv: csv.as_deref(),
                    scores: scores.as_deref(),
                    label,
                    format,
                },
            )
        }

        Command::EvaluateObservations { refs, hyps, schema, report, csv, scores, label, format } => {
            commands::cmd_evaluate_observations(
                &refs,
                &hyps,
                schema.as_deref(),
                &EvalOutputs {
                    report: report.as_deref(),
                    csv: csv.as_deref(),
                    scores: scores.as_deref(),
                    label,
                    format,
                },
            )
        }

        Command::Report { scores, label, task, out, csv, format } => {
            commands::cmd_report(&scores, &label, task, out.as_deref(), csv.as_deref(), format)
        }

        Command::Synth { step } => match step {
            SynthStep::Mine { seeds, out, backend } => {
                let app = backend.resolve(cli.config.as_ref())?;
                let chat = make_backend(backend.backend.as_deref(), &app)?;
                synthcmd::cmd_mine(chat.as_ref(), &seeds, &out, &synth_config(&app, None))
            }
            SynthStep::Consolidate { mined, out, backend } => {
                let app = backend.resolve(cli.config.as_ref())?;
                let chat = make_backend(backend.backend.as_deref(), &app)?;
                synthcmd::cmd_consolidate(chat.as_ref(), &mined, &out, &synth_config(&app, None))
            }
            SynthStep::Expand { ontology, out, backend } => {
                let app = backend.resolve(cli.config.as_ref())?;
                let chat = make_backend(backend.backend.as_deref(), &app)?;
                synthcmd::cmd_expand(chat.as_ref(), &ontology, &out, &synth_config(&app, None))
            }
            SynthStep::Scenario { ontology, seed, count, subset_size, out, backend } => {
                let app = backend.resolve(cli.config.as_ref())?;
                let chat = make_backend(backend.backend.as_deref(), &app)?;
                synthcmd::cmd_scenario(
                    chat.as_ref(),
                    &ontology,
                    &out,
                    seed,
                    count,
                    &synth_config(&app, Some(subset_size)),
                )
            }
            SynthStep::Dictate { scenarios, style, seed, out, backend } => {
                let app = backend.resolve(cli.config.as_ref())?;
                let chat = make_backend(backend.backend.as_deref(), &app)?;
                synthcmd::cmd_dictate(
                    chat.as_ref(),
                    &scenarios,
                    &style,
                    &out,
                    seed,
                    &synth_config(&app, None),
                )
            }
            SynthStep::Export { dictations, out } => synthcmd::cmd_export(&dictations, &out),
        },
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {}", e.message());
        std::process::exit(e.exit_code());
    }
}
