use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use digitwise::engagement_model::{
    concatenate, evaluate_horizons, parse_horizons, threshold_sweep, train_unified, write_plot_data, DEFAULT_HORIZONS,
};
use digitwise::event_store::{group_sessions, parse_event_log, read_sessions_dir, write_events_csv, write_sessions_dir, LogFormat};
use digitwise::pipeline::{read_json, write_json, write_records, FeatureCatalog, UserSplit};
use digitwise::synth_oracle::{generate, write_corpus, SynthConfig};
use digitwise::twin_registry::{store_twin_models, SensitivityDb};
use digitwise::whatif::{format_table, run_whatif, TraceLibrary, WhatIfScenario};
use digitwise::workflow::{process, stage_seed, train_twin_db, WorkflowConfig};
use digitwise_service::{AppState, DEFAULT_SESSION_CAP};

const CLEANED_EVENTS: &str = "cleaned_events.csv";

#[derive(Parser)]
#[command(name = "digitwise", version, about = "Per-user twins and what-if engagement prediction for video streaming")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a raw event log and store it grouped by session.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "csv")]
        format: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Clean, compress, balance, split and select features.
    Process {
        #[arg(long)]
        sessions: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        threshold: Option<f64>,
        /// Workflow configuration JSON; flags override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one twin per user and write the sensitivity database.
    TrainTwins {
        #[arg(long)]
        splits: PathBuf,
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        models: Option<PathBuf>,
    },
    /// Compare augmented and benchmark models across prediction horizons.
    Evaluate {
        /// Output directory of `process`.
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        sensitivities: PathBuf,
        #[arg(long, default_value = DEFAULT_HORIZONS)]
        horizons: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        report: PathBuf,
        /// Where to save the full-horizon unified model.
        #[arg(long)]
        model_out: Option<PathBuf>,
        /// Directory for MAE-vs-horizon and MAE-vs-threshold CSVs.
        #[arg(long)]
        plot_data: Option<PathBuf>,
    },
    /// Score a batch of scenarios.
    Whatif {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        sensitivities: PathBuf,
        /// JSON file with one scenario or a list.
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        traces: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: String,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        sensitivities: PathBuf,
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[arg(long)]
        traces: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_SESSION_CAP)]
        session_cap: usize,
    },
    /// Generate a synthetic population with known sensitivities.
    Synth {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn workflow(config: Option<&Path>, seed: u64) -> Result<WorkflowConfig> {
    let mut cfg: WorkflowConfig = match config {
        Some(p) => read_json(p).with_context(|| format!("reading {}", p.display()))?,
        None => WorkflowConfig::default(),
    };
    cfg.seed = seed;
    Ok(cfg)
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Ingest { input, format, out } => {
            let format: LogFormat = format.parse()?;
            let file = File::open(&input).with_context(|| format!("opening {}", input.display()))?;
            let (events, report) = parse_event_log(file, format)?;
            let sessions = group_sessions(events);
            write_sessions_dir(&out, &sessions)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Process { sessions, seed, threshold, config, out } => {
            let mut cfg = workflow(config.as_deref(), seed)?;
            if let Some(t) = threshold {
                cfg.threshold = t;
            }
            let (sessions, _) = read_sessions_dir(&sessions)?;
            let p = process(sessions, &cfg)?;
            fs::create_dir_all(&out)?;
            write_records(&out.join("records.csv"), &p.records)?;
            write_json(&out.join("catalog.json"), &p.catalog)?;
            write_json(&out.join("splits.json"), &p.splits)?;
            write_json(&out.join("clean_report.json"), &p.clean_report)?;
            write_json(&out.join("balance_report.json"), &p.balance_report)?;
            write_events_csv(p.sessions.values().flatten(), BufWriter::new(File::create(out.join(CLEANED_EVENTS))?))?;
            eprintln!(
                "{} sessions kept, {} users in splits, {} features selected",
                p.clean_report.sessions_out,
                p.splits.len(),
                p.catalog.selected().len()
            );
        }
        Command::TrainTwins { splits, catalog, seed, config, out, models } => {
            let cfg = workflow(config.as_deref(), seed)?;
            let splits: Vec<UserSplit> = read_json(&splits)?;
            let catalog: FeatureCatalog = read_json(&catalog)?;
            let (twins, db) = train_twin_db(&splits, &catalog.selected(), &cfg)?;
            db.store(&out)?;
            if let Some(dir) = models {
                store_twin_models(&dir, &twins)?;
            }
            let degenerate = twins.iter().filter(|t| t.degenerate).count();
            eprintln!("{} twins trained, {degenerate} degenerate", twins.len());
        }
        Command::Evaluate { records, sensitivities, horizons, seed, config, report, model_out, plot_data } => {
            let cfg = workflow(config.as_deref(), seed)?;
            let splits: Vec<UserSplit> = read_json(&records.join("splits.json"))?;
            let catalog: FeatureCatalog = read_json(&records.join("catalog.json"))?;
            let features = catalog.selected();
            let db = SensitivityDb::load(&sensitivities, Some(&features))?;
            let cleaned = records.join(CLEANED_EVENTS);
            let (events, _) = parse_event_log(File::open(&cleaned).with_context(|| format!("opening {}", cleaned.display()))?, LogFormat::Csv)?;
            let sessions = group_sessions(events);
            let horizons = parse_horizons(&horizons)?;
            let eval_seed = stage_seed(seed, "unified");
            let rep = evaluate_horizons(&sessions, &splits, &features, &db, &horizons, &cfg.tuning, eval_seed)?;
            write_json(&report, &rep)?;

            let train: Vec<_> = splits.iter().flat_map(|s| s.train.iter().cloned()).collect();
            let model = train_unified(&concatenate(&train, &features, &db)?, &db, &cfg.tuning, eval_seed)?;
            model.save(&model_out.unwrap_or_else(|| records.join("model.json")))?;

            if let Some(dir) = plot_data {
                let thresholds = [0.0, 0.01, 0.02, 0.05, 0.1, catalog.max_penalized_importance()];
                let sweep = threshold_sweep(&catalog, &splits, &thresholds, &cfg.tuning, eval_seed);
                write_plot_data(&dir, &rep, Some(&sweep))?;
            }
            for h in &rep.horizons {
                eprintln!("{:>5}  augmented {:.4}  benchmark {:.4}", h.horizon.to_string(), h.augmented.metrics.mae, h.benchmark.metrics.mae);
            }
        }
        Command::Whatif { model, sensitivities, scenario, traces, out } => {
            let model = digitwise::engagement_model::UnifiedModel::load(&model)?;
            let db = SensitivityDb::load(&sensitivities, Some(&model.features))?;
            let mut lib = TraceLibrary::bundled();
            if let Some(dir) = traces {
                lib.load_dir(&dir)?;
            }
            let raw: serde_json::Value = read_json(&scenario)?;
            let scenarios: Vec<WhatIfScenario> = match raw {
                serde_json::Value::Array(_) => serde_json::from_value(raw)?,
                one => vec![serde_json::from_value(one)?],
            };
            let result = run_whatif(&scenarios, &model, &db, &lib)?;
            print!("{}", format_table(&result));
            if let Some(path) = out {
                write_json(&path, &result)?;
            }
        }
        Command::Serve { bind, model, sensitivities, catalog, traces, session_cap } => {
            tracing_subscriber::fmt().with_writer(std::io::stderr).init();
            let state = AppState::load(&model, &sensitivities, catalog.as_deref(), traces.as_deref(), session_cap)?;
            tokio::runtime::Runtime::new()?.block_on(digitwise_service::serve(state, &bind))?;
        }
        Command::Synth { config, out } => {
            let cfg: SynthConfig = match config {
                Some(p) => read_json(&p)?,
                None => SynthConfig::default(),
            };
            let corpus = generate(&cfg)?;
            write_corpus(&out, &corpus)?;
            eprintln!("{} users, {} events", corpus.users.len(), corpus.events.len());
        }
    }
    Ok(())
}
