//! Command-line surface.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use spidereval_core::corpus::{emit_chat_corpus, emit_skeleton_corpus, CorpusStats};
use spidereval_core::dataset::{load_dataset_file, Dataset, HardnessSummary, Quarantined};
use spidereval_core::hardness::{classify_hardness, HardnessProfile};
use spidereval_core::sql::{canonicalize, diff, parse, parse_lenient, to_sql};
use spidereval_core::sql::joins::detect_conditionless_join;
use spidereval_pipeline::transcript::{read_transcripts, write_transcripts};
use spidereval_pipeline::{
    run_examples, ChatTransport, EndpointRole, Endpoints, FinalVerdict, HttpTransport, ModelEndpoint,
    PipelineTranscript, RecordingTransport, ReplayStore, TransportError, TransportFailureKind,
};

use crate::config::{Config, ResolvedEndpoint};
use crate::error::CliError;
use crate::report::{EvalReport, ReportMeta, RunInfo};
use crate::score::{evaluation_set, score};
use crate::triage::{triage_transcripts, TriageRecord};

#[derive(Debug, Parser)]
#[command(name = "spidereval", version, about = "Text-to-SQL evaluation harness over Spider-format data")]
pub struct Cli {
    /// TOML config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Log more (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct DatasetArgs {
    /// Dataset root (tables.json, database/), or a split file inside one.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// `dev` or `train`.
    #[arg(long)]
    pub split: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CorpusKind {
    Skeleton,
    Chat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Markdown,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load a split, classify hardness and list quarantined examples.
    Ingest {
        #[command(flatten)]
        dataset: DatasetArgs,
        /// Write the summary here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a fine-tuning corpus in JSONL.
    EmitCorpus {
        #[arg(value_enum)]
        kind: CorpusKind,
        #[command(flatten)]
        dataset: DatasetArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the synthesis pipeline and write transcripts.
    Run {
        #[command(flatten)]
        dataset: DatasetArgs,
        /// Answer model requests from this replay directory; no network.
        #[arg(long, conflicts_with = "record")]
        replay: Option<PathBuf>,
        /// Store every live response in this replay directory.
        #[arg(long)]
        record: Option<PathBuf>,
        /// Only the first N examples.
        #[arg(long)]
        limit: Option<usize>,
        /// Only examples on this database.
        #[arg(long)]
        db: Option<String>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score transcripts and write markdown and JSON reports.
    Evaluate {
        #[command(flatten)]
        dataset: DatasetArgs,
        #[arg(long)]
        transcripts: PathBuf,
        /// Score only the first N examples.
        #[arg(long)]
        limit: Option<usize>,
        /// Directory receiving report.md, report.json, their metadata and triage.jsonl.
        #[arg(long, default_value = "reports")]
        out_dir: PathBuf,
    },
    /// Triage every incorrect final query.
    Triage {
        #[command(flatten)]
        dataset: DatasetArgs,
        #[arg(long)]
        transcripts: PathBuf,
        #[arg(long)]
        limit: Option<usize>,
        /// JSONL output; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render one report.
    Report {
        #[command(flatten)]
        dataset: DatasetArgs,
        #[arg(long)]
        transcripts: PathBuf,
        #[arg(long)]
        limit: Option<usize>,
        #[arg(long, value_enum, default_value = "markdown")]
        format: ReportFormat,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Show how a query parses, canonicalizes and compares.
    DebugAst {
        #[command(flatten)]
        dataset: DatasetArgs,
        #[arg(long)]
        db: String,
        sql: String,
        /// Also diff against this gold query.
        #[arg(long)]
        gold: Option<String>,
    },
}

fn load_dataset(config: &Config, args: &DatasetArgs) -> Result<Dataset, CliError> {
    let split = match &args.split {
        Some(s) => {
            let mut c = config.clone();
            c.dataset.split = Some(s.clone());
            c.split()?
        }
        None => config.split()?,
    };
    let given = args.dataset.clone().or_else(|| config.dataset.root.clone());
    let Some(path) = given else {
        return Err(crate::config::ConfigError::Invalid("no dataset given (--dataset or dataset.root)".into()).into());
    };
    let (root, file) = if path.is_file() {
        let root = path.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf);
        (root, path)
    } else {
        let file = match (&config.dataset.split_file, args.split.is_some()) {
            (Some(f), false) => f.clone(),
            _ => path.join(split.file_name()),
        };
        (path, file)
    };
    let ds = load_dataset_file(&root, &file, split)?;
    log::info!(
        "loaded {} examples from {} ({} quarantined)",
        ds.examples.len(),
        file.display(),
        ds.quarantined.len()
    );
    Ok(ds)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(CliError::io(parent))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(CliError::io(path))?))
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => {
            let mut w = create(p)?;
            w.write_all(text.as_bytes()).and_then(|_| w.flush()).map_err(CliError::io(p))
        }
        None => io::stdout().write_all(text.as_bytes()).map_err(CliError::io("<stdout>")),
    }
}

fn meta_path(report: &Path) -> PathBuf {
    let mut name = report.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    report.with_file_name(name)
}

fn write_meta(report: &Path) -> Result<(), CliError> {
    let meta = ReportMeta {
        generated_at_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        tool_version: env!("CARGO_PKG_VERSION"),
        command: std::env::args().collect(),
    };
    let text = serde_json::to_string_pretty(&meta).expect("metadata serializes") + "\n";
    write_text(Some(&meta_path(report)), &text)
}

#[derive(Serialize)]
struct IngestSummary<'a> {
    root: String,
    split_file: &'static str,
    total: usize,
    loaded: usize,
    hardness: &'a HardnessSummary,
    quarantined: &'a [Quarantined],
}

fn ingest(config: &Config, args: &DatasetArgs, out: Option<&Path>) -> Result<(), CliError> {
    let ds = load_dataset(config, args)?;
    let hardness = ds.hardness_summary();
    let summary = IngestSummary {
        root: ds.root.display().to_string(),
        split_file: ds.split.file_name(),
        total: ds.total(),
        loaded: ds.examples.len(),
        hardness: &hardness,
        quarantined: &ds.quarantined,
    };
    write_text(out, &(serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n"))
}

fn emit_corpus(config: &Config, kind: CorpusKind, args: &DatasetArgs, out: &Path) -> Result<(), CliError> {
    let ds = load_dataset(config, args)?;
    let mut w = create(out)?;
    let schema_of = |db: &str| ds.schema(db);
    let stats: CorpusStats = match kind {
        CorpusKind::Skeleton => emit_skeleton_corpus(&ds.examples, schema_of, &mut w),
        CorpusKind::Chat => emit_chat_corpus(&ds.examples, schema_of, &mut w),
    }
    .and_then(|s| w.flush().map(|_| s))
    .map_err(CliError::io(out))?;
    eprintln!("wrote {} records to {} ({} skipped)", stats.written, out.display(), stats.skipped);
    Ok(())
}

fn endpoint(role: EndpointRole, r: ResolvedEndpoint, transport: Arc<dyn ChatTransport>) -> ModelEndpoint {
    ModelEndpoint {
        role,
        model_name: r.model,
        sampling: r.sampling,
        transport,
    }
}

fn live_transport(
    config: &Config,
    r: &ResolvedEndpoint,
    record: Option<&Path>,
) -> Result<Arc<dyn ChatTransport>, CliError> {
    let http = HttpTransport::new(&r.url, r.api_key_env.as_deref(), r.timeout, config.retry()).map_err(|e| match e {
        TransportError::MissingApiKey(_) => CliError::MissingApiKey(e.to_string()),
        other => CliError::Other(other.into()),
    })?;
    Ok(match record {
        Some(dir) => Arc::new(RecordingTransport::new(http, ReplayStore::new(dir))),
        None => Arc::new(http),
    })
}

pub fn build_endpoints(config: &Config, replay: Option<&Path>, record: Option<&Path>) -> Result<Endpoints, CliError> {
    let (g, c) = (config.generator(), config.corrector());
    let (gt, ct): (Arc<dyn ChatTransport>, Arc<dyn ChatTransport>) = match replay {
        Some(dir) => {
            let store = Arc::new(ReplayStore::new(dir));
            (store.clone(), store)
        }
        None => (live_transport(config, &g, record)?, live_transport(config, &c, record)?),
    };
    Ok(Endpoints {
        generator: endpoint(EndpointRole::Generator, g, gt),
        corrector: endpoint(EndpointRole::Corrector, c, ct),
    })
}

#[allow(clippy::too_many_arguments)]
fn run(
    config: &Config,
    args: &DatasetArgs,
    replay: Option<&Path>,
    record: Option<&Path>,
    limit: Option<usize>,
    db: Option<&str>,
    workers: Option<usize>,
    out: &Path,
) -> Result<(), CliError> {
    let ds = load_dataset(config, args)?;
    if let Some(db) = db {
        if !ds.schemas.contains_key(db) {
            return Err(CliError::UnknownDatabase(db.to_string()));
        }
    }
    let examples: Vec<_> = ds
        .examples
        .iter()
        .filter(|e| db.map_or(true, |d| e.db_id == d))
        .take(limit.unwrap_or(usize::MAX))
        .cloned()
        .collect();
    let endpoints = build_endpoints(config, replay, record)?;
    let workers = workers.unwrap_or(config.pipeline.workers).max(1);
    let transcripts = run_examples(&examples, &ds.schemas, &config.pipeline(), &endpoints, workers);
    write_transcripts(out, &transcripts)?;
    let count = |kind| transcripts.iter().filter(|t| t.has_transport_failure(kind)).count();
    let summary = |v| transcripts.iter().filter(|t| t.final_verdict == v).count();
    eprintln!(
        "wrote {} transcripts to {}: {} first shot, {} by example, {} by error, {} failed, {} faults",
        transcripts.len(),
        out.display(),
        summary(FinalVerdict::CorrectFirstShot),
        summary(FinalVerdict::CorrectedByExample),
        summary(FinalVerdict::CorrectedByError),
        summary(FinalVerdict::Failed),
        summary(FinalVerdict::Fault),
    );
    match (count(TransportFailureKind::Network), count(TransportFailureKind::ReplayMiss)) {
        (0, 0) => Ok(()),
        (0, n) => Err(CliError::ReplayMiss(n)),
        (n, _) => Err(CliError::Network(n)),
    }
}

struct Evaluation {
    report: EvalReport,
    triage: Vec<TriageRecord>,
}

fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(CliError::io(path))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn evaluate_transcripts(
    config: &Config,
    args: &DatasetArgs,
    transcripts_path: &Path,
    limit: Option<usize>,
) -> Result<Evaluation, CliError> {
    let ds = load_dataset(config, args)?;
    let transcripts: Vec<PipelineTranscript> = read_transcripts(transcripts_path)?;
    for t in &transcripts {
        if !ds.schemas.contains_key(&t.db_id) {
            return Err(CliError::UnknownDatabase(t.db_id.clone()));
        }
    }
    let examples = evaluation_set(&ds, &transcripts, limit);
    let scores = score(&transcripts, &examples, &ds, config.limits(), &config.equivalence())?;
    let incorrect = scores.incorrect_ids();
    let failed: Vec<&PipelineTranscript> = transcripts
        .iter()
        .filter(|t| incorrect.binary_search(&t.example_id).is_ok())
        .collect();
    let triage = triage_transcripts(&ds, &failed, config.limits()).context("triage")?;
    let run = RunInfo {
        config_digest: config.digest(),
        generator_model: config.generator().model,
        corrector_model: config.corrector().model,
        transcripts_sha256: sha256_file(transcripts_path)?,
    };
    Ok(Evaluation {
        report: EvalReport::new(scores, &triage, run),
        triage,
    })
}

fn triage_jsonl(records: &[TriageRecord]) -> String {
    records
        .iter()
        .map(|r| serde_json::to_string(r).expect("triage records serialize") + "\n")
        .collect()
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let config = Config::load_or_default(cli.config.as_deref())?;
    match &cli.command {
        Command::Ingest { dataset, out } => ingest(&config, dataset, out.as_deref()),
        Command::EmitCorpus { kind, dataset, out } => emit_corpus(&config, *kind, dataset, out),
        Command::Run {
            dataset,
            replay,
            record,
            limit,
            db,
            workers,
            out,
        } => run(
            &config,
            dataset,
            replay.as_deref(),
            record.as_deref(),
            *limit,
            db.as_deref(),
            *workers,
            out,
        ),
        Command::Evaluate {
            dataset,
            transcripts,
            limit,
            out_dir,
        } => {
            let e = evaluate_transcripts(&config, dataset, transcripts, *limit)?;
            let md = out_dir.join("report.md");
            let json = out_dir.join("report.json");
            write_text(Some(&md), &e.report.to_markdown())?;
            write_meta(&md)?;
            write_text(Some(&json), &e.report.to_json())?;
            write_meta(&json)?;
            write_text(Some(&out_dir.join("triage.jsonl")), &triage_jsonl(&e.triage))?;
            let s = &e.report.scores;
            eprintln!(
                "execution accuracy {:.3} over {} examples ({} correct); reports in {}",
                s.overall,
                s.evaluated,
                s.correct,
                out_dir.display()
            );
            Ok(())
        }
        Command::Triage {
            dataset,
            transcripts,
            limit,
            out,
        } => {
            let e = evaluate_transcripts(&config, dataset, transcripts, *limit)?;
            write_text(out.as_deref(), &triage_jsonl(&e.triage))
        }
        Command::Report {
            dataset,
            transcripts,
            limit,
            format,
            out,
        } => {
            let e = evaluate_transcripts(&config, dataset, transcripts, *limit)?;
            let text = match format {
                ReportFormat::Markdown => e.report.to_markdown(),
                ReportFormat::Json => e.report.to_json(),
            };
            write_text(out.as_deref(), &text)?;
            match out {
                Some(p) => write_meta(p),
                None => Ok(()),
            }
        }
        Command::DebugAst { dataset, db, sql, gold } => debug_ast(&config, dataset, db, sql, gold.as_deref()),
    }
}

#[derive(Serialize)]
struct AstDump {
    strict_binding: Option<String>,
    canonical_sql: String,
    hardness: spidereval_core::hardness::Hardness,
    profile: HardnessProfile,
    conditionless_joins: Vec<spidereval_core::sql::joins::ConditionlessJoin>,
    #[serde(skip_serializing_if = "Option::is_none")]
    diff_against_gold: Option<spidereval_core::sql::diff::AstDiff>,
}

fn debug_ast(config: &Config, args: &DatasetArgs, db: &str, sql: &str, gold: Option<&str>) -> Result<(), CliError> {
    let ds = load_dataset(config, args)?;
    let schema = ds.schema(db).ok_or_else(|| CliError::UnknownDatabase(db.to_string()))?;
    let strict = parse(sql, schema).err().map(|e| e.to_string());
    let ast = parse_lenient(sql, schema).map_err(|e| anyhow::anyhow!("query does not parse: {e}"))?;
    let canonical = canonicalize(&ast);
    let diff_against_gold = match gold {
        Some(g) => {
            let g = parse_lenient(g, schema).map_err(|e| anyhow::anyhow!("gold query does not parse: {e}"))?;
            Some(diff(&canonical, &canonicalize(&g)))
        }
        None => None,
    };
    let dump = AstDump {
        strict_binding: strict,
        canonical_sql: to_sql(canonical.ast()),
        hardness: classify_hardness(&ast),
        profile: HardnessProfile::of(&ast),
        conditionless_joins: detect_conditionless_join(&ast),
        diff_against_gold,
    };
    write_text(None, &(serde_json::to_string_pretty(&dump).expect("dump serializes") + "\n"))
}
