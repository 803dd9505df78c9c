//! Subcommand implementations behind the `nbdoc` binary. Each command
//! returns a JSON report; `main` prints it as text or JSON.

pub mod args;

use std::io::Write;
use std::path::{Path, PathBuf};

use nbdoc_core::code::build_code_graph;
use nbdoc_core::corpus::{corpus_stats, extract_pairs, read_pairs_jsonl, split_corpus, write_pairs_jsonl, CorpusError};
use nbdoc_core::retriever::{load_kb, ApiEntry, KbError};
use nbdoc_core::summarizer::{bleu_a, load_model, save_model, train, ModelIoError, SummarizerModel, TrainError, TrainingConfig, DEFAULT_MAX_DECODE};
use nbdoc_core::{parse_notebook, serialize_notebook, CellKind, KnowledgeBase, NotebookDocument, OutputInfo, Provenance, Suggester, SuggestionKind};
use serde::Serialize;
use serde_json::{json, Value};

pub use args::{Approach, Cli, Command, KbCommand};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_MISSING: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{path}: not found")]
    Missing { path: PathBuf },
    #[error("{0}")]
    MissingArtifact(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Parse { .. } => EXIT_PARSE,
            CliError::Missing { .. } | CliError::MissingArtifact(_) => EXIT_MISSING,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Parse { .. } => "parse",
            CliError::Missing { .. } | CliError::MissingArtifact(_) => "missing",
            CliError::Internal(_) => "internal",
        }
    }

    fn parse(path: &Path, message: impl ToString) -> Self {
        CliError::Parse {
            path: path.to_path_buf(),
            message: message.to_string(),
        }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        if e.kind() == std::io::ErrorKind::NotFound {
            CliError::Missing { path: path.to_path_buf() }
        } else {
            CliError::Internal(format!("{}: {e}", path.display()))
        }
    }
}

/// Command output: a JSON value plus the human rendering of it.
pub struct Report {
    pub json: Value,
    pub text: String,
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::io(path, e))
}

fn read_string(path: &Path) -> Result<String, CliError> {
    String::from_utf8(read(path)?).map_err(|e| CliError::parse(path, e))
}

/// Write through a temporary file in the target directory and rename it
/// into place, so readers never see a partial file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let fail = |e: std::io::Error| CliError::Internal(format!("writing {}: {e}", path.display()));
    std::fs::create_dir_all(dir).map_err(fail)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(bytes).map_err(fail)?;
    tmp.as_file().sync_all().map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

fn load_notebook(path: &Path) -> Result<NotebookDocument, CliError> {
    parse_notebook(&read(path)?).map_err(|e| CliError::parse(path, e))
}

fn model_error(path: &Path, e: ModelIoError) -> CliError {
    match e {
        ModelIoError::Io(io) => CliError::io(path, io),
        other => CliError::parse(path, other),
    }
}

pub fn open_model(path: &Path) -> Result<SummarizerModel, CliError> {
    load_model(path).map_err(|e| model_error(path, e))
}

pub fn open_kb(path: Option<&Path>) -> Result<KnowledgeBase, CliError> {
    match path {
        None => Ok(KnowledgeBase::seed()),
        Some(p) => load_kb(p).map_err(|e| match e {
            KbError::Io(io) => CliError::io(p, io),
            other => CliError::parse(p, other),
        }),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Insertion {
    pub anchor: String,
    pub id: String,
    pub kind: SuggestionKind,
    pub placement: nbdoc_core::Placement,
    pub text: String,
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (std::path::absolute(a), std::path::absolute(b)) {
        (Ok(a), Ok(b)) => a == b || a.canonicalize().ok().is_some_and(|ca| b.canonicalize().ok() == Some(ca)),
        _ => a == b,
    }
}

/// Insert one markdown cell per code cell, taken from the requested
/// generator (or the first available one in Deep, Query, Prompt order).
pub fn annotate_document(doc: &NotebookDocument, suggester: &Suggester, approach: Approach) -> (NotebookDocument, Vec<Insertion>) {
    let executed = doc.is_executed();
    let anchors: Vec<(String, String, OutputInfo)> = doc
        .cells
        .iter()
        .filter(|c| c.kind == CellKind::Code && !c.source.trim().is_empty())
        .map(|c| {
            let info = if executed {
                c.primary_output().map(|o| OutputInfo::Kind(o.kind)).unwrap_or(OutputInfo::Absent)
            } else {
                OutputInfo::Unknown
            };
            (c.id.clone(), c.source.clone(), info)
        })
        .collect();
    let mut out = doc.clone();
    let mut inserted = Vec::new();
    for (anchor, source, info) in anchors {
        let resp = suggester.compute(&source, info);
        let pick = match approach {
            Approach::All => resp.candidates.first(),
            Approach::Deep => resp.candidates.iter().find(|c| c.kind == SuggestionKind::Deep),
            Approach::Query => resp.candidates.iter().find(|c| c.kind == SuggestionKind::Query),
            Approach::Prompt => resp.candidates.iter().find(|c| c.kind == SuggestionKind::Prompt),
        };
        let Some(c) = pick else { continue };
        let (next, id) = out
            .insert_markdown(&anchor, &c.text, c.placement, Some(Provenance::T))
            .expect("anchor is a code cell of this document");
        out = next;
        inserted.push(Insertion {
            anchor,
            id,
            kind: c.kind,
            placement: c.placement,
            text: c.text.clone(),
        });
    }
    (out, inserted)
}

pub fn cmd_annotate(a: &args::AnnotateArgs) -> Result<Report, CliError> {
    if same_file(&a.input, &a.out) && !a.overwrite {
        return Err(CliError::Usage("output path equals input path; pass --overwrite to replace it".into()));
    }
    let doc = load_notebook(&a.input)?;
    let model = match (&a.model, a.approach.needs_model()) {
        (Some(p), _) => Some(open_model(p)?),
        (None, true) => return Err(CliError::MissingArtifact(format!("approach {} needs --model", a.approach.as_str()))),
        (None, false) => None,
    };
    let suggester = Suggester::new(model, open_kb(a.kb.as_deref())?);
    let (annotated, inserted) = annotate_document(&doc, &suggester, a.approach);
    atomic_write(&a.out, &serialize_notebook(&annotated))?;
    tracing::info!(inserted = inserted.len(), out = %a.out.display(), "annotated");
    let mut text = format!("{} markdown cells inserted into {}\n", inserted.len(), a.out.display());
    for i in &inserted {
        text.push_str(&format!("  {:<10} {:?}/{:?}: {}\n", i.anchor, i.kind, i.placement, i.text));
    }
    Ok(Report {
        json: json!({"out": a.out, "inserted": inserted.len(), "cells": inserted}),
        text,
    })
}

fn load_pairs(path: &Path) -> Result<Vec<nbdoc_core::corpus::TrainingPair>, CliError> {
    read_pairs_jsonl(&read_string(path)?).map_err(|e| CliError::parse(path, e))
}

fn corpus_error(path: &Path, e: CorpusError) -> CliError {
    CliError::parse(path, e)
}

pub fn cmd_train(a: &args::TrainArgs) -> Result<Report, CliError> {
    let pairs = load_pairs(&a.corpus)?;
    let split = split_corpus(&pairs, a.seed).map_err(|e| corpus_error(&a.corpus, e))?;
    let defaults = TrainingConfig::default();
    let config = TrainingConfig {
        epochs: a.epochs,
        batch_size: a.batch,
        patience: a.patience,
        learning_rate: a.lr.unwrap_or(defaults.learning_rate),
        grad_clip: a.grad_clip.unwrap_or(defaults.grad_clip),
        seed: a.seed,
        d: a.d.unwrap_or(defaults.d),
        hops: a.hops.unwrap_or(defaults.hops),
        ..defaults
    };
    let (model, report) = train(&split, &config).map_err(|e| match e {
        TrainError::InvalidConfig(m) => CliError::Usage(m),
        other => CliError::Internal(other.to_string()),
    })?;
    let tmp_dir = a.out.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(tmp_dir).map_err(|e| CliError::io(tmp_dir, e))?;
    let tmp = tempfile::NamedTempFile::new_in(tmp_dir).map_err(|e| CliError::io(tmp_dir, e))?;
    save_model(&model, tmp.path()).map_err(|e| model_error(tmp.path(), e))?;
    tmp.persist(&a.out).map_err(|e| CliError::Internal(e.to_string()))?;
    let report_path = a.report.clone().unwrap_or_else(|| a.out.with_extension("report.json"));
    let report_json = serde_json::to_vec_pretty(&report).map_err(|e| CliError::Internal(e.to_string()))?;
    atomic_write(&report_path, &report_json)?;
    let best = report.epochs.iter().find(|r| r.epoch == report.best_epoch).expect("best epoch is recorded");
    Ok(Report {
        json: json!({
            "model": a.out,
            "report": report_path,
            "pairs": {"train": split.train.len(), "valid": split.valid.len(), "test": split.test.len()},
            "epochs_run": report.epochs.len(),
            "best_epoch": report.best_epoch,
            "best_valid_token_accuracy": best.valid_token_accuracy,
            "stopped_early": report.stopped_early,
        }),
        text: format!(
            "trained on {} pairs for {} epochs; best epoch {} (valid token accuracy {:.4}); model {} report {}\n",
            split.train.len(),
            report.epochs.len(),
            report.best_epoch,
            best.valid_token_accuracy,
            a.out.display(),
            report_path.display()
        ),
    })
}

fn tokenized_lines(path: &Path) -> Result<Vec<Vec<String>>, CliError> {
    Ok(read_string(path)?.lines().map(|l| l.split_whitespace().map(String::from).collect()).collect())
}

pub fn cmd_eval(a: &args::EvalArgs) -> Result<Report, CliError> {
    let (candidates, references, source) = match (&a.model, &a.corpus, &a.candidates, &a.references) {
        (Some(m), Some(c), None, None) => {
            let model = open_model(m)?;
            let pairs = load_pairs(c)?;
            let split = split_corpus(&pairs, a.seed).map_err(|e| corpus_error(c, e))?;
            let test = if a.all { pairs } else { split.test };
            let cands: Vec<Vec<String>> = test
                .iter()
                .map(|p| model.greedy_decode(&build_code_graph(&p.source, model.t_max, model.a_max), DEFAULT_MAX_DECODE))
                .collect();
            let refs = test.into_iter().map(|p| p.target).collect();
            (cands, refs, if a.all { "corpus" } else { "test split" })
        }
        (None, None, Some(c), Some(r)) => (tokenized_lines(c)?, tokenized_lines(r)?, "files"),
        _ => return Err(CliError::Usage("eval needs either --model with --corpus, or --candidates with --references".into())),
    };
    let score = bleu_a(&candidates, &references).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(Report {
        json: json!({"bleu_a": score, "sentences": candidates.len(), "source": source}),
        text: format!("BLEU-a {score:.2} over {} sentences ({source})\n", candidates.len()),
    })
}

/// Notebook files under `dir`, sorted, with ids relative to it.
pub fn notebook_files(dir: &Path) -> Result<Vec<(String, PathBuf)>, CliError> {
    if !dir.is_dir() {
        return Err(CliError::Missing { path: dir.to_path_buf() });
    }
    let mut files = Vec::new();
    for entry in walkdir::WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| CliError::Internal(e.to_string()))?;
        let p = entry.path();
        if entry.file_type().is_file() && p.extension().is_some_and(|e| e == "ipynb") {
            let rel = p.strip_prefix(dir).unwrap_or(p).with_extension("");
            files.push((rel.to_string_lossy().replace('\\', "/"), p.to_path_buf()));
        }
    }
    Ok(files)
}

fn load_corpus(dir: &Path, skip_invalid: bool) -> Result<(Vec<(String, NotebookDocument)>, usize), CliError> {
    let mut docs = Vec::new();
    let mut skipped = 0;
    for (id, path) in notebook_files(dir)? {
        match load_notebook(&path) {
            Ok(d) => docs.push((id, d)),
            Err(e) if skip_invalid && matches!(e, CliError::Parse { .. }) => {
                tracing::warn!(error = %e, "skipping notebook");
                skipped += 1;
            }
            Err(e) => return Err(e),
        }
    }
    Ok((docs, skipped))
}

pub fn cmd_stats(a: &args::CorpusArgs) -> Result<Report, CliError> {
    let (docs, skipped) = load_corpus(&a.corpus, a.skip_invalid)?;
    let stats = corpus_stats(docs.iter().map(|(id, d)| (id.as_str(), d))).map_err(|e| corpus_error(&a.corpus, e))?;
    let bytes = serde_json::to_vec_pretty(&stats).map_err(|e| CliError::Internal(e.to_string()))?;
    atomic_write(&a.out, &bytes)?;
    let m = &stats.medians;
    Ok(Report {
        json: json!({"out": a.out, "notebooks": docs.len(), "skipped": skipped, "medians": m}),
        text: format!(
            "{} notebooks ({} skipped); medians: cells {}, code {}, markdown {}, markdown words {}; wrote {}\n",
            docs.len(),
            skipped,
            m.total_cells,
            m.code_cells,
            m.markdown_cells,
            m.markdown_words,
            a.out.display()
        ),
    })
}

pub fn cmd_extract_pairs(a: &args::CorpusArgs) -> Result<Report, CliError> {
    let (docs, skipped) = load_corpus(&a.corpus, a.skip_invalid)?;
    let pairs: Vec<_> = docs.iter().flat_map(|(id, d)| extract_pairs(d, id)).collect();
    atomic_write(&a.out, write_pairs_jsonl(&pairs).as_bytes())?;
    Ok(Report {
        json: json!({"out": a.out, "notebooks": docs.len(), "skipped": skipped, "pairs": pairs.len()}),
        text: format!("{} pairs from {} notebooks; wrote {}\n", pairs.len(), docs.len(), a.out.display()),
    })
}

pub fn cmd_kb_validate(path: &Path) -> Result<Report, CliError> {
    let kb = open_kb(Some(path))?;
    let libraries: std::collections::BTreeSet<&str> = kb.entries().iter().map(|e| e.library.as_str()).collect();
    Ok(Report {
        json: json!({"path": path, "entries": kb.len(), "libraries": libraries}),
        text: format!("{}: {} entries across {} libraries, no duplicates\n", path.display(), kb.len(), libraries.len()),
    })
}

#[derive(Debug, serde::Deserialize)]
struct CsvRow {
    library: String,
    qualified_name: String,
    description: String,
}

/// Build a KB from a CSV with `library,qualified_name,description` columns,
/// appended after the entries of `base` if given.
pub fn cmd_kb_build(a: &args::KbBuildArgs) -> Result<Report, CliError> {
    let mut entries = match &a.base {
        Some(b) => open_kb(Some(b))?.entries().to_vec(),
        None => Vec::new(),
    };
    let base_len = entries.len();
    let bytes = read(&a.csv)?;
    let mut reader = csv::Reader::from_reader(bytes.as_slice());
    for (i, row) in reader.deserialize::<CsvRow>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| CliError::parse(&a.csv, e))?;
        let entry = ApiEntry::from_qualified(&row.library, &row.qualified_name, &row.description)
            .map_err(|m| CliError::parse(&a.csv, format!("line {line}: {m}")))?;
        entries.push(entry);
    }
    let added = entries.len() - base_len;
    let kb = KnowledgeBase::from_entries(entries).map_err(|e| CliError::parse(&a.csv, e))?;
    atomic_write(&a.out, kb.to_jsonl().as_bytes())?;
    Ok(Report {
        json: json!({"out": a.out, "entries": kb.len(), "added": added}),
        text: format!("{} entries ({} from CSV); wrote {}\n", kb.len(), added, a.out.display()),
    })
}

pub fn cmd_serve(a: &args::ServeArgs) -> Result<Report, CliError> {
    let mut config = match &a.config {
        Some(p) => nbdoc_service::ServiceConfig::from_file(p).map_err(|e| match e {
            nbdoc_service::config::ConfigError::Read { path, source } => CliError::io(&path, source),
            other => CliError::parse(p, other),
        })?,
        None => nbdoc_service::ServiceConfig::default(),
    }
    .with_env()
    .map_err(|e| CliError::Usage(e.to_string()))?;
    if let Some(m) = &a.model {
        config.model_path = Some(m.clone());
    }
    if let Some(k) = &a.kb {
        config.kb_path = Some(k.clone());
    }
    if let Some(r) = &a.root {
        config.notebook_root = r.clone();
    }
    if let Some(p) = a.port {
        config.port = p;
    }
    if let Some(h) = &a.host {
        config.host = h.clone();
    }
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Internal(e.to_string()))?;
    rt.block_on(nbdoc_service::serve(config.clone())).map_err(|e| {
        use nbdoc_service::StartupError as S;
        match e {
            S::Model(m) => model_error(config.model_path.as_deref().unwrap_or(Path::new("")), m),
            S::Kb(KbError::Io(io)) => CliError::io(config.kb_path.as_deref().unwrap_or(Path::new("")), io),
            S::Kb(k) => CliError::parse(config.kb_path.as_deref().unwrap_or(Path::new("")), k),
            S::NotebookRoot(p) => CliError::Missing { path: p },
            other => CliError::Internal(other.to_string()),
        }
    })?;
    Ok(Report {
        json: json!({"stopped": true}),
        text: "stopped\n".into(),
    })
}

pub fn run(cli: &Cli) -> Result<Report, CliError> {
    match &cli.command {
        Command::Serve(a) => cmd_serve(a),
        Command::Annotate(a) => cmd_annotate(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Stats(a) => cmd_stats(a),
        Command::ExtractPairs(a) => cmd_extract_pairs(a),
        Command::Kb { command: KbCommand::Validate { path } } => cmd_kb_validate(path),
        Command::Kb { command: KbCommand::Build(a) } => cmd_kb_build(a),
    }
}
