//! The `iscore` command line. Every subcommand except `run --serve` is a pure
//! function from arguments to exit code plus output, so tests can call it
//! without spawning a process.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Value};
use thiserror::Error;

use iscore::analysis::{self, AnalysisError, PropertyReport, Quantifier, Verdict, Word, WordMode};
use iscore::csp::{gen_subset_sum_score, CspError, SubsetSumInstance};
use iscore::encoding::{encode_score, normalize, EncodingError};
use iscore::engine::{compile, run_simulated, EngineError, Status, TriggerPolicy};
use iscore::persist::{self, to_canonical_json, PersistError};
use iscore::score::compile_hierarchy;
use iscore::stp::StpError;
use iscore::{Score, Time};

pub mod serve;

pub const EXIT_OK: i32 = 0;
pub const EXIT_UNPLAYABLE: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "iscore", version, about = "Check, analyze and perform interactive scores")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide playability and print a witness trace
    Check {
        score: PathBuf,
        /// Upper bound on event times for the finite-domain solver
        #[arg(long)]
        horizon: Option<Time>,
    },
    /// Minimum duration, simultaneity bounds and word containment
    Analyze {
        score: PathBuf,
        #[arg(long)]
        horizon: Option<Time>,
        /// Comma-separated action names
        #[arg(long, value_delimiter = ',')]
        word: Option<Vec<String>>,
        #[arg(long, value_enum, default_value_t = ModeArg::Scattered)]
        mode: ModeArg,
        #[arg(long, value_enum, default_value_t = QuantifierArg::Some)]
        quantifier: QuantifierArg,
    },
    /// Dump the event structure at some stage of compilation
    Encode {
        score: PathBuf,
        #[arg(long, value_enum, default_value_t = Form::Normal)]
        form: Form,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Execute the score, simulated from a trigger script or live over a socket
    Run {
        score: PathBuf,
        /// Deterministic run driven by --triggers (the default)
        #[arg(long, conflicts_with = "serve")]
        simulate: bool,
        /// JSON array of {"event": name, "time": t}
        #[arg(long, conflicts_with = "serve")]
        triggers: Option<PathBuf>,
        /// Serve the live protocol on 127.0.0.1
        #[arg(long)]
        serve: bool,
        #[arg(long, default_value_t = 7878)]
        port: u16,
        #[arg(long, value_enum, default_value_t = PolicyArg::Autofire)]
        policy: PolicyArg,
        /// Milliseconds per logical time unit (live mode)
        #[arg(long, default_value_t = 1)]
        unit_ms: u64,
        /// Clock speed factor (live mode)
        #[arg(long, default_value_t = 1.0)]
        speed: f64,
    },
    /// Generate scores
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
}

#[derive(Debug, Subcommand)]
pub enum GenKind {
    /// Score that is playable iff some subset of --set sums to --target
    SubsetSum {
        #[arg(long, value_delimiter = ',', required = true)]
        set: Vec<Time>,
        #[arg(long)]
        target: Time,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Scattered,
    Consecutive,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum QuantifierArg {
    Some,
    All,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Form {
    Raw,
    Normal,
    Dispatchable,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Format {
    Json,
    Dot,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PolicyArg {
    Autofire,
    Cancel,
}

impl From<PolicyArg> for TriggerPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Autofire => TriggerPolicy::autofire(),
            PolicyArg::Cancel => TriggerPolicy::cancel(),
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Persist(#[from] PersistError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error(transparent)]
    Csp(#[from] CspError),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// Unplayable inputs get exit code 1, everything else 2.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Analysis(AnalysisError::Unplayable { .. })
            | CliError::Engine(EngineError::Stp(StpError::Inconsistent { .. }))
            | CliError::Engine(EngineError::Encoding(EncodingError::ZeroCycleContradiction { .. }))
            | CliError::Encoding(EncodingError::ZeroCycleContradiction { .. }) => EXIT_UNPLAYABLE,
            _ => EXIT_ERROR,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Persist(PersistError::Parse { .. }) => "parse",
            CliError::Persist(PersistError::Version { .. }) => "version",
            CliError::Persist(PersistError::Invalid(_)) | CliError::Analysis(AnalysisError::Invalid(_)) => "invalid",
            CliError::Engine(EngineError::Invalid(_)) => "invalid",
            CliError::Persist(PersistError::Io { .. }) | CliError::Io { .. } => "io",
            CliError::Usage(_) => "usage",
            _ if self.exit_code() == EXIT_UNPLAYABLE => "unplayable",
            CliError::Engine(EngineError::Stp(StpError::NonContiguousDuration { .. })) => "nonContiguous",
            CliError::Analysis(AnalysisError::UnboundedDurations { .. }) => "unbounded",
            CliError::Analysis(AnalysisError::Csp(CspError::ExplosionGuard { .. }))
            | CliError::Csp(CspError::ExplosionGuard { .. }) => "explosionGuard",
            _ => "error",
        }
    }

    /// Machine-readable form printed on standard error.
    pub fn to_json(&self) -> Value {
        let mut body = json!({ "kind": self.kind(), "message": self.to_string() });
        match self {
            CliError::Persist(PersistError::Parse { line, column, .. }) => {
                body["line"] = json!(line);
                body["column"] = json!(column);
            }
            CliError::Persist(PersistError::Invalid(r))
            | CliError::Analysis(AnalysisError::Invalid(r))
            | CliError::Engine(EngineError::Invalid(r)) => {
                body["violations"] = serde_json::to_value(&r.violations).expect("violations serialize");
            }
            _ => {}
        }
        json!({ "error": body })
    }
}

/// Exit code and what to print.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(code: i32, stdout: String) -> Self {
        Self { code, stdout, stderr: String::new() }
    }

    pub fn from_error(e: &CliError) -> Self {
        let mut stderr = serde_json::to_string(&e.to_json()).expect("error serializes");
        stderr.push('\n');
        Self { code: e.exit_code(), stdout: String::new(), stderr }
    }
}

fn verdict_code(r: &PropertyReport) -> i32 {
    if r.verdict == Verdict::Bool(true) {
        EXIT_OK
    } else {
        EXIT_UNPLAYABLE
    }
}

fn error_value(e: CliError) -> Value {
    e.to_json()
}

pub fn check(score: &Score, horizon: Option<Time>) -> Result<Outcome, CliError> {
    let report = analysis::playability(score, horizon)?;
    Ok(Outcome::ok(verdict_code(&report), to_canonical_json(&report)))
}

pub fn analyze(score: &Score, horizon: Option<Time>, word: Option<Word>) -> Result<Outcome, CliError> {
    let prep = analysis::prepare(score, horizon)?;
    let playability = analysis::playability_of(&prep)?;
    let code = verdict_code(&playability);
    let report_or_error = |r: Result<PropertyReport, AnalysisError>| match r {
        Ok(r) => serde_json::to_value(r).expect("report serializes"),
        Err(e) => error_value(e.into()),
    };
    let mut out = json!({
        "score": score.name,
        "horizon": prep.horizon,
        "playability": playability,
        "minDuration": report_or_error(analysis::min_duration_of(&prep)),
        "simultaneity": report_or_error(analysis::simultaneity_bounds_of(&prep, Default::default())),
    });
    if let Some(w) = word {
        out["word"] = report_or_error(analysis::contains_word_of(&prep, &w, Default::default()));
    }
    Ok(Outcome::ok(code, to_canonical_json(&out)))
}

pub fn encode(score: &Score, form: Form, format: Format) -> Result<Outcome, CliError> {
    let text = match form {
        Form::Raw | Form::Normal => {
            let compiled = compile_hierarchy(score).map_err(EngineError::from)?;
            let (raw, map) = encode_score(&compiled)?;
            match (form, format) {
                (Form::Raw, Format::Json) => persist::raw_to_json(&raw, &map),
                (Form::Raw, Format::Dot) => persist::structure_to_dot(&score.name, &raw),
                (_, format) => {
                    let (nf, merge) = normalize(&raw)?;
                    match format {
                        Format::Json => persist::normal_to_json(&nf, &merge),
                        Format::Dot => persist::structure_to_dot(&score.name, &nf),
                    }
                }
            }
        }
        Form::Dispatchable => {
            let c = compile(score)?;
            match format {
                Format::Json => persist::network_to_json(&c.network),
                Format::Dot => persist::network_to_dot(&score.name, &c.network),
            }
        }
    };
    Ok(Outcome::ok(EXIT_OK, text))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScriptEntry {
    event: String,
    time: Time,
}

pub fn parse_script(text: &str) -> Result<Vec<(String, Time)>, CliError> {
    let entries: Vec<ScriptEntry> = serde_json::from_str(text).map_err(PersistError::from)?;
    Ok(entries.into_iter().map(|e| (e.event, e.time)).collect())
}

/// Simulated run: the dispatch log as NDJSON. Exit 0 when the run finished,
/// 1 when it was cancelled or is still waiting for a trigger.
pub fn simulate(score: &Score, script: &[(String, Time)], policy: TriggerPolicy) -> Result<Outcome, CliError> {
    let run = run_simulated(score, script, policy)?;
    let mut out = String::new();
    for m in &run.messages {
        out.push_str(&m.to_line());
        out.push('\n');
    }
    let code = if run.status() == Status::Finished { EXIT_OK } else { EXIT_UNPLAYABLE };
    Ok(Outcome::ok(code, out))
}

pub fn gen_subset_sum(set: &[Time], target: Time) -> Result<Score, CliError> {
    let inst = SubsetSumInstance::new(set.to_vec(), target)?;
    Ok(gen_subset_sum_score(&inst)?)
}

fn read(path: &PathBuf) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.clone(), source })
}

/// Runs a parsed command line. `run --serve` blocks until the live run ends.
pub fn execute(cli: Cli) -> Outcome {
    let result = match cli.command {
        Command::Check { score, horizon } => {
            persist::load_score(&score).map_err(CliError::from).and_then(|s| check(&s, horizon))
        }
        Command::Analyze { score, horizon, word, mode, quantifier } => {
            let word = word.map(|w| {
                let mode = match mode {
                    ModeArg::Scattered => WordMode::Scattered,
                    ModeArg::Consecutive => WordMode::Consecutive,
                };
                let quantifier = match quantifier {
                    QuantifierArg::Some => Quantifier::Some,
                    QuantifierArg::All => Quantifier::All,
                };
                Word::new(w, mode, quantifier)
            });
            persist::load_score(&score).map_err(CliError::from).and_then(|s| analyze(&s, horizon, word))
        }
        Command::Encode { score, form, format } => {
            persist::load_score(&score).map_err(CliError::from).and_then(|s| encode(&s, form, format))
        }
        Command::Run { score, simulate: _, triggers, serve, port, policy, unit_ms, speed } => (|| {
            let s = persist::load_score(&score)?;
            if serve {
                let clock = iscore::engine::live::Clock { unit_ms, speed };
                return serve::serve(&s, port, policy.into(), clock);
            }
            let script = match &triggers {
                Some(p) => parse_script(&read(p)?)?,
                None => Vec::new(),
            };
            simulate(&s, &script, policy.into())
        })(),
        Command::Gen { kind: GenKind::SubsetSum { set, target, output } } => {
            gen_subset_sum(&set, target).and_then(|s| match output {
                Some(path) => {
                    persist::save_score(&s, &path)?;
                    Ok(Outcome::ok(EXIT_OK, String::new()))
                }
                None => Ok(Outcome::ok(EXIT_OK, persist::score_to_string(&s))),
            })
        }
    };
    result.unwrap_or_else(|e| Outcome::from_error(&e))
}
