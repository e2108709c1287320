//! The `guidance` command line. Each subcommand is a thin shell over
//! `guidance-core` and `guidance-service`; this crate only parses flags,
//! reads and writes files, and maps failures to exit codes.
//!
//! Exit codes: 0 success, 1 validation or expectation failure (including
//! unreadable or malformed inputs), 2 usage error.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use guidance_core::analysis::{
    build_report, community_effects_csv, per_community_effects, CommunityResult, ReportRequest,
};
use guidance_core::corpus::{evaluate_corpus, read_corpus};
use guidance_core::experiment::scenario::{null_config, recovery_config, reference_config};
use guidance_core::experiment::{
    compute_outcomes, funnel_stats, read_events, simulate_experiment, write_events, Covariate, Outcome, SimConfig,
};
use guidance_core::guidance::{compile_ruleset, Action};
use guidance_core::{
    AnalysisError, DraftState, GuidanceError, LogError, OutcomeError, RuleSetDocument, SimError, TriggerEvent,
};
use guidance_service::ServiceConfig;

#[derive(Debug, Parser)]
#[command(name = "guidance", version, about = "Compose-time post guidance: rules, simulation and effect analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a ruleset document; prints one line per problem.
    Validate {
        /// Ruleset JSON document.
        ruleset: PathBuf,
    },
    /// Evaluate one draft against a ruleset.
    Eval(EvalArgs),
    /// Submit every draft of a JSON-Lines corpus and compare with its labels.
    Corpus {
        ruleset: PathBuf,
        /// JSON-Lines of {"title", "body", "label"?}.
        corpus: PathBuf,
        /// Print the full run as JSON instead of the text listing.
        #[arg(long)]
        json: bool,
    },
    /// Simulate the experiment and write its event log.
    Simulate(SimulateArgs),
    /// Compute outcomes from an event log and fit the effect models.
    Analyze(AnalyzeArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub ruleset: PathBuf,
    #[arg(long, default_value = "")]
    pub title: String,
    /// Post body; `-` reads it from stdin.
    #[arg(long, default_value = "")]
    pub body: String,
    /// `on_edit` evaluates live guidance; `on_submit` also decides acceptance.
    #[arg(long, default_value = "on_submit")]
    pub event: TriggerEvent,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scenario {
    /// Guidance on, no extra multipliers.
    Reference,
    /// No treatment effect at all.
    Null,
    /// Multipliers calibrated to known effect sizes.
    Recovery,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Simulation config (JSON).
    #[arg(long, env = "GUIDANCE_SIM_CONFIG", conflicts_with = "scenario", required_unless_present = "scenario")]
    pub config: Option<PathBuf>,
    /// Built-in scenario instead of a config file.
    #[arg(long, value_enum)]
    pub scenario: Option<Scenario>,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the number of users (scenarios default to 100000).
    #[arg(long)]
    pub users: Option<usize>,
    /// Output log; defaults to `events-<unix time>.jsonl` in the current directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// JSON-Lines event log.
    pub log: PathBuf,
    /// Fit a single outcome instead of all thirteen.
    #[arg(long)]
    pub outcome: Option<Outcome>,
    /// Fit the treatment interaction with this covariate.
    #[arg(long, conflicts_with_all = ["per_community", "table2"])]
    pub covariate: Option<Covariate>,
    /// One average-effect fit per community for `--outcome` (default posts_submitted).
    #[arg(long, conflicts_with = "table2")]
    pub per_community: bool,
    /// Print all thirteen average effects as a table.
    #[arg(long, conflicts_with = "outcome")]
    pub table2: bool,
    /// Print the starts → submitted → non-removed funnel per arm.
    #[arg(long)]
    pub funnel: bool,
    #[arg(long, default_value_t = 28)]
    pub follow_up_days: u32,
    /// Output CSV; defaults to a timestamped file in the current directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Service config (TOML). Environment overrides apply on top.
    #[arg(long, env = "GUIDANCE_CONFIG")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub listen: Option<String>,
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Log {
        path: PathBuf,
        #[source]
        source: LogError,
    },
    #[error(transparent)]
    Guidance(#[from] GuidanceError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Outcome(#[from] OutcomeError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Service(#[from] guidance_service::ServiceError),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

/// A command either succeeds or reports an expectation failure (exit 1)
/// after printing its findings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Failed,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

fn read_to_string(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(io_err(path))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(io_err(path))
}

fn stdout_err(e: std::io::Error) -> CliError {
    CliError::Io { path: PathBuf::from("<stdout>"), source: e }
}

/// `<prefix>-<unix seconds>.<ext>` in the current directory.
pub fn timestamped(prefix: &str, ext: &str) -> PathBuf {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    PathBuf::from(format!("{prefix}-{secs}.{ext}"))
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<Status, CliError> {
    match cli.command {
        Command::Validate { ruleset } => cmd_validate(&ruleset, out),
        Command::Eval(args) => cmd_eval(&args, out),
        Command::Corpus { ruleset, corpus, json } => cmd_corpus(&ruleset, &corpus, json, out),
        Command::Simulate(args) => cmd_simulate(&args, out),
        Command::Analyze(args) => cmd_analyze(&args, out),
        Command::Serve(args) => cmd_serve(&args),
    }
}

fn load_document(path: &Path) -> Result<RuleSetDocument, CliError> {
    RuleSetDocument::from_json(&read_to_string(path)?).map_err(|e| GuidanceError::Parse(e).into())
}

pub fn cmd_validate(path: &Path, out: &mut dyn Write) -> Result<Status, CliError> {
    let doc = load_document(path)?;
    let (community, rules) = (doc.community_id.clone(), doc.rules.len());
    match compile_ruleset(doc) {
        Ok(_) => {
            writeln!(out, "ok: {rules} rules for `{community}`").map_err(stdout_err)?;
            Ok(Status::Ok)
        }
        Err(errors) => {
            for e in errors.iter() {
                writeln!(out, "{e}").map_err(stdout_err)?;
            }
            Ok(Status::Failed)
        }
    }
}

pub fn cmd_eval(args: &EvalArgs, out: &mut dyn Write) -> Result<Status, CliError> {
    let ruleset = compile_ruleset(load_document(&args.ruleset)?).map_err(GuidanceError::Invalid)?;
    let body = if args.body == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(io_err(Path::new("<stdin>")))?;
        s
    } else {
        args.body.clone()
    };
    let draft = DraftState::new(ruleset.community_id(), "cli", &args.title, &body);
    let result = ruleset.evaluate(&draft, args.event)?;
    if args.json {
        let text = serde_json::to_string_pretty(&result).expect("results always serialize");
        writeln!(out, "{text}").map_err(stdout_err)?;
        return Ok(Status::Ok);
    }
    let mut w = || -> std::io::Result<()> {
        writeln!(out, "action: {}", Action::of(&result))?;
        for m in &result.messages {
            writeln!(out, "message: {m}")?;
        }
        for f in &result.review_flags {
            writeln!(out, "flagged by: {f}")?;
        }
        for f in &result.fired {
            writeln!(out, "fired: {} ({:?})", f.rule, f.part)?;
        }
        Ok(())
    };
    w().map_err(stdout_err)?;
    Ok(Status::Ok)
}

pub fn cmd_corpus(ruleset: &Path, corpus: &Path, json: bool, out: &mut dyn Write) -> Result<Status, CliError> {
    let compiled = compile_ruleset(load_document(ruleset)?).map_err(GuidanceError::Invalid)?;
    let file = File::open(corpus).map_err(io_err(corpus))?;
    let entries =
        read_corpus(BufReader::new(file)).map_err(|source| CliError::Log { path: corpus.to_path_buf(), source })?;
    let run = evaluate_corpus(&compiled, &entries)?;
    let text = if json {
        serde_json::to_string_pretty(&run).expect("runs always serialize") + "\n"
    } else {
        run.render(&entries)
    };
    out.write_all(text.as_bytes()).map_err(stdout_err)?;
    Ok(if run.passed() { Status::Ok } else { Status::Failed })
}

/// The config a `simulate` invocation describes, with overrides applied.
pub fn resolve_sim_config(args: &SimulateArgs) -> Result<SimConfig, CliError> {
    let mut config = match (&args.config, args.scenario) {
        (Some(path), None) => SimConfig::from_path(path).map_err(|e| match e {
            SimError::Io(source) => CliError::Io { path: path.clone(), source },
            other => other.into(),
        })?,
        (None, Some(scenario)) => {
            let (n, seed) = (args.users.unwrap_or(100_000), args.seed.unwrap_or(1));
            match scenario {
                Scenario::Reference => reference_config(n, seed),
                Scenario::Null => null_config(n, seed),
                Scenario::Recovery => recovery_config(n, seed)?,
            }
        }
        _ => return Err(CliError::Usage("give exactly one of --config or --scenario".into())),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(users) = args.users {
        config.n_users = users;
    }
    Ok(config)
}

pub fn cmd_simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<Status, CliError> {
    let config = resolve_sim_config(args)?;
    let result = simulate_experiment(&config)?;
    let path = args.out.clone().unwrap_or_else(|| timestamped("events", "jsonl"));
    let file = File::create(&path).map_err(io_err(&path))?;
    write_events(BufWriter::new(file), &result.events).map_err(io_err(&path))?;
    let s = &result.stats;
    writeln!(
        out,
        "wrote {} events to {}\nusers {}  starts {}  submitted {}  blocked {}  flagged {}",
        result.events.len(),
        path.display(),
        s.users,
        s.starts,
        s.submitted,
        s.blocked,
        s.flagged
    )
    .map_err(stdout_err)?;
    Ok(Status::Ok)
}

pub fn cmd_analyze(args: &AnalyzeArgs, out: &mut dyn Write) -> Result<Status, CliError> {
    let file = File::open(&args.log).map_err(io_err(&args.log))?;
    let events =
        read_events(BufReader::new(file)).map_err(|source| CliError::Log { path: args.log.clone(), source })?;
    let records = compute_outcomes(&events, args.follow_up_days)?;

    if args.funnel {
        out.write_all(funnel_stats(&records)?.render().as_bytes()).map_err(stdout_err)?;
        if !(args.per_community || args.table2 || args.outcome.is_some() || args.covariate.is_some()) {
            return Ok(Status::Ok);
        }
    }

    if args.per_community {
        let outcome = args.outcome.unwrap_or(Outcome::PostsSubmitted);
        let effects = per_community_effects(&records, outcome);
        let path = args.out.clone().unwrap_or_else(|| timestamped("communities", "csv"));
        write_file(&path, &community_effects_csv(&effects))?;
        let fitted = effects.iter().filter(|e| matches!(e.result, CommunityResult::Estimated { .. })).count();
        let significant =
            effects.iter().filter(|e| matches!(e.result, CommunityResult::Estimated { significant: true, .. })).count();
        writeln!(
            out,
            "{outcome}: {fitted} of {} communities fitted, {significant} significant; wrote {}",
            effects.len(),
            path.display()
        )
        .map_err(stdout_err)?;
        return Ok(Status::Ok);
    }

    let report = build_report(&records, &ReportRequest { outcome: args.outcome, covariate: args.covariate })?;
    out.write_all(report.to_table().as_bytes()).map_err(stdout_err)?;
    if args.table2 && args.out.is_none() {
        return Ok(Status::Ok);
    }
    let path = args.out.clone().unwrap_or_else(|| timestamped("report", "csv"));
    write_file(&path, &report.to_csv())?;
    writeln!(out, "wrote {}", path.display()).map_err(stdout_err)?;
    Ok(Status::Ok)
}

/// The service config after the file, environment and flags are layered.
pub fn resolve_service_config(args: &ServeArgs) -> Result<ServiceConfig, CliError> {
    let mut config = ServiceConfig::load(args.config.as_deref())?;
    if let Some(listen) = &args.listen {
        config.listen = listen.clone();
    }
    if let Some(dir) = &args.data_dir {
        config.data_dir = dir.clone();
    }
    config.validate()?;
    Ok(config)
}

pub fn cmd_serve(args: &ServeArgs) -> Result<Status, CliError> {
    let config = resolve_service_config(args)?;
    let _ = tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .try_init();
    let runtime =
        tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(io_err(Path::new("<runtime>")))?;
    runtime.block_on(guidance_service::serve(config))?;
    Ok(Status::Ok)
}
