mod analyze;
mod config;
mod predict;
mod run;
mod variants;

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::FileConfig;
use primegame_core::density::PsiPolicy;

#[derive(Parser, Debug)]
#[command(
    name = "primegame",
    version,
    about = "Search for y with floor(y * p#) prime at every stage"
)]
struct Cli {
    /// key = value file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run or resume the stage engine, checkpointing every stage.
    Run(run::RunArgs),
    /// Inspect a checkpoint directory.
    #[command(subcommand)]
    Analyze(analyze::AnalyzeCmd),
    /// Branching-process estimates.
    #[command(subcommand)]
    Predict(predict::PredictCmd),
    /// Primorial chains, semi-sequences and power-tower seeds.
    #[command(subcommand)]
    Variants(variants::VariantsCmd),
}

/// Checkpoint directory and variant shared by the analysis commands.
#[derive(Args, Debug, Clone)]
pub struct DirArgs {
    /// Checkpoint directory (falls back to `checkpoint_dir` in the config).
    #[arg(long, alias = "checkpoint-dir")]
    dir: Option<PathBuf>,
    /// floor, round or semi:<B>.
    #[arg(long)]
    variant: Option<String>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Invariant(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
            CliError::Invariant(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Invariant(m) => m,
        }
    }
}

impl From<primegame_core::Error> for CliError {
    fn from(e: primegame_core::Error) -> Self {
        use primegame_core::Error as E;
        let msg = e.to_string();
        match e {
            E::Io(_) | E::MissingParents(_) => CliError::Io(msg),
            E::Invariant { .. } | E::Parse(_) | E::NotPrime(_) => CliError::Invariant(msg),
            _ => CliError::Usage(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Global settings after merging the config file.
pub struct Context {
    pub config: FileConfig,
    /// 0 lets the pools pick.
    pub threads: usize,
}

impl Context {
    pub fn dir(&self, args: &DirArgs) -> CliResult<PathBuf> {
        args.dir
            .clone()
            .or_else(|| self.config.path("checkpoint_dir"))
            .ok_or_else(|| {
                CliError::Usage("no checkpoint directory: pass --dir or set checkpoint_dir".into())
            })
    }

    pub fn variant(&self, given: Option<&str>) -> CliResult<primegame_core::engine::VariantRule> {
        let text = match given {
            Some(v) => v.to_string(),
            None => self
                .config
                .get::<String>("variant")?
                .unwrap_or_else(|| "floor".into()),
        };
        Ok(primegame_core::engine::VariantRule::parse(&text)?)
    }
}

pub fn parse_psi(text: &str) -> CliResult<PsiPolicy> {
    match text {
        "unity" | "1" => Ok(PsiPolicy::Unity),
        "limit" => Ok(PsiPolicy::Limit),
        "default" => Ok(PsiPolicy::DefaultCutoff),
        _ => text
            .strip_prefix("cutoff:")
            .and_then(|k| k.parse().ok())
            .map(PsiPolicy::Cutoff)
            .ok_or_else(|| {
                CliError::Usage(format!(
                    "unknown psi policy {text:?} (unity, limit, default, cutoff:<k>)"
                ))
            }),
    }
}

/// Writes to stdout, treating a closed pipe as success.
pub fn emit(text: &str) -> CliResult<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    let config = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let threads = match cli.threads {
        Some(t) => Some(t),
        None => config.get::<usize>("threads")?,
    };
    if threads == Some(0) {
        return Err(CliError::Usage("threads must be at least 1".into()));
    }
    let threads = threads.unwrap_or(0);
    if threads > 0 {
        // Ignored if a pool already exists; only the first call wins.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let ctx = Context { config, threads };
    match cli.command {
        Command::Run(a) => run::cmd_run(&ctx, a),
        Command::Analyze(a) => analyze::cmd_analyze(&ctx, a),
        Command::Predict(a) => predict::cmd_predict(&ctx, a),
        Command::Variants(a) => variants::cmd_variants(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
