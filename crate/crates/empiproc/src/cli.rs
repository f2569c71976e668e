//! Command-line entry point.
//!
//! Settings come from three layers, highest first: flags, the `--config`
//! JSON document, built-in defaults. `EMPIPROC_SEED` supplies the seed when
//! neither a flag nor the config sets one.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands;
use crate::config::ExperimentConfig;
use crate::error::{exit, AppError, AppResult};
use crate::io::Format;

#[derive(Debug, Parser)]
#[command(
    name = "empiproc",
    version,
    about = "Empirical processes of weakly dependent sequences: simulation and diagnostics",
    after_help = "Precedence: flags > config file > defaults. EMPIPROC_SEED sets the seed when neither \
                  --seed nor the config does.\nExit codes: 0 ok, 2 validation failure, 3 statistical \
                  check failure, 4 usage, 5 malformed config, 6 missing input, 7 io."
)]
pub struct Cli {
    /// JSON experiment configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Report statistical failures as warnings and exit 0.
    #[arg(long, global = true)]
    pub warn_only: bool,
    /// Directory of path files to analyse instead of simulating.
    #[arg(long, global = true, value_name = "DIR")]
    pub input: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify an integer matrix as a torus automorphism.
    ValidateMatrix {
        /// Matrix as JSON, e.g. "[[2,1],[1,1]]"; defaults to the configured generator.
        #[arg(long)]
        matrix: Option<String>,
    },
    /// Simulate replicate paths and write them to `<out>/paths`.
    Simulate,
    /// Empirical process on the grid, its partition approximation and sup deviations.
    Empirical,
    /// Schedule, chain sandwich, increment norms and Hölder growth.
    ChainCheck,
    /// Block covariances and the geometric envelope fit.
    Mixing,
    /// Growth of partial-sum moments.
    Moments,
    /// Long-run covariance of the limit field and sampled fields.
    Limit,
    /// Finite-dimensional normality of the empirical process.
    Fidi,
    /// Collect the JSON reports of the output directory into one summary.
    Report,
}

/// Resolved settings for one invocation.
pub struct Context {
    pub cfg: ExperimentConfig,
    pub hash: String,
    pub warn_only: bool,
}

fn resolve(cli: &Cli) -> AppResult<Context> {
    let (mut cfg, seed_in_config) = match &cli.config {
        Some(path) => {
            let text = crate::io::read_to_string(path)?;
            let doc: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| AppError::Config(e.to_string()))?;
            let has_seed = doc.get("seed").is_some();
            (ExperimentConfig::from_json(&text)?, has_seed)
        }
        None => (ExperimentConfig::default(), false),
    };
    if !seed_in_config {
        if let Ok(v) = std::env::var("EMPIPROC_SEED") {
            cfg.seed = v
                .trim()
                .parse()
                .map_err(|_| AppError::Config(format!("EMPIPROC_SEED={v:?} is not a u64")))?;
        }
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    if let Some(f) = cli.format {
        cfg.format = f;
    }
    if let Some(i) = &cli.input {
        cfg.input = Some(i.clone());
    }
    cfg.validate()?;
    let hash = cfg.hash();
    Ok(Context {
        cfg,
        hash,
        warn_only: cli.warn_only,
    })
}

fn dispatch(cli: &Cli, ctx: &Context) -> AppResult<Option<String>> {
    match &cli.command {
        Command::ValidateMatrix { matrix } => commands::validate_matrix(ctx, matrix.as_deref()),
        Command::Simulate => commands::simulate(ctx),
        Command::Empirical => commands::empirical(ctx),
        Command::ChainCheck => commands::chain_check(ctx),
        Command::Mixing => commands::mixing(ctx),
        Command::Moments => commands::moments(ctx),
        Command::Limit => commands::limit(ctx),
        Command::Fidi => commands::fidi(ctx),
        Command::Report => commands::report(ctx),
    }
}

fn execute(cli: &Cli) -> AppResult<i32> {
    let ctx = resolve(cli)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(AppError::Usage("--threads must be positive".into()));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool.build().map_err(|e| AppError::Usage(e.to_string()))?;
    match pool.install(|| dispatch(cli, &ctx))? {
        None => Ok(exit::OK),
        Some(msg) if ctx.warn_only => {
            eprintln!("warning: statistical check failed: {msg}");
            Ok(exit::OK)
        }
        Some(msg) => Err(AppError::Statistical(msg)),
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => exit::OK,
                _ => exit::USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", e.diagnostic());
            e.exit_code()
        }
    }
}
