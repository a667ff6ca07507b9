//! Command-line front end: argument parsing, run configuration and the
//! file-based pipeline behind `solve`, `enumerate`, `compare`, `score` and
//! `report`.

mod commands;
mod store;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::analysis::AnalysisError;
use crate::grid::GridError;
use crate::interdiction::{EnumerationLimits, InterdictionError, SolverConfig};
use crate::opf::Model;

pub use store::{layout_path, read_cav_dir, read_cav_file, CavIndexEntry};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SOLVER_LIMIT: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("{0}")]
    Config(String),
    #[error("cannot read {path}: {msg}")]
    Read { path: PathBuf, msg: String },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("t={t}: {source}")]
    Solve { t: usize, source: InterdictionError },
    #[error("solver stopped at its node limit for t={0}")]
    SolverLimit(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Solve { source, .. } => match source {
                InterdictionError::Opf(_)
                | InterdictionError::Guard(_)
                | InterdictionError::Limits(_) => EXIT_INPUT,
                InterdictionError::Mip(_) | InterdictionError::LowerLevel { .. } => {
                    EXIT_SOLVER_LIMIT
                }
            },
            CliError::SolverLimit(_) => EXIT_SOLVER_LIMIT,
            _ => EXIT_INPUT,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "grid-interdict",
    version,
    about = "Attacker-defender interdiction of power grids"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Worst-case attack per time step.
    Solve(RunArgs),
    /// Ranked critical attack vectors per time step.
    Enumerate(RunArgs),
    /// Look up LAC attacks in the DC lists of the same steps.
    Compare(CompareArgs),
    /// Score attacks across time steps.
    Score(ScoreArgs),
    /// Every comparison and score table the output directory supports.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Start from a saved run.json; explicit flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub grid: Option<PathBuf>,
    #[arg(long)]
    pub timeseries: Option<PathBuf>,
    /// Steps to run, e.g. `3`, `1-24`, `1..24` or `1,5,9-12` (1-based).
    #[arg(long)]
    pub timesteps: Option<String>,
    #[arg(long)]
    pub model: Option<Model>,
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub max_solutions: Option<usize>,
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Enumerate until no damaging attack remains.
    #[arg(long)]
    pub exhaustive: bool,
    #[arg(long)]
    pub pwl_segments: Option<usize>,
    #[arg(long)]
    pub polygon_sides: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 uses one per core.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Write every solved program as text under `<out>/models`.
    #[arg(long)]
    pub dump_models: bool,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Defaults to every budget present for both models.
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub timesteps: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct ScoreArgs {
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, default_value = "dc")]
    pub model: Model,
    #[arg(long, default_value_t = 1)]
    pub budget: usize,
    #[arg(long)]
    pub timesteps: Option<String>,
    /// Rows in the top table.
    #[arg(long, default_value_t = 10)]
    pub top: usize,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub top: usize,
}

/// Effective configuration of a `solve` or `enumerate` run; written to
/// `<out>/run.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub grid: PathBuf,
    pub timeseries: Option<PathBuf>,
    pub timesteps: Option<String>,
    pub model: Model,
    pub budget: usize,
    pub limits: EnumerationLimits,
    pub solver: SolverConfig,
    pub jobs: usize,
    pub out: PathBuf,
    pub dump_models: bool,
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn from_args(args: &RunArgs) -> Result<Self, CliError> {
        let mut cfg = match &args.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| CliError::Read {
                    path: path.clone(),
                    msg: e.to_string(),
                })?;
                serde_json::from_str(&text).map_err(|e| CliError::Read {
                    path: path.clone(),
                    msg: e.to_string(),
                })?
            }
            None => {
                let model = args.model.unwrap_or(Model::Dc);
                RunConfig {
                    grid: args
                        .grid
                        .clone()
                        .ok_or_else(|| CliError::Config("--grid is required".into()))?,
                    timeseries: None,
                    timesteps: None,
                    model,
                    budget: 1,
                    limits: EnumerationLimits::for_model(model),
                    solver: SolverConfig::default(),
                    jobs: 0,
                    out: PathBuf::from("out"),
                    dump_models: false,
                    seed: None,
                }
            }
        };
        if let Some(g) = &args.grid {
            cfg.grid = g.clone();
        }
        if args.timeseries.is_some() {
            cfg.timeseries = args.timeseries.clone();
        }
        if args.timesteps.is_some() {
            cfg.timesteps = args.timesteps.clone();
        }
        if let Some(m) = args.model {
            if args.config.is_some() && m != cfg.model {
                cfg.limits = EnumerationLimits::for_model(m);
            }
            cfg.model = m;
        }
        if let Some(b) = args.budget {
            cfg.budget = b;
        }
        if args.exhaustive {
            cfg.limits.max_solutions = None;
        }
        if let Some(n) = args.max_solutions {
            cfg.limits.max_solutions = Some(n);
        }
        if let Some(phi) = args.threshold {
            cfg.limits.threshold = phi;
        }
        if let Some(n) = args.pwl_segments {
            cfg.solver.lac.pwl_segments = n;
        }
        if let Some(n) = args.polygon_sides {
            cfg.solver.lac.polygon_sides = n;
        }
        if let Some(o) = &args.out {
            cfg.out = o.clone();
        }
        if let Some(j) = args.jobs {
            cfg.jobs = j;
        }
        cfg.dump_models |= args.dump_models;
        if args.seed.is_some() {
            cfg.seed = args.seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.solver
            .lac
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.limits
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(spec) = &self.timesteps {
            parse_timesteps(spec)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }
}

/// Parses a 1-based step selection into a sorted, deduplicated list.
pub fn parse_timesteps(spec: &str) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::Config(format!("cannot parse time steps `{spec}`"));
    let mut steps = Vec::new();
    for part in spec.split(',').map(str::trim) {
        let range = part.split_once("..").or_else(|| part.split_once('-'));
        let (lo, hi) = match range {
            Some((a, b)) => (a.trim().parse::<usize>(), b.trim().parse::<usize>()),
            None => (part.parse::<usize>(), part.parse::<usize>()),
        };
        let (lo, hi) = (lo.map_err(|_| bad())?, hi.map_err(|_| bad())?);
        if lo == 0 || hi < lo {
            return Err(bad());
        }
        steps.extend(lo..=hi);
    }
    steps.sort_unstable();
    steps.dedup();
    Ok(steps)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| CliError::Write {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, contents).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

pub fn init_logging() {
    let env = env_logger::Env::new().filter_or("GRID_INTERDICT_LOG", "warn");
    let _ = env_logger::Builder::from_env(env)
        .format_timestamp(None)
        .try_init();
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(&cli.command) {
        Ok(out) => {
            print!("{}", out.stdout);
            if out.limited.is_empty() {
                EXIT_OK
            } else {
                for t in &out.limited {
                    eprintln!("error: {}", CliError::SolverLimit(*t));
                }
                EXIT_SOLVER_LIMIT
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Result of a command that ran to the end.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub stdout: String,
    /// Steps whose branch-and-bound stopped at its node limit.
    pub limited: Vec<usize>,
}

impl Output {
    fn text(stdout: String) -> Self {
        Self {
            stdout,
            limited: Vec::new(),
        }
    }
}

pub fn execute(command: &Command) -> Result<Output, CliError> {
    match command {
        Command::Solve(a) => commands::solve(&RunConfig::from_args(a)?),
        Command::Enumerate(a) => commands::enumerate(&RunConfig::from_args(a)?),
        Command::Compare(a) => commands::compare(a),
        Command::Score(a) => commands::score(a),
        Command::Report(a) => commands::report(a),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_ranges() {
        assert_eq!(parse_timesteps("3").unwrap(), vec![3]);
        assert_eq!(parse_timesteps("1-3").unwrap(), vec![1, 2, 3]);
        assert_eq!(parse_timesteps("2..4, 1").unwrap(), vec![1, 2, 3, 4]);
        assert!(parse_timesteps("0").is_err());
        assert!(parse_timesteps("4-2").is_err());
        assert!(parse_timesteps("x").is_err());
    }

    #[test]
    fn flags_override_saved_config() {
        let args = RunArgs {
            grid: Some("g.json".into()),
            model: Some(Model::Lac),
            budget: Some(2),
            ..RunArgs::default()
        };
        let cfg = RunConfig::from_args(&args).unwrap();
        assert_eq!(cfg.limits, EnumerationLimits::for_model(Model::Lac));
        let back: RunConfig = serde_json::from_str(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        let args = RunArgs {
            grid: Some("g.json".into()),
            exhaustive: true,
            polygon_sides: Some(7),
            ..RunArgs::default()
        };
        assert!(matches!(
            RunConfig::from_args(&args),
            Err(CliError::Config(_))
        ));
    }
}
