//! `posner`: structure generation, symmetry detection and trajectory
//! statistics for Posner clusters.
//!
//! Exit status is 0 on success, 1 for usage errors and 2 for data errors.
//! With `--json-errors` the error is also written to stderr as
//! `{"error": {"kind": "usage" | "data", "message": "..."}}`.

mod commands;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Environment variable giving the default worker-thread count.
pub const THREADS_ENV: &str = "POSNER_THREADS";

#[derive(Parser, Debug)]
#[command(name = "posner", version, about = "Symmetry analysis of Posner (Ca9(PO4)6) clusters")]
struct Cli {
    /// Report errors as JSON on stderr.
    #[arg(long, global = true)]
    json_errors: bool,
    /// Worker threads (default: $POSNER_THREADS, else all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Enumerate candidate structures from the cube seed and write the census.
    Generate(GenerateArgs),
    /// Detect the point group of a structure.
    Detect(DetectArgs),
    /// Per-frame symmetry timeline with occurrence and persistence.
    Timeline(TimelineArgs),
    /// Aligned time-average structure.
    Average(AverageArgs),
    /// Principal modes of the aligned trajectory.
    Pca(PcaArgs),
    /// k-means clustering of aligned frames.
    Cluster(ClusterArgs),
    /// Statistics of per-frame energies.
    EnergyStats(EnergyArgs),
    /// S6-constrained minimization with the pair potential.
    S6min(S6Args),
    /// Energy of a cluster relative to separate units.
    Formation(FormationArgs),
    /// Collect the JSON sections of a run directory into one report.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    /// Body diagonal of the Ca cube (Å).
    #[arg(long, default_value_t = 9.0)]
    pub diagonal: f64,
    /// Euler-angle grid spacing (degrees); must divide 360.
    #[arg(long, default_value_t = 30.0)]
    pub step: f64,
    #[arg(long, value_delimiter = ',', default_value = "0.9,0.95,1.0,1.05")]
    pub scales: Vec<f64>,
    /// Random draws from the full product of per-group rotations.
    #[arg(long, default_value_t = 3000)]
    pub cap: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write only the census and templates, not the structure files.
    #[arg(long)]
    pub census_only: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct DetectArgs {
    pub file: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    pub tol: f64,
    /// Print JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct TrajInput {
    pub traj: PathBuf,
    /// Overrides the timestep read from `time_fs` keys.
    #[arg(long)]
    pub timestep_fs: Option<f64>,
}

#[derive(Args, Debug)]
pub struct Retention {
    /// Frames to drop from the start.
    #[arg(long, conflicts_with = "skip_fraction")]
    pub skip: Option<usize>,
    /// Fraction of frames to drop from the start (default 0.05).
    #[arg(long)]
    pub skip_fraction: Option<f64>,
    /// Reference frame for alignment (index into the full trajectory);
    /// default is the first retained frame.
    #[arg(long = "ref")]
    pub reference: Option<usize>,
}

#[derive(Args, Debug)]
pub struct TimelineArgs {
    pub traj: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    pub tol: f64,
    #[arg(long, default_value_t = 500)]
    pub skip: usize,
    /// Frame spacing (fs); required because trajectories rarely record it.
    #[arg(long)]
    pub timestep_fs: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct AverageArgs {
    #[command(flatten)]
    pub input: TrajInput,
    #[command(flatten)]
    pub retention: Retention,
    #[arg(long, default_value_t = 0.1)]
    pub tol: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct PcaArgs {
    #[command(flatten)]
    pub input: TrajInput,
    #[command(flatten)]
    pub retention: Retention,
    #[arg(long, default_value_t = 5)]
    pub modes: usize,
    /// Scale coordinates by √mass before the covariance.
    #[arg(long)]
    pub mass_weighted: bool,
    #[arg(long, default_value_t = 0.1)]
    pub tol: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub input: TrajInput,
    #[command(flatten)]
    pub retention: Retention,
    /// A cluster count or `auto`.
    #[arg(long, default_value = "auto")]
    pub k: String,
    #[arg(long, default_value = "2..6")]
    pub k_range: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.1)]
    pub tol: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EnergyArgs {
    pub traj: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
    /// Also write energy.json here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct S6Args {
    #[arg(long, default_value_t = 4)]
    pub starts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Pair-potential TOML; built-in illustrative defaults if absent.
    #[arg(long)]
    pub potential: Option<PathBuf>,
    #[arg(long, default_value_t = 20_000)]
    pub max_evaluations: usize,
    #[arg(long, default_value_t = 0.1)]
    pub tol: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct FormationArgs {
    /// Cluster energy (eV).
    #[arg(long, allow_negative_numbers = true)]
    pub cluster: f64,
    /// Energy of one unit (eV).
    #[arg(long, allow_negative_numbers = true)]
    pub unit: f64,
    #[arg(long, default_value_t = 3)]
    pub n: u32,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    pub rundir: PathBuf,
    /// Defaults to RUNDIR/report.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Failure::Usage(_) => "usage",
            Failure::Data(_) => "data",
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) => m.clone(),
            Failure::Data(e) => format!("{e:#}"),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Data(e)
    }
}

pub fn usage(message: impl Into<String>) -> Failure {
    Failure::Usage(message.into())
}

fn report(f: &Failure, json: bool) -> ExitCode {
    if json {
        let body = serde_json::json!({ "error": { "kind": f.kind(), "message": f.message() } });
        eprintln!("{body}");
    } else {
        eprintln!("error: {}", f.message());
    }
    ExitCode::from(f.code())
}

fn threads(flag: Option<usize>) -> Result<Option<usize>, Failure> {
    if let Some(n) = flag {
        return Ok(Some(n));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| usage(format!("{THREADS_ENV}={v} is not a thread count"))),
        Err(_) => Ok(None),
    }
}

fn main() -> ExitCode {
    let args: Vec<OsString> = std::env::args_os().collect();
    let json = args.iter().any(|a| a == "--json-errors");
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version.
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            if json {
                return report(&usage(e.to_string().trim().to_string()), true);
            }
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let run = || -> Result<(), Failure> {
        if let Some(n) = threads(cli.threads)? {
            if n == 0 {
                return Err(usage("thread count must be at least 1"));
            }
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Failure::Data(e.into()))?;
        }
        commands::run(cli.command)
    };
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => report(&f, cli.json_errors),
    }
}
