mod commands;
mod store;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ppmkit::simulate::ProfileName;
use ppmkit::soundness::DEFAULT_MAX_STATES;

#[derive(Parser)]
#[command(name = "ppmkit", version, about = "Analyse recorded process-modeling sessions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a log and print a summary.
    Parse(ParseArgs),
    /// Replay a log into a model snapshot.
    Replay(ReplayArgs),
    /// Compute the six session metrics.
    Metrics(MetricsArgs),
    /// Normalize, check soundness and report perspicuity.
    Classify(ClassifyArgs),
    /// Render a PPMChart as SVG.
    Chart(ChartArgs),
    /// Compare metric distributions between perspicuous and other sessions.
    Stats(StatsArgs),
    /// Generate synthetic session logs.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct ParseArgs {
    #[arg(long)]
    log: PathBuf,
    /// Write the canonical CSV form here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Rewrite reconnect actions as delete + create before writing.
    #[arg(long)]
    expand_reconnect: bool,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    log: PathBuf,
    /// Stop after this sequence number.
    #[arg(long, conflicts_with = "until_time")]
    until_seq: Option<u64>,
    /// Stop after this timestamp (RFC 3339).
    #[arg(long)]
    until_time: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MetricsArgs {
    /// A CSV log or a directory of them.
    #[arg(long)]
    log: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ClassifyArgs {
    /// A CSV log or a directory of them.
    #[arg(long, required_unless_present = "model", conflicts_with = "model")]
    log: Option<PathBuf>,
    /// A model JSON file.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Output file, or a directory when --log is a directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, env = "PPMKIT_MAX_STATES", default_value_t = DEFAULT_MAX_STATES)]
    max_states: usize,
    /// Also write the workflow net as PNML (single input only).
    #[arg(long)]
    pnml: Option<PathBuf>,
}

#[derive(Args)]
struct ChartArgs {
    #[arg(long)]
    log: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Time window in seconds.
    #[arg(long, default_value_t = 3600)]
    window: u64,
    #[arg(long, default_value_t = 1200)]
    width: u32,
    #[arg(long, default_value_t = 20)]
    row_height: u32,
    #[arg(long)]
    color_create: Option<String>,
    #[arg(long)]
    color_move: Option<String>,
    #[arg(long)]
    color_delete: Option<String>,
    #[arg(long)]
    color_other: Option<String>,
    #[arg(long)]
    color_reconnect: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum GroupBy {
    Perspicuity,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Args)]
struct StatsArgs {
    /// Directory of session report JSON files.
    #[arg(long)]
    reports: PathBuf,
    #[arg(long, value_enum, default_value = "perspicuity")]
    group_by: GroupBy,
    /// A metric name, or `all`.
    #[arg(long, default_value = "all")]
    metric: String,
    /// Leave out sessions whose soundness check hit the state cap.
    #[arg(long)]
    exclude_unknown: bool,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    profile: ProfileName,
    #[arg(long, default_value_t = 1)]
    sessions: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for the generated CSV logs.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    interleave: Option<f64>,
    #[arg(long)]
    move_rate: Option<f64>,
    #[arg(long)]
    mean_gap: Option<f64>,
    #[arg(long)]
    p_defect: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Parse(a) => commands::parse(a),
        Command::Replay(a) => commands::replay(a),
        Command::Metrics(a) => commands::metrics(a),
        Command::Classify(a) => commands::classify(a),
        Command::Chart(a) => commands::chart(a),
        Command::Stats(a) => commands::stats(a),
        Command::Simulate(a) => commands::simulate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
