use std::path::PathBuf;
use std::process::ExitCode;

use adapid_cli::{output, run_experiment, CliError, CliResult, ExperimentConfig, Overrides, Recipe};
use adapid_core::transport::{self, Solver};
use adapid_core::{guard_negative_window, Schedule, ScheduleKind};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "adapid", version = output::VERSION, about = "Schedule-sensitivity experiments for harmonic path-integral diffusion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named experiment recipe.
    Run(RunArgs),
    /// Schedule file utilities.
    Schedule {
        #[command(subcommand)]
        action: ScheduleAction,
    },
    /// Empirical W2 between two CSV point clouds.
    W2(W2Args),
}

#[derive(Args)]
struct RunArgs {
    #[arg(value_enum)]
    recipe: Recipe,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    particles: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
}

#[derive(Subcommand)]
enum ScheduleAction {
    /// Parse a schedule JSON file and check it is well posed.
    Validate { file: PathBuf },
}

#[derive(Args)]
struct W2Args {
    #[arg(long)]
    x: PathBuf,
    #[arg(long)]
    y: PathBuf,
    #[arg(long, conflicts_with = "sinkhorn")]
    exact: bool,
    /// Entropic regularization ε.
    #[arg(long)]
    sinkhorn: Option<f64>,
}

fn run(args: RunArgs) -> CliResult<()> {
    let (config, text) = match &args.config {
        Some(path) => {
            let (c, t) = ExperimentConfig::load(path)?;
            (c, Some(t))
        }
        None => (ExperimentConfig::default(), None),
    };
    let overrides = Overrides {
        model: args.model,
        out: args.out,
        seeds: args.seeds,
        particles: args.particles,
        steps: args.steps,
    };
    let dir = run_experiment(args.recipe, &config, text.as_deref(), &overrides)?;
    println!("{}", dir.display());
    Ok(())
}

fn validate(file: PathBuf) -> CliResult<()> {
    let text = std::fs::read_to_string(&file).map_err(|e| CliError::Config(format!("cannot read {}: {e}", file.display())))?;
    let schedule = Schedule::from_json(&text)?;
    if let ScheduleKind::NegativeWindow { magnitude, delta } = schedule.kind() {
        println!("guard: {:?}", guard_negative_window(*magnitude, *delta));
    }
    // coefficients must exist on the whole open interval
    for k in 1..100 {
        schedule.coeffs(k as f64 / 100.0)?;
    }
    let (edges, betas) = schedule.pieces();
    println!("ok: {} ({} piece(s), edges {:?}, beta {:?}, a+(1) = {})", schedule.label(), betas.len(), edges, betas, schedule.a_plus_one());
    Ok(())
}

/// Numeric rows of a CSV file; a first row that does not parse is a header.
fn read_points(path: &PathBuf) -> CliResult<(Vec<f64>, usize)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut points = Vec::new();
    let mut dim = 0;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let row: Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match row {
            Ok(row) if !row.is_empty() => {
                if dim == 0 {
                    dim = row.len();
                } else if row.len() != dim {
                    return Err(CliError::Config(format!("{}: row {} has {} columns, expected {dim}", path.display(), i + 1, row.len())));
                }
                points.extend(row);
            }
            Err(_) if i == 0 => continue,
            _ => return Err(CliError::Config(format!("{}: row {} is not numeric", path.display(), i + 1))),
        }
    }
    if dim == 0 {
        return Err(CliError::Config(format!("{}: no points", path.display())));
    }
    Ok((points, dim))
}

fn w2(args: W2Args) -> CliResult<()> {
    let (x, dx) = read_points(&args.x)?;
    let (y, dy) = read_points(&args.y)?;
    if dx != dy {
        return Err(CliError::Config(format!("dimension mismatch: {dx} vs {dy}")));
    }
    let solver = match (args.exact, args.sinkhorn) {
        (true, _) => Solver::Exact,
        (false, Some(eps)) => Solver::Sinkhorn { epsilon: Some(eps) },
        (false, None) => Solver::Auto,
    };
    let report = transport::w2(&x, &y, dx, solver)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Schedule {
            action: ScheduleAction::Validate { file },
        } => validate(file),
        Command::W2(args) => w2(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
