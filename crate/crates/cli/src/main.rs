use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use randla::io::{write_edge_list_file, write_matrix_market_file, write_vector_string, MatrixFormat};
use randla::RngSeed;
use randla_cli::experiment::THREADS_ENV;
use randla_cli::solve::{solve_files, SolveMethod, SolveOptions};
use randla_cli::{emit_report, generate_graph, generate_matrix, run_experiment, Experiment, ExperimentConfig, ExperimentReport, Profile, ProfileParams, ReportFormat};

#[derive(Parser)]
#[command(name = "randla", version, about = "Randomized linear algebra experiments and solvers")]
#[command(after_help = "Run an experiment with `randla <experiment> --config <path> --seed <u64> --trials <n> --out <dir> [--format json|csv]`.\n`randla list` prints the experiment names. RANDLA_THREADS caps the number of trials run in parallel.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic matrix (Matrix Market) or graph (edge list).
    Gen(GenArgs),
    /// Solve a least-squares or Laplacian system read from files.
    Solve(SolveArgs),
    /// Check a JSON report's aggregates against its trial records.
    Verify { report: PathBuf },
    /// List experiments and generator profiles.
    List,
    #[command(external_subcommand)]
    Run(Vec<String>),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    profile: Profile,
    #[arg(long, default_value_t = 200)]
    m: usize,
    /// Columns, or vertices for graph profiles.
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 5)]
    rank: usize,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long)]
    graph_p: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Matrix Market layout for matrix profiles.
    #[arg(long, default_value = "array", value_parser = ["array", "coordinate"])]
    layout: String,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    /// Matrix Market file (for Laplacian methods, a Laplacian `.mtx` or an edge list).
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    rhs: PathBuf,
    #[arg(long)]
    method: SolveMethod,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    #[arg(long, default_value_t = 4.0)]
    gamma: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    /// Write the solution vector here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Parser)]
struct RunArgs {
    /// TOML or JSON experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "json")]
    format: ReportFormat,
}

fn write_output(out: Option<&PathBuf>, body: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, body).with_context(|| format!("writing {}", path.display())),
        None => Ok(std::io::stdout().write_all(body.as_bytes())?),
    }
}

fn gen(args: GenArgs) -> Result<()> {
    let params = ProfileParams { rank: args.rank, noise: args.noise, alpha: args.alpha, graph_p: args.graph_p };
    let seed = RngSeed::from_seed(args.seed);
    if args.profile.is_graph() {
        let g = generate_graph(args.profile, args.n, &params, seed)?;
        return match &args.out {
            Some(path) => Ok(write_edge_list_file(path, &g)?),
            None => write_output(None, &randla::io::write_edge_list_string(&g)),
        };
    }
    let a = generate_matrix(args.profile, args.m, args.n, &params, seed)?;
    let format = if args.layout == "coordinate" { MatrixFormat::Coordinate } else { MatrixFormat::Array };
    match &args.out {
        Some(path) => Ok(write_matrix_market_file(path, &a, format)?),
        None => {
            let body = match format {
                MatrixFormat::Array => randla::io::write_array_string(&a),
                MatrixFormat::Coordinate => randla::io::write_coordinate_dense(&a),
            };
            write_output(None, &body)
        }
    }
}

fn solve(args: SolveArgs) -> Result<()> {
    let opts = SolveOptions { seed: args.seed, r: args.r, eps: args.eps, gamma: args.gamma, tol: args.tol, max_iter: args.max_iter };
    let summary = solve_files(&args.matrix, &args.rhs, args.method, &opts)?;
    write_output(args.out.as_ref(), &write_vector_string(&summary.x))?;
    let mut meta = serde_json::to_value(&summary)?;
    if let Some(obj) = meta.as_object_mut() {
        obj.remove("x");
    }
    eprintln!("{meta}");
    if !summary.success {
        bail!("solver did not report success");
    }
    Ok(())
}

fn run(argv: Vec<String>) -> Result<()> {
    let name = argv.first().cloned().unwrap_or_default();
    let exp: Experiment = name.parse()?;
    let args = RunArgs::try_parse_from(std::iter::once(format!("randla {name}")).chain(argv.into_iter().skip(1))).map_err(|e| {
        let _ = e.print();
        anyhow::anyhow!("invalid arguments for experiment {name}")
    })?;
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::for_experiment(exp.tag()),
    };
    if config.experiment.is_empty() {
        config.experiment = exp.tag().to_string();
    } else if config.experiment.parse::<Experiment>()? != exp {
        bail!("config describes experiment '{}' but '{}' was requested", config.experiment, exp);
    }
    config.experiment = exp.tag().to_string();
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(trials) = args.trials {
        config.trials = trials;
    }
    if let Some(out) = &args.out {
        config.output = Some(out.clone());
    }
    let out_dir = config.output.clone().unwrap_or_else(|| PathBuf::from("."));
    let report = run_experiment(&config)?;
    let path = emit_report(&report, &out_dir, args.format)?;
    let agg = &report.aggregates;
    eprintln!(
        "{}: {} trials, success rate {:.3}, {} errors -> {}",
        exp,
        report.trials.len(),
        agg.get("success_rate").copied().unwrap_or(f64::NAN),
        agg.get("errors").copied().unwrap_or(0.0),
        path.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(args) => gen(args),
        Command::Solve(args) => solve(args),
        Command::Verify { report } => ExperimentReport::load(&report).map(|r| println!("ok: {} trials, aggregates consistent", r.trials.len())),
        Command::List => {
            println!("experiments:");
            Experiment::ALL.iter().for_each(|e| println!("  {e}"));
            println!("profiles:");
            Profile::ALL.iter().for_each(|p| println!("  {p}"));
            println!("environment:\n  {THREADS_ENV}  maximum trials run in parallel");
            Ok(())
        }
        Command::Run(argv) => run(argv),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
