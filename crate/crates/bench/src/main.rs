use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{anyhow, Context};
use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use darp_bench::grid::{minutes_to_seconds, ExperimentGrid, Method, StartMode};
use darp_bench::record::{read_records, Status};
use darp_bench::report::{cost_per_request_table, cost_ratio_table, occupancy_report, Table};
use darp_bench::runner::{run_grid, run_method, MethodOptions, RunOptions};
use darp_core::instance::{
    generate_instance, load_demand_records, load_zones, parse_epoch, read_instance, resolve_relative, write_instance,
    GenerationConfig, Instance,
};
use darp_core::roadnet::{build_travel_model, load_graph, load_speed_table};
use darp_core::solution::{read_solution, validate_solution, write_solution, Solution, SolutionMeta};
use log::{info, LevelFilter};

/// Ridesharing DARP benchmark toolkit.
#[derive(Debug, Parser)]
#[command(name = "darp-bench", version)]
struct Cli {
    /// Random seed (generation; overrides the grid seed for `bench`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Grid cells solved concurrently.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Time limit in seconds for the exact method.
    #[arg(long, global = true, value_name = "SECONDS")]
    time_limit: Option<f64>,
    /// Record every wall time as 0 so that repeated runs give identical files.
    #[arg(long, global = true)]
    no_timing: bool,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the travel model and generate an instance from demand records.
    Generate(GenerateArgs),
    /// Solve an instance with one method.
    Solve(SolveArgs),
    /// Check a solution file against an instance.
    Validate(ValidateArgs),
    /// Run an experiment grid.
    Bench(BenchArgs),
    /// Derive tables from results or solutions.
    #[command(subcommand)]
    Report(ReportCommand),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StartArg {
    Origin,
    Destination,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    speeds: PathBuf,
    #[arg(long)]
    zones: PathBuf,
    #[arg(long)]
    demand: PathBuf,
    /// Instance epoch, RFC 3339.
    #[arg(long)]
    start: String,
    /// Minutes.
    #[arg(long)]
    duration: f64,
    /// Minutes.
    #[arg(long)]
    max_delay: f64,
    /// Minutes of prior demand to sample vehicle starts from.
    #[arg(long, default_value_t = 15.0)]
    lookback: f64,
    #[arg(long, default_value_t = 4)]
    capacity: u32,
    /// Area name recorded in the instance; defaults to the graph file stem.
    #[arg(long)]
    area: Option<String>,
    /// Which end of a prior trip a vehicle starts at.
    #[arg(long, value_enum, default_value_t = StartArg::Origin)]
    vehicle_start: StartArg,
    /// Instance file; the matrix is written next to it with extension `.dttm`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Ih,
    Vga,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long, value_enum)]
    method: MethodArg,
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Largest request group considered by the exact method.
    #[arg(long, default_value_t = darp_core::vga::DEFAULT_GROUP_CAP)]
    group_cap: usize,
    /// Threads for the exact method.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    solution: PathBuf,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Grid file (TOML).
    #[arg(long)]
    grid: PathBuf,
    /// Directory for matrices, instances and solutions.
    #[arg(long)]
    out: PathBuf,
    /// Results file; defaults to `results.csv` in the output directory.
    #[arg(long)]
    results: Option<PathBuf>,
    /// Threads per exact-method run.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum ReportCommand {
    /// Percent cost increase of IH over VGA per grid cell.
    CostRatio(TableArgs),
    /// Vehicle travel time per request per grid cell and method.
    CostPerRequest(TableArgs),
    /// Drive time per occupancy level for solution files.
    Occupancy(OccupancyArgs),
}

#[derive(Debug, Args)]
struct TableArgs {
    #[arg(long)]
    results: PathBuf,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OccupancyArgs {
    /// Solution files; each names its instance file.
    #[arg(required = true)]
    solutions: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure classes mapped to exit codes.
enum Failure {
    /// Bad input data or failed validation.
    Invalid(anyhow::Error),
    /// Solver error, or time limit reached without any solution.
    Solver(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 2,
            Failure::Solver(_) => 3,
        }
    }
}

fn invalid<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Invalid(e.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => LevelFilter::Warn,
        1 => LevelFilter::Info,
        _ => LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();

    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            let (Failure::Invalid(e) | Failure::Solver(e)) = &failure;
            eprintln!("error: {e:#}");
            ExitCode::from(failure.code())
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if cli.time_limit.is_some_and(|t| !(t.is_finite() && t > 0.0)) {
        return Err(invalid(anyhow!("--time-limit must be a positive number of seconds")));
    }
    match &cli.command {
        Command::Generate(args) => generate(cli, args),
        Command::Solve(args) => solve(cli, args),
        Command::Validate(args) => validate(args),
        Command::Bench(args) => bench(cli, args),
        Command::Report(cmd) => report(cmd),
    }
}

fn minutes(flag: &str, value: f64) -> Result<u64, Failure> {
    minutes_to_seconds(value).ok_or_else(|| invalid(anyhow!("--{flag} must be at least one second")))
}

fn generate(cli: &Cli, args: &GenerateArgs) -> Result<(), Failure> {
    let epoch = parse_epoch(&args.start).with_context(|| format!("--start `{}`", args.start)).map_err(invalid)?;
    let duration_s = minutes("duration", args.duration)?;
    let max_delay_s = minutes("max-delay", args.max_delay)?;
    if !(args.lookback.is_finite() && args.lookback >= 0.0) {
        return Err(invalid(anyhow!("--lookback must be non-negative")));
    }
    let graph = load_graph(&args.graph).with_context(|| args.graph.display().to_string()).map_err(invalid)?;
    let speeds = load_speed_table(&args.speeds).with_context(|| args.speeds.display().to_string()).map_err(invalid)?;
    let zones = load_zones(&args.zones).with_context(|| args.zones.display().to_string()).map_err(invalid)?;
    let records =
        load_demand_records(&args.demand).with_context(|| args.demand.display().to_string()).map_err(invalid)?;

    let (processed, matrix) = build_travel_model(&graph, &speeds).map_err(invalid)?;
    info!("travel model: {} of {} nodes kept, {} edges", processed.node_count(), graph.node_count(), processed.edges().len());
    let matrix_path = args.out.with_extension("dttm");
    let matrix_file = PathBuf::from(matrix_path.file_name().ok_or_else(|| invalid(anyhow!("--out needs a file name")))?);
    let area = match &args.area {
        Some(a) => a.clone(),
        None => args.graph.file_stem().map_or("area".into(), |s| s.to_string_lossy().into_owned()),
    };
    let config = GenerationConfig {
        area,
        epoch,
        duration_s,
        max_delay_s,
        lookback_s: (args.lookback * 60.0).round() as u64,
        capacity: args.capacity,
        seed: cli.seed.unwrap_or(0),
        vehicle_start: match args.vehicle_start {
            StartArg::Origin => StartMode::Origin,
            StartArg::Destination => StartMode::Destination,
        }
        .into(),
        matrix_file,
    };
    let (instance, sizing) = generate_instance(&records, &zones, Arc::new(matrix), &config).map_err(invalid)?;
    instance.matrix().save(&matrix_path).with_context(|| matrix_path.display().to_string()).map_err(invalid)?;
    write_instance(&instance, &args.out).with_context(|| args.out.display().to_string()).map_err(invalid)?;
    println!(
        "{}: {} requests, {} vehicles (minimal fleet {})",
        args.out.display(),
        instance.requests().len(),
        instance.vehicles().len(),
        sizing.minimal
    );
    Ok(())
}

fn load_instance(path: &Path) -> Result<Instance, Failure> {
    read_instance(path).with_context(|| path.display().to_string()).map_err(invalid)
}

fn solve(cli: &Cli, args: &SolveArgs) -> Result<(), Failure> {
    let instance = load_instance(&args.instance)?;
    let method = match args.method {
        MethodArg::Ih => Method::Ih,
        MethodArg::Vga => Method::Vga,
    };
    if args.group_cap == 0 {
        return Err(invalid(anyhow!("--group-cap must be positive")));
    }
    let options = MethodOptions {
        group_cap: args.group_cap,
        time_limit: cli.time_limit.map(Duration::from_secs_f64),
        threads: args.threads,
    };
    let outcome = run_method(&instance, method, &options);
    let Some(solution) = outcome.solution else {
        let msg = outcome.message.unwrap_or_else(|| "no solution".into());
        return Err(Failure::Solver(anyhow!("{} ({}): {msg}", method.name(), outcome.status)));
    };
    let meta = SolutionMeta {
        instance: args.instance.clone(),
        method: method.name().to_string(),
        status: outcome.status.to_string(),
        total_cost_s: solution.total_cost,
        wall_time_ms: if cli.no_timing { 0 } else { outcome.wall_time_ms },
    };
    write_solution(&meta, &solution, &args.out).with_context(|| args.out.display().to_string()).map_err(invalid)?;
    if outcome.status == Status::Timeout {
        eprintln!("warning: time limit reached; the solution is not proven optimal");
    }
    println!("{}: {} cost {} s ({})", args.out.display(), method.name(), solution.total_cost, outcome.status);
    Ok(())
}

fn validate(args: &ValidateArgs) -> Result<(), Failure> {
    let instance = load_instance(&args.instance)?;
    let (meta, solution) =
        read_solution(&args.solution).with_context(|| args.solution.display().to_string()).map_err(invalid)?;
    match validate_solution(&instance, &solution) {
        Ok(()) => {
            println!("valid: {} cost {} s", meta.method, solution.total_cost);
            Ok(())
        }
        Err(violations) => {
            for v in &violations {
                println!("{v}");
            }
            Err(invalid(anyhow!("{} violation(s)", violations.len())))
        }
    }
}

fn bench(cli: &Cli, args: &BenchArgs) -> Result<(), Failure> {
    let mut grid = ExperimentGrid::load(&args.grid).with_context(|| args.grid.display().to_string()).map_err(invalid)?;
    if let Some(seed) = cli.seed {
        grid.seed = seed;
    }
    if let Some(t) = cli.time_limit {
        grid.time_limit_s = Some(t);
    }
    let options = RunOptions {
        out_dir: args.out.clone(),
        results: args.results.clone().unwrap_or_else(|| args.out.join("results.csv")),
        jobs: cli.jobs.max(1),
        threads_per_run: args.threads,
        timing: !cli.no_timing,
    };
    let records = run_grid(&grid, &options).map_err(invalid)?;
    let failed = records.iter().filter(|r| r.status == Status::Error).count();
    println!("{}: {} runs, {} failed", options.results.display(), records.len(), failed);
    Ok(())
}

fn emit(table: &Table, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, table.to_csv()).with_context(|| path.display().to_string()).map_err(invalid),
        None => io::stdout().write_all(table.to_csv().as_bytes()).map_err(invalid),
    }
}

fn report(cmd: &ReportCommand) -> Result<(), Failure> {
    match cmd {
        ReportCommand::CostRatio(args) | ReportCommand::CostPerRequest(args) => {
            let records =
                read_records(&args.results).with_context(|| args.results.display().to_string()).map_err(invalid)?;
            let table = match cmd {
                ReportCommand::CostRatio(_) => cost_ratio_table(&records),
                _ => cost_per_request_table(&records),
            };
            emit(&table, args.out.as_deref())
        }
        ReportCommand::Occupancy(args) => {
            let mut loaded: Vec<(String, Instance, Solution)> = Vec::new();
            for path in &args.solutions {
                let (meta, solution) =
                    read_solution(path).with_context(|| path.display().to_string()).map_err(invalid)?;
                let instance_path =
                    if meta.instance.exists() { meta.instance.clone() } else { resolve_relative(path, &meta.instance) };
                let instance = load_instance(&instance_path)?;
                if let Err(v) = validate_solution(&instance, &solution) {
                    return Err(invalid(anyhow!("{}: {} violation(s), first: {}", path.display(), v.len(), v[0])));
                }
                loaded.push((path.display().to_string(), instance, solution));
            }
            emit(&occupancy_report(loaded.iter().map(|(n, i, s)| (n.as_str(), i, s))), args.out.as_deref())
        }
    }
}
