//! Solver dispatch and the experiment-grid runner.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{mpsc, Arc};
use std::time::{Duration, Instant};

use darp_core::ih::solve_ih;
use darp_core::instance::{
    generate_instance, load_demand_records, load_zones, parse_epoch, write_instance, DemandRecord, GenerationConfig,
    Instance, ZoneMap,
};
use darp_core::roadnet::{build_travel_model, load_graph, load_speed_table, TravelTimeMatrix};
use darp_core::solution::{validate_solution, write_solution, Solution, SolutionMeta};
use darp_core::vga::{solve_vga, VgaConfig, VgaError};
use log::{info, warn};
use rayon::prelude::*;
use thiserror::Error;

use crate::grid::{minutes_to_seconds, AreaSpec, ExperimentGrid, Method};
use crate::record::{RecordError, ResultsWriter, RunRecord, Status};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("results file: {0}")]
    Results(#[from] RecordError),
    #[error("output directory: {0}")]
    Io(#[from] io::Error),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodOptions {
    pub group_cap: usize,
    pub time_limit: Option<Duration>,
    /// Threads for the exact method; `None` uses the current pool.
    pub threads: Option<usize>,
}

impl Default for MethodOptions {
    fn default() -> Self {
        MethodOptions { group_cap: darp_core::vga::DEFAULT_GROUP_CAP, time_limit: None, threads: None }
    }
}

#[derive(Debug, Clone)]
pub struct MethodOutcome {
    pub status: Status,
    /// Best solution found; for `Timeout` this is the unproven incumbent.
    pub solution: Option<Solution>,
    pub wall_time_ms: u64,
    /// Failure description for `Error` and solution-less `Timeout`.
    pub message: Option<String>,
}

impl MethodOutcome {
    /// Cost as reported in results: only for statuses with a trusted solution.
    pub fn reported_cost(&self) -> Option<u64> {
        match self.status {
            Status::Optimal | Status::Feasible => self.solution.as_ref().map(|s| s.total_cost),
            Status::Timeout | Status::Error => None,
        }
    }
}

/// Runs one method and re-validates whatever it returns. Wall time covers the
/// solver call only.
pub fn run_method(instance: &Instance, method: Method, options: &MethodOptions) -> MethodOutcome {
    let started = Instant::now();
    let (status, solution, message) = match method {
        Method::Ih => match solve_ih(instance) {
            Ok(s) => (Status::Feasible, Some(s), None),
            Err(e) => (Status::Error, None, Some(e.to_string())),
        },
        Method::Vga => {
            let config = VgaConfig {
                group_cap: options.group_cap,
                time_limit: options.time_limit,
                max_groups: Some(darp_core::vga::DEFAULT_MAX_GROUPS),
                threads: options.threads,
                seed_with_ih: true,
            };
            match solve_vga(instance, &config) {
                Ok(r) if r.optimal => {
                    if r.cap_binding {
                        info!("group cap {} binds; optimal within the cap", options.group_cap);
                    }
                    (Status::Optimal, Some(r.solution), None)
                }
                Ok(r) => (Status::Timeout, Some(r.solution), None),
                Err(e @ (VgaError::Timeout | VgaError::TooManyGroups(_))) => (Status::Timeout, None, Some(e.to_string())),
                Err(e) => (Status::Error, None, Some(e.to_string())),
            }
        }
    };
    let wall_time_ms = started.elapsed().as_millis() as u64;
    if let Some(sol) = &solution {
        if let Err(violations) = validate_solution(instance, sol) {
            let listed: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            return MethodOutcome {
                status: Status::Error,
                solution: None,
                wall_time_ms,
                message: Some(format!("solver returned an invalid solution: {}", listed.join("; "))),
            };
        }
    }
    MethodOutcome { status, solution, wall_time_ms, message }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Receives matrices, instances and solutions.
    pub out_dir: PathBuf,
    /// Results file, appended to.
    pub results: PathBuf,
    /// Grid cells solved concurrently.
    pub jobs: usize,
    /// Thread budget of each exact-method run.
    pub threads_per_run: Option<usize>,
    /// When false, wall times are written as 0 so reruns are byte-identical.
    pub timing: bool,
}

struct Cell {
    area: String,
    duration_min: f64,
    max_delay_min: f64,
    method: Method,
    job: Job,
}

#[derive(Clone)]
enum Job {
    Solve { instance: Arc<Instance>, instance_file: PathBuf },
    Failed,
}

impl Cell {
    fn record(&self, requests: usize, vehicles: usize, cost: Option<u64>, wall_time_ms: u64, status: Status) -> RunRecord {
        RunRecord {
            area: self.area.clone(),
            duration_min: self.duration_min,
            max_delay_min: self.max_delay_min,
            method: self.method.name().to_string(),
            requests,
            vehicles,
            total_cost_s: cost,
            wall_time_ms,
            status,
        }
    }
}

/// Instance file name of one grid cell.
pub fn instance_file_name(area: &str, duration_min: f64, max_delay_min: f64) -> String {
    format!("{area}_dur{duration_min}_delay{max_delay_min}.inst")
}

/// Runs every (area, duration, max delay, method) cell of the grid.
///
/// For each area and duration a single instance is generated with the smallest
/// max delay of the grid; the other delays reuse its demand and fleet.
/// Failures become `error` records. Records are appended to the results file
/// in grid order as soon as they and all their predecessors are done.
pub fn run_grid(grid: &ExperimentGrid, options: &RunOptions) -> Result<Vec<RunRecord>, BenchError> {
    fs::create_dir_all(&options.out_dir)?;
    let mut writer = ResultsWriter::open(&options.results)?;
    let cells = prepare_cells(grid, &options.out_dir)?;
    let method_options = MethodOptions {
        group_cap: grid.group_cap,
        time_limit: grid.time_limit_s.map(Duration::from_secs_f64),
        threads: options.threads_per_run,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.jobs.max(1))
        .build()
        .map_err(|e| BenchError::ThreadPool(e.to_string()))?;

    let (tx, rx) = mpsc::channel::<(usize, RunRecord)>();
    let mut records: Vec<Option<RunRecord>> = vec![None; cells.len()];
    std::thread::scope(|scope| -> Result<(), BenchError> {
        let cells = &cells;
        let method_options = &method_options;
        scope.spawn(move || {
            pool.install(|| {
                cells.par_iter().enumerate().for_each_with(tx, |tx, (k, cell)| {
                    let record = solve_cell(cell, method_options, options);
                    let _ = tx.send((k, record));
                })
            })
        });
        let mut pending = BTreeMap::new();
        let mut next = 0;
        for (k, record) in rx {
            pending.insert(k, record);
            while let Some(record) = pending.remove(&next) {
                writer.append(&record)?;
                records[next] = Some(record);
                next += 1;
            }
        }
        Ok(())
    })?;
    Ok(records.into_iter().map(|r| r.expect("every cell reports")).collect())
}

fn solve_cell(cell: &Cell, method_options: &MethodOptions, options: &RunOptions) -> RunRecord {
    let Job::Solve { instance, instance_file } = &cell.job else {
        return cell.record(0, 0, None, 0, Status::Error);
    };
    let (n, m) = (instance.requests().len(), instance.vehicles().len());
    info!("{} {} min, delay {} min, {}: {n} requests, {m} vehicles", cell.area, cell.duration_min, cell.max_delay_min, cell.method.name());
    let outcome = run_method(instance, cell.method, method_options);
    let wall = if options.timing { outcome.wall_time_ms } else { 0 };
    if let Some(msg) = &outcome.message {
        warn!("{} {} min, delay {} min, {}: {msg}", cell.area, cell.duration_min, cell.max_delay_min, cell.method.name());
    }
    if let Some(solution) = &outcome.solution {
        let name = instance_file.file_name().expect("instance file name").to_string_lossy().into_owned();
        let meta = SolutionMeta {
            instance: PathBuf::from(&name),
            method: cell.method.name().to_string(),
            status: outcome.status.to_string(),
            total_cost_s: solution.total_cost,
            wall_time_ms: wall,
        };
        let path = instance_file.with_extension(format!("{}.sol", cell.method.name()));
        if let Err(e) = write_solution(&meta, solution, &path) {
            warn!("writing {}: {e}", path.display());
            return cell.record(n, m, None, wall, Status::Error);
        }
    }
    cell.record(n, m, outcome.reported_cost(), wall, outcome.status)
}

fn prepare_cells(grid: &ExperimentGrid, out_dir: &Path) -> Result<Vec<Cell>, BenchError> {
    let min_delay = grid.max_delays_min.iter().copied().fold(f64::INFINITY, f64::min);
    let mut cells = Vec::new();
    for area in &grid.areas {
        let inputs = match load_area(area, out_dir) {
            Ok(inputs) => Some(inputs),
            Err(e) => {
                warn!("area {}: {e}", area.name);
                None
            }
        };
        for &duration in &grid.durations_min {
            let base = inputs.as_ref().and_then(|inputs| {
                let config = GenerationConfig {
                    area: area.name.clone(),
                    epoch: parse_epoch(&area.start).expect("validated grid"),
                    duration_s: minutes_to_seconds(duration).expect("validated grid"),
                    max_delay_s: minutes_to_seconds(min_delay).expect("validated grid"),
                    lookback_s: (grid.lookback_min * 60.0).round() as u64,
                    capacity: grid.capacity,
                    seed: grid.seed,
                    vehicle_start: area.vehicle_start.into(),
                    matrix_file: inputs.matrix_file.clone(),
                };
                generate_instance(&inputs.records, &inputs.zones, Arc::clone(&inputs.matrix), &config)
                    .map(|(instance, _)| instance)
                    .map_err(|e| warn!("area {}, duration {duration} min: {e}", area.name))
                    .ok()
            });
            for &delay in &grid.max_delays_min {
                let job = match &base {
                    Some(base) => {
                        let instance = base.with_max_delay(minutes_to_seconds(delay).expect("validated grid"));
                        let instance_file = out_dir.join(instance_file_name(&area.name, duration, delay));
                        match instance.map_err(|e| e.to_string()).and_then(|i| {
                            write_instance(&i, &instance_file).map_err(|e| e.to_string()).map(|_| i)
                        }) {
                            Ok(instance) => Job::Solve { instance: Arc::new(instance), instance_file },
                            Err(e) => {
                                warn!("{}: {e}", instance_file.display());
                                Job::Failed
                            }
                        }
                    }
                    None => Job::Failed,
                };
                for &method in &grid.methods {
                    cells.push(Cell {
                        area: area.name.clone(),
                        duration_min: duration,
                        max_delay_min: delay,
                        method,
                        job: job.clone(),
                    });
                }
            }
        }
    }
    Ok(cells)
}

struct AreaInputs {
    matrix: Arc<TravelTimeMatrix>,
    matrix_file: PathBuf,
    zones: ZoneMap,
    records: Vec<DemandRecord>,
}

fn load_area(area: &AreaSpec, out_dir: &Path) -> Result<AreaInputs, String> {
    let graph = load_graph(&area.graph).map_err(|e| format!("{}: {e}", area.graph.display()))?;
    let speeds = load_speed_table(&area.speeds).map_err(|e| format!("{}: {e}", area.speeds.display()))?;
    let zones = load_zones(&area.zones).map_err(|e| format!("{}: {e}", area.zones.display()))?;
    let records = load_demand_records(&area.demand).map_err(|e| format!("{}: {e}", area.demand.display()))?;
    let (_, matrix) = build_travel_model(&graph, &speeds).map_err(|e| e.to_string())?;
    let matrix_file = PathBuf::from(format!("{}.dttm", area.name));
    matrix.save(out_dir.join(&matrix_file)).map_err(|e| e.to_string())?;
    Ok(AreaInputs { matrix: Arc::new(matrix), matrix_file, zones, records })
}
