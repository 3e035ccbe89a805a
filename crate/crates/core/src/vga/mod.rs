//! Vehicle-group assignment.
//!
//! For every vehicle, feasible request groups are grown one request at a time;
//! a group is only tried if all of its one-smaller subsets were feasible. Each
//! group's cost is its optimal route cost. A set-partitioning program then
//! picks exactly one group per vehicle (the empty group included) so that
//! every request is covered exactly once at minimum total cost.

mod bnb;
mod routing;

pub use bnb::{
    BranchAndBound, Column, ExactSolver, PartitionError, PartitionProblem, PartitionSolution,
};
pub use routing::{best_route_within, GroupRoute};

use std::collections::{HashMap, HashSet};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use log::debug;
use rayon::prelude::*;
use thiserror::Error;

use crate::ih::solve_ih;
use crate::instance::Instance;
use crate::solution::{Route, Solution, Stop};

pub const DEFAULT_GROUP_CAP: usize = 8;

/// Groups kept in memory before generation gives up.
pub const DEFAULT_MAX_GROUPS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VgaError {
    #[error("group of {size} requests exceeds the cap of {cap}")]
    GroupTooLarge { size: usize, cap: usize },
    #[error("requests {0:?} are not feasible for any vehicle")]
    Uncovered(Vec<usize>),
    #[error("time limit reached without a solution")]
    Timeout,
    #[error("more than {0} feasible groups")]
    TooManyGroups(usize),
    #[error("no assignment covers every request exactly once")]
    Infeasible,
    #[error("assignment solver failed: {0}")]
    Solver(String),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VehicleGroup {
    pub vehicle: usize,
    /// Ascending request ids.
    pub requests: Vec<usize>,
    pub stops: Vec<Stop>,
    pub cost: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignmentProblem {
    pub groups: Vec<VehicleGroup>,
    pub n_requests: usize,
    pub n_vehicles: usize,
    pub group_cap: usize,
    /// Some vehicle has a feasible group of exactly `group_cap` requests, so
    /// larger feasible groups may have been cut off.
    pub cap_binding: bool,
}

impl AssignmentProblem {
    /// Checks that every request appears in some group and every vehicle has
    /// its empty group.
    pub fn new(
        groups: Vec<VehicleGroup>,
        n_requests: usize,
        n_vehicles: usize,
        group_cap: usize,
        cap_binding: bool,
    ) -> Result<AssignmentProblem, VgaError> {
        let mut covered = vec![false; n_requests];
        let mut idle = vec![false; n_vehicles];
        for g in &groups {
            if g.requests.is_empty() {
                idle[g.vehicle] = true;
            }
            for &r in &g.requests {
                covered[r] = true;
            }
        }
        let uncovered: Vec<usize> = (0..n_requests).filter(|&r| !covered[r]).collect();
        if !uncovered.is_empty() {
            return Err(VgaError::Uncovered(uncovered));
        }
        if let Some(v) = idle.iter().position(|&x| !x) {
            return Err(VgaError::Solver(format!("vehicle {v} has no empty group")));
        }
        Ok(AssignmentProblem {
            groups,
            n_requests,
            n_vehicles,
            group_cap,
            cap_binding,
        })
    }

    /// Rows `0..n` are requests, rows `n..n+m` are vehicles.
    pub fn partition_problem(&self) -> PartitionProblem {
        let columns = self
            .groups
            .iter()
            .map(|g| {
                let mut rows = g.requests.clone();
                rows.push(self.n_requests + g.vehicle);
                Column { rows, cost: g.cost }
            })
            .collect();
        PartitionProblem {
            n_rows: self.n_requests + self.n_vehicles,
            columns,
        }
    }
}

/// Exact optimal route of `vehicle` through `group`, or `None` if the group
/// is infeasible for it.
pub fn best_route_for_group(
    instance: &Instance,
    vehicle: usize,
    group: &[usize],
    cap: usize,
) -> Result<Option<GroupRoute>, VgaError> {
    if group.len() > cap {
        return Err(VgaError::GroupTooLarge {
            size: group.len(),
            cap,
        });
    }
    Ok(best_route_within(instance, vehicle, group, u64::MAX))
}

struct VehicleGroups {
    groups: Vec<VehicleGroup>,
    reached_cap: bool,
}

fn groups_for_vehicle(
    instance: &Instance,
    vehicle: usize,
    cap: usize,
    expired: &dyn Fn() -> bool,
    admit: &dyn Fn() -> bool,
) -> Option<VehicleGroups> {
    const CHECK_EVERY: usize = 256;
    let mut groups = vec![VehicleGroup {
        vehicle,
        requests: Vec::new(),
        stops: Vec::new(),
        cost: 0,
    }];
    let mut level: Vec<Vec<usize>> = Vec::new();
    let mut tried = 0usize;
    for r in 0..instance.requests().len() {
        if let Some(route) = best_route_within(instance, vehicle, &[r], u64::MAX) {
            if !admit() {
                return None;
            }
            level.push(vec![r]);
            groups.push(VehicleGroup {
                vehicle,
                requests: vec![r],
                stops: route.stops,
                cost: route.cost,
            });
        }
    }
    let mut size = 1;
    while size < cap && !level.is_empty() {
        if expired() {
            return None;
        }
        let feasible: HashSet<&[usize]> = level.iter().map(|g| g.as_slice()).collect();
        let mut next = Vec::new();
        let mut subset = Vec::with_capacity(size);
        // `level` is sorted, so groups sharing a prefix are contiguous.
        for a in 0..level.len() {
            let prefix = &level[a][..size - 1];
            for b in a + 1..level.len() {
                if &level[b][..size - 1] != prefix {
                    break;
                }
                tried += 1;
                if tried % CHECK_EVERY == 0 && expired() {
                    return None;
                }
                let mut candidate = level[a].clone();
                candidate.push(level[b][size - 1]);
                // Subsets dropping either of the last two elements are `a` and `b`.
                let closed = (0..size - 1).all(|skip| {
                    subset.clear();
                    subset.extend(
                        candidate
                            .iter()
                            .enumerate()
                            .filter(|&(i, _)| i != skip)
                            .map(|(_, &r)| r),
                    );
                    feasible.contains(subset.as_slice())
                });
                if !closed {
                    continue;
                }
                if let Some(route) = best_route_within(instance, vehicle, &candidate, u64::MAX) {
                    if !admit() {
                        return None;
                    }
                    groups.push(VehicleGroup {
                        vehicle,
                        requests: candidate.clone(),
                        stops: route.stops,
                        cost: route.cost,
                    });
                    next.push(candidate);
                }
            }
        }
        level = next;
        size += 1;
    }
    let reached_cap = size == cap && !level.is_empty();
    Some(VehicleGroups {
        groups,
        reached_cap,
    })
}

fn generate_groups_until(
    instance: &Instance,
    group_cap: usize,
    max_groups: Option<usize>,
    deadline: Option<Instant>,
) -> Result<AssignmentProblem, VgaError> {
    let timed_out = AtomicBool::new(false);
    let generated = AtomicUsize::new(0);
    let admit = || max_groups.map_or(true, |max| generated.fetch_add(1, Ordering::Relaxed) < max);
    let expired = || {
        if timed_out.load(Ordering::Relaxed) || deadline.is_some_and(|d| Instant::now() >= d) {
            timed_out.store(true, Ordering::Relaxed);
            true
        } else {
            false
        }
    };
    let per_vehicle: Vec<Option<VehicleGroups>> = (0..instance.vehicles().len())
        .into_par_iter()
        .map(|v| {
            if expired() {
                None
            } else {
                groups_for_vehicle(instance, v, group_cap, &expired, &admit)
            }
        })
        .collect();
    if timed_out.load(Ordering::Relaxed) {
        return Err(VgaError::Timeout);
    }
    if let Some(max) = max_groups.filter(|&max| generated.load(Ordering::Relaxed) > max) {
        return Err(VgaError::TooManyGroups(max));
    }
    let mut groups = Vec::new();
    let mut cap_binding = false;
    for vg in per_vehicle.into_iter().flatten() {
        cap_binding |= vg.reached_cap;
        groups.extend(vg.groups);
    }
    AssignmentProblem::new(
        groups,
        instance.requests().len(),
        instance.vehicles().len(),
        group_cap,
        cap_binding,
    )
}

/// Enumerates every feasible (vehicle, group) pair up to `group_cap` requests.
pub fn generate_groups(
    instance: &Instance,
    group_cap: usize,
) -> Result<AssignmentProblem, VgaError> {
    generate_groups_until(instance, group_cap, None, None)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VgaConfig {
    pub group_cap: usize,
    pub time_limit: Option<Duration>,
    /// Generation stops once this many non-empty groups exist; the run then
    /// ends like a timeout.
    pub max_groups: Option<usize>,
    /// Worker threads for group generation; `None` uses the global pool.
    pub threads: Option<usize>,
    /// Seed the assignment search with the insertion-heuristic solution.
    pub seed_with_ih: bool,
}

impl Default for VgaConfig {
    fn default() -> Self {
        VgaConfig {
            group_cap: DEFAULT_GROUP_CAP,
            time_limit: None,
            max_groups: Some(DEFAULT_MAX_GROUPS),
            threads: None,
            seed_with_ih: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VgaResult {
    pub solution: Solution,
    /// Optimal among all assignments with groups within the cap.
    pub optimal: bool,
    pub cap_binding: bool,
    pub lower_bound: u64,
    pub groups: usize,
    pub nodes: usize,
}

fn assemble(instance: &Instance, problem: &AssignmentProblem, selected: &[usize]) -> Solution {
    Solution::new(
        instance,
        selected.iter().map(|&g| {
            let group = &problem.groups[g];
            Route {
                vehicle: group.vehicle,
                stops: group.stops.clone(),
            }
        }),
    )
}

/// Solves the assignment program for `problem` and builds the solution.
///
/// `incumbent`, if given, is a feasible solution of the same instance used to
/// seed the search. Groups of the incumbent that are missing from the problem
/// (larger than the cap) are added as extra columns.
pub fn solve_assignment(
    instance: &Instance,
    mut problem: AssignmentProblem,
    incumbent: Option<&Solution>,
    deadline: Option<Instant>,
    solver: &dyn ExactSolver,
) -> Result<VgaResult, VgaError> {
    let mut seed: Option<Vec<usize>> = None;
    if let Some(sol) = incumbent {
        let index: HashMap<(usize, &[usize]), usize> = problem
            .groups
            .iter()
            .enumerate()
            .map(|(k, g)| ((g.vehicle, g.requests.as_slice()), k))
            .collect();
        let mut selected = Vec::new();
        let mut extra = Vec::new();
        for route in &sol.routes {
            let mut requests: Vec<usize> = route.requests().collect();
            requests.sort_unstable();
            match index.get(&(route.vehicle, requests.as_slice())) {
                Some(&k) => selected.push(k),
                None => {
                    let best = best_route_within(instance, route.vehicle, &requests, u64::MAX)
                        .expect("incumbent route is feasible");
                    extra.push(VehicleGroup {
                        vehicle: route.vehicle,
                        requests,
                        stops: best.stops,
                        cost: best.cost,
                    });
                }
            }
        }
        for group in extra {
            selected.push(problem.groups.len());
            problem.groups.push(group);
        }
        seed = Some(selected);
    }

    let partition = problem.partition_problem();
    let result = solver
        .solve(&partition, seed.as_deref(), deadline)
        .map_err(|e| match e {
            PartitionError::Infeasible => VgaError::Infeasible,
            PartitionError::Timeout => VgaError::Timeout,
            PartitionError::Lp(msg) => VgaError::Solver(msg),
        })?;
    debug!(
        "assignment: {} columns, {} nodes, cost {}, bound {}",
        partition.columns.len(),
        result.nodes,
        result.cost,
        result.lower_bound
    );
    let solution = assemble(instance, &problem, &result.selected);
    debug_assert_eq!(solution.total_cost, result.cost);
    Ok(VgaResult {
        solution,
        optimal: result.proven_optimal,
        cap_binding: problem.cap_binding,
        lower_bound: result.lower_bound,
        groups: problem.groups.len(),
        nodes: result.nodes,
    })
}

/// Group generation followed by the assignment program, with the built-in
/// branch and bound.
pub fn solve_vga(instance: &Instance, config: &VgaConfig) -> Result<VgaResult, VgaError> {
    solve_vga_with(instance, config, &BranchAndBound)
}

pub fn solve_vga_with(
    instance: &Instance,
    config: &VgaConfig,
    solver: &dyn ExactSolver,
) -> Result<VgaResult, VgaError> {
    let run = || {
        let deadline = config.time_limit.map(|t| Instant::now() + t);
        let ih = if config.seed_with_ih {
            solve_ih(instance).ok()
        } else {
            None
        };
        let fallback = |err: VgaError| match (&err, &ih) {
            (VgaError::Timeout | VgaError::TooManyGroups(_), Some(sol)) => Ok(VgaResult {
                solution: sol.clone(),
                optimal: false,
                cap_binding: false,
                lower_bound: 0,
                groups: 0,
                nodes: 0,
            }),
            _ => Err(err),
        };
        let problem =
            match generate_groups_until(instance, config.group_cap, config.max_groups, deadline) {
                Ok(p) => p,
                Err(e) => return fallback(e),
            };
        debug!(
            "generated {} groups (cap binding: {})",
            problem.groups.len(),
            problem.cap_binding
        );
        solve_assignment(instance, problem, ih.as_ref(), deadline, solver).or_else(fallback)
    };
    match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| VgaError::ThreadPool(e.to_string()))?
            .install(run),
        None => run(),
    }
}
