//! Routes, schedules, feasibility, costs and validation shared by all solvers.
//!
//! Vehicles leave their start location at time 0, dwell time at stops is zero,
//! waiting is free, and a request is served on time iff its dropoff happens no
//! later than `t + f_t(o, d) + Δ`. [`compute_schedule`] is the one feasibility
//! check the solvers rely on; [`validate_solution`] re-derives everything on
//! its own.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::instance::Instance;
use crate::roadnet::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StopKind {
    Pickup,
    Dropoff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Stop {
    pub kind: StopKind,
    pub request: usize,
}

impl Stop {
    pub fn pickup(request: usize) -> Stop {
        Stop {
            kind: StopKind::Pickup,
            request,
        }
    }

    pub fn dropoff(request: usize) -> Stop {
        Stop {
            kind: StopKind::Dropoff,
            request,
        }
    }

    /// Dense matrix index of the stop's location.
    #[inline]
    pub fn loc(&self, instance: &Instance) -> usize {
        match self.kind {
            StopKind::Pickup => instance.origin_loc(self.request),
            StopKind::Dropoff => instance.destination_loc(self.request),
        }
    }

    pub fn location(&self, instance: &Instance) -> NodeId {
        let r = &instance.requests()[self.request];
        match self.kind {
            StopKind::Pickup => r.origin,
            StopKind::Dropoff => r.destination,
        }
    }
}

impl fmt::Display for Stop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            StopKind::Pickup => write!(f, "p:{}", self.request),
            StopKind::Dropoff => write!(f, "d:{}", self.request),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Route {
    pub vehicle: usize,
    pub stops: Vec<Stop>,
}

impl Route {
    pub fn empty(vehicle: usize) -> Route {
        Route {
            vehicle,
            stops: Vec::new(),
        }
    }

    pub fn requests(&self) -> impl Iterator<Item = usize> + '_ {
        self.stops
            .iter()
            .filter(|s| s.kind == StopKind::Pickup)
            .map(|s| s.request)
    }
}

/// A constraint broken by a route or a solution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Unserved {
        request: usize,
    },
    ServedMoreThanOnce {
        request: usize,
    },
    UnknownRequest {
        vehicle: usize,
        request: usize,
    },
    UnknownVehicle {
        vehicle: usize,
    },
    DuplicateRoute {
        vehicle: usize,
    },
    DuplicateStop {
        vehicle: usize,
        stop: Stop,
    },
    DropoffBeforePickup {
        vehicle: usize,
        request: usize,
    },
    MissingDropoff {
        vehicle: usize,
        request: usize,
    },
    CapacityExceeded {
        vehicle: usize,
        position: usize,
        load: u32,
        capacity: u32,
    },
    LatePickup {
        vehicle: usize,
        request: usize,
        service: u64,
        latest: u64,
    },
    LateDropoff {
        vehicle: usize,
        request: usize,
        service: u64,
        deadline: u64,
    },
    CostMismatch {
        reported: u64,
        actual: u64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match *self {
            Unserved { request } => write!(f, "request {request} unserved"),
            ServedMoreThanOnce { request } => write!(f, "request {request} served more than once"),
            UnknownRequest { vehicle, request } => {
                write!(f, "vehicle {vehicle}: unknown request {request}")
            }
            UnknownVehicle { vehicle } => write!(f, "unknown vehicle {vehicle}"),
            DuplicateRoute { vehicle } => write!(f, "vehicle {vehicle} has more than one route"),
            DuplicateStop { vehicle, stop } => write!(f, "vehicle {vehicle}: stop {stop} repeated"),
            DropoffBeforePickup { vehicle, request } => {
                write!(
                    f,
                    "vehicle {vehicle}: request {request} dropped off before pickup"
                )
            }
            MissingDropoff { vehicle, request } => {
                write!(f, "vehicle {vehicle}: request {request} never dropped off")
            }
            CapacityExceeded {
                vehicle,
                position,
                load,
                capacity,
            } => {
                write!(f, "vehicle {vehicle}: load {load} exceeds capacity {capacity} after stop {position}")
            }
            LatePickup {
                vehicle,
                request,
                service,
                latest,
            } => {
                write!(
                    f,
                    "vehicle {vehicle}: request {request} picked up at {service} > {latest}"
                )
            }
            LateDropoff {
                vehicle,
                request,
                service,
                deadline,
            } => {
                write!(
                    f,
                    "vehicle {vehicle}: request {request} dropped off at {service} > {deadline}"
                )
            }
            CostMismatch { reported, actual } => {
                write!(f, "reported cost {reported} s, actual {actual} s")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScheduleError {
    #[error("unknown vehicle {0}")]
    UnknownVehicle(usize),
    #[error("stop references unknown request {0}")]
    DanglingRequest(usize),
    #[error("duplicate stop {0}")]
    DuplicateStop(Stop),
    #[error("infeasible: {0}")]
    Infeasible(Violation),
}

/// Service time at every stop.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Schedule {
    pub service_times: Vec<u64>,
}

/// Result of walking a stop sequence without structural checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Walk {
    pub cost: u64,
    pub end_time: u64,
}

/// Earliest-feasible walk of `stops` by `vehicle`. Assumes every request id is
/// valid and every stop appears at most once; reports the first violated
/// constraint in stop order. Calls `on_service` with each service time.
#[inline]
pub(crate) fn walk_route(
    instance: &Instance,
    vehicle: usize,
    stops: &[Stop],
    mut on_service: impl FnMut(u64),
) -> Result<Walk, Violation> {
    let capacity = instance.vehicles()[vehicle].capacity;
    let mut loc = instance.start_loc(vehicle);
    let mut time = 0u64;
    let mut cost = 0u64;
    let mut load = 0u32;
    let mut onboard = Onboard::default();
    for (position, stop) in stops.iter().enumerate() {
        let next = stop.loc(instance);
        let leg = instance.travel_time(loc, next);
        cost += leg;
        time += leg;
        loc = next;
        match stop.kind {
            StopKind::Pickup => {
                time = time.max(instance.requests()[stop.request].pickup_time);
                load += 1;
                if load > capacity {
                    return Err(Violation::CapacityExceeded {
                        vehicle,
                        position,
                        load,
                        capacity,
                    });
                }
                onboard.insert(stop.request);
            }
            StopKind::Dropoff => {
                if !onboard.remove(stop.request) {
                    return Err(Violation::DropoffBeforePickup {
                        vehicle,
                        request: stop.request,
                    });
                }
                load -= 1;
                let deadline = instance.dropoff_deadline(stop.request);
                if time > deadline {
                    return Err(Violation::LateDropoff {
                        vehicle,
                        request: stop.request,
                        service: time,
                        deadline,
                    });
                }
            }
        }
        on_service(time);
    }
    if let Some(request) = onboard.first() {
        return Err(Violation::MissingDropoff { vehicle, request });
    }
    Ok(Walk {
        cost,
        end_time: time,
    })
}

/// Requests picked up and not yet dropped off. Small, so a linear scan wins.
#[derive(Default)]
struct Onboard(Vec<usize>);

impl Onboard {
    #[inline]
    fn insert(&mut self, request: usize) {
        self.0.push(request);
    }

    #[inline]
    fn remove(&mut self, request: usize) -> bool {
        match self.0.iter().position(|&r| r == request) {
            Some(i) => {
                self.0.swap_remove(i);
                true
            }
            None => false,
        }
    }

    fn first(&self) -> Option<usize> {
        self.0.iter().copied().min()
    }
}

/// Earliest-feasible schedule of `stops` for `vehicle`, or the first violated
/// constraint.
pub fn compute_schedule(
    instance: &Instance,
    vehicle: usize,
    stops: &[Stop],
) -> Result<Schedule, ScheduleError> {
    if vehicle >= instance.vehicles().len() {
        return Err(ScheduleError::UnknownVehicle(vehicle));
    }
    let n = instance.requests().len();
    let mut seen = std::collections::HashSet::with_capacity(stops.len());
    for &stop in stops {
        if stop.request >= n {
            return Err(ScheduleError::DanglingRequest(stop.request));
        }
        if !seen.insert(stop) {
            return Err(ScheduleError::DuplicateStop(stop));
        }
    }
    let mut service_times = Vec::with_capacity(stops.len());
    walk_route(instance, vehicle, stops, |t| service_times.push(t))
        .map_err(ScheduleError::Infeasible)?;
    Ok(Schedule { service_times })
}

/// Total driven time of the route from the vehicle's start; waiting is free.
pub fn route_cost(instance: &Instance, route: &Route) -> u64 {
    let mut loc = instance.start_loc(route.vehicle);
    let mut cost = 0;
    for stop in &route.stops {
        let next = stop.loc(instance);
        cost += instance.travel_time(loc, next);
        loc = next;
    }
    cost
}

/// One route per vehicle, indexed by vehicle id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub routes: Vec<Route>,
    pub total_cost: u64,
}

impl Solution {
    /// Builds a solution, filling in empty routes for unlisted vehicles and
    /// computing the total cost.
    pub fn new(instance: &Instance, routes: impl IntoIterator<Item = Route>) -> Solution {
        let mut all: Vec<Route> = (0..instance.vehicles().len()).map(Route::empty).collect();
        for r in routes {
            let v = r.vehicle;
            all[v] = r;
        }
        let total_cost = all.iter().map(|r| route_cost(instance, r)).sum();
        Solution {
            routes: all,
            total_cost,
        }
    }

    pub fn served_requests(&self) -> usize {
        self.routes.iter().map(|r| r.requests().count()).sum()
    }
}

/// Checks every route and coverage constraint and returns all violations found.
///
/// Deliberately independent of [`compute_schedule`]: the schedule is re-derived
/// here from the raw instance data.
pub fn validate_solution(instance: &Instance, solution: &Solution) -> Result<(), Vec<Violation>> {
    let n = instance.requests().len();
    let m = instance.vehicles().len();
    let delta = instance.max_delay();
    let matrix = instance.matrix();
    let tt = |a: NodeId, b: NodeId| matrix.travel_time(a, b).expect("validated instance") as u64;

    let mut violations = Vec::new();
    let mut pickups_served = vec![0usize; n];
    let mut route_seen = vec![false; m];
    let mut actual_cost = 0u64;

    for route in &solution.routes {
        let vehicle = route.vehicle;
        if vehicle >= m {
            violations.push(Violation::UnknownVehicle { vehicle });
            continue;
        }
        if std::mem::replace(&mut route_seen[vehicle], true) {
            violations.push(Violation::DuplicateRoute { vehicle });
        }
        let v = &instance.vehicles()[vehicle];
        let mut at = v.start;
        let mut time = 0u64;
        let mut load = 0u32;
        let mut picked_at: BTreeMap<usize, u64> = BTreeMap::new();
        let mut dropped: BTreeMap<usize, u64> = BTreeMap::new();
        for (position, stop) in route.stops.iter().enumerate() {
            let Some(req) = instance.requests().get(stop.request) else {
                violations.push(Violation::UnknownRequest {
                    vehicle,
                    request: stop.request,
                });
                continue;
            };
            let next = match stop.kind {
                StopKind::Pickup => req.origin,
                StopKind::Dropoff => req.destination,
            };
            let leg = tt(at, next);
            actual_cost += leg;
            time += leg;
            at = next;
            match stop.kind {
                StopKind::Pickup => {
                    if picked_at.contains_key(&req.id) {
                        violations.push(Violation::DuplicateStop {
                            vehicle,
                            stop: *stop,
                        });
                        continue;
                    }
                    if time < req.pickup_time {
                        time = req.pickup_time;
                    }
                    picked_at.insert(req.id, time);
                    pickups_served[req.id] += 1;
                    load += 1;
                    if load > v.capacity {
                        violations.push(Violation::CapacityExceeded {
                            vehicle,
                            position,
                            load,
                            capacity: v.capacity,
                        });
                    }
                    if time > req.pickup_time + delta {
                        violations.push(Violation::LatePickup {
                            vehicle,
                            request: req.id,
                            service: time,
                            latest: req.pickup_time + delta,
                        });
                    }
                }
                StopKind::Dropoff => {
                    if dropped.contains_key(&req.id) {
                        violations.push(Violation::DuplicateStop {
                            vehicle,
                            stop: *stop,
                        });
                        continue;
                    }
                    let Some(&pickup) = picked_at.get(&req.id) else {
                        violations.push(Violation::DropoffBeforePickup {
                            vehicle,
                            request: req.id,
                        });
                        continue;
                    };
                    dropped.insert(req.id, time);
                    load -= 1;
                    debug_assert!(time >= pickup + tt(req.origin, req.destination));
                    let deadline = req.pickup_time + tt(req.origin, req.destination) + delta;
                    if time > deadline {
                        violations.push(Violation::LateDropoff {
                            vehicle,
                            request: req.id,
                            service: time,
                            deadline,
                        });
                    }
                }
            }
        }
        for &request in picked_at.keys() {
            if !dropped.contains_key(&request) {
                violations.push(Violation::MissingDropoff { vehicle, request });
            }
        }
    }

    for (request, &count) in pickups_served.iter().enumerate() {
        match count {
            0 => violations.push(Violation::Unserved { request }),
            1 => {}
            _ => violations.push(Violation::ServedMoreThanOnce { request }),
        }
    }
    if actual_cost != solution.total_cost {
        violations.push(Violation::CostMismatch {
            reported: solution.total_cost,
            actual: actual_cost,
        });
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// Driven seconds per onboard passenger count (0 = empty), levels 0..=max capacity.
pub fn occupancy_histogram(instance: &Instance, solution: &Solution) -> BTreeMap<u32, u64> {
    let max_capacity = instance
        .vehicles()
        .iter()
        .map(|v| v.capacity)
        .max()
        .unwrap_or(0);
    let mut hist: BTreeMap<u32, u64> = (0..=max_capacity).map(|l| (l, 0)).collect();
    for route in &solution.routes {
        let mut loc = instance.start_loc(route.vehicle);
        let mut load = 0u32;
        for stop in &route.stops {
            let next = stop.loc(instance);
            *hist.entry(load).or_insert(0) += instance.travel_time(loc, next);
            loc = next;
            match stop.kind {
                StopKind::Pickup => load += 1,
                StopKind::Dropoff => load = load.saturating_sub(1),
            }
        }
    }
    hist
}

#[derive(Debug, Error)]
pub enum SolutionFileError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Header of a solution file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolutionMeta {
    pub instance: PathBuf,
    pub method: String,
    pub status: String,
    pub total_cost_s: u64,
    pub wall_time_ms: u64,
}

pub fn format_solution(meta: &SolutionMeta, solution: &Solution) -> String {
    let mut out = String::new();
    writeln!(out, "[solution]").unwrap();
    writeln!(out, "instance = {}", meta.instance.display()).unwrap();
    writeln!(out, "method = {}", meta.method).unwrap();
    writeln!(out, "status = {}", meta.status).unwrap();
    writeln!(out, "total_cost_s = {}", meta.total_cost_s).unwrap();
    writeln!(out, "wall_time_ms = {}", meta.wall_time_ms).unwrap();
    for route in &solution.routes {
        write!(out, "route {}", route.vehicle).unwrap();
        for stop in &route.stops {
            write!(out, " {stop}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn write_solution(
    meta: &SolutionMeta,
    solution: &Solution,
    path: impl AsRef<Path>,
) -> io::Result<()> {
    fs::write(path, format_solution(meta, solution))
}

/// Parses a solution file. Routes are returned as written; the reported total
/// cost is kept so that [`validate_solution`] can compare it.
pub fn parse_solution(text: &str) -> Result<(SolutionMeta, Solution), SolutionFileError> {
    let err = |line: usize, msg: String| SolutionFileError::Parse { line, msg };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    match lines.next() {
        Some((_, "[solution]")) => {}
        Some((no, _)) => return Err(err(no, "expected `[solution]` header".into())),
        None => return Err(err(0, "empty solution file".into())),
    }
    let mut fields: BTreeMap<&str, &str> = BTreeMap::new();
    let mut routes = Vec::new();
    for (no, line) in lines {
        if let Some(rest) = line.strip_prefix("route ") {
            let mut toks = rest.split_whitespace();
            let vehicle = toks
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| err(no, "invalid vehicle id".into()))?;
            let stops = toks
                .map(|t| {
                    let (kind, id) = t
                        .split_once(':')
                        .ok_or_else(|| err(no, format!("invalid stop `{t}`")))?;
                    let request = id
                        .parse()
                        .map_err(|_| err(no, format!("invalid stop `{t}`")))?;
                    match kind {
                        "p" => Ok(Stop::pickup(request)),
                        "d" => Ok(Stop::dropoff(request)),
                        _ => Err(err(no, format!("invalid stop `{t}`"))),
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            routes.push(Route { vehicle, stops });
        } else {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err(no, "expected `key = value` or `route`".into()))?;
            fields.insert(k.trim(), v.trim());
        }
    }
    let get = |k: &str| {
        fields
            .get(k)
            .copied()
            .ok_or_else(|| err(0, format!("missing `{k}`")))
    };
    let num = |k: &str| -> Result<u64, SolutionFileError> {
        get(k)?
            .parse()
            .map_err(|_| err(0, format!("invalid `{k}`")))
    };
    let meta = SolutionMeta {
        instance: PathBuf::from(get("instance")?),
        method: get("method")?.to_string(),
        status: fields
            .get("status")
            .copied()
            .unwrap_or("feasible")
            .to_string(),
        total_cost_s: num("total_cost_s")?,
        wall_time_ms: num("wall_time_ms")?,
    };
    let solution = Solution {
        routes,
        total_cost: meta.total_cost_s,
    };
    Ok((meta, solution))
}

pub fn read_solution(
    path: impl AsRef<Path>,
) -> Result<(SolutionMeta, Solution), SolutionFileError> {
    parse_solution(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::tests::line_instance;

    fn p(r: usize) -> Stop {
        Stop::pickup(r)
    }

    fn d(r: usize) -> Stop {
        Stop::dropoff(r)
    }

    #[test]
    fn single_request_schedule() {
        let inst = line_instance(&[(1, 2, 0)], &[0], 180);
        let s = compute_schedule(&inst, 0, &[p(0), d(0)]).unwrap();
        assert_eq!(s.service_times, vec![60, 120]);
        let route = Route {
            vehicle: 0,
            stops: vec![p(0), d(0)],
        };
        assert_eq!(route_cost(&inst, &route), 120);
    }

    #[test]
    fn tight_delay_is_infeasible() {
        let inst = line_instance(&[(1, 2, 0)], &[0], 30);
        assert_eq!(
            compute_schedule(&inst, 0, &[p(0), d(0)]),
            Err(ScheduleError::Infeasible(Violation::LateDropoff {
                vehicle: 0,
                request: 0,
                service: 120,
                deadline: 90
            }))
        );
    }

    #[test]
    fn empty_stop_list() {
        let inst = line_instance(&[(1, 2, 0)], &[0], 30);
        assert_eq!(
            compute_schedule(&inst, 0, &[]).unwrap(),
            Schedule::default()
        );
        assert_eq!(route_cost(&inst, &Route::empty(0)), 0);
    }

    #[test]
    fn structural_errors() {
        let inst = line_instance(&[(1, 2, 0)], &[0], 180);
        assert_eq!(
            compute_schedule(&inst, 0, &[p(3)]),
            Err(ScheduleError::DanglingRequest(3))
        );
        assert_eq!(
            compute_schedule(&inst, 0, &[p(0), p(0)]),
            Err(ScheduleError::DuplicateStop(p(0)))
        );
        assert_eq!(
            compute_schedule(&inst, 5, &[]),
            Err(ScheduleError::UnknownVehicle(5))
        );
        assert!(matches!(
            compute_schedule(&inst, 0, &[d(0), p(0)]),
            Err(ScheduleError::Infeasible(
                Violation::DropoffBeforePickup { .. }
            ))
        ));
        assert!(matches!(
            compute_schedule(&inst, 0, &[p(0)]),
            Err(ScheduleError::Infeasible(Violation::MissingDropoff { .. }))
        ));
    }

    #[test]
    fn capacity_is_enforced() {
        let reqs: Vec<(u64, u64, u64)> = (0..5).map(|_| (1, 2, 0)).collect();
        let inst = line_instance(&reqs, &[0], 600);
        let mut stops: Vec<Stop> = (0..5).map(p).collect();
        stops.extend((0..5).map(d));
        assert!(matches!(
            compute_schedule(&inst, 0, &stops),
            Err(ScheduleError::Infeasible(Violation::CapacityExceeded {
                position: 4,
                load: 5,
                ..
            }))
        ));
    }

    #[test]
    fn waiting_is_free() {
        // Vehicle arrives at node 1 at 60 s, waits until 110 s.
        let inst = line_instance(&[(1, 2, 110)], &[0], 180);
        let s = compute_schedule(&inst, 0, &[p(0), d(0)]).unwrap();
        assert_eq!(s.service_times, vec![110, 170]);
        assert_eq!(
            route_cost(
                &inst,
                &Route {
                    vehicle: 0,
                    stops: vec![p(0), d(0)]
                }
            ),
            120
        );
    }

    #[test]
    fn validation_reports_every_violation() {
        let inst = line_instance(&[(1, 2, 0), (3, 4, 0)], &[0], 180);
        let ok = Solution::new(
            &inst,
            [Route {
                vehicle: 0,
                stops: vec![p(0), d(0), p(1), d(1)],
            }],
        );
        assert_eq!(validate_solution(&inst, &ok), Ok(()));

        let partial = Solution::new(
            &inst,
            [Route {
                vehicle: 0,
                stops: vec![p(0), d(0)],
            }],
        );
        let v = validate_solution(&inst, &partial).unwrap_err();
        assert_eq!(v, vec![Violation::Unserved { request: 1 }]);
        assert_eq!(v[0].to_string(), "request 1 unserved");

        let reversed = Solution::new(
            &inst,
            [Route {
                vehicle: 0,
                stops: vec![d(0), p(0), p(1), d(1)],
            }],
        );
        let v = validate_solution(&inst, &reversed).unwrap_err();
        assert!(v.contains(&Violation::DropoffBeforePickup {
            vehicle: 0,
            request: 0
        }));
        assert!(v.contains(&Violation::MissingDropoff {
            vehicle: 0,
            request: 0
        }));

        let mut wrong_cost = ok.clone();
        wrong_cost.total_cost += 1;
        assert!(matches!(
            validate_solution(&inst, &wrong_cost).unwrap_err()[..],
            [Violation::CostMismatch { .. }]
        ));
    }

    #[test]
    fn validation_catches_late_service() {
        let inst = line_instance(&[(5, 6, 0)], &[0], 60);
        let sol = Solution::new(
            &inst,
            [Route {
                vehicle: 0,
                stops: vec![p(0), d(0)],
            }],
        );
        let v = validate_solution(&inst, &sol).unwrap_err();
        assert!(v.iter().any(|x| matches!(
            x,
            Violation::LatePickup {
                service: 300,
                latest: 60,
                ..
            }
        )));
        assert!(v.iter().any(|x| matches!(
            x,
            Violation::LateDropoff {
                service: 360,
                deadline: 120,
                ..
            }
        )));
    }

    #[test]
    fn occupancy() {
        let inst = line_instance(&[(1, 2, 0)], &[0], 180);
        let empty = Solution::new(&inst, []);
        assert!(occupancy_histogram(&inst, &empty).values().all(|&s| s == 0));
        let sol = Solution::new(
            &inst,
            [Route {
                vehicle: 0,
                stops: vec![p(0), d(0)],
            }],
        );
        let h = occupancy_histogram(&inst, &sol);
        assert_eq!(
            h,
            BTreeMap::from([(0, 60), (1, 60), (2, 0), (3, 0), (4, 0)])
        );
        assert_eq!(h.values().sum::<u64>(), sol.total_cost);
    }

    #[test]
    fn solution_file_round_trip() {
        let inst = line_instance(&[(1, 2, 0), (3, 4, 0)], &[0, 5], 180);
        let sol = Solution::new(
            &inst,
            [Route {
                vehicle: 1,
                stops: vec![p(1), d(1), p(0), d(0)],
            }],
        );
        let meta = SolutionMeta {
            instance: "a.inst".into(),
            method: "ih".into(),
            status: "feasible".into(),
            total_cost_s: sol.total_cost,
            wall_time_ms: 3,
        };
        let text = format_solution(&meta, &sol);
        assert!(
            text.contains("route 0\nroute 1 p:1 d:1 p:0 d:0\n"),
            "{text}"
        );
        let (meta2, sol2) = parse_solution(&text).unwrap();
        assert_eq!((meta2, sol2), (meta, sol));
        assert!(parse_solution("[solution]\nroute 0 x:1\n").is_err());
    }
}
