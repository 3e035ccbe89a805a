//! Insertion heuristic.
//!
//! Requests are taken in instance order (sorted by desired pickup time). Each
//! one goes into the vehicle and (pickup, dropoff) position pair with the
//! smallest increase in route travel time. Ties keep the first candidate in
//! (vehicle id, pickup position, dropoff position) order. No improvement phase.

use std::fmt;

use thiserror::Error;

use crate::instance::Instance;
use crate::solution::{walk_route, Route, Solution, Stop, Violation};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct InsertionFailure {
    /// First request that could not be inserted.
    pub request: usize,
    /// For each vehicle, the violation hit when appending the request at the
    /// end of its route.
    pub per_vehicle: Vec<(usize, Violation)>,
    /// Every request left unserved by the run.
    pub unserved: Vec<usize>,
}

impl fmt::Display for InsertionFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "no feasible insertion for request {}", self.request)?;
        if self.unserved.len() > 1 {
            write!(f, " ({} requests unserved in total)", self.unserved.len())?;
        }
        for (v, violation) in self.per_vehicle.iter().take(5) {
            write!(f, "; vehicle {v}: {violation}")?;
        }
        if self.per_vehicle.len() > 5 {
            write!(f, "; ...")?;
        }
        Ok(())
    }
}

/// Outcome of one pass over the requests.
#[derive(Debug, Clone)]
pub struct InsertionRun {
    /// Routes of the served requests.
    pub solution: Solution,
    pub failure: Option<InsertionFailure>,
}

struct Candidate {
    delta: u64,
    vehicle: usize,
    pickup_at: usize,
    dropoff_at: usize,
}

/// Runs the heuristic. When `stop_early` is set the pass ends at the first
/// request that cannot be inserted; otherwise such requests are skipped and
/// collected in the failure report.
pub fn run_insertion(instance: &Instance, stop_early: bool) -> InsertionRun {
    let m = instance.vehicles().len();
    let mut routes: Vec<Vec<Stop>> = vec![Vec::new(); m];
    let mut costs = vec![0u64; m];
    let mut buf: Vec<Stop> = Vec::new();
    let mut failure: Option<InsertionFailure> = None;

    for request in 0..instance.requests().len() {
        let (pickup, dropoff) = (Stop::pickup(request), Stop::dropoff(request));
        let mut best: Option<Candidate> = None;
        for (vehicle, route) in routes.iter().enumerate() {
            let len = route.len();
            for i in 0..=len {
                for j in i..=len {
                    buf.clear();
                    buf.extend_from_slice(&route[..i]);
                    buf.push(pickup);
                    buf.extend_from_slice(&route[i..j]);
                    buf.push(dropoff);
                    buf.extend_from_slice(&route[j..]);
                    let Ok(walk) = walk_route(instance, vehicle, &buf, |_| {}) else {
                        continue;
                    };
                    let delta = walk.cost - costs[vehicle];
                    if best.as_ref().map_or(true, |b| delta < b.delta) {
                        best = Some(Candidate {
                            delta,
                            vehicle,
                            pickup_at: i,
                            dropoff_at: j,
                        });
                    }
                }
            }
        }

        match best {
            Some(c) => {
                let route = &mut routes[c.vehicle];
                route.insert(c.dropoff_at, dropoff);
                route.insert(c.pickup_at, pickup);
                costs[c.vehicle] += c.delta;
            }
            None => {
                let failure = failure.get_or_insert_with(|| InsertionFailure {
                    request,
                    per_vehicle: append_violations(instance, &routes, request),
                    unserved: Vec::new(),
                });
                failure.unserved.push(request);
                if stop_early {
                    break;
                }
            }
        }
    }

    let solution = Solution::new(
        instance,
        routes
            .into_iter()
            .enumerate()
            .map(|(vehicle, stops)| Route { vehicle, stops }),
    );
    InsertionRun { solution, failure }
}

fn append_violations(
    instance: &Instance,
    routes: &[Vec<Stop>],
    request: usize,
) -> Vec<(usize, Violation)> {
    routes
        .iter()
        .enumerate()
        .filter_map(|(vehicle, route)| {
            let mut stops = route.clone();
            stops.extend([Stop::pickup(request), Stop::dropoff(request)]);
            walk_route(instance, vehicle, &stops, |_| {})
                .err()
                .map(|v| (vehicle, v))
        })
        .collect()
}

/// Solves the instance with the insertion heuristic. Fails if any request
/// cannot be inserted.
pub fn solve_ih(instance: &Instance) -> Result<Solution, InsertionFailure> {
    let run = run_insertion(instance, false);
    match run.failure {
        None => Ok(run.solution),
        Some(f) => Err(f),
    }
}

/// Whether the heuristic serves every request.
pub fn serves_all(instance: &Instance) -> bool {
    run_insertion(instance, true).failure.is_none()
}
