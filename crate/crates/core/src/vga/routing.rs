//! Exact minimum-cost routing of one vehicle through a fixed request group.

use crate::instance::Instance;
use crate::solution::Stop;

/// Optimal stop sequence for a vehicle-group pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupRoute {
    pub stops: Vec<Stop>,
    pub cost: u64,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    Waiting,
    Onboard,
    Done,
}

struct Search<'a> {
    instance: &'a Instance,
    capacity: u32,
    group: &'a [usize],
    phase: Vec<Phase>,
    path: Vec<Stop>,
    best_cost: u64,
    best: Option<Vec<Stop>>,
}

impl Search<'_> {
    /// Necessary condition for completing the route from (`loc`, `time`):
    /// every outstanding stop must still be reachable directly in time.
    fn can_finish(&self, loc: usize, time: u64) -> bool {
        let inst = self.instance;
        self.group
            .iter()
            .zip(&self.phase)
            .all(|(&r, phase)| match phase {
                Phase::Done => true,
                Phase::Onboard => {
                    time + inst.travel_time(loc, inst.destination_loc(r))
                        <= inst.dropoff_deadline(r)
                }
                Phase::Waiting => {
                    let req = &inst.requests()[r];
                    let pickup =
                        (time + inst.travel_time(loc, inst.origin_loc(r))).max(req.pickup_time);
                    pickup + req.direct_time <= inst.dropoff_deadline(r)
                }
            })
    }

    /// Largest direct distance to any outstanding stop; the rest of the
    /// route has to cover at least that much.
    fn remaining_lower_bound(&self, loc: usize) -> u64 {
        let inst = self.instance;
        self.group
            .iter()
            .zip(&self.phase)
            .map(|(&r, phase)| match phase {
                Phase::Done => 0,
                Phase::Onboard => inst.travel_time(loc, inst.destination_loc(r)),
                Phase::Waiting => {
                    inst.travel_time(loc, inst.origin_loc(r)) + inst.requests()[r].direct_time
                }
            })
            .max()
            .unwrap_or(0)
    }

    fn dfs(&mut self, loc: usize, time: u64, cost: u64, load: u32) {
        if self.path.len() == 2 * self.group.len() {
            if cost < self.best_cost {
                self.best_cost = cost;
                self.best = Some(self.path.clone());
            }
            return;
        }
        if cost + self.remaining_lower_bound(loc) >= self.best_cost {
            return;
        }
        let inst = self.instance;
        for k in 0..self.group.len() {
            let r = self.group[k];
            let (stop, next, next_phase) = match self.phase[k] {
                Phase::Done => continue,
                Phase::Waiting if load < self.capacity => {
                    (Stop::pickup(r), inst.origin_loc(r), Phase::Onboard)
                }
                Phase::Waiting => continue,
                Phase::Onboard => (Stop::dropoff(r), inst.destination_loc(r), Phase::Done),
            };
            let leg = inst.travel_time(loc, next);
            let mut at = time + leg;
            let new_load = match next_phase {
                Phase::Onboard => {
                    at = at.max(inst.requests()[r].pickup_time);
                    load + 1
                }
                _ => {
                    if at > inst.dropoff_deadline(r) {
                        continue;
                    }
                    load - 1
                }
            };
            let prev = self.phase[k];
            self.phase[k] = next_phase;
            if self.can_finish(next, at) {
                self.path.push(stop);
                self.dfs(next, at, cost + leg, new_load);
                self.path.pop();
            }
            self.phase[k] = prev;
        }
    }
}

/// Depth-first search over pickup-before-dropoff orderings of the group's
/// stops, pruned on capacity, deadlines and cost. Returns `None` when no
/// feasible ordering costs less than `upper_bound`.
///
/// The pruning assumes the matrix satisfies the triangle inequality, which
/// holds for shortest-path matrices.
pub fn best_route_within(
    instance: &Instance,
    vehicle: usize,
    group: &[usize],
    upper_bound: u64,
) -> Option<GroupRoute> {
    let mut search = Search {
        instance,
        capacity: instance.vehicles()[vehicle].capacity,
        group,
        phase: vec![Phase::Waiting; group.len()],
        path: Vec::with_capacity(2 * group.len()),
        best_cost: upper_bound,
        best: None,
    };
    let start = instance.start_loc(vehicle);
    if search.can_finish(start, 0) {
        search.dfs(start, 0, 0, 0);
    }
    let cost = search.best_cost;
    search.best.map(|stops| GroupRoute { stops, cost })
}
