//! Independent reference implementations used by the integration and
//! acceptance tests. Nothing here calls into the solver code paths it checks.
#![allow(dead_code)]

use std::collections::HashMap;
use std::sync::Arc;

use darp_core::instance::{parse_epoch, Instance, InstanceConfig, Request, Vehicle};
use darp_core::roadnet::{compute_travel_time_matrix, Edge, Node, NodeId, RoadGraph};
use rand::seq::SliceRandom;
use rand::Rng;

/// Strongly connected random graph: a Hamiltonian cycle over shuffled ids,
/// random chords, and two-way chains of fresh nodes hanging between existing
/// ones so contraction has work to do.
pub fn random_strong_graph<R: Rng>(rng: &mut R, max_nodes: usize) -> RoadGraph {
    let core = rng.gen_range(3..=max_nodes.min(30));
    let mut ids: Vec<NodeId> = (0..core as NodeId).map(|i| i * 3 + 1).collect();
    ids.shuffle(rng);
    let mut edges = Vec::new();
    let edge = |a: NodeId, b: NodeId, rng: &mut R| {
        let len = rng.gen_range(1..200) as f64;
        let speed = [1.0, 2.0, 3.5][rng.gen_range(0..3)];
        Edge::new(a, b, len, speed).unwrap()
    };
    for k in 0..core {
        edges.push(edge(ids[k], ids[(k + 1) % core], rng));
    }
    for _ in 0..rng.gen_range(0..core * 2) {
        let (a, b) = (*ids.choose(rng).unwrap(), *ids.choose(rng).unwrap());
        if a != b {
            edges.push(edge(a, b, rng));
        }
    }
    let mut next = 1000;
    let mut all = ids.clone();
    while all.len() < max_nodes && rng.gen_bool(0.8) {
        let (a, b) = (*ids.choose(rng).unwrap(), *ids.choose(rng).unwrap());
        let len = rng.gen_range(1..4).min(max_nodes - all.len());
        let mut prev = a;
        let two_way = rng.gen_bool(0.6);
        for _ in 0..len {
            edges.push(edge(prev, next, rng));
            if two_way {
                edges.push(edge(next, prev, rng));
            }
            all.push(next);
            prev = next;
            next += 1;
        }
        edges.push(edge(prev, b, rng));
        if two_way {
            edges.push(edge(b, prev, rng));
        } else {
            // Keep the chain strongly connected with a way back.
            edges.push(edge(b, a, rng));
        }
    }
    let nodes = all.into_iter().map(|id| Node { id, coord: None }).collect();
    RoadGraph::new(nodes, edges).unwrap()
}

/// All-pairs shortest travel times by Bellman-Ford from every source.
pub fn bellman_ford(graph: &RoadGraph) -> HashMap<(NodeId, NodeId), u64> {
    let mut out = HashMap::new();
    for s in graph.nodes() {
        let mut dist: HashMap<NodeId, u64> = HashMap::from([(s.id, 0)]);
        for _ in 0..graph.nodes().len() {
            let mut changed = false;
            for e in graph.edges() {
                if let Some(&du) = dist.get(&e.from) {
                    let cand = du + e.travel_time_s as u64;
                    if dist.get(&e.to).map_or(true, |&dv| cand < dv) {
                        dist.insert(e.to, cand);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        for (t, d) in dist {
            out.insert((s.id, t), d);
        }
    }
    out
}

pub fn config(max_delay_s: u64) -> InstanceConfig {
    InstanceConfig {
        area: "random".into(),
        epoch: parse_epoch("2022-04-05T18:00:00Z").unwrap(),
        duration_s: 1800,
        max_delay_s,
        seed: 0,
        matrix_file: "random.dttm".into(),
    }
}

/// Small random instance on a random strongly connected road graph.
pub fn random_instance<R: Rng>(
    rng: &mut R,
    requests: usize,
    vehicles: usize,
    max_delay_s: u64,
) -> Instance {
    let graph = random_strong_graph(rng, 12);
    let matrix = Arc::new(compute_travel_time_matrix(&graph).unwrap());
    let ids = matrix.node_ids().to_vec();
    let mut times: Vec<u64> = (0..requests).map(|_| rng.gen_range(0..600)).collect();
    times.sort_unstable();
    let reqs = times
        .into_iter()
        .enumerate()
        .map(|(i, t)| {
            let o = *ids.choose(rng).unwrap();
            let d = loop {
                let d = *ids.choose(rng).unwrap();
                if d != o {
                    break d;
                }
            };
            Request::new(i, o, d, t, &matrix).unwrap()
        })
        .collect();
    let vs = (0..vehicles)
        .map(|id| Vehicle {
            id,
            start: *ids.choose(rng).unwrap(),
            capacity: 4,
        })
        .collect();
    Instance::new(config(max_delay_s), reqs, vs, matrix).unwrap()
}

fn tt(inst: &Instance, a: NodeId, b: NodeId) -> u64 {
    inst.matrix().travel_time(a, b).unwrap() as u64
}

/// Cheapest feasible route serving exactly `subset` (bitmask) with `vehicle`,
/// by exhaustive search over stop orders. Prunes only on definite violations:
/// waiting can never make a late stop on time.
pub fn best_route_cost(inst: &Instance, vehicle: usize, subset: u32) -> Option<u64> {
    struct Search<'a> {
        inst: &'a Instance,
        capacity: u32,
        best: Option<u64>,
    }
    fn go(s: &mut Search, at: NodeId, time: u64, cost: u64, waiting: u32, onboard: u32) {
        if waiting == 0 && onboard == 0 {
            s.best = Some(s.best.map_or(cost, |b| b.min(cost)));
            return;
        }
        let delta = s.inst.max_delay();
        for (i, r) in s.inst.requests().iter().enumerate() {
            let bit = 1u32 << i;
            if waiting & bit != 0 {
                if onboard.count_ones() + 1 > s.capacity {
                    continue;
                }
                let leg = tt(s.inst, at, r.origin);
                let arrive = (time + leg).max(r.pickup_time);
                if arrive > r.pickup_time + delta {
                    continue;
                }
                go(
                    s,
                    r.origin,
                    arrive,
                    cost + leg,
                    waiting & !bit,
                    onboard | bit,
                );
            } else if onboard & bit != 0 {
                let leg = tt(s.inst, at, r.destination);
                if time + leg > r.pickup_time + r.direct_time + delta {
                    continue;
                }
                go(
                    s,
                    r.destination,
                    time + leg,
                    cost + leg,
                    waiting,
                    onboard & !bit,
                );
            }
        }
    }
    let v = &inst.vehicles()[vehicle];
    let mut s = Search {
        inst,
        capacity: v.capacity,
        best: None,
    };
    go(&mut s, v.start, 0, 0, subset, 0);
    s.best
}

/// Optimal total cost over every assignment of requests to vehicles, or
/// `None` if no assignment is feasible. Exponential; keep instances tiny.
pub fn brute_force_optimum(inst: &Instance) -> Option<u64> {
    let n = inst.requests().len();
    assert!(n <= 12);
    let full = (1u32 << n) - 1;
    let mut reach: Vec<Option<u64>> = vec![None; 1 << n];
    reach[0] = Some(0);
    for v in 0..inst.vehicles().len() {
        let costs: Vec<Option<u64>> = (0..=full).map(|s| best_route_cost(inst, v, s)).collect();
        let mut next: Vec<Option<u64>> = vec![None; 1 << n];
        for mask in 0..=full {
            let mut sub = mask;
            loop {
                if let (Some(a), Some(b)) = (reach[(mask ^ sub) as usize], costs[sub as usize]) {
                    let c = a + b;
                    if next[mask as usize].map_or(true, |x| c < x) {
                        next[mask as usize] = Some(c);
                    }
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & mask;
            }
        }
        reach = next;
    }
    reach[full as usize]
}
