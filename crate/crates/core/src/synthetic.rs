//! Synthetic grid cities: road graph, speed table, zones and demand records in
//! the same shapes as real inputs. Used for tests, benchmarks and examples.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::instance::{parse_epoch, DemandRecord, LocationSpec, TimeSpec, Zone, ZoneMap};
use crate::roadnet::{
    assign_speeds, contract_degree2, filter_largest_scc, write_graph, Edge, Node, NodeId,
    RoadGraph, SpeedTable,
};

#[derive(Debug, Clone, PartialEq)]
pub struct CityParams {
    /// Intersections per row.
    pub width: usize,
    /// Intersections per column.
    pub height: usize,
    pub block_m: f64,
    /// Pass-through nodes inside every street segment.
    pub midblock_nodes: usize,
    /// Share of segments that are one-way.
    pub one_way_share: f64,
    /// Zones are squares of `zone_size x zone_size` intersections.
    pub zone_size: usize,
    pub default_speed_mps: f64,
    /// Every `arterial_every`-th row and column gets `arterial_speed_mps`.
    pub arterial_every: usize,
    pub arterial_speed_mps: f64,
    pub epoch: DateTime<Utc>,
    /// Records with pickup time in `[epoch, epoch + duration_s)`.
    pub trips: usize,
    pub duration_s: u64,
    /// Records with pickup time in `[epoch - lookback_s, epoch)`.
    pub prior_trips: usize,
    pub lookback_s: u64,
    /// When set, times are reported as aligned intervals of this length and
    /// locations as zones; otherwise exact nodes and times.
    pub obfuscation_s: Option<u64>,
    pub seed: u64,
}

impl Default for CityParams {
    fn default() -> Self {
        CityParams {
            width: 12,
            height: 12,
            block_m: 250.0,
            midblock_nodes: 1,
            one_way_share: 0.15,
            zone_size: 3,
            default_speed_mps: 8.0,
            arterial_every: 4,
            arterial_speed_mps: 13.0,
            epoch: parse_epoch("2022-04-05T18:00:00Z").expect("valid literal"),
            trips: 200,
            duration_s: 900,
            prior_trips: 200,
            lookback_s: 900,
            obfuscation_s: None,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCity {
    pub graph: RoadGraph,
    pub speeds: SpeedTable,
    pub zones: ZoneMap,
    pub records: Vec<DemandRecord>,
    pub epoch: DateTime<Utc>,
}

/// Paths written by [`SyntheticCity::write_to`].
#[derive(Debug, Clone)]
pub struct CityFiles {
    pub graph: PathBuf,
    pub speeds: PathBuf,
    pub zones: PathBuf,
    pub demand: PathBuf,
}

pub fn synthetic_city(params: &CityParams) -> SyntheticCity {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let (w, h) = (params.width, params.height);
    let intersection = |x: usize, y: usize| (y * w + x) as NodeId;
    let mut nodes: Vec<Node> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .map(|(x, y)| Node {
            id: intersection(x, y),
            coord: Some(coord(params, x as f64, y as f64)),
        })
        .collect();
    let mut edges = Vec::new();
    let mut speeds = SpeedTable::uniform(params.default_speed_mps).expect("positive default speed");
    let mut next_id = (w * h) as NodeId;
    // Zone membership of mid-block nodes follows the segment's first endpoint.
    let mut midblock_owner: Vec<(NodeId, NodeId)> = Vec::new();

    let segments = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .flat_map(|(x, y)| {
            let right = (x + 1 < w).then_some(((x, y), (x + 1, y), y));
            let up = (y + 1 < h).then_some(((x, y), (x, y + 1), x));
            right.into_iter().chain(up)
        })
        .collect::<Vec<_>>();

    for ((ax, ay), (bx, by), line) in segments {
        let mut chain = vec![intersection(ax, ay)];
        for k in 1..=params.midblock_nodes {
            let f = k as f64 / (params.midblock_nodes + 1) as f64;
            let (x, y) = (
                ax as f64 + f * (bx as f64 - ax as f64),
                ay as f64 + f * (by as f64 - ay as f64),
            );
            nodes.push(Node {
                id: next_id,
                coord: Some(coord(params, x, y)),
            });
            midblock_owner.push((next_id, intersection(ax, ay)));
            chain.push(next_id);
            next_id += 1;
        }
        chain.push(intersection(bx, by));
        let hop = params.block_m / (params.midblock_nodes + 1) as f64;
        let arterial = params.arterial_every > 0 && line % params.arterial_every == 0;
        let one_way = rng.gen_bool(params.one_way_share);
        let forward = rng.gen_bool(0.5);
        for pair in chain.windows(2) {
            let mut dirs = Vec::new();
            if !one_way || forward {
                dirs.push((pair[0], pair[1]));
            }
            if !one_way || !forward {
                dirs.push((pair[1], pair[0]));
            }
            for (a, b) in dirs {
                edges.push(
                    Edge::new(a, b, hop, params.default_speed_mps)
                        .expect("positive length and speed"),
                );
                if arterial {
                    speeds
                        .insert(a, b, params.arterial_speed_mps)
                        .expect("positive speed");
                }
            }
        }
    }

    let graph = RoadGraph::new(nodes, edges).expect("consistent synthetic graph");
    // Records only name intersections, or zones of intersections, that survive processing.
    let processed = filter_largest_scc(&contract_degree2(&assign_speeds(&graph, &speeds)))
        .expect("non-empty graph");
    let kept: Vec<(usize, usize)> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .filter(|&(x, y)| processed.contains(intersection(x, y)))
        .collect();

    let zone_of = |x: usize, y: usize| format!("{}-{}", x / params.zone_size, y / params.zone_size);
    let mut zone_nodes: std::collections::BTreeMap<String, Vec<NodeId>> = Default::default();
    for y in 0..h {
        for x in 0..w {
            zone_nodes
                .entry(zone_of(x, y))
                .or_default()
                .push(intersection(x, y));
        }
    }
    for (node, owner) in &midblock_owner {
        let (x, y) = (*owner as usize % w, *owner as usize / w);
        zone_nodes.entry(zone_of(x, y)).or_default().push(*node);
    }
    // Zones list only nodes that survive processing.
    let zones = ZoneMap::new(zone_nodes.into_iter().filter_map(|(id, mut n)| {
        n.retain(|&node| processed.contains(node));
        (!n.is_empty()).then(|| Zone::new(id, n).expect("non-empty zone"))
    }));

    let epoch_s = params.epoch.timestamp() as u64;
    let mut records = Vec::with_capacity(params.trips + params.prior_trips);
    let windows = [
        (
            epoch_s - params.lookback_s,
            params.lookback_s,
            params.prior_trips,
        ),
        (epoch_s, params.duration_s, params.trips),
    ];
    for (start, span, count) in windows {
        for _ in 0..count {
            let t = start + rng.gen_range(0..span.max(1));
            let pick = |rng: &mut ChaCha8Rng, (x, y): (usize, usize)| {
                if !processed.contains(intersection(x, y)) {
                    kept[rng.gen_range(0..kept.len())]
                } else {
                    (x, y)
                }
            };
            let origin = hotspot(params, &mut rng);
            let (ox, oy) = pick(&mut rng, origin);
            let (dx, dy) = loop {
                let d = (rng.gen_range(0..w), rng.gen_range(0..h));
                let d = pick(&mut rng, d);
                if d != (ox, oy) {
                    break d;
                }
            };
            let record = match params.obfuscation_s {
                Some(len) if span % len == 0 => {
                    let a = start + (t - start) / len * len;
                    DemandRecord {
                        origin: LocationSpec::Zone(zone_of(ox, oy)),
                        destination: LocationSpec::Zone(zone_of(dx, dy)),
                        time: TimeSpec::Interval(a, a + len),
                    }
                }
                _ => DemandRecord {
                    origin: LocationSpec::Node(intersection(ox, oy)),
                    destination: LocationSpec::Node(intersection(dx, dy)),
                    time: TimeSpec::Exact(t),
                },
            };
            records.push(record);
        }
    }

    SyntheticCity {
        graph,
        speeds,
        zones,
        records,
        epoch: params.epoch,
    }
}

/// Origins cluster around the city centre.
fn hotspot(params: &CityParams, rng: &mut ChaCha8Rng) -> (usize, usize) {
    let (w, h) = (params.width, params.height);
    if rng.gen_bool(0.5) {
        let span = |n: usize| (n / 4).max(1);
        let x = w / 2 - span(w).min(w / 2) + rng.gen_range(0..2 * span(w)).min(w - 1);
        let y = h / 2 - span(h).min(h / 2) + rng.gen_range(0..2 * span(h)).min(h - 1);
        (x.min(w - 1), y.min(h - 1))
    } else {
        (rng.gen_range(0..w), rng.gen_range(0..h))
    }
}

fn coord(params: &CityParams, x: f64, y: f64) -> (f64, f64) {
    // Roughly 111 km per degree of latitude.
    let deg = params.block_m / 111_000.0;
    (38.88 + y * deg, -77.05 + x * deg * 1.28)
}

impl SyntheticCity {
    pub fn write_to(&self, dir: impl AsRef<Path>) -> io::Result<CityFiles> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let files = CityFiles {
            graph: dir.join("graph.txt"),
            speeds: dir.join("speeds.txt"),
            zones: dir.join("zones.txt"),
            demand: dir.join("demand.txt"),
        };
        let mut graph = Vec::new();
        write_graph(&self.graph, &mut graph)?;
        fs::write(&files.graph, graph)?;

        let mut speeds = format!("default {}\n", self.speeds.default_mps);
        let mut entries: Vec<_> = self.speeds.speeds.iter().collect();
        entries.sort_by_key(|(k, _)| **k);
        for ((a, b), s) in entries {
            writeln!(speeds, "{a} {b} {s}").unwrap();
        }
        fs::write(&files.speeds, speeds)?;

        let zones: String = self.zones.iter().map(|z| format!("{z}\n")).collect();
        fs::write(&files.zones, zones)?;
        let demand: String = self.records.iter().map(|r| format!("{r}\n")).collect();
        fs::write(&files.demand, demand)?;
        Ok(files)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{load_demand_records, load_zones};
    use crate::roadnet::{build_travel_model, load_graph, load_speed_table};

    #[test]
    fn city_builds_a_travel_model() {
        let city = synthetic_city(&CityParams::default());
        assert_eq!(city.records.len(), 400);
        let (processed, matrix) = build_travel_model(&city.graph, &city.speeds).unwrap();
        assert!(processed.node_count() <= 144);
        assert!(processed.node_count() > 100);
        assert_eq!(matrix.len(), processed.node_count());
    }

    #[test]
    fn files_round_trip() {
        let city = synthetic_city(&CityParams {
            obfuscation_s: Some(300),
            ..CityParams::default()
        });
        let dir = tempfile::tempdir().unwrap();
        let files = city.write_to(dir.path()).unwrap();
        assert_eq!(load_graph(&files.graph).unwrap(), city.graph);
        assert_eq!(load_speed_table(&files.speeds).unwrap(), city.speeds);
        assert_eq!(load_zones(&files.zones).unwrap(), city.zones);
        assert_eq!(load_demand_records(&files.demand).unwrap(), city.records);
    }

    #[test]
    fn deterministic() {
        let a = synthetic_city(&CityParams::default());
        let b = synthetic_city(&CityParams::default());
        assert_eq!(a.graph, b.graph);
        assert_eq!(a.records, b.records);
    }

    #[test]
    fn zones_only_hold_processed_nodes() {
        for side in [7, 16] {
            let city = synthetic_city(&CityParams {
                width: side,
                height: side,
                ..CityParams::default()
            });
            let (_, matrix) = build_travel_model(&city.graph, &city.speeds).unwrap();
            assert!(city.zones.restrict_to(&matrix).is_ok());
            assert!(city
                .zones
                .iter()
                .all(|z| z.nodes().iter().all(|&n| matrix.index_of(n).is_some())));
        }
    }
}
