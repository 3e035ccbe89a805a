//! Demand and vehicle sampling from zone-obfuscated trip records.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io;
use std::ops::Range;
use std::path::Path;
use std::str::FromStr;

use log::warn;
use rand::seq::index;
use rand::Rng;
use thiserror::Error;

use super::{Request, Vehicle};
use crate::roadnet::{NodeId, TravelTimeMatrix};

/// Resampling attempts for a record whose origin and destination coincide.
const MAX_RESAMPLES: usize = 100;

#[derive(Debug, Error)]
pub enum DemandError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("zone `{0}` has no nodes")]
    EmptyZone(String),
    #[error("unknown zone `{0}`")]
    UnknownZone(String),
    #[error("node {0} is not in the travel-time matrix")]
    UnknownNode(NodeId),
    #[error("empty time interval [{start}, {end})")]
    EmptyInterval { start: u64, end: u64 },
    #[error("no demand records with pickup time in [{start}, {end})")]
    NoPriorDemand { start: u64, end: u64 },
    #[error("vehicle count must be at least 1")]
    ZeroCount,
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Zone {
    pub id: String,
    nodes: Vec<NodeId>,
}

impl Zone {
    pub fn new(id: impl Into<String>, mut nodes: Vec<NodeId>) -> Result<Zone, DemandError> {
        let id = id.into();
        nodes.sort_unstable();
        nodes.dedup();
        if nodes.is_empty() {
            return Err(DemandError::EmptyZone(id));
        }
        Ok(Zone { id, nodes })
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ZoneMap {
    zones: BTreeMap<String, Zone>,
}

impl ZoneMap {
    pub fn new(zones: impl IntoIterator<Item = Zone>) -> ZoneMap {
        ZoneMap {
            zones: zones.into_iter().map(|z| (z.id.clone(), z)).collect(),
        }
    }

    pub fn get(&self, id: &str) -> Option<&Zone> {
        self.zones.get(id)
    }

    pub fn len(&self) -> usize {
        self.zones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zones.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Zone> {
        self.zones.values()
    }

    /// Drops nodes absent from the matrix, e.g. removed by contraction or the
    /// SCC filter. Fails if a zone loses all of its nodes.
    pub fn restrict_to(&self, matrix: &TravelTimeMatrix) -> Result<ZoneMap, DemandError> {
        let zones = self
            .zones
            .values()
            .map(|z| {
                let nodes: Vec<NodeId> = z
                    .nodes
                    .iter()
                    .copied()
                    .filter(|&n| matrix.contains(n))
                    .collect();
                Zone::new(z.id.clone(), nodes)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ZoneMap::new(zones))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LocationSpec {
    Node(NodeId),
    Zone(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeSpec {
    Exact(u64),
    /// Half-open `[start, end)`.
    Interval(u64, u64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DemandRecord {
    pub origin: LocationSpec,
    pub destination: LocationSpec,
    /// Absolute pickup time in seconds (unix time in demand files).
    pub time: TimeSpec,
}

impl fmt::Display for LocationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LocationSpec::Node(n) => write!(f, "n:{n}"),
            LocationSpec::Zone(z) => write!(f, "z:{z}"),
        }
    }
}

impl fmt::Display for TimeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeSpec::Exact(t) => write!(f, "t:{t}"),
            TimeSpec::Interval(a, b) => write!(f, "i:{a}-{b}"),
        }
    }
}

impl fmt::Display for DemandRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "record {} {} {}",
            self.origin, self.destination, self.time
        )
    }
}

impl fmt::Display for Zone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "zone {}", self.id)?;
        for n in &self.nodes {
            write!(f, " {n}")?;
        }
        Ok(())
    }
}

impl FromStr for LocationSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            Some(("n", id)) => id
                .parse()
                .map(LocationSpec::Node)
                .map_err(|_| format!("invalid node id `{id}`")),
            Some(("z", id)) if !id.is_empty() => Ok(LocationSpec::Zone(id.to_string())),
            _ => Err(format!(
                "invalid location spec `{s}`, expected n:<id> or z:<id>"
            )),
        }
    }
}

impl FromStr for TimeSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("invalid time spec `{s}`, expected t:<sec> or i:<start>-<end>");
        match s.split_once(':') {
            Some(("t", t)) => t.parse().map(TimeSpec::Exact).map_err(|_| bad()),
            Some(("i", range)) => {
                let (a, b) = range.split_once('-').ok_or_else(bad)?;
                let (a, b) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
                if a >= b {
                    return Err(format!("empty interval `{s}`"));
                }
                Ok(TimeSpec::Interval(a, b))
            }
            _ => Err(bad()),
        }
    }
}

pub fn parse_zones(text: &str) -> Result<ZoneMap, DemandError> {
    let mut zones = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| DemandError::Parse { line: i + 1, msg };
        let mut toks = line.split_whitespace();
        if toks.next() != Some("zone") {
            return Err(err("expected `zone <zone_id> <node_id> ...`".into()));
        }
        let id = toks.next().ok_or_else(|| err("missing zone id".into()))?;
        let nodes = toks
            .map(|t| t.parse().map_err(|_| err(format!("invalid node id `{t}`"))))
            .collect::<Result<Vec<NodeId>, _>>()?;
        zones.push(Zone::new(id, nodes)?);
    }
    Ok(ZoneMap::new(zones))
}

pub fn load_zones(path: impl AsRef<Path>) -> Result<ZoneMap, DemandError> {
    parse_zones(&fs::read_to_string(path)?)
}

pub fn parse_demand_records(text: &str) -> Result<Vec<DemandRecord>, DemandError> {
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| DemandError::Parse { line: i + 1, msg };
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            ["record", o, d, t] => records.push(DemandRecord {
                origin: o.parse().map_err(err)?,
                destination: d.parse().map_err(err)?,
                time: t.parse().map_err(err)?,
            }),
            _ => {
                return Err(err(
                    "expected `record <origin_spec> <dest_spec> <time_spec>`".into(),
                ))
            }
        }
    }
    Ok(records)
}

pub fn load_demand_records(path: impl AsRef<Path>) -> Result<Vec<DemandRecord>, DemandError> {
    parse_demand_records(&fs::read_to_string(path)?)
}

/// Uniform draw from the zone's nodes.
pub fn sample_location<R: Rng + ?Sized>(zone: &Zone, rng: &mut R) -> Result<NodeId, DemandError> {
    if zone.nodes.is_empty() {
        return Err(DemandError::EmptyZone(zone.id.clone()));
    }
    Ok(zone.nodes[rng.gen_range(0..zone.nodes.len())])
}

/// Uniform integer draw from `[start, end)`.
pub fn sample_time<R: Rng + ?Sized>(start: u64, end: u64, rng: &mut R) -> Result<u64, DemandError> {
    if start >= end {
        return Err(DemandError::EmptyInterval { start, end });
    }
    Ok(rng.gen_range(start..end))
}

fn resolve_time<R: Rng + ?Sized>(
    spec: TimeSpec,
    window: &Range<u64>,
    rng: &mut R,
) -> Result<Option<u64>, DemandError> {
    let t = match spec {
        TimeSpec::Exact(t) => t,
        TimeSpec::Interval(a, b) => {
            if b <= window.start || a >= window.end {
                return Ok(None);
            }
            sample_time(a, b, rng)?
        }
    };
    Ok(window.contains(&t).then_some(t))
}

fn resolve_location<R: Rng + ?Sized>(
    spec: &LocationSpec,
    zones: &ZoneMap,
    matrix: &TravelTimeMatrix,
    rng: &mut R,
) -> Result<NodeId, DemandError> {
    match spec {
        LocationSpec::Node(n) if matrix.contains(*n) => Ok(*n),
        LocationSpec::Node(n) => Err(DemandError::UnknownNode(*n)),
        LocationSpec::Zone(z) => {
            let zone = zones
                .get(z)
                .ok_or_else(|| DemandError::UnknownZone(z.clone()))?;
            let node = sample_location(zone, rng)?;
            if matrix.contains(node) {
                Ok(node)
            } else {
                Err(DemandError::UnknownNode(node))
            }
        }
    }
}

/// Turns demand records into requests inside `window` (absolute seconds).
///
/// Pickup times are rebased to `window.start`. Records whose origin and
/// destination coincide after sampling are resampled and eventually dropped.
/// Output is sorted by pickup time with ids assigned in that order.
pub fn generate_demand<R: Rng + ?Sized>(
    records: &[DemandRecord],
    zones: &ZoneMap,
    matrix: &TravelTimeMatrix,
    window: Range<u64>,
    rng: &mut R,
) -> Result<Vec<Request>, DemandError> {
    let mut trips: Vec<(u64, NodeId, NodeId)> = Vec::new();
    for (k, record) in records.iter().enumerate() {
        let Some(t) = resolve_time(record.time, &window, rng)? else {
            continue;
        };
        let mut trip = None;
        for _ in 0..MAX_RESAMPLES {
            let o = resolve_location(&record.origin, zones, matrix, rng)?;
            let d = resolve_location(&record.destination, zones, matrix, rng)?;
            if o != d {
                trip = Some((o, d));
                break;
            }
        }
        match trip {
            Some((o, d)) => trips.push((t - window.start, o, d)),
            None => warn!(
                "demand record {k}: origin equals destination after {MAX_RESAMPLES} draws, dropped"
            ),
        }
    }
    trips.sort_by_key(|&(t, _, _)| t);
    Ok(trips
        .into_iter()
        .enumerate()
        .map(|(id, (t, o, d))| {
            Request::new(id, o, d, t, matrix).expect("locations resolved against the matrix")
        })
        .collect())
}

/// Where a vehicle sampled from a prior trip starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VehicleStart {
    #[default]
    Origin,
    Destination,
}

/// Samples `count` vehicle start positions from records with pickup time in
/// `[epoch - lookback, epoch)`; with replacement only when there are fewer
/// such records than `count`.
#[allow(clippy::too_many_arguments)]
pub fn generate_vehicles<R: Rng + ?Sized>(
    prior_records: &[DemandRecord],
    zones: &ZoneMap,
    matrix: &TravelTimeMatrix,
    epoch_s: u64,
    lookback_s: u64,
    count: usize,
    capacity: u32,
    start: VehicleStart,
    rng: &mut R,
) -> Result<Vec<Vehicle>, DemandError> {
    if count == 0 {
        return Err(DemandError::ZeroCount);
    }
    let window = epoch_s.saturating_sub(lookback_s)..epoch_s;
    let mut eligible = Vec::new();
    for record in prior_records {
        if resolve_time(record.time, &window, rng)?.is_some() {
            eligible.push(record);
        }
    }
    if eligible.is_empty() {
        return Err(DemandError::NoPriorDemand {
            start: window.start,
            end: window.end,
        });
    }
    let picks: Vec<usize> = if eligible.len() >= count {
        index::sample(rng, eligible.len(), count).into_vec()
    } else {
        (0..count)
            .map(|_| rng.gen_range(0..eligible.len()))
            .collect()
    };
    picks
        .into_iter()
        .enumerate()
        .map(|(id, k)| {
            let spec = match start {
                VehicleStart::Origin => &eligible[k].origin,
                VehicleStart::Destination => &eligible[k].destination,
            };
            let start = resolve_location(spec, zones, matrix, rng)?;
            Ok(Vehicle {
                id,
                start,
                capacity,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::tests::line_matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn exact(o: NodeId, d: NodeId, t: u64) -> DemandRecord {
        DemandRecord {
            origin: LocationSpec::Node(o),
            destination: LocationSpec::Node(d),
            time: TimeSpec::Exact(t),
        }
    }

    #[test]
    fn singleton_zone() {
        let z = Zone::new("a", vec![42]).unwrap();
        assert_eq!(sample_location(&z, &mut rng(1)).unwrap(), 42);
        assert!(matches!(
            Zone::new("b", vec![]),
            Err(DemandError::EmptyZone(_))
        ));
    }

    #[test]
    fn location_sampling_is_uniform() {
        // Binomial(100000, 1/4): sigma = sqrt(100000 * 0.25 * 0.75) ~ 136.9
        let z = Zone::new("a", vec![1, 2, 3, 4]).unwrap();
        let mut r = rng(3);
        let mut counts = BTreeMap::new();
        for _ in 0..100_000 {
            *counts
                .entry(sample_location(&z, &mut r).unwrap())
                .or_insert(0u64) += 1;
        }
        let sigma = (100_000.0f64 * 0.25 * 0.75).sqrt();
        for (&node, &c) in &counts {
            assert!(
                (c as f64 - 25_000.0).abs() <= 3.0 * sigma,
                "node {node}: {c}"
            );
        }
        assert_eq!(counts.len(), 4);
    }

    #[test]
    fn sampling_is_deterministic() {
        let z = Zone::new("a", (0..100).collect()).unwrap();
        assert_eq!(
            sample_location(&z, &mut rng(9)).unwrap(),
            sample_location(&z, &mut rng(9)).unwrap()
        );
        assert_eq!(
            sample_time(0, 900, &mut rng(9)).unwrap(),
            sample_time(0, 900, &mut rng(9)).unwrap()
        );
    }

    #[test]
    fn time_sampling() {
        assert_eq!(sample_time(100, 101, &mut rng(1)).unwrap(), 100);
        assert!(matches!(
            sample_time(5, 5, &mut rng(1)),
            Err(DemandError::EmptyInterval { .. })
        ));
        // Discrete uniform on [0, 900): mean 449.5, variance (900^2 - 1) / 12.
        let mut r = rng(11);
        let n = 100_000;
        let sum: u64 = (0..n).map(|_| sample_time(0, 900, &mut r).unwrap()).sum();
        let mean = sum as f64 / n as f64;
        let sigma_mean = ((900.0f64 * 900.0 - 1.0) / 12.0 / n as f64).sqrt();
        assert!((mean - 449.5).abs() <= 3.0 * sigma_mean, "mean {mean}");
    }

    #[test]
    fn exact_record_inside_window_is_rebased() {
        let m = line_matrix(5, 60);
        let reqs = generate_demand(
            &[exact(1, 3, 1_000_050)],
            &ZoneMap::default(),
            &m,
            1_000_000..1_000_900,
            &mut rng(1),
        )
        .unwrap();
        assert_eq!(reqs.len(), 1);
        assert_eq!(reqs[0].pickup_time, 50);
        assert_eq!(reqs[0].direct_time, 120);
    }

    #[test]
    fn records_outside_window_are_excluded() {
        let m = line_matrix(5, 60);
        let rec = DemandRecord {
            time: TimeSpec::Interval(0, 500),
            ..exact(1, 3, 0)
        };
        let reqs = generate_demand(
            &[rec, exact(1, 2, 999)],
            &ZoneMap::default(),
            &m,
            1000..1900,
            &mut rng(1),
        )
        .unwrap();
        assert!(reqs.is_empty());
    }

    #[test]
    fn unknown_zone_is_an_error() {
        let m = line_matrix(5, 60);
        let rec = DemandRecord {
            origin: LocationSpec::Zone("nope".into()),
            ..exact(1, 3, 10)
        };
        assert!(matches!(
            generate_demand(&[rec], &ZoneMap::default(), &m, 0..900, &mut rng(1)),
            Err(DemandError::UnknownZone(_))
        ));
    }

    #[test]
    fn degenerate_trips_are_dropped() {
        let m = line_matrix(5, 60);
        let zones = ZoneMap::new([Zone::new("one", vec![2]).unwrap()]);
        let rec = DemandRecord {
            origin: LocationSpec::Zone("one".into()),
            destination: LocationSpec::Node(2),
            time: TimeSpec::Exact(5),
        };
        let reqs =
            generate_demand(&[rec, exact(0, 4, 7)], &zones, &m, 0..900, &mut rng(1)).unwrap();
        assert_eq!(reqs.len(), 1);
        assert_eq!(reqs[0].origin, 0);
    }

    #[test]
    fn dc_scale_window_keeps_every_record() {
        let m = line_matrix(10, 60);
        let zones = ZoneMap::new([
            Zone::new("w", vec![0, 1, 2, 3, 4]).unwrap(),
            Zone::new("e", vec![5, 6, 7, 8, 9]).unwrap(),
        ]);
        let records: Vec<DemandRecord> = (0..163u64)
            .map(|k| DemandRecord {
                origin: LocationSpec::Zone(if k % 2 == 0 { "w" } else { "e" }.into()),
                destination: LocationSpec::Zone(if k % 2 == 0 { "e" } else { "w" }.into()),
                time: TimeSpec::Interval(5000 + (k % 3) * 300, 5000 + (k % 3 + 1) * 300),
            })
            .collect();
        let reqs = generate_demand(&records, &zones, &m, 5000..5900, &mut rng(5)).unwrap();
        assert_eq!(reqs.len(), 163);
        assert!(reqs
            .windows(2)
            .all(|w| w[0].pickup_time <= w[1].pickup_time));
        assert!(reqs
            .iter()
            .enumerate()
            .all(|(i, r)| r.id == i && r.pickup_time < 900 && r.origin != r.destination));
        assert!(reqs
            .iter()
            .all(|r| r.direct_time == m.travel_time(r.origin, r.destination).unwrap() as u64));
    }

    #[test]
    fn vehicles_from_single_prior_record() {
        let m = line_matrix(10, 60);
        let recs = [exact(7, 1, 950)];
        let v = generate_vehicles(
            &recs,
            &ZoneMap::default(),
            &m,
            1000,
            100,
            3,
            4,
            VehicleStart::Origin,
            &mut rng(2),
        )
        .unwrap();
        assert_eq!(v.len(), 3);
        assert!(v.iter().all(|v| v.start == 7 && v.capacity == 4));
        let v = generate_vehicles(
            &recs,
            &ZoneMap::default(),
            &m,
            1000,
            100,
            1,
            4,
            VehicleStart::Destination,
            &mut rng(2),
        )
        .unwrap();
        assert_eq!(v[0].start, 1);
    }

    #[test]
    fn vehicle_errors() {
        let m = line_matrix(10, 60);
        let recs = [exact(7, 1, 950)];
        let zones = ZoneMap::default();
        assert!(matches!(
            generate_vehicles(
                &recs,
                &zones,
                &m,
                1000,
                100,
                0,
                4,
                VehicleStart::Origin,
                &mut rng(2)
            ),
            Err(DemandError::ZeroCount)
        ));
        assert!(matches!(
            generate_vehicles(
                &recs,
                &zones,
                &m,
                1000,
                10,
                2,
                4,
                VehicleStart::Origin,
                &mut rng(2)
            ),
            Err(DemandError::NoPriorDemand { .. })
        ));
    }

    #[test]
    fn vehicle_sampling_is_deterministic() {
        let m = line_matrix(10, 60);
        let recs: Vec<DemandRecord> = (0..1000u64)
            .map(|k| exact(k % 10, (k + 1) % 10, 10_000 + k))
            .collect();
        let gen = |seed| {
            generate_vehicles(
                &recs,
                &ZoneMap::default(),
                &m,
                12_000,
                2_000,
                100,
                4,
                VehicleStart::Origin,
                &mut rng(seed),
            )
            .unwrap()
        };
        assert_eq!(gen(4), gen(4));
        assert_eq!(gen(4).len(), 100);
    }

    #[test]
    fn parses_files() {
        let zones = parse_zones("zone a 1 2 3\nzone 17 4\n").unwrap();
        assert_eq!(zones.get("a").unwrap().nodes(), &[1, 2, 3]);
        assert_eq!(zones.get("17").unwrap().nodes(), &[4]);
        let recs = parse_demand_records("record n:1 z:a t:100\nrecord z:17 n:3 i:0-900\n").unwrap();
        assert_eq!(
            recs[0],
            DemandRecord {
                origin: LocationSpec::Node(1),
                destination: LocationSpec::Zone("a".into()),
                time: TimeSpec::Exact(100),
            }
        );
        assert_eq!(recs[1].time, TimeSpec::Interval(0, 900));
        assert!(parse_demand_records("record n:1 z:a i:5-5\n").is_err());
        assert!(parse_demand_records("record n:x z:a t:1\n").is_err());
        assert!(parse_zones("zone a\n").is_err());
    }
}
