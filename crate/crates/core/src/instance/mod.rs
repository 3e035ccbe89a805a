//! DARP instances `(R, V, f_t, Δ)`: types, validation, and the text file format.

mod demand;
mod fleet;
mod generate;

pub use demand::{
    generate_demand, generate_vehicles, load_demand_records, load_zones, parse_demand_records,
    parse_zones, sample_location, sample_time, DemandError, DemandRecord, LocationSpec, TimeSpec,
    VehicleStart, Zone, ZoneMap,
};
pub use fleet::{buffered_size, size_fleet, FleetError, FleetSizing};
pub use generate::{generate_instance, GenerationConfig, GenerationError};

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, SecondsFormat, Utc};
use thiserror::Error;

use crate::roadnet::{NodeId, RoadnetError, TravelTimeMatrix};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unsupported instance format version {found} (expected {FORMAT_VERSION})")]
    FormatVersion { found: u32 },
    #[error("{0}")]
    Invalid(String),
    #[error("node {node} of {what} is not in the travel-time matrix")]
    UnknownNode { what: String, node: NodeId },
    #[error("travel-time matrix {path}: {source}")]
    Matrix { path: PathBuf, source: RoadnetError },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Request {
    pub id: usize,
    pub origin: NodeId,
    pub destination: NodeId,
    /// Desired pickup time, seconds since the instance epoch.
    pub pickup_time: u64,
    /// Cached `f_t(origin, destination)`.
    pub direct_time: u64,
}

impl Request {
    pub fn new(
        id: usize,
        origin: NodeId,
        destination: NodeId,
        pickup_time: u64,
        matrix: &TravelTimeMatrix,
    ) -> Result<Request, RoadnetError> {
        let direct_time = matrix.travel_time(origin, destination)? as u64;
        Ok(Request {
            id,
            origin,
            destination,
            pickup_time,
            direct_time,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vehicle {
    pub id: usize,
    pub start: NodeId,
    pub capacity: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceConfig {
    pub area: String,
    pub epoch: DateTime<Utc>,
    pub duration_s: u64,
    pub max_delay_s: u64,
    pub seed: u64,
    /// Matrix file, relative paths resolved against the instance file's directory.
    pub matrix_file: PathBuf,
}

/// A validated instance. Node ids are resolved to dense matrix indices once,
/// at construction; solvers work on those indices.
#[derive(Debug, Clone)]
pub struct Instance {
    config: InstanceConfig,
    requests: Vec<Request>,
    vehicles: Vec<Vehicle>,
    matrix: Arc<TravelTimeMatrix>,
    request_locs: Vec<(usize, usize)>,
    vehicle_locs: Vec<usize>,
}

impl PartialEq for Instance {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
            && self.requests == other.requests
            && self.vehicles == other.vehicles
            && (Arc::ptr_eq(&self.matrix, &other.matrix) || self.matrix == other.matrix)
    }
}

impl Instance {
    pub fn new(
        config: InstanceConfig,
        requests: Vec<Request>,
        vehicles: Vec<Vehicle>,
        matrix: Arc<TravelTimeMatrix>,
    ) -> Result<Instance, InstanceError> {
        let invalid = |msg: String| Err(InstanceError::Invalid(msg));
        if config.max_delay_s == 0 {
            return invalid("max delay must be positive".into());
        }
        let lookup = |what: String, node: NodeId| {
            matrix
                .index_of(node)
                .ok_or(InstanceError::UnknownNode { what, node })
        };

        let mut request_locs = Vec::with_capacity(requests.len());
        for (i, r) in requests.iter().enumerate() {
            if r.id != i {
                return invalid(format!(
                    "request ids must be 0..n in order, found {} at position {i}",
                    r.id
                ));
            }
            if r.origin == r.destination {
                return invalid(format!("request {i} has origin equal to destination"));
            }
            if r.pickup_time >= config.duration_s {
                return invalid(format!(
                    "request {i} pickup time {} outside [0, {})",
                    r.pickup_time, config.duration_s
                ));
            }
            if i > 0 && requests[i - 1].pickup_time > r.pickup_time {
                return invalid(format!("requests not sorted by pickup time at request {i}"));
            }
            let o = lookup(format!("request {i} origin"), r.origin)?;
            let d = lookup(format!("request {i} destination"), r.destination)?;
            if matrix.get(o, d) as u64 != r.direct_time {
                return invalid(format!("request {i} direct time does not match the matrix"));
            }
            request_locs.push((o, d));
        }

        let mut vehicle_locs = Vec::with_capacity(vehicles.len());
        for (i, v) in vehicles.iter().enumerate() {
            if v.id != i {
                return invalid(format!(
                    "vehicle ids must be 0..m in order, found {} at position {i}",
                    v.id
                ));
            }
            if v.capacity == 0 {
                return invalid(format!("vehicle {i} has zero capacity"));
            }
            vehicle_locs.push(lookup(format!("vehicle {i} start"), v.start)?);
        }

        Ok(Instance {
            config,
            requests,
            vehicles,
            matrix,
            request_locs,
            vehicle_locs,
        })
    }

    /// Same demand and travel model with a different fleet.
    pub fn with_vehicles(&self, vehicles: Vec<Vehicle>) -> Result<Instance, InstanceError> {
        Instance::new(
            self.config.clone(),
            self.requests.clone(),
            vehicles,
            Arc::clone(&self.matrix),
        )
    }

    /// Same demand and fleet with a different max delay.
    pub fn with_max_delay(&self, max_delay_s: u64) -> Result<Instance, InstanceError> {
        let config = InstanceConfig {
            max_delay_s,
            ..self.config.clone()
        };
        Instance::new(
            config,
            self.requests.clone(),
            self.vehicles.clone(),
            Arc::clone(&self.matrix),
        )
    }

    pub fn config(&self) -> &InstanceConfig {
        &self.config
    }

    pub fn requests(&self) -> &[Request] {
        &self.requests
    }

    pub fn vehicles(&self) -> &[Vehicle] {
        &self.vehicles
    }

    pub fn matrix(&self) -> &Arc<TravelTimeMatrix> {
        &self.matrix
    }

    pub fn max_delay(&self) -> u64 {
        self.config.max_delay_s
    }

    #[inline]
    pub fn travel_time(&self, from_loc: usize, to_loc: usize) -> u64 {
        self.matrix.get(from_loc, to_loc) as u64
    }

    #[inline]
    pub fn origin_loc(&self, request: usize) -> usize {
        self.request_locs[request].0
    }

    #[inline]
    pub fn destination_loc(&self, request: usize) -> usize {
        self.request_locs[request].1
    }

    #[inline]
    pub fn start_loc(&self, vehicle: usize) -> usize {
        self.vehicle_locs[vehicle]
    }

    /// Latest admissible dropoff: `t + f_t(o, d) + Δ`.
    #[inline]
    pub fn dropoff_deadline(&self, request: usize) -> u64 {
        let r = &self.requests[request];
        r.pickup_time + r.direct_time + self.config.max_delay_s
    }
}

pub fn format_epoch(epoch: &DateTime<Utc>) -> String {
    epoch.to_rfc3339_opts(SecondsFormat::Secs, true)
}

pub fn parse_epoch(text: &str) -> Result<DateTime<Utc>, chrono::ParseError> {
    DateTime::parse_from_rfc3339(text).map(|t| t.with_timezone(&Utc))
}

pub fn format_instance(instance: &Instance) -> String {
    let c = &instance.config;
    let mut out = String::new();
    writeln!(out, "[config]").unwrap();
    writeln!(out, "format_version = {FORMAT_VERSION}").unwrap();
    writeln!(out, "area = {}", c.area).unwrap();
    writeln!(out, "epoch = {}", format_epoch(&c.epoch)).unwrap();
    writeln!(out, "duration_s = {}", c.duration_s).unwrap();
    writeln!(out, "max_delay_s = {}", c.max_delay_s).unwrap();
    writeln!(out, "seed = {}", c.seed).unwrap();
    writeln!(out, "matrix_file = {}", c.matrix_file.display()).unwrap();
    writeln!(out, "[vehicles]").unwrap();
    for v in &instance.vehicles {
        writeln!(out, "vehicle {} {} {}", v.id, v.start, v.capacity).unwrap();
    }
    writeln!(out, "[requests]").unwrap();
    for r in &instance.requests {
        writeln!(
            out,
            "request {} {} {} {}",
            r.id, r.origin, r.destination, r.pickup_time
        )
        .unwrap();
    }
    out
}

pub fn write_instance(instance: &Instance, path: impl AsRef<Path>) -> io::Result<()> {
    fs::write(path, format_instance(instance))
}

/// Instance text before the travel-time matrix is attached.
#[derive(Debug, Clone)]
pub struct RawInstance {
    pub config: InstanceConfig,
    pub vehicles: Vec<Vehicle>,
    /// `(id, origin, destination, pickup_time)`
    pub requests: Vec<(usize, NodeId, NodeId, u64)>,
}

impl RawInstance {
    pub fn resolve(self, matrix: Arc<TravelTimeMatrix>) -> Result<Instance, InstanceError> {
        let mut requests = Vec::with_capacity(self.requests.len());
        for (id, origin, destination, pickup_time) in self.requests {
            for (what, node) in [("origin", origin), ("destination", destination)] {
                if !matrix.contains(node) {
                    return Err(InstanceError::UnknownNode {
                        what: format!("request {id} {what}"),
                        node,
                    });
                }
            }
            requests.push(
                Request::new(id, origin, destination, pickup_time, &matrix).expect("nodes checked"),
            );
        }
        Instance::new(self.config, requests, self.vehicles, matrix)
    }
}

pub fn parse_instance(text: &str) -> Result<RawInstance, InstanceError> {
    #[derive(PartialEq)]
    enum Section {
        None,
        Config,
        Vehicles,
        Requests,
    }
    let err = |line: usize, msg: String| InstanceError::Parse { line, msg };
    fn num<T: std::str::FromStr>(
        tok: Option<&str>,
        line: usize,
        what: &str,
    ) -> Result<T, InstanceError> {
        let tok = tok.ok_or_else(|| InstanceError::Parse {
            line,
            msg: format!("missing {what}"),
        })?;
        tok.parse().map_err(|_| InstanceError::Parse {
            line,
            msg: format!("invalid {what} `{tok}`"),
        })
    }

    let mut section = Section::None;
    let mut version = None;
    let (mut area, mut epoch, mut duration, mut delay, mut seed, mut matrix_file) =
        (None, None, None, None, None, None);
    let mut vehicles = Vec::new();
    let mut requests = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line {
            "[config]" => section = Section::Config,
            "[vehicles]" => section = Section::Vehicles,
            "[requests]" => section = Section::Requests,
            _ => match section {
                Section::None => return Err(err(no, "content before the first section".into())),
                Section::Config => {
                    let (key, value) = line
                        .split_once('=')
                        .map(|(k, v)| (k.trim(), v.trim()))
                        .ok_or_else(|| err(no, "expected `key = value`".into()))?;
                    match key {
                        "format_version" => version = Some(num::<u32>(Some(value), no, key)?),
                        "area" => area = Some(value.to_string()),
                        "epoch" => {
                            epoch = Some(
                                parse_epoch(value)
                                    .map_err(|e| err(no, format!("invalid epoch: {e}")))?,
                            )
                        }
                        "duration_s" => duration = Some(num(Some(value), no, key)?),
                        "max_delay_s" => delay = Some(num(Some(value), no, key)?),
                        "seed" => seed = Some(num(Some(value), no, key)?),
                        "matrix_file" => matrix_file = Some(PathBuf::from(value)),
                        _ => return Err(err(no, format!("unknown config key `{key}`"))),
                    }
                }
                Section::Vehicles => {
                    let mut t = line.split_whitespace();
                    if t.next() != Some("vehicle") {
                        return Err(err(
                            no,
                            "expected `vehicle <id> <start_node> <capacity>`".into(),
                        ));
                    }
                    let id = num(t.next(), no, "vehicle id")?;
                    let start = num(t.next(), no, "start node")?;
                    let capacity = num(t.next(), no, "capacity")?;
                    if t.next().is_some() {
                        return Err(err(no, "trailing tokens".into()));
                    }
                    vehicles.push(Vehicle {
                        id,
                        start,
                        capacity,
                    });
                }
                Section::Requests => {
                    let mut t = line.split_whitespace();
                    if t.next() != Some("request") {
                        return Err(err(
                            no,
                            "expected `request <id> <origin> <destination> <pickup_time_s>`".into(),
                        ));
                    }
                    let fields = (
                        num(t.next(), no, "request id")?,
                        num(t.next(), no, "origin")?,
                        num(t.next(), no, "destination")?,
                        num(t.next(), no, "pickup time")?,
                    );
                    if t.next().is_some() {
                        return Err(err(no, "trailing tokens".into()));
                    }
                    requests.push(fields);
                }
            },
        }
    }

    let version = version.ok_or_else(|| err(0, "missing format_version".into()))?;
    if version != FORMAT_VERSION {
        return Err(InstanceError::FormatVersion { found: version });
    }
    let missing = |key: &str| err(0, format!("missing config key `{key}`"));
    let config = InstanceConfig {
        area: area.ok_or_else(|| missing("area"))?,
        epoch: epoch.ok_or_else(|| missing("epoch"))?,
        duration_s: duration.ok_or_else(|| missing("duration_s"))?,
        max_delay_s: delay.ok_or_else(|| missing("max_delay_s"))?,
        seed: seed.ok_or_else(|| missing("seed"))?,
        matrix_file: matrix_file.ok_or_else(|| missing("matrix_file"))?,
    };
    Ok(RawInstance {
        config,
        vehicles,
        requests,
    })
}

/// Reads an instance file and the matrix file it references.
pub fn read_instance(path: impl AsRef<Path>) -> Result<Instance, InstanceError> {
    let path = path.as_ref();
    let raw = parse_instance(&fs::read_to_string(path)?)?;
    let matrix_path = resolve_relative(path, &raw.config.matrix_file);
    let matrix = TravelTimeMatrix::load(&matrix_path).map_err(|source| InstanceError::Matrix {
        path: matrix_path.clone(),
        source,
    })?;
    raw.resolve(Arc::new(matrix))
}

/// Resolves `target` against the directory containing `file` unless absolute.
pub fn resolve_relative(file: &Path, target: &Path) -> PathBuf {
    if target.is_absolute() {
        target.to_path_buf()
    } else {
        file.parent().unwrap_or_else(|| Path::new("")).join(target)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::roadnet::{compute_travel_time_matrix, Edge, Node, RoadGraph};

    /// Bidirectional line `0 <-> 1 <-> ... <-> n-1`, `hop` seconds per hop.
    pub(crate) fn line_matrix(n: u64, hop: u32) -> Arc<TravelTimeMatrix> {
        let nodes = (0..n).map(|id| Node { id, coord: None }).collect();
        let mut edges = Vec::new();
        for i in 0..n - 1 {
            edges.push(Edge::new(i, i + 1, hop as f64, 1.0).unwrap());
            edges.push(Edge::new(i + 1, i, hop as f64, 1.0).unwrap());
        }
        Arc::new(compute_travel_time_matrix(&RoadGraph::new(nodes, edges).unwrap()).unwrap())
    }

    pub(crate) fn config(duration_s: u64, max_delay_s: u64) -> InstanceConfig {
        InstanceConfig {
            area: "line".into(),
            epoch: parse_epoch("2022-04-05T18:00:00Z").unwrap(),
            duration_s,
            max_delay_s,
            seed: 7,
            matrix_file: "line.dttm".into(),
        }
    }

    /// Instance on a 60 s/hop line with `(origin, destination, time)` requests
    /// and vehicles at the given starts, capacity 4.
    pub(crate) fn line_instance(
        requests: &[(u64, u64, u64)],
        starts: &[u64],
        max_delay_s: u64,
    ) -> Instance {
        let m = line_matrix(10, 60);
        let reqs = requests
            .iter()
            .enumerate()
            .map(|(i, &(o, d, t))| Request::new(i, o, d, t, &m).unwrap())
            .collect();
        let vehicles = starts
            .iter()
            .enumerate()
            .map(|(id, &start)| Vehicle {
                id,
                start,
                capacity: 4,
            })
            .collect();
        Instance::new(config(3600, max_delay_s), reqs, vehicles, m).unwrap()
    }

    #[test]
    fn round_trip_through_files() {
        let inst = line_instance(&[(1, 2, 0), (3, 5, 10), (4, 0, 10)], &[0, 7], 180);
        let dir = tempfile::tempdir().unwrap();
        inst.matrix().save(dir.path().join("line.dttm")).unwrap();
        let path = dir.path().join("x.inst");
        write_instance(&inst, &path).unwrap();
        let back = read_instance(&path).unwrap();
        assert_eq!(back, inst);
        assert_eq!(format_instance(&back), fs::read_to_string(&path).unwrap());
    }

    #[test]
    fn rejects_unsorted_requests() {
        let inst = line_instance(&[(1, 2, 0), (3, 5, 10)], &[0], 180);
        let text = format_instance(&inst)
            .replace("request 1 3 5 10", "request 1 3 5 0")
            .replace("request 0 1 2 0", "request 0 1 2 20");
        let err = parse_instance(&text)
            .unwrap()
            .resolve(Arc::clone(inst.matrix()))
            .unwrap_err();
        assert!(err.to_string().contains("not sorted"), "{err}");
    }

    #[test]
    fn rejects_unknown_node() {
        let inst = line_instance(&[(1, 2, 0)], &[0], 180);
        let text = format_instance(&inst).replace("request 0 1 2 0", "request 0 1 42 0");
        let err = parse_instance(&text)
            .unwrap()
            .resolve(Arc::clone(inst.matrix()))
            .unwrap_err();
        assert!(
            matches!(err, InstanceError::UnknownNode { node: 42, .. }),
            "{err}"
        );
        let text = format_instance(&inst).replace("vehicle 0 0 4", "vehicle 0 99 4");
        let err = parse_instance(&text)
            .unwrap()
            .resolve(Arc::clone(inst.matrix()))
            .unwrap_err();
        assert!(
            matches!(err, InstanceError::UnknownNode { node: 99, .. }),
            "{err}"
        );
    }

    #[test]
    fn rejects_other_format_versions() {
        let inst = line_instance(&[(1, 2, 0)], &[0], 180);
        let text = format_instance(&inst).replace("format_version = 1", "format_version = 2");
        assert!(matches!(
            parse_instance(&text),
            Err(InstanceError::FormatVersion { found: 2 })
        ));
    }

    #[test]
    fn validates_invariants() {
        let m = line_matrix(4, 60);
        let r = |id, o, d, t| Request::new(id, o, d, t, &m).unwrap();
        let v = vec![Vehicle {
            id: 0,
            start: 0,
            capacity: 4,
        }];
        assert!(Instance::new(config(100, 0), vec![], v.clone(), m.clone()).is_err());
        assert!(Instance::new(config(100, 60), vec![r(0, 1, 1, 0)], v.clone(), m.clone()).is_err());
        assert!(
            Instance::new(config(100, 60), vec![r(0, 1, 2, 100)], v.clone(), m.clone()).is_err()
        );
        assert!(Instance::new(config(100, 60), vec![r(1, 1, 2, 0)], v.clone(), m.clone()).is_err());
        let zero_cap = vec![Vehicle {
            id: 0,
            start: 0,
            capacity: 0,
        }];
        assert!(Instance::new(config(100, 60), vec![], zero_cap, m.clone()).is_err());
        let mut bad = r(0, 1, 2, 0);
        bad.direct_time = 1;
        assert!(Instance::new(config(100, 60), vec![bad], v, m).is_err());
    }
}
