//! Experiment grids: areas × durations × max delays, read from TOML.
//!
//! ```toml
//! seed = 1
//! time_limit_s = 600
//! durations_min = [0.5, 1, 2]
//! max_delays_min = [3, 5, 10]
//!
//! [[areas]]
//! name = "grid"
//! graph = "graph.txt"
//! speeds = "speeds.txt"
//! zones = "zones.txt"
//! demand = "demand.txt"
//! start = "2022-04-05T18:00:00Z"
//! ```

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use darp_core::instance::{parse_epoch, resolve_relative, VehicleStart};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid file: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("grid: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ih,
    Vga,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Ih => "ih",
            Method::Vga => "vga",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum StartMode {
    #[default]
    Origin,
    Destination,
}

impl From<StartMode> for VehicleStart {
    fn from(m: StartMode) -> Self {
        match m {
            StartMode::Origin => VehicleStart::Origin,
            StartMode::Destination => VehicleStart::Destination,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AreaSpec {
    pub name: String,
    pub graph: PathBuf,
    pub speeds: PathBuf,
    pub zones: PathBuf,
    pub demand: PathBuf,
    /// RFC 3339 instance epoch.
    pub start: String,
    #[serde(default)]
    pub vehicle_start: StartMode,
}

fn default_durations() -> Vec<f64> {
    vec![0.5, 1.0, 2.0, 5.0, 15.0, 30.0, 120.0, 960.0]
}

fn default_delays() -> Vec<f64> {
    vec![3.0, 5.0, 10.0]
}

fn default_capacity() -> u32 {
    4
}

fn default_lookback() -> f64 {
    15.0
}

fn default_group_cap() -> usize {
    darp_core::vga::DEFAULT_GROUP_CAP
}

fn default_methods() -> Vec<Method> {
    vec![Method::Ih, Method::Vga]
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentGrid {
    #[serde(default)]
    pub seed: u64,
    /// Per-run limit for the exact method.
    pub time_limit_s: Option<f64>,
    #[serde(default = "default_capacity")]
    pub capacity: u32,
    #[serde(default = "default_durations")]
    pub durations_min: Vec<f64>,
    #[serde(default = "default_delays")]
    pub max_delays_min: Vec<f64>,
    #[serde(default = "default_lookback")]
    pub lookback_min: f64,
    #[serde(default = "default_group_cap")]
    pub group_cap: usize,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    pub areas: Vec<AreaSpec>,
}

/// Whole seconds for a positive number of minutes.
pub fn minutes_to_seconds(minutes: f64) -> Option<u64> {
    let s = (minutes * 60.0).round();
    (minutes.is_finite() && s >= 1.0).then_some(s as u64)
}

impl ExperimentGrid {
    pub fn parse(text: &str) -> Result<ExperimentGrid, GridError> {
        let grid: ExperimentGrid = toml::from_str(text)?;
        grid.validate()?;
        Ok(grid)
    }

    /// Reads a grid; area paths are resolved against the grid file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<ExperimentGrid, GridError> {
        let path = path.as_ref();
        let mut grid = ExperimentGrid::parse(&fs::read_to_string(path)?)?;
        for area in &mut grid.areas {
            for p in [&mut area.graph, &mut area.speeds, &mut area.zones, &mut area.demand] {
                *p = resolve_relative(path, p);
            }
        }
        Ok(grid)
    }

    fn validate(&self) -> Result<(), GridError> {
        let invalid = |msg: &str| Err(GridError::Invalid(msg.to_string()));
        if self.durations_min.is_empty() || self.max_delays_min.is_empty() || self.areas.is_empty() {
            return invalid("durations_min, max_delays_min and areas must be non-empty");
        }
        if self.methods.is_empty() {
            return invalid("methods must be non-empty");
        }
        if self.durations_min.iter().chain(&self.max_delays_min).any(|&m| minutes_to_seconds(m).is_none()) {
            return invalid("durations and delays must be at least one second");
        }
        if self.capacity == 0 || self.group_cap == 0 {
            return invalid("capacity and group_cap must be positive");
        }
        if !(self.lookback_min.is_finite() && self.lookback_min >= 0.0) {
            return invalid("lookback_min must be non-negative");
        }
        if self.time_limit_s.is_some_and(|t| !(t.is_finite() && t > 0.0)) {
            return invalid("time_limit_s must be positive");
        }
        for area in &self.areas {
            if area.name.is_empty() || area.name.contains(|c: char| c == ',' || c.is_whitespace() || c == '/') {
                return Err(GridError::Invalid(format!("area name `{}` must be a plain token", area.name)));
            }
            if parse_epoch(&area.start).is_err() {
                return Err(GridError::Invalid(format!("area {}: start `{}` is not RFC 3339", area.name, area.start)));
            }
        }
        let mut names: Vec<&str> = self.areas.iter().map(|a| a.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return invalid("area names must be unique");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GRID: &str = r#"
seed = 3
durations_min = [0.5, 1]
max_delays_min = [3, 5]

[[areas]]
name = "grid"
graph = "graph.txt"
speeds = "speeds.txt"
zones = "zones.txt"
demand = "demand.txt"
start = "2022-04-05T18:00:00Z"
"#;

    #[test]
    fn defaults_apply() {
        let g = ExperimentGrid::parse(GRID).unwrap();
        assert_eq!(g.seed, 3);
        assert_eq!(g.capacity, 4);
        assert_eq!(g.methods, vec![Method::Ih, Method::Vga]);
        assert_eq!(g.time_limit_s, None);
        assert_eq!(g.areas[0].vehicle_start, StartMode::Origin);
        let d = ExperimentGrid::parse(&GRID.replace("durations_min = [0.5, 1]\n", "")).unwrap();
        assert_eq!(d.durations_min, default_durations());
    }

    #[test]
    fn rejects_empty_dimensions() {
        assert!(ExperimentGrid::parse(&GRID.replace("[3, 5]", "[]")).is_err());
        assert!(ExperimentGrid::parse(&GRID.replace("2022-04-05T18:00:00Z", "yesterday")).is_err());
        assert!(ExperimentGrid::parse(&GRID.replace("seed = 3", "seed = 3\nspeed = 1")).is_err());
    }

    #[test]
    fn paths_resolve_against_grid_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grid.toml");
        fs::write(&path, GRID).unwrap();
        let g = ExperimentGrid::load(&path).unwrap();
        assert_eq!(g.areas[0].graph, dir.path().join("graph.txt"));
    }

    #[test]
    fn minute_conversion() {
        assert_eq!(minutes_to_seconds(0.5), Some(30));
        assert_eq!(minutes_to_seconds(960.0), Some(57_600));
        assert_eq!(minutes_to_seconds(0.0), None);
    }
}
