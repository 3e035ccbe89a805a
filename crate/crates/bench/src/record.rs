//! One solver run in the standardized results format.

use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{self, Write};
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

pub const RESULTS_HEADER: [&str; 10] = [
    "area",
    "duration_min",
    "max_delay_min",
    "method",
    "requests",
    "vehicles",
    "total_cost_s",
    "cost_per_request_s",
    "wall_time_ms",
    "status",
];

/// Written in place of absent values.
pub const MISSING: &str = "NA";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Status {
    /// Proven optimal.
    Optimal,
    /// A valid solution without an optimality proof.
    Feasible,
    /// Time limit reached before optimality was proven.
    Timeout,
    Error,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::Feasible => "feasible",
            Status::Timeout => "timeout",
            Status::Error => "error",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Status {
    type Err = RecordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "optimal" => Ok(Status::Optimal),
            "feasible" => Ok(Status::Feasible),
            "timeout" => Ok(Status::Timeout),
            "error" => Ok(Status::Error),
            other => Err(RecordError::Field { field: "status", value: other.to_string() }),
        }
    }
}

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("results header mismatch: expected `{}`", RESULTS_HEADER.join(","))]
    Header,
    #[error("invalid {field} `{value}`")]
    Field { field: &'static str, value: String },
    #[error("row {row}: expected {} fields, found {found}", RESULTS_HEADER.len())]
    Width { row: usize, found: usize },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub area: String,
    pub duration_min: f64,
    pub max_delay_min: f64,
    pub method: String,
    pub requests: usize,
    pub vehicles: usize,
    /// Present only for statuses that carry a reportable solution.
    pub total_cost_s: Option<u64>,
    pub wall_time_ms: u64,
    pub status: Status,
}

impl RunRecord {
    pub fn cost_per_request_s(&self) -> Option<f64> {
        match (self.total_cost_s, self.requests) {
            (Some(cost), n) if n > 0 => Some(cost as f64 / n as f64),
            _ => None,
        }
    }

    pub fn to_fields(&self) -> [String; 10] {
        [
            self.area.clone(),
            format_minutes(self.duration_min),
            format_minutes(self.max_delay_min),
            self.method.clone(),
            self.requests.to_string(),
            self.vehicles.to_string(),
            self.total_cost_s.map_or_else(|| MISSING.to_string(), |c| c.to_string()),
            self.cost_per_request_s().map_or_else(|| MISSING.to_string(), |c| format!("{c:.3}")),
            self.wall_time_ms.to_string(),
            self.status.to_string(),
        ]
    }

    pub fn from_fields(fields: &csv::StringRecord, row: usize) -> Result<RunRecord, RecordError> {
        if fields.len() != RESULTS_HEADER.len() {
            return Err(RecordError::Width { row, found: fields.len() });
        }
        fn parse<T: FromStr>(field: &'static str, value: &str) -> Result<T, RecordError> {
            value.parse().map_err(|_| RecordError::Field { field, value: value.to_string() })
        }
        let total_cost_s = match &fields[6] {
            MISSING => None,
            v => Some(parse("total_cost_s", v)?),
        };
        Ok(RunRecord {
            area: fields[0].to_string(),
            duration_min: parse("duration_min", &fields[1])?,
            max_delay_min: parse("max_delay_min", &fields[2])?,
            method: fields[3].to_string(),
            requests: parse("requests", &fields[4])?,
            vehicles: parse("vehicles", &fields[5])?,
            total_cost_s,
            wall_time_ms: parse("wall_time_ms", &fields[8])?,
            status: fields[9].parse()?,
        })
    }
}

/// Shortest decimal form: `0.5`, `15`.
pub fn format_minutes(m: f64) -> String {
    format!("{m}")
}

pub fn write_records<W: Write>(out: W, records: &[RunRecord], header: bool) -> Result<(), RecordError> {
    let mut w = csv::Writer::from_writer(out);
    if header {
        w.write_record(RESULTS_HEADER)?;
    }
    for r in records {
        w.write_record(r.to_fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<RunRecord>, RecordError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    if reader.headers()?.iter().ne(RESULTS_HEADER) {
        return Err(RecordError::Header);
    }
    reader.records().enumerate().map(|(i, row)| RunRecord::from_fields(&row?, i + 1)).collect()
}

/// Append-only results file. The header is written when the file is new or
/// empty; an existing file must already carry it.
pub struct ResultsWriter {
    file: File,
}

impl ResultsWriter {
    pub fn open(path: impl AsRef<Path>) -> Result<ResultsWriter, RecordError> {
        let path = path.as_ref();
        let fresh = std::fs::metadata(path).map_or(true, |m| m.len() == 0);
        if !fresh {
            let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
            if reader.headers()?.iter().ne(RESULTS_HEADER) {
                return Err(RecordError::Header);
            }
        }
        let mut file = OpenOptions::new().create(true).append(true).open(path)?;
        if fresh {
            write_records(&mut file, &[], true)?;
        }
        Ok(ResultsWriter { file })
    }

    pub fn append(&mut self, record: &RunRecord) -> Result<(), RecordError> {
        write_records(&mut self.file, std::slice::from_ref(record), false)?;
        self.file.sync_data()?;
        Ok(())
    }
}
