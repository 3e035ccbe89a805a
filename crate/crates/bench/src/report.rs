//! Plot-ready tables derived from run records and solution files.

use std::collections::BTreeMap;
use std::io::Write;

use darp_core::instance::Instance;
use darp_core::solution::{occupancy_histogram, Solution};

use crate::record::{format_minutes, RecordError, RunRecord, MISSING};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Table {
        Table { header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), RecordError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = Vec::new();
        self.write_csv(&mut out).expect("writing to memory");
        String::from_utf8(out).expect("utf-8 fields")
    }
}

/// Grid cell key ordered numerically by duration and delay.
#[derive(Debug, Clone, PartialEq)]
struct CellKey {
    area: String,
    duration_min: f64,
    max_delay_min: f64,
}

impl Eq for CellKey {}

impl Ord for CellKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.area
            .cmp(&other.area)
            .then(self.duration_min.total_cmp(&other.duration_min))
            .then(self.max_delay_min.total_cmp(&other.max_delay_min))
    }
}

impl PartialOrd for CellKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

fn key(r: &RunRecord) -> CellKey {
    CellKey { area: r.area.clone(), duration_min: r.duration_min, max_delay_min: r.max_delay_min }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| MISSING.to_string(), |v| v.to_string())
}

/// Percent cost increase of IH over VGA per cell:
/// `100 * (cost(IH) - cost(VGA)) / cost(VGA)`, missing when either cost is.
/// When a cell has several records of a method, the last one counts.
pub fn cost_ratio_table(records: &[RunRecord]) -> Table {
    let mut cells: BTreeMap<CellKey, (Option<u64>, Option<u64>)> = BTreeMap::new();
    for r in records {
        let entry = cells.entry(key(r)).or_default();
        match r.method.as_str() {
            "ih" => entry.0 = r.total_cost_s,
            "vga" => entry.1 = r.total_cost_s,
            _ => {}
        }
    }
    let mut table = Table::new(&["area", "duration_min", "max_delay_min", "ih_cost_s", "vga_cost_s", "ih_increase_pct"]);
    for (k, (ih, vga)) in cells {
        let pct = match (ih, vga) {
            (Some(ih), Some(vga)) if vga > 0 => Some(format!("{:.2}", 100.0 * (ih as f64 - vga as f64) / vga as f64)),
            (Some(0), Some(0)) => Some(format!("{:.2}", 0.0)),
            _ => None,
        };
        table.rows.push(vec![
            k.area,
            format_minutes(k.duration_min),
            format_minutes(k.max_delay_min),
            opt(ih),
            opt(vga),
            opt(pct),
        ]);
    }
    table
}

/// Average vehicle travel time per request for every cell and method.
pub fn cost_per_request_table(records: &[RunRecord]) -> Table {
    let mut cells: BTreeMap<(CellKey, String), Option<f64>> = BTreeMap::new();
    for r in records {
        cells.insert((key(r), r.method.clone()), r.cost_per_request_s());
    }
    let mut table = Table::new(&["area", "duration_min", "max_delay_min", "method", "cost_per_request_s"]);
    for ((k, method), value) in cells {
        table.rows.push(vec![
            k.area,
            format_minutes(k.duration_min),
            format_minutes(k.max_delay_min),
            method,
            opt(value.map(|v| format!("{v:.3}"))),
        ]);
    }
    table
}

/// Drive time per occupancy level for each named solution, with its share of
/// that solution's total drive time.
pub fn occupancy_report<'a>(solutions: impl IntoIterator<Item = (&'a str, &'a Instance, &'a Solution)>) -> Table {
    let mut table = Table::new(&["solution", "occupancy", "seconds", "share_pct"]);
    for (name, instance, solution) in solutions {
        let hist = occupancy_histogram(instance, solution);
        let total: u64 = hist.values().sum();
        for (level, seconds) in hist {
            let share = (total > 0).then(|| format!("{:.2}", 100.0 * seconds as f64 / total as f64));
            table.rows.push(vec![name.to_string(), level.to_string(), seconds.to_string(), opt(share)]);
        }
    }
    table
}
