use std::sync::Arc;

use darp_bench::record::{read_records, write_records, RunRecord, Status};
use darp_bench::report::{cost_per_request_table, cost_ratio_table, occupancy_report};
use darp_core::instance::{parse_epoch, Instance, InstanceConfig, Request, Vehicle};
use darp_core::roadnet::{compute_travel_time_matrix, Edge, Node, RoadGraph};
use darp_core::solution::{Route, Solution, Stop};

/// Nodes 0-1-2 in a line, 60 s per hop both ways; one vehicle at node 0 and
/// one request 1 -> 2 at time 0.
fn line_instance() -> Instance {
    let nodes = (0..3).map(|id| Node { id, coord: None }).collect();
    let mut edges = Vec::new();
    for (a, b) in [(0, 1), (1, 2)] {
        edges.push(Edge::new(a, b, 600.0, 10.0).unwrap());
        edges.push(Edge::new(b, a, 600.0, 10.0).unwrap());
    }
    let matrix = Arc::new(compute_travel_time_matrix(&RoadGraph::new(nodes, edges).unwrap()).unwrap());
    let config = InstanceConfig {
        area: "line".into(),
        epoch: parse_epoch("2022-04-05T18:00:00Z").unwrap(),
        duration_s: 60,
        max_delay_s: 180,
        seed: 0,
        matrix_file: "line.dttm".into(),
    };
    let request = Request::new(0, 1, 2, 0, &matrix).unwrap();
    Instance::new(config, vec![request], vec![Vehicle { id: 0, start: 0, capacity: 4 }], matrix).unwrap()
}

#[test]
fn single_request_splits_drive_time_evenly() {
    let instance = line_instance();
    let route = Route { vehicle: 0, stops: vec![Stop::pickup(0), Stop::dropoff(0)] };
    let solution = Solution::new(&instance, [route]);
    assert_eq!(solution.total_cost, 120);
    let table = occupancy_report([("line", &instance, &solution)]);
    let rows: Vec<Vec<&str>> = table.rows.iter().map(|r| r.iter().map(String::as_str).collect()).collect();
    assert_eq!(rows[0], ["line", "0", "60", "50.00"]);
    assert_eq!(rows[1], ["line", "1", "60", "50.00"]);
    assert!(rows[2..].iter().all(|r| r[2] == "0"));
}

#[test]
fn idle_fleet_has_no_drive_time() {
    let mut instance = line_instance();
    instance = Instance::new(instance.config().clone(), Vec::new(), instance.vehicles().to_vec(), Arc::clone(instance.matrix()))
        .unwrap();
    let solution = Solution::new(&instance, [Route::empty(0)]);
    let table = occupancy_report([("idle", &instance, &solution)]);
    assert!(table.rows.iter().all(|r| r[2] == "0" && r[3] == "NA"));
}

fn record(duration: f64, delay: f64, method: &str, cost: Option<u64>) -> RunRecord {
    RunRecord {
        area: "synth".into(),
        duration_min: duration,
        max_delay_min: delay,
        method: method.into(),
        requests: 40,
        vehicles: 12,
        total_cost_s: cost,
        wall_time_ms: 0,
        status: if cost.is_some() { Status::Optimal } else { Status::Timeout },
    }
}

#[test]
fn tables_are_reproducible_from_the_results_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("results.csv");
    let records = vec![
        record(0.5, 10.0, "ih", Some(5200)),
        record(0.5, 10.0, "vga", None),
        record(0.5, 3.0, "ih", Some(6000)),
        record(0.5, 3.0, "vga", Some(5000)),
    ];
    write_records(std::fs::File::create(&path).unwrap(), &records, true).unwrap();
    let first = (cost_ratio_table(&read_records(&path).unwrap()).to_csv(), cost_per_request_table(&records).to_csv());
    let second = (cost_ratio_table(&read_records(&path).unwrap()).to_csv(), cost_per_request_table(&records).to_csv());
    assert_eq!(first, second);
    assert_eq!(
        first.0,
        "area,duration_min,max_delay_min,ih_cost_s,vga_cost_s,ih_increase_pct\n\
         synth,0.5,3,6000,5000,20.00\n\
         synth,0.5,10,5200,NA,NA\n"
    );
}
