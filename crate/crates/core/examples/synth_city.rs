//! Writes a synthetic grid city (graph, speeds, zones, demand) to a directory.
//!
//! cargo run -p darp-core --example synth_city -- OUT_DIR [TRIPS] [SEED]

use std::env;
use std::process::ExitCode;

use darp_core::synthetic::{synthetic_city, CityParams};

fn main() -> ExitCode {
    let args: Vec<String> = env::args().skip(1).collect();
    let Some(dir) = args.first() else {
        eprintln!("usage: synth_city OUT_DIR [TRIPS] [SEED]");
        return ExitCode::from(1);
    };
    let mut params = CityParams::default();
    if let Some(trips) = args.get(1).and_then(|s| s.parse().ok()) {
        params.trips = trips;
        params.prior_trips = trips;
    }
    if let Some(seed) = args.get(2).and_then(|s| s.parse().ok()) {
        params.seed = seed;
    }
    let city = synthetic_city(&params);
    match city.write_to(dir) {
        Ok(files) => {
            println!("graph   {}", files.graph.display());
            println!("speeds  {}", files.speeds.display());
            println!("zones   {}", files.zones.display());
            println!("demand  {}", files.demand.display());
            println!("start   {}", darp_core::instance::format_epoch(&city.epoch));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
