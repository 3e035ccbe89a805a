use std::sync::Arc;

use darp_core::ih::solve_ih;
use darp_core::instance::{
    buffered_size, format_instance, generate_instance, GenerationConfig, VehicleStart,
};
use darp_core::roadnet::build_travel_model;
use darp_core::solution::validate_solution;
use darp_core::synthetic::{synthetic_city, CityParams};

fn generate(params: &CityParams, seed: u64) -> (String, usize, usize) {
    let city = synthetic_city(params);
    let (_, matrix) = build_travel_model(&city.graph, &city.speeds).unwrap();
    let config = GenerationConfig {
        area: "grid".into(),
        epoch: city.epoch,
        duration_s: params.duration_s,
        max_delay_s: 300,
        lookback_s: params.lookback_s,
        capacity: 4,
        seed,
        vehicle_start: VehicleStart::Origin,
        matrix_file: "grid.dttm".into(),
    };
    let (inst, sizing) =
        generate_instance(&city.records, &city.zones, Arc::new(matrix), &config).unwrap();
    assert_eq!(inst.vehicles().len(), buffered_size(sizing.minimal));
    let ih = solve_ih(&inst).unwrap();
    assert_eq!(validate_solution(&inst, &ih), Ok(()));
    (
        format_instance(&inst),
        inst.requests().len(),
        inst.vehicles().len(),
    )
}

#[test]
fn exact_records_give_one_request_each() {
    let params = CityParams {
        trips: 60,
        prior_trips: 60,
        ..CityParams::default()
    };
    let (text, requests, vehicles) = generate(&params, 3);
    assert_eq!(requests, 60);
    assert!(vehicles >= 2 && vehicles <= 60);
    assert_eq!(generate(&params, 3).0, text);
    assert_ne!(generate(&params, 4).0, text);
}

#[test]
fn obfuscated_records_generate_feasible_instances() {
    let params = CityParams {
        trips: 80,
        prior_trips: 40,
        obfuscation_s: Some(300),
        seed: 9,
        ..CityParams::default()
    };
    let (text, requests, _) = generate(&params, 1);
    assert_eq!(requests, 80);
    assert_eq!(generate(&params, 1).0, text);
}
