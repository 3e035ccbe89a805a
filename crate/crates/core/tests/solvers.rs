mod support;

use darp_core::ih::solve_ih;
use darp_core::instance::{buffered_size, size_fleet, Vehicle};
use darp_core::solution::validate_solution;
use darp_core::vga::{solve_vga, VgaConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::{brute_force_optimum, random_instance};

#[test]
fn vga_matches_exhaustive_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut feasible, mut infeasible) = (0, 0);
    for _ in 0..80 {
        let n = rng.gen_range(2..=6);
        let m = rng.gen_range(1..=3);
        let delay = [60, 180, 300, 600][rng.gen_range(0..4)];
        let inst = random_instance(&mut rng, n, m, delay);
        let oracle = brute_force_optimum(&inst);
        match solve_vga(&inst, &VgaConfig::default()) {
            Ok(r) => {
                assert!(r.optimal);
                assert_eq!(Some(r.solution.total_cost), oracle);
                assert_eq!(validate_solution(&inst, &r.solution), Ok(()));
                feasible += 1;
            }
            Err(e) => {
                assert_eq!(oracle, None, "VGA failed with {e} on a feasible instance");
                infeasible += 1;
            }
        }
    }
    assert!(
        feasible >= 40,
        "{feasible} feasible, {infeasible} infeasible"
    );
}

#[test]
fn insertion_is_feasible_and_never_cheaper_than_vga() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut compared = 0;
    for _ in 0..80 {
        let (n, m) = (rng.gen_range(2..=8), rng.gen_range(1..=4));
        let inst = random_instance(&mut rng, n, m, 300);
        let Ok(ih) = solve_ih(&inst) else { continue };
        assert_eq!(validate_solution(&inst, &ih), Ok(()));
        let vga = solve_vga(&inst, &VgaConfig::default()).unwrap();
        assert!(ih.total_cost >= vga.solution.total_cost);
        compared += 1;
    }
    assert!(compared >= 30);
}

#[test]
fn vga_cost_is_monotone_in_max_delay() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut checked = 0;
    for _ in 0..40 {
        let (n, m) = (rng.gen_range(3..=7), rng.gen_range(1..=3));
        let base = random_instance(&mut rng, n, m, 180);
        let costs: Vec<Option<u64>> = [180, 300, 600]
            .iter()
            .map(|&d| {
                solve_vga(&base.with_max_delay(d).unwrap(), &VgaConfig::default())
                    .ok()
                    .map(|r| r.solution.total_cost)
            })
            .collect();
        for w in costs.windows(2) {
            if let Some(a) = w[0] {
                assert!(w[1].is_some_and(|b| b <= a), "{costs:?}");
                checked += 1;
            }
        }
    }
    assert!(checked > 20);
}

#[test]
fn fleet_size_matches_linear_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut sized = 0;
    for _ in 0..40 {
        let n = rng.gen_range(1..=12);
        let demand = random_instance(&mut rng, n, 0, 300);
        let ids = demand.matrix().node_ids().to_vec();
        let pool: Vec<u64> = (0..demand.requests().len() + 3)
            .map(|_| ids[rng.gen_range(0..ids.len())])
            .collect();
        let Ok(sizing) = size_fleet(&demand, &pool, 4, &mut rng) else {
            continue;
        };
        let serves = |k: usize| {
            let fleet = sizing.order[..k]
                .iter()
                .enumerate()
                .map(|(id, &start)| Vehicle {
                    id,
                    start,
                    capacity: 4,
                });
            let inst = demand.with_vehicles(fleet.collect()).unwrap();
            solve_ih(&inst).is_ok_and(|s| validate_solution(&inst, &s).is_ok())
        };
        let k = (1..=sizing.order.len()).find(|&k| serves(k)).unwrap();
        assert_eq!(sizing.minimal, k);
        assert_eq!(sizing.size, buffered_size(k));
        assert_eq!(sizing.size, ((k as f64) * 1.05).ceil() as usize);
        sized += 1;
    }
    assert!(sized >= 25, "{sized}");
}
