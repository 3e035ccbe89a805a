//! Fleet sizing: the smallest prefix of a shuffled candidate list with which
//! the insertion heuristic serves every request, plus a 5% buffer.

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use super::{Instance, InstanceError, Vehicle};
use crate::ih::{run_insertion, serves_all};
use crate::roadnet::NodeId;

#[derive(Debug, Error)]
pub enum FleetError {
    #[error("no requests to size a fleet for")]
    EmptyDemand,
    #[error("no candidate vehicle starts")]
    NoCandidates,
    #[error(
        "insertion heuristic cannot serve requests {unserved:?} even with all {pool} candidates"
    )]
    Unserviceable { pool: usize, unserved: Vec<usize> },
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FleetSizing {
    /// Smallest prefix length found by the search.
    pub minimal: usize,
    /// `ceil(1.05 * minimal)`.
    pub size: usize,
    /// Candidate starts in the shuffled order the search used.
    pub order: Vec<NodeId>,
}

impl FleetSizing {
    /// The first `size` candidates as vehicles, wrapping around the candidate
    /// list if the buffer exceeds it.
    pub fn vehicles(&self, capacity: u32) -> Vec<Vehicle> {
        self.order
            .iter()
            .cycle()
            .take(self.size)
            .enumerate()
            .map(|(id, &start)| Vehicle {
                id,
                start,
                capacity,
            })
            .collect()
    }
}

/// `ceil(1.05 * k)` in integer arithmetic.
pub fn buffered_size(k: usize) -> usize {
    (k * 105).div_ceil(100)
}

fn prefix_fleet(order: &[NodeId], k: usize, capacity: u32) -> Vec<Vehicle> {
    order[..k]
        .iter()
        .enumerate()
        .map(|(id, &start)| Vehicle {
            id,
            start,
            capacity,
        })
        .collect()
}

/// Shuffles the candidates once, then binary-searches the fleet size over
/// prefixes of that order. `demand` supplies requests, matrix and max delay;
/// its own vehicles are ignored.
pub fn size_fleet<R: Rng + ?Sized>(
    demand: &Instance,
    candidate_starts: &[NodeId],
    capacity: u32,
    rng: &mut R,
) -> Result<FleetSizing, FleetError> {
    if demand.requests().is_empty() {
        return Err(FleetError::EmptyDemand);
    }
    if candidate_starts.is_empty() {
        return Err(FleetError::NoCandidates);
    }
    let mut order = candidate_starts.to_vec();
    order.shuffle(rng);

    let full = demand.with_vehicles(prefix_fleet(&order, order.len(), capacity))?;
    if let Some(failure) = run_insertion(&full, false).failure {
        return Err(FleetError::Unserviceable {
            pool: order.len(),
            unserved: failure.unserved,
        });
    }

    let (mut lo, mut hi) = (1, order.len());
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if serves_all(&demand.with_vehicles(prefix_fleet(&order, mid, capacity))?) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(FleetSizing {
        minimal: lo,
        size: buffered_size(lo),
        order,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::tests::line_instance;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn buffer_rounds_up() {
        assert_eq!(buffered_size(1), 2);
        assert_eq!(buffered_size(3), 4);
        assert_eq!(buffered_size(20), 21);
        assert_eq!(buffered_size(21), 23);
        assert_eq!(buffered_size(100), 105);
    }

    #[test]
    fn single_colocated_candidate() {
        let demand = line_instance(&[(1, 2, 0)], &[], 600);
        let sizing = size_fleet(&demand, &[1], 4, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(sizing.minimal, 1);
        assert_eq!(sizing.size, 2);
        assert_eq!(sizing.vehicles(4).len(), 2);
        assert!(sizing.vehicles(4).iter().all(|v| v.start == 1));
    }

    #[test]
    fn mutually_incompatible_requests_need_one_vehicle_each() {
        // Three simultaneous requests at nodes 1, 4 and 7 with Δ = 60 s: any
        // vehicle serving two of them would be at least 180 s late.
        let demand = line_instance(&[(1, 2, 0), (4, 5, 0), (7, 8, 0)], &[], 60);
        let sizing = size_fleet(&demand, &[1, 4, 7], 4, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(sizing.minimal, 3);
        assert_eq!(sizing.size, 4);
    }

    #[test]
    fn unserviceable_demand() {
        let demand = line_instance(&[(1, 2, 0), (9, 8, 0)], &[], 60);
        let err = size_fleet(&demand, &[0, 1], 4, &mut ChaCha8Rng::seed_from_u64(3)).unwrap_err();
        assert!(
            matches!(err, FleetError::Unserviceable { ref unserved, .. } if unserved == &[1]),
            "{err}"
        );
        assert!(matches!(
            size_fleet(&demand, &[], 4, &mut ChaCha8Rng::seed_from_u64(3)),
            Err(FleetError::NoCandidates)
        ));
    }
}
