use std::path::PathBuf;
use std::sync::Arc;

use chrono::{DateTime, Utc};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{
    generate_demand, generate_vehicles, size_fleet, DemandError, DemandRecord, FleetError,
    FleetSizing, Instance, InstanceConfig, InstanceError, VehicleStart, ZoneMap,
};
use crate::roadnet::TravelTimeMatrix;

#[derive(Debug, Error)]
pub enum GenerationError {
    #[error("epoch {0} precedes the unix epoch")]
    NegativeEpoch(DateTime<Utc>),
    #[error("no demand records fall inside the instance window")]
    NoDemand,
    #[error(transparent)]
    Demand(#[from] DemandError),
    #[error("fleet sizing: {0}")]
    Fleet(#[from] FleetError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerationConfig {
    pub area: String,
    pub epoch: DateTime<Utc>,
    pub duration_s: u64,
    pub max_delay_s: u64,
    /// Vehicle starts are sampled from trips in `[epoch - lookback, epoch)`.
    pub lookback_s: u64,
    pub capacity: u32,
    pub seed: u64,
    pub vehicle_start: VehicleStart,
    /// Recorded in the instance; the matrix itself is passed in.
    pub matrix_file: PathBuf,
}

/// Generates an instance from demand records.
///
/// All randomness comes from one ChaCha8 stream seeded with `config.seed`,
/// consumed in a fixed order: request sampling, candidate vehicle starts
/// (one per request), then the fleet-sizing shuffle.
pub fn generate_instance(
    records: &[DemandRecord],
    zones: &ZoneMap,
    matrix: Arc<TravelTimeMatrix>,
    config: &GenerationConfig,
) -> Result<(Instance, FleetSizing), GenerationError> {
    let epoch_s = u64::try_from(config.epoch.timestamp())
        .map_err(|_| GenerationError::NegativeEpoch(config.epoch))?;
    let zones = zones.restrict_to(&matrix)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let requests = generate_demand(
        records,
        &zones,
        &matrix,
        epoch_s..epoch_s + config.duration_s,
        &mut rng,
    )?;
    if requests.is_empty() {
        return Err(GenerationError::NoDemand);
    }
    let instance_config = InstanceConfig {
        area: config.area.clone(),
        epoch: config.epoch,
        duration_s: config.duration_s,
        max_delay_s: config.max_delay_s,
        seed: config.seed,
        matrix_file: config.matrix_file.clone(),
    };
    let pool = generate_vehicles(
        records,
        &zones,
        &matrix,
        epoch_s,
        config.lookback_s,
        requests.len(),
        config.capacity,
        config.vehicle_start,
        &mut rng,
    )?;
    let demand = Instance::new(instance_config, requests, Vec::new(), matrix)?;
    let starts: Vec<_> = pool.iter().map(|v| v.start).collect();
    let sizing = size_fleet(&demand, &starts, config.capacity, &mut rng)?;
    let instance = demand.with_vehicles(sizing.vehicles(config.capacity))?;
    Ok((instance, sizing))
}
