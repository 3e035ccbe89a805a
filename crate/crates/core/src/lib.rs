//! Ridesharing dial-a-ride benchmark toolkit.
//!
//! - [`roadnet`]: road graphs and the precomputed travel-time matrix.
//! - [`instance`]: instances, demand sampling and fleet sizing.
//! - [`solution`]: routes, schedules, validation and occupancy.
//! - [`ih`]: the insertion heuristic.
//! - [`vga`]: the exact vehicle-group assignment method.
//! - [`synthetic`]: grid cities for tests and demos.

pub mod ih;
pub mod instance;
pub mod roadnet;
pub mod solution;
pub mod synthetic;
pub mod vga;
