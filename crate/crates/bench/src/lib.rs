//! Experiment harness for the ridesharing DARP benchmark: grids of generated
//! instances, solver runs, standardized results and derived tables.

pub mod grid;
pub mod record;
pub mod report;
pub mod runner;
