//! Data-driven optimization of a chiller plant: a simulated plant, telemetry
//! handling, active data enrichment, module-wise surrogate models, a
//! derivative-free constrained optimizer for the VSD speeds, and energy
//! baselining.

pub mod baselining;
pub mod control;
pub mod enrich;
pub mod numeric;
pub mod optimize;
pub mod simplant;
pub mod surrogate;
pub mod telemetry;
pub mod units;
