//! Seeded instances, function families, identity checks and sweeps.

pub mod checks;
pub mod family;
pub mod instances;
pub mod rng;
pub mod sweeps;
