//! End-to-end BER simulation with its configuration, plus the capacity limit.

mod ber;
mod capacity;
mod config;

pub use ber::{build_user_codes, run_ber_simulation, wilson_interval, BerPoint, BerResult};
pub use capacity::{mimo_noma_capacity_limit, CapacityReport};
pub use config::{parse_grid, CodeParamsSpec, CodeSpec, ResolvedCode, SimConfig};
