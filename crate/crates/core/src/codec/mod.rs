//! MU-IRA code family: parameters, graph construction, encoder and decoder.

mod decoder;
mod degree;
mod instance;
mod params;
pub mod presets;

pub use decoder::{boxplus, hard_bit, MuIraDecoder, DEFAULT_LLR_CLIP};
pub use degree::DegreeDistribution;
pub use instance::{quantize_degrees, CodeInstance};
pub use params::{code_rate, rate_from, CodeParams, DEFAULT_Q_MAX};

/// Builds a code instance. See [`CodeInstance::build`].
pub fn build_code(params: &CodeParams, info_len: usize, seed: u64) -> crate::Result<CodeInstance> {
    CodeInstance::build(params, info_len, seed)
}
