//! Uplink coded MIMO-NOMA toolkit: LMMSE iterative receiver, multi-user
//! IRA codes, variance-transfer analysis, code optimization and BER
//! simulation.
//!
//! Signal-processing kernels are generic over [`Scalar`] (`f32` or `f64`);
//! everything built on top of them runs in `f64`.

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod codec;
pub mod error;
pub mod exit;
pub mod lmmse;
pub mod optimizer;
pub mod rng;
pub mod scalar;
pub mod sim;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Default floating point type.
pub type Real = f64;
pub type ChannelBlocks = channel::ChannelBlocks<Real>;
pub type GaussianMessages = lmmse::GaussianMessages<Real>;
pub type Decoder<'a> = codec::MuIraDecoder<'a, Real>;
