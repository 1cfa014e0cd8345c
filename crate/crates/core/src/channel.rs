//! MIMO-NOMA uplink channel `Y = H X + z` with real BPSK and fading blocks.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed, Stream};
use crate::scalar::{lit, Scalar};

/// Users `K` and receive antennas `M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SystemDims {
    k: usize,
    m: usize,
}

impl SystemDims {
    pub fn new(k: usize, m: usize) -> Result<Self> {
        if k == 0 || m == 0 {
            return Err(Error::invalid(format!("system dims must be positive, got K={k}, M={m}")));
        }
        Ok(Self { k, m })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// System load `K / M`.
    pub fn beta(&self) -> f64 {
        self.k as f64 / self.m as f64
    }
}

/// Fading time structure shared by all users.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fading {
    /// A new channel matrix for every symbol.
    Fast,
    /// The channel is constant over blocks of this many symbols.
    Block(usize),
}

impl Fading {
    pub fn coherence_len(&self) -> usize {
        match *self {
            Fading::Fast => 1,
            Fading::Block(l) => l,
        }
    }
}

/// Additive Gaussian channel estimation error with per-entry variance.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsiModel {
    pub error_variance: f64,
}

impl CsiModel {
    pub fn new(error_variance: f64) -> Result<Self> {
        let m = Self { error_variance };
        m.validate()?;
        Ok(m)
    }

    pub fn perfect() -> Self {
        Self { error_variance: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.error_variance >= 0.0) || !self.error_variance.is_finite() {
            return Err(Error::invalid(format!(
                "CSI error variance must be finite and >= 0, got {}",
                self.error_variance
            )));
        }
        Ok(())
    }

    pub fn is_perfect(&self) -> bool {
        self.error_variance == 0.0
    }
}

/// Channel matrices covering a stream of symbols, one `M x K` matrix per
/// contiguous block of `coherence_len` symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelBlocks<T: Scalar> {
    blocks: Vec<DMatrix<T>>,
    coherence_len: usize,
    n_symbols: usize,
}

impl<T: Scalar> ChannelBlocks<T> {
    /// Wraps explicit matrices. All must share the same shape and together
    /// cover exactly `n_symbols` symbols.
    pub fn from_blocks(blocks: Vec<DMatrix<T>>, coherence_len: usize, n_symbols: usize) -> Result<Self> {
        if coherence_len == 0 || n_symbols == 0 {
            return Err(Error::invalid("coherence length and symbol count must be positive"));
        }
        let expected = n_symbols.div_ceil(coherence_len);
        if blocks.len() != expected {
            return Err(Error::DimensionMismatch { context: "channel block count", expected, got: blocks.len() });
        }
        let (r, c) = blocks[0].shape();
        if blocks.iter().any(|b| b.shape() != (r, c)) {
            return Err(Error::invalid("channel blocks differ in shape"));
        }
        Ok(Self { blocks, coherence_len, n_symbols })
    }

    pub fn blocks(&self) -> &[DMatrix<T>] {
        &self.blocks
    }

    pub fn coherence_len(&self) -> usize {
        self.coherence_len
    }

    pub fn n_symbols(&self) -> usize {
        self.n_symbols
    }

    pub fn k(&self) -> usize {
        self.blocks[0].ncols()
    }

    pub fn m(&self) -> usize {
        self.blocks[0].nrows()
    }

    pub fn block_index(&self, t: usize) -> usize {
        t / self.coherence_len
    }

    /// Channel matrix seen by symbol `t`.
    pub fn matrix(&self, t: usize) -> &DMatrix<T> {
        &self.blocks[self.block_index(t)]
    }

    /// Symbol range covered by block `b`.
    pub fn range(&self, b: usize) -> std::ops::Range<usize> {
        let start = b * self.coherence_len;
        start..(start + self.coherence_len).min(self.n_symbols)
    }
}

fn gaussian<T: Scalar, R: Rng>(rng: &mut R) -> T {
    let z: f64 = rng.sample(StandardNormal);
    lit(z)
}

/// Draws `ceil(n_symbols / coherence_len)` independent channel matrices with
/// i.i.d. `N(0, 1)` entries.
pub fn sample_channel<T: Scalar>(
    dims: SystemDims,
    n_symbols: usize,
    coherence_len: usize,
    seed: u64,
) -> Result<ChannelBlocks<T>> {
    if n_symbols == 0 || coherence_len == 0 {
        return Err(Error::invalid(format!(
            "n_symbols and coherence_len must be positive, got {n_symbols} and {coherence_len}"
        )));
    }
    let n_blocks = n_symbols.div_ceil(coherence_len);
    let mut rng = rng_from_seed(seed);
    let blocks = (0..n_blocks).map(|_| DMatrix::from_fn(dims.m(), dims.k(), |_, _| gaussian(&mut rng))).collect();
    ChannelBlocks::from_blocks(blocks, coherence_len, n_symbols)
}

/// Maps bit 0 to +1 and bit 1 to -1.
pub fn modulate_bpsk<T: Scalar>(bits: &[u8]) -> Vec<T> {
    bits.iter().map(|&b| if b == 0 { T::one() } else { -T::one() }).collect()
}

/// Passes the `K x T` symbol matrix through the channel and adds white
/// Gaussian noise of standard deviation `sigma_n` on every antenna.
pub fn transmit<T: Scalar>(x: &DMatrix<T>, channel: &ChannelBlocks<T>, sigma_n: T, seed: u64) -> Result<DMatrix<T>> {
    if x.nrows() != channel.k() {
        return Err(Error::DimensionMismatch { context: "transmit: users", expected: channel.k(), got: x.nrows() });
    }
    if x.ncols() != channel.n_symbols() {
        return Err(Error::DimensionMismatch {
            context: "transmit: symbols",
            expected: channel.n_symbols(),
            got: x.ncols(),
        });
    }
    if !(sigma_n >= T::zero()) {
        return Err(Error::invalid("noise standard deviation must be >= 0"));
    }
    let m = channel.m();
    let mut rng = rng_from_seed(seed);
    let mut y = DMatrix::zeros(m, x.ncols());
    for b in 0..channel.blocks().len() {
        let range = channel.range(b);
        let cols = x.columns(range.start, range.len());
        let mut out = y.columns_mut(range.start, range.len());
        out.gemm(T::one(), &channel.blocks()[b], &cols, T::zero());
    }
    for v in y.iter_mut() {
        *v += sigma_n * gaussian::<T, _>(&mut rng);
    }
    Ok(y)
}

/// Returns `H + E` with `E` i.i.d. `N(0, error_variance)`.
pub fn corrupt_csi<T: Scalar>(h: &DMatrix<T>, model: &CsiModel, seed: u64) -> Result<DMatrix<T>> {
    model.validate()?;
    if model.is_perfect() {
        return Ok(h.clone());
    }
    let sd: T = lit(model.error_variance.sqrt());
    let mut rng = rng_from_seed(seed);
    Ok(h.map(|v| v + sd * gaussian::<T, _>(&mut rng)))
}

/// Applies [`corrupt_csi`] independently to every fading block.
pub fn corrupt_channel<T: Scalar>(channel: &ChannelBlocks<T>, model: &CsiModel, seed: u64) -> Result<ChannelBlocks<T>> {
    let blocks = channel
        .blocks()
        .iter()
        .enumerate()
        .map(|(b, h)| corrupt_csi(h, model, derive_seed(seed, Stream::CsiError, b as u64)))
        .collect::<Result<Vec<_>>>()?;
    ChannelBlocks::from_blocks(blocks, channel.coherence_len(), channel.n_symbols())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dims_reject_zero() {
        assert!(SystemDims::new(0, 4).is_err());
        assert!(SystemDims::new(4, 0).is_err());
        assert_eq!(SystemDims::new(16, 8).unwrap().beta(), 2.0);
    }

    #[test]
    fn block_counts() {
        let d = SystemDims::new(8, 8).unwrap();
        let ch = sample_channel::<f64>(d, 400, 200, 1).unwrap();
        assert_eq!(ch.blocks().len(), 2);
        assert_eq!(ch.range(0), 0..200);
        assert_eq!(ch.range(1), 200..400);
        assert_ne!(ch.blocks()[0], ch.blocks()[1]);
        let fast = sample_channel::<f64>(d, 3, 1, 1).unwrap();
        assert_eq!(fast.blocks().len(), 3);
        assert!(sample_channel::<f64>(d, 3, 0, 1).is_err());
        assert!(sample_channel::<f64>(d, 0, 1, 1).is_err());
    }

    #[test]
    fn ragged_last_block_covers_tail() {
        let d = SystemDims::new(2, 2).unwrap();
        let ch = sample_channel::<f64>(d, 450, 200, 3).unwrap();
        assert_eq!(ch.blocks().len(), 3);
        let covered: usize = (0..3).map(|b| ch.range(b).len()).sum();
        assert_eq!(covered, 450);
        assert_eq!(ch.block_index(449), 2);
    }

    #[test]
    fn bpsk_mapping() {
        assert_eq!(modulate_bpsk::<f64>(&[0, 1, 1]), vec![1.0, -1.0, -1.0]);
        assert!(modulate_bpsk::<f32>(&[0; 5]).iter().all(|&s| s == 1.0));
    }

    #[test]
    fn noiseless_scalar() {
        let ch = ChannelBlocks::from_blocks(vec![DMatrix::from_element(1, 1, 2.0)], 1, 1).unwrap();
        let x = DMatrix::from_element(1, 1, 1.0);
        let y = transmit(&x, &ch, 0.0, 9).unwrap();
        assert_eq!(y[(0, 0)], 2.0);
    }

    #[test]
    fn transmit_rejects_wrong_user_count() {
        let d = SystemDims::new(3, 2).unwrap();
        let ch = sample_channel::<f64>(d, 4, 1, 1).unwrap();
        let x = DMatrix::from_element(2, 4, 1.0);
        assert!(matches!(transmit(&x, &ch, 1.0, 0), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn perfect_csi_is_identity() {
        let h = DMatrix::from_fn(3, 2, |i, j| (i * 2 + j) as f64);
        assert_eq!(corrupt_csi(&h, &CsiModel::perfect(), 5).unwrap(), h);
        assert!(CsiModel::new(-0.1).is_err());
    }
}
