//! Sum-product decoder for one user's MU-IRA code.
//!
//! LLRs are `log P(bit = 0) / P(bit = 1)` in codeword order internally; the
//! public interface works in transmit order with symbol-domain LLRs
//! (`log p(y | +1) / p(y | -1)`), so repetition sign flips are undone here.

use num_traits::Float;

use super::instance::CodeInstance;
use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

/// Default magnitude limit for every LLR leaving the decoder.
pub const DEFAULT_LLR_CLIP: f64 = 50.0;

/// Exact pairwise check-node rule `2 atanh(tanh(a/2) tanh(b/2))`.
#[inline]
pub fn boxplus<T: Scalar>(a: T, b: T) -> T {
    let sign = if (a < T::zero()) != (b < T::zero()) { -T::one() } else { T::one() };
    let m = Float::min(Float::abs(a), Float::abs(b));
    sign * m + Float::ln_1p(Float::exp(-Float::abs(a + b))) - Float::ln_1p(Float::exp(-Float::abs(a - b)))
}

#[inline]
fn bp_opt<T: Scalar>(acc: Option<T>, x: T) -> T {
    match acc {
        Some(a) => boxplus(a, x),
        None => x,
    }
}

#[inline]
fn join<T: Scalar>(a: Option<T>, b: Option<T>) -> Option<T> {
    match (a, b) {
        (Some(a), Some(b)) => Some(boxplus(a, b)),
        (a, None) => a,
        (None, b) => b,
    }
}

#[inline]
fn clip<T: Scalar>(x: T, c: T) -> T {
    if x > c {
        c
    } else if x < -c {
        -c
    } else {
        x
    }
}

/// Per-frame message state for one code instance.
#[derive(Debug, Clone)]
pub struct MuIraDecoder<'a, T: Scalar> {
    code: &'a CodeInstance,
    clip: T,
    ch: Vec<T>,
    rep_sum: Vec<T>,
    v2c: Vec<T>,
    c2v: Vec<T>,
    fwd: Vec<T>,
    bwd: Vec<T>,
    check_all: Vec<T>,
    ext_cw: Vec<T>,
    ext_tx: Vec<T>,
    prefix: Vec<Option<T>>,
    activations: usize,
}

impl<'a, T: Scalar> MuIraDecoder<'a, T> {
    pub fn new(code: &'a CodeInstance) -> Self {
        Self::with_clip(code, lit(DEFAULT_LLR_CLIP))
    }

    pub fn with_clip(code: &'a CodeInstance, clip: T) -> Self {
        let n = code.codeword_len();
        let e = code.n_edges();
        let p = code.parity_len();
        Self {
            code,
            clip,
            ch: vec![T::zero(); n],
            rep_sum: vec![T::zero(); code.info_len()],
            v2c: vec![T::zero(); e],
            c2v: vec![T::zero(); e],
            fwd: vec![T::zero(); p],
            bwd: vec![T::zero(); p],
            check_all: vec![T::zero(); p],
            ext_cw: vec![T::zero(); n],
            ext_tx: vec![T::zero(); n],
            prefix: vec![None; code.alpha() + 1],
            activations: 0,
        }
    }

    pub fn code(&self) -> &CodeInstance {
        self.code
    }

    /// Clears all messages so the decoder can be reused for a new frame.
    pub fn reset(&mut self) {
        for v in [&mut self.v2c, &mut self.c2v, &mut self.ext_cw, &mut self.ext_tx] {
            v.iter_mut().for_each(|x| *x = T::zero());
        }
        self.activations = 0;
    }

    pub fn activations(&self) -> usize {
        self.activations
    }

    /// Runs one decoder activation on transmit-order symbol LLRs and
    /// returns transmit-order extrinsic symbol LLRs.
    ///
    /// Schedule: repetition and IRA passes with the current combiner
    /// messages, combiner update, a second repetition and IRA pass, then
    /// extrinsic output for every transmitted bit.
    pub fn activate(&mut self, symbol_llrs: &[T]) -> Result<&[T]> {
        let code = self.code;
        let n = code.codeword_len();
        if symbol_llrs.len() != n {
            return Err(Error::DimensionMismatch {
                context: "decoder input LLRs",
                expected: n,
                got: symbol_llrs.len(),
            });
        }
        for (t, &pos) in code.user_interleaver().iter().enumerate() {
            let pos = pos as usize;
            let l = symbol_llrs[t];
            if !Float::is_finite(l) {
                return Err(Error::Numerical(format!("non-finite channel LLR at transmit slot {t}")));
            }
            let l = clip(l, self.clip);
            self.ch[pos] = if code.codeword_sign(pos) < 0 { -l } else { l };
        }
        self.load_channel_codeword_order();
        self.ira_pass();
        self.combine();
        self.ira_pass();
        self.emit()?;
        for (t, &pos) in code.user_interleaver().iter().enumerate() {
            let pos = pos as usize;
            let l = self.ext_cw[pos];
            self.ext_tx[t] = if code.codeword_sign(pos) < 0 { -l } else { l };
        }
        self.activations += 1;
        Ok(&self.ext_tx)
    }

    /// Same as [`Self::activate`] but with codeword-order bit LLRs in and out
    /// (no interleaving, no sign pattern).
    pub fn activate_codeword(&mut self, bit_llrs: &[T]) -> Result<&[T]> {
        let n = self.code.codeword_len();
        if bit_llrs.len() != n {
            return Err(Error::DimensionMismatch { context: "decoder input LLRs", expected: n, got: bit_llrs.len() });
        }
        for (c, &l) in self.ch.iter_mut().zip(bit_llrs) {
            if !Float::is_finite(l) {
                return Err(Error::Numerical("non-finite channel LLR".into()));
            }
            *c = clip(l, self.clip);
        }
        self.load_channel_codeword_order();
        self.ira_pass();
        self.combine();
        self.ira_pass();
        self.emit()?;
        self.activations += 1;
        Ok(&self.ext_cw)
    }

    fn load_channel_codeword_order(&mut self) {
        let n_info = self.code.info_len();
        for (i, r) in self.rep_sum.iter_mut().enumerate() {
            *r = (0..self.code.q()).fold(T::zero(), |acc, c| acc + self.ch[c * n_info + i]);
        }
    }

    /// One forward-backward sweep over the combiner/accumulator chain.
    fn ira_pass(&mut self) {
        let code = self.code;
        let p = code.parity_len();
        let par = code.rep_len();
        for j in 0..p {
            let mut acc: Option<T> = None;
            for &s in code.check_sockets(j) {
                acc = Some(bp_opt(acc, self.v2c[s as usize]));
            }
            self.check_all[j] = acc.expect("alpha >= 1");
        }
        // fwd[j]: check j to parity bit j; the chain starts from a known zero state.
        for j in 0..p {
            self.fwd[j] = if j == 0 {
                self.check_all[0]
            } else {
                boxplus(self.check_all[j], self.ch[par + j - 1] + self.fwd[j - 1])
            };
        }
        // bwd[j]: check j+1 to parity bit j.
        self.bwd[p - 1] = T::zero();
        for j in (0..p - 1).rev() {
            self.bwd[j] = boxplus(self.check_all[j + 1], self.ch[par + j + 1] + self.bwd[j + 1]);
        }
        let alpha = code.alpha();
        for j in 0..p {
            let left = if j == 0 { None } else { Some(self.ch[par + j - 1] + self.fwd[j - 1]) };
            let right = self.ch[par + j] + self.bwd[j];
            let chain = Some(bp_opt(left, right));
            let sockets = code.check_sockets(j);
            self.prefix[0] = None;
            for (k, &s) in sockets.iter().enumerate() {
                self.prefix[k + 1] = Some(bp_opt(self.prefix[k], self.v2c[s as usize]));
            }
            let mut suffix: Option<T> = None;
            for k in (0..alpha).rev() {
                let s = sockets[k] as usize;
                let others = join(join(self.prefix[k], suffix), chain).expect("chain present");
                self.c2v[s] = clip(others, self.clip);
                suffix = Some(bp_opt(suffix, self.v2c[s]));
            }
        }
    }

    /// Information combiner: every socket receives the total belief of its
    /// bit minus its own incoming message.
    fn combine(&mut self) {
        let code = self.code;
        for i in 0..code.info_len() {
            let sockets = code.sockets_of(i);
            let total = self.rep_sum[i] + self.c2v[sockets.clone()].iter().fold(T::zero(), |a, &b| a + b);
            for s in sockets {
                self.v2c[s] = clip(total - self.c2v[s], self.clip);
            }
        }
    }

    fn emit(&mut self) -> Result<()> {
        let code = self.code;
        let n_info = code.info_len();
        for i in 0..n_info {
            let from_ira = self.c2v[code.sockets_of(i)].iter().fold(T::zero(), |a, &b| a + b);
            for c in 0..code.q() {
                let pos = c * n_info + i;
                self.ext_cw[pos] = clip(self.rep_sum[i] - self.ch[pos] + from_ira, self.clip);
            }
        }
        let par = code.rep_len();
        for j in 0..code.parity_len() {
            self.ext_cw[par + j] = clip(self.fwd[j] + self.bwd[j], self.clip);
        }
        if let Some(pos) = self.ext_cw.iter().position(|x| !Float::is_finite(*x)) {
            return Err(Error::Numerical(format!(
                "non-finite decoder message at codeword position {pos} after {} activations",
                self.activations
            )));
        }
        Ok(())
    }

    /// A-posteriori LLR of every information bit.
    pub fn info_posteriors(&self) -> Vec<T> {
        (0..self.code.info_len())
            .map(|i| self.rep_sum[i] + self.c2v[self.code.sockets_of(i)].iter().fold(T::zero(), |a, &b| a + b))
            .collect()
    }

    /// A-posteriori LLR of every codeword bit in codeword order.
    pub fn codeword_posteriors(&self) -> Vec<T> {
        let info = self.info_posteriors();
        let mut out = Vec::with_capacity(self.code.codeword_len());
        for _ in 0..self.code.q() {
            out.extend_from_slice(&info);
        }
        let par = self.code.rep_len();
        out.extend((0..self.code.parity_len()).map(|j| self.ch[par + j] + self.fwd[j] + self.bwd[j]));
        out
    }

    /// Latest extrinsic output in codeword order.
    pub fn extrinsic_codeword(&self) -> &[T] {
        &self.ext_cw
    }

    /// Information bit decisions; a zero LLR decides bit 0.
    pub fn hard_decision(&self) -> Vec<u8> {
        self.info_posteriors().iter().map(|&l| hard_bit(l)).collect()
    }

    /// True when the decided information bits re-encode to the decided
    /// parity bits, i.e. every combiner/accumulator check is satisfied.
    pub fn is_consistent(&self) -> bool {
        let code = self.code;
        let info = self.hard_decision();
        let par = code.rep_len();
        let mut prev = 0u8;
        for j in 0..code.parity_len() {
            let c = code.check_sockets(j).iter().fold(0u8, |a, &s| a ^ info[code.socket_bit(s as usize)]);
            let pj = hard_bit(self.ch[par + j] + self.fwd[j] + self.bwd[j]);
            if pj != prev ^ c {
                return false;
            }
            prev = pj;
        }
        true
    }
}

/// Maps an LLR to a bit; ties go to 0.
#[inline]
pub fn hard_bit<T: Scalar>(l: T) -> u8 {
    u8::from(l < T::zero())
}
