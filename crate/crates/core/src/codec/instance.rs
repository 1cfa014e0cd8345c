use rand::seq::SliceRandom;

use super::degree::DegreeDistribution;
use super::params::{rep_sign, CodeParams};
use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};
use crate::scalar::Scalar;

/// A concrete MU-IRA Tanner graph with its interleavers.
///
/// Codeword layout before the user interleaver: `q` copies of the
/// information bits followed by the `E / alpha` accumulator outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeInstance {
    params: Option<CodeParams>,
    q: usize,
    alpha: usize,
    degrees: Vec<u32>,
    socket_start: Vec<u32>,
    socket_bit: Vec<u32>,
    edge_perm: Vec<u32>,
    user_perm: Vec<u32>,
}

/// Counts per degree class by largest-remainder rounding of `n * fractions`.
fn largest_remainder(n: usize, fractions: &[f64]) -> Vec<usize> {
    let exact: Vec<f64> = fractions.iter().map(|f| f * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    // Stable: larger remainder first, lower class index on ties.
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.partial_cmp(&ra).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    for &c in order.iter().take(n.saturating_sub(assigned)) {
        counts[c] += 1;
    }
    counts
}

/// Degree per information bit, in class order, with `alpha | E` enforced.
pub fn quantize_degrees(lambda: &DegreeDistribution, info_len: usize, alpha: usize) -> Result<Vec<u32>> {
    if info_len == 0 {
        return Err(Error::invalid("information length must be positive"));
    }
    let counts = largest_remainder(info_len, &lambda.node_fractions());
    if let Some(c) = counts.iter().position(|&c| c == 0) {
        return Err(Error::Infeasible(format!(
            "degree {} receives no information bits at N={info_len}; increase the information length",
            lambda.degrees()[c]
        )));
    }
    let mut degrees: Vec<u32> =
        lambda.degrees().iter().zip(&counts).flat_map(|(&d, &c)| std::iter::repeat_n(d as u32, c)).collect();
    let e: usize = degrees.iter().map(|&d| d as usize).sum();
    let excess = e % alpha;
    if excess != 0 {
        // Trim the surplus from the highest-degree bits, never below degree 2.
        let mut left = excess;
        for d in degrees.iter_mut().rev() {
            let take = left.min((*d as usize).saturating_sub(2));
            *d -= take as u32;
            left -= take;
            if left == 0 {
                break;
            }
        }
        if left != 0 {
            // All degrees already at 2: pad one bit up to the next multiple.
            degrees[info_len - 1] += (alpha - excess) as u32;
        }
    }
    Ok(degrees)
}

impl CodeInstance {
    /// Builds the graph for `params` with `info_len` information bits.
    /// Interleavers are uniform random permutations seeded by `seed`.
    pub fn build(params: &CodeParams, info_len: usize, seed: u64) -> Result<Self> {
        let degrees = quantize_degrees(params.lambda(), info_len, params.alpha())?;
        let e: usize = degrees.iter().map(|&d| d as usize).sum();
        let n = params.q() * info_len + e / params.alpha();
        let mut edge_perm: Vec<u32> = (0..e as u32).collect();
        edge_perm.shuffle(&mut stream_rng(seed, Stream::EdgeInterleaver, 0));
        let mut user_perm: Vec<u32> = (0..n as u32).collect();
        user_perm.shuffle(&mut stream_rng(seed, Stream::UserInterleaver, 0));
        let mut inst = Self::from_parts(params.q(), params.alpha(), degrees, edge_perm, user_perm)?;
        inst.params = Some(params.clone());
        Ok(inst)
    }

    /// Builds a graph from explicit per-bit degrees (degree 1 allowed) and
    /// interleavers. `edge_perm[p]` is the socket feeding combiner slot `p`;
    /// `user_perm[t]` is the codeword position sent at transmit slot `t`.
    pub fn from_parts(
        q: usize,
        alpha: usize,
        degrees: Vec<u32>,
        edge_perm: Vec<u32>,
        user_perm: Vec<u32>,
    ) -> Result<Self> {
        if q == 0 || alpha == 0 || degrees.is_empty() {
            return Err(Error::invalid("q, alpha and the information length must be positive"));
        }
        if degrees.contains(&0) {
            return Err(Error::invalid("every information bit needs degree >= 1"));
        }
        let e: usize = degrees.iter().map(|&d| d as usize).sum();
        if !e.is_multiple_of(alpha) {
            return Err(Error::invalid(format!("edge count {e} not divisible by alpha={alpha}")));
        }
        check_permutation(&edge_perm, e, "edge interleaver")?;
        let n = q * degrees.len() + e / alpha;
        check_permutation(&user_perm, n, "user interleaver")?;
        let mut socket_start = Vec::with_capacity(degrees.len() + 1);
        let mut socket_bit = Vec::with_capacity(e);
        let mut acc = 0u32;
        for (i, &d) in degrees.iter().enumerate() {
            socket_start.push(acc);
            socket_bit.extend(std::iter::repeat_n(i as u32, d as usize));
            acc += d;
        }
        socket_start.push(acc);
        Ok(Self { params: None, q, alpha, degrees, socket_start, socket_bit, edge_perm, user_perm })
    }

    /// The generating parameters, absent for hand-built graphs.
    pub fn params(&self) -> Option<&CodeParams> {
        self.params.as_ref()
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    pub fn info_len(&self) -> usize {
        self.degrees.len()
    }

    pub fn n_edges(&self) -> usize {
        self.socket_bit.len()
    }

    pub fn rep_len(&self) -> usize {
        self.q * self.info_len()
    }

    pub fn parity_len(&self) -> usize {
        self.n_edges() / self.alpha
    }

    pub fn codeword_len(&self) -> usize {
        self.rep_len() + self.parity_len()
    }

    /// `info_len / codeword_len`.
    pub fn realized_rate(&self) -> f64 {
        self.info_len() as f64 / self.codeword_len() as f64
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn edge_interleaver(&self) -> &[u32] {
        &self.edge_perm
    }

    pub fn user_interleaver(&self) -> &[u32] {
        &self.user_perm
    }

    /// Sockets (edges) of information bit `i`.
    pub fn sockets_of(&self, i: usize) -> std::ops::Range<usize> {
        self.socket_start[i] as usize..self.socket_start[i + 1] as usize
    }

    pub fn socket_bit(&self, s: usize) -> usize {
        self.socket_bit[s] as usize
    }

    /// Sockets combined into accumulator input `j`.
    pub fn check_sockets(&self, j: usize) -> &[u32] {
        &self.edge_perm[j * self.alpha..(j + 1) * self.alpha]
    }

    /// Modulation sign of codeword position `pos`.
    pub fn codeword_sign(&self, pos: usize) -> i8 {
        if pos < self.rep_len() {
            rep_sign(pos / self.info_len())
        } else {
            1
        }
    }

    /// Accumulator outputs for `info`.
    pub fn parity(&self, info: &[u8]) -> Result<Vec<u8>> {
        self.check_info_len(info.len())?;
        let mut p = Vec::with_capacity(self.parity_len());
        let mut state = 0u8;
        for j in 0..self.parity_len() {
            let c = self
                .check_sockets(j)
                .iter()
                .fold(0u8, |acc, &s| acc ^ (info[self.socket_bit[s as usize] as usize] & 1));
            state ^= c;
            p.push(state);
        }
        Ok(p)
    }

    /// Codeword (repetition part then parity part) before the user interleaver.
    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>> {
        let parity = self.parity(info)?;
        let mut cw = Vec::with_capacity(self.codeword_len());
        for _ in 0..self.q {
            cw.extend(info.iter().map(|b| b & 1));
        }
        cw.extend(parity);
        Ok(cw)
    }

    /// Reorders codeword-order values into transmit order.
    pub fn interleave<V: Copy>(&self, cw: &[V]) -> Vec<V> {
        self.user_perm.iter().map(|&p| cw[p as usize]).collect()
    }

    /// Inverse of [`Self::interleave`].
    pub fn deinterleave<V: Copy + Default>(&self, tx: &[V]) -> Vec<V> {
        let mut cw = vec![V::default(); tx.len()];
        for (t, &p) in self.user_perm.iter().enumerate() {
            cw[p as usize] = tx[t];
        }
        cw
    }

    /// Encodes, applies the repetition sign pattern, maps to BPSK and
    /// interleaves: the symbol stream one user puts on the air.
    pub fn transmit_symbols<T: Scalar>(&self, info: &[u8]) -> Result<Vec<T>> {
        let cw = self.encode(info)?;
        Ok(self
            .user_perm
            .iter()
            .map(|&p| {
                let p = p as usize;
                let s = if cw[p] == 0 { T::one() } else { -T::one() };
                if self.codeword_sign(p) < 0 {
                    -s
                } else {
                    s
                }
            })
            .collect())
    }

    fn check_info_len(&self, got: usize) -> Result<()> {
        if got != self.info_len() {
            return Err(Error::DimensionMismatch { context: "information bits", expected: self.info_len(), got });
        }
        Ok(())
    }
}

fn check_permutation(p: &[u32], n: usize, what: &str) -> Result<()> {
    if p.len() != n {
        return Err(Error::invalid(format!("{what} has length {}, expected {n}", p.len())));
    }
    let mut seen = vec![false; n];
    for &x in p {
        let x = x as usize;
        if x >= n || std::mem::replace(&mut seen[x], true) {
            return Err(Error::invalid(format!("{what} is not a permutation")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity(n: usize) -> Vec<u32> {
        (0..n as u32).collect()
    }

    #[test]
    fn hand_example() {
        let c = CodeInstance::from_parts(2, 1, vec![2, 2, 2], identity(6), identity(12)).unwrap();
        assert_eq!(c.n_edges(), 6);
        assert_eq!(c.rep_len(), 6);
        assert_eq!(c.parity_len(), 6);
        assert_eq!(c.codeword_len(), 12);
        assert_eq!(c.parity(&[1, 0, 1]).unwrap(), vec![1, 0, 0, 0, 1, 0]);
        assert_eq!(c.encode(&[1, 0, 1]).unwrap(), vec![1, 0, 1, 1, 0, 1, 1, 0, 0, 0, 1, 0]);
    }

    #[test]
    fn build_matches_hand_counts() {
        let p = CodeParams::new(2, 1, DegreeDistribution::new(&[(2, 1.0)]).unwrap()).unwrap();
        let c = CodeInstance::build(&p, 3, 0).unwrap();
        assert_eq!((c.n_edges(), c.rep_len(), c.parity_len(), c.codeword_len()), (6, 6, 6, 12));
    }

    #[test]
    fn largest_remainder_is_exact() {
        let c = largest_remainder(10, &[0.33, 0.33, 0.34]);
        assert_eq!(c.iter().sum::<usize>(), 10);
        assert_eq!(c, vec![3, 3, 4]);
    }

    #[test]
    fn alpha_divides_edges_after_repair() {
        let l = DegreeDistribution::new(&[(3, 0.4), (10, 0.6)]).unwrap();
        for alpha in 1..=5 {
            for n in [37, 100, 101, 1000] {
                let d = quantize_degrees(&l, n, alpha).unwrap();
                let e: u32 = d.iter().sum();
                assert_eq!(e as usize % alpha, 0, "alpha={alpha} n={n}");
                assert!(d.iter().all(|&x| x >= 2));
            }
        }
    }

    #[test]
    fn all_degree_three_repairs() {
        let l = DegreeDistribution::new(&[(3, 1.0)]).unwrap();
        let d = quantize_degrees(&l, 7, 5).unwrap();
        assert_eq!(d.iter().sum::<u32>() % 5, 0);
    }

    #[test]
    fn starved_degree_is_reported() {
        let l = DegreeDistribution::new(&[(3, 0.999), (100, 0.001)]).unwrap();
        assert!(matches!(quantize_degrees(&l, 20, 1), Err(Error::Infeasible(_))));
    }

    #[test]
    fn interleave_roundtrip() {
        let p = CodeParams::new(2, 2, DegreeDistribution::new(&[(3, 0.5), (10, 0.5)]).unwrap()).unwrap();
        let c = CodeInstance::build(&p, 64, 11).unwrap();
        let x: Vec<u32> = (0..c.codeword_len() as u32).collect();
        assert_eq!(c.deinterleave(&c.interleave(&x)), x);
        assert_eq!(c, CodeInstance::build(&p, 64, 11).unwrap());
        assert_ne!(c.user_interleaver(), CodeInstance::build(&p, 64, 12).unwrap().user_interleaver());
    }

    #[test]
    fn sign_pattern_on_repetition_copies_only() {
        let c = CodeInstance::from_parts(3, 1, vec![1, 1], identity(2), identity(8)).unwrap();
        let s: Vec<f64> = c.transmit_symbols(&[0, 0]).unwrap();
        assert_eq!(s, vec![1.0, 1.0, -1.0, -1.0, 1.0, 1.0, 1.0, 1.0]);
    }
}
