#![allow(dead_code)]

use mimo_noma::channel::{modulate_bpsk, sample_channel, transmit, ChannelBlocks, SystemDims};
use mimo_noma::codec::CodeInstance;
use mimo_noma::lmmse::{extrinsic_extract, lmmse_posterior, GaussianMessages};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Degree-one graph with random interleavers. Every information bit sits on
/// a single check, so the graph is a tree.
pub fn tree_code(q: usize, alpha: usize, info_len: usize, seed: u64) -> CodeInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edge: Vec<u32> = (0..info_len as u32).collect();
    edge.shuffle(&mut rng);
    let n = q * info_len + info_len / alpha;
    let mut user: Vec<u32> = (0..n as u32).collect();
    user.shuffle(&mut rng);
    CodeInstance::from_parts(q, alpha, vec![1; info_len], edge, user).unwrap()
}

/// Exact bitwise MAP LLRs of the information bits by enumerating every
/// information word. `bit_llrs` are codeword-order, positive favouring 0.
pub fn exhaustive_map(code: &CodeInstance, bit_llrs: &[f64]) -> Vec<f64> {
    let n = code.info_len();
    assert!(n <= 16);
    let words: Vec<(Vec<u8>, f64)> = (0..1u32 << n)
        .map(|w| {
            let info: Vec<u8> = (0..n).map(|i| ((w >> i) & 1) as u8).collect();
            let cw = code.encode(&info).unwrap();
            let metric = cw.iter().zip(bit_llrs).map(|(&c, &l)| if c == 0 { l / 2.0 } else { -l / 2.0 }).sum();
            (info, metric)
        })
        .collect();
    let lse = |it: &mut dyn Iterator<Item = f64>| {
        let v: Vec<f64> = it.collect();
        let mx = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        mx + v.iter().map(|x| (x - mx).exp()).sum::<f64>().ln()
    };
    (0..n)
        .map(|i| {
            let zero = lse(&mut words.iter().filter(|(u, _)| u[i] == 0).map(|(_, m)| *m));
            let one = lse(&mut words.iter().filter(|(u, _)| u[i] == 1).map(|(_, m)| *m));
            zero - one
        })
        .collect()
}

/// Mean of `(x_e - x)^2` over `draws` channel realizations with
/// `symbols` BPSK vectors each and an uninformative prior.
pub fn empirical_extrinsic_variance(k: usize, m: usize, sigma_n: f64, draws: u64, symbols: usize, seed: u64) -> f64 {
    let dims = SystemDims::new(k, m).unwrap();
    let prior = GaussianMessages::uninformative(k);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut acc, mut count) = (0.0, 0usize);
    for d in 0..draws {
        let ch: ChannelBlocks<f64> = sample_channel(dims, symbols, symbols, rng.random()).unwrap();
        let bits: Vec<u8> = (0..k * symbols).map(|_| rng.random::<bool>() as u8).collect();
        let x = DMatrix::from_vec(k, symbols, modulate_bpsk::<f64>(&bits));
        let y = transmit(&x, &ch, sigma_n, seed ^ d).unwrap();
        for t in 0..symbols {
            let post = lmmse_posterior(&y.column(t).into_owned(), ch.matrix(t), sigma_n, &prior).unwrap();
            let ext = extrinsic_extract(&post, &prior).unwrap();
            for u in 0..k {
                let r = ext.messages.means[u] - x[(u, t)];
                acc += r * r;
                count += 1;
            }
        }
    }
    acc / count as f64
}
