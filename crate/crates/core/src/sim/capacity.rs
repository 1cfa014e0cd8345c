//! Gaussian-input sum capacity of the real MIMO multiple-access channel.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel::SystemDims;
use crate::error::{Error, Result};
use crate::exit::ebn0_db_to_sigma;
use crate::rng::{stream_rng, Stream};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityReport {
    /// Smallest Eb/N0 (dB) at which the sum capacity reaches `K R`.
    pub ebn0_db: f64,
    pub sigma_n: f64,
    /// Standard error of the capacity estimate at the solution (bits).
    pub capacity_std_error: f64,
    /// The same uncertainty expressed in dB.
    pub std_error_db: f64,
    pub samples: usize,
}

/// Monte-Carlo sum capacity `0.5 E[log2 det(I + H H^T / sigma^2)]` from
/// precomputed channel eigenvalues.
struct Spectrum {
    eig: Vec<Vec<f64>>,
}

impl Spectrum {
    fn sample(dims: SystemDims, samples: usize, seed: u64) -> Self {
        let (k, m) = (dims.k(), dims.m());
        let mut rng = stream_rng(seed, Stream::Capacity, 0);
        let eig = (0..samples)
            .map(|_| {
                let h = DMatrix::<f64>::from_fn(m, k, |_, _| rng.sample(StandardNormal));
                let g = if m <= k { &h * h.transpose() } else { h.transpose() * &h };
                g.symmetric_eigenvalues().iter().map(|&x| x.max(0.0)).collect()
            })
            .collect();
        Self { eig }
    }

    fn per_draw(&self, sigma2: f64) -> impl Iterator<Item = f64> + '_ {
        self.eig.iter().map(move |e| 0.5 * e.iter().map(|l| (l / sigma2).ln_1p()).sum::<f64>() / std::f64::consts::LN_2)
    }

    fn mean_and_se(&self, sigma2: f64) -> (f64, f64) {
        let n = self.eig.len() as f64;
        let (s, s2) = self.per_draw(sigma2).fold((0.0, 0.0), |(a, b), c| (a + c, b + c * c));
        let mean = s / n;
        let var = (s2 / n - mean * mean).max(0.0) * n / (n - 1.0);
        (mean, (var / n).sqrt())
    }
}

/// Eb/N0 limit for `K` users at rate `rate` each.
pub fn mimo_noma_capacity_limit(dims: SystemDims, rate: f64, mc_samples: usize, seed: u64) -> Result<CapacityReport> {
    if !(rate > 0.0) {
        return Err(Error::invalid("rate must be positive"));
    }
    if mc_samples < 2 {
        return Err(Error::invalid("at least two channel draws are required"));
    }
    let spec = Spectrum::sample(dims, mc_samples, seed);
    let target = dims.k() as f64 * rate;
    let cap_at = |db: f64| {
        let s = ebn0_db_to_sigma(db, rate);
        spec.mean_and_se(s * s).0
    };
    let (mut lo, mut hi) = (-40.0, 40.0);
    if cap_at(lo) >= target || cap_at(hi) < target {
        return Err(Error::Infeasible(format!("capacity limit outside [{lo}, {hi}] dB")));
    }
    while hi - lo > 1e-4 {
        let mid = 0.5 * (lo + hi);
        if cap_at(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let sigma_n = ebn0_db_to_sigma(hi, rate);
    let (_, se) = spec.mean_and_se(sigma_n * sigma_n);
    let slope = (cap_at(hi + 0.05) - cap_at(hi - 0.05)) / 0.1;
    Ok(CapacityReport {
        ebn0_db: hi,
        sigma_n,
        capacity_std_error: se,
        std_error_db: if slope > 0.0 { se / slope } else { f64::INFINITY },
        samples: mc_samples,
    })
}
