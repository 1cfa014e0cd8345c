//! Monte-Carlo bit error rate of the iterative LMMSE / MU-IRA receiver.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;

use super::config::SimConfig;
use crate::channel::{corrupt_channel, sample_channel, transmit, ChannelBlocks, SystemDims};
use crate::codec::{CodeInstance, MuIraDecoder};
use crate::error::{Error, Result};
use crate::exit::ebn0_db_to_sigma;
use crate::lmmse::{antenna_side, clip_llr, extrinsic_scalar, soft_symbol, user_side, DetectorLimits, InversionForm};
use crate::rng::{derive_seed, derive_seed2, rng_from_seed, Stream};

/// Frames simulated concurrently before the stop rule is consulted.
/// Fixed so results do not depend on the worker count.
const FRAME_BATCH: usize = 8;

/// Results at one Eb/N0 point.
#[derive(Debug, Clone, PartialEq)]
pub struct BerPoint {
    pub ebn0_db: f64,
    pub sigma_n: f64,
    pub bits: u64,
    pub errors: u64,
    pub frames: u64,
    pub frame_errors: u64,
    /// Frames whose parity checks were satisfied before `tau_max`.
    pub declared_decoded: u64,
    /// Declared-decoded frames that still carried information bit errors.
    pub undetected_frames: u64,
    pub per_user_errors: Vec<u64>,
    pub mean_iterations: f64,
    /// Detector outputs whose extrinsic variance was clamped.
    pub clamped_outputs: u64,
}

impl BerPoint {
    pub fn ber(&self) -> f64 {
        if self.bits == 0 {
            0.0
        } else {
            self.errors as f64 / self.bits as f64
        }
    }

    /// 95% Wilson score interval of the binomial error probability.
    pub fn confidence_interval(&self) -> (f64, f64) {
        wilson_interval(self.errors, self.bits)
    }
}

pub fn wilson_interval(errors: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054_f64;
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if errors == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if errors == trials { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerResult {
    pub config: SimConfig,
    pub dims: SystemDims,
    /// Realized code rate used for the Eb/N0 conversion.
    pub rate: f64,
    pub points: Vec<BerPoint>,
}

impl BerResult {
    /// Columns `ebn0_db,bits,errors,ber,ci_low,ci_high,frames,mean_iterations`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["ebn0_db", "bits", "errors", "ber", "ci_low", "ci_high", "frames", "mean_iterations"])?;
        for p in &self.points {
            let (lo, hi) = p.confidence_interval();
            wr.serialize((p.ebn0_db, p.bits, p.errors, p.ber(), lo, hi, p.frames, p.mean_iterations))?;
        }
        wr.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct FrameOutcome {
    per_user: Vec<u64>,
    iterations: usize,
    declared: bool,
    clamped: u64,
}

/// Everything a frame needs that does not change between frames.
struct Setup<'a> {
    cfg: &'a SimConfig,
    dims: SystemDims,
    codes: &'a [CodeInstance],
    limits: DetectorLimits,
}

impl Setup<'_> {
    fn frame(&self, frame: u64, sigma_n: f64) -> Result<FrameOutcome> {
        let cfg = self.cfg;
        let (k, m) = (self.dims.k(), self.dims.m());
        let n = self.codes[0].codeword_len();
        let info_len = self.codes[0].info_len();
        let seed = cfg.seed;

        let info: Vec<Vec<u8>> = (0..k)
            .map(|u| {
                let mut rng = rng_from_seed(derive_seed2(seed, Stream::Data, frame, u as u64));
                (0..info_len).map(|_| rng.random::<bool>() as u8).collect()
            })
            .collect();
        let mut x = DMatrix::<f64>::zeros(k, n);
        for (u, bits) in info.iter().enumerate() {
            let s: Vec<f64> = self.codes[u].transmit_symbols(bits)?;
            for (t, v) in s.into_iter().enumerate() {
                x[(u, t)] = v;
            }
        }
        let coherence = cfg.fading.coherence_len();
        let channel: ChannelBlocks<f64> =
            sample_channel(self.dims, n, coherence, derive_seed(seed, Stream::Channel, frame))?;
        let y = transmit(&x, &channel, sigma_n, derive_seed(seed, Stream::Noise, frame))?;
        let est = if cfg.csi.is_perfect() {
            channel
        } else {
            corrupt_channel(&channel, &cfg.csi, derive_seed(seed, Stream::CsiError, frame))?
        };

        let sigma2 = sigma_n * sigma_n;
        let form = InversionForm::cheaper(k, m);
        let n_blocks = est.blocks().len();
        // User-side invariants: scaled Gram matrix per block and matched
        // filter output per symbol.
        let (grams, hty) = if form == InversionForm::UserSide {
            let grams: Vec<DMatrix<f64>> = est.blocks().iter().map(|h| h.tr_mul(h) / sigma2).collect();
            let mut hty = DMatrix::<f64>::zeros(k, n);
            for b in 0..n_blocks {
                let r = est.range(b);
                let mut out = hty.columns_mut(r.start, r.len());
                out.gemm_tr(1.0 / sigma2, &est.blocks()[b], &y.columns(r.start, r.len()), 0.0);
            }
            (grams, hty)
        } else {
            (Vec::new(), DMatrix::zeros(0, 0))
        };

        let clip = self.limits.llr_clip;
        let cap = self.limits.extrinsic_cap;
        let floor = self.limits.variance_floor;
        let mut decoders: Vec<MuIraDecoder<f64>> = self.codes.iter().map(MuIraDecoder::new).collect();
        let mut prior_llr = vec![vec![0.0f64; n]; k];
        let mut det_llr = vec![vec![0.0f64; n]; k];
        let (mut pm, mut pv) = (vec![0.0; k], vec![0.0; k]);
        let (mut xm, mut xv) = (vec![0.0; k], vec![0.0; k]);
        let mut iterations = 0;
        let mut declared = false;
        let mut clamped = 0u64;
        for _ in 0..cfg.tau_max {
            iterations += 1;
            for t in 0..n {
                for u in 0..k {
                    let (mu, var) = soft_symbol(prior_llr[u][t], floor);
                    pm[u] = mu;
                    pv[u] = var;
                }
                let b = est.block_index(t);
                match form {
                    InversionForm::UserSide => {
                        user_side(&grams[b], hty.column(t).as_slice(), &pm, &pv, &mut xm, &mut xv)?
                    }
                    InversionForm::AntennaSide => {
                        let yt: DVector<f64> = y.column(t).into_owned();
                        antenna_side(&est.blocks()[b], yt.as_slice(), sigma2, &pm, &pv, &mut xm, &mut xv)?
                    }
                }
                for u in 0..k {
                    let (xe, ve, c) = extrinsic_scalar(xm[u], xv[u], pm[u], pv[u], cap);
                    clamped += c as u64;
                    let l = 2.0 * xe / ve;
                    if !l.is_finite() {
                        return Err(Error::Numerical(format!(
                            "non-finite detector LLR (frame {frame}, user {u}, symbol {t})"
                        )));
                    }
                    det_llr[u][t] = clip_llr(l, clip);
                }
            }
            for u in 0..k {
                let ext = decoders[u].activate(&det_llr[u]).map_err(|e| match e {
                    Error::Numerical(msg) => Error::Numerical(format!("frame {frame}, user {u}: {msg}")),
                    other => other,
                })?;
                prior_llr[u].copy_from_slice(ext);
            }
            if cfg.early_stop && decoders.iter().all(|d| d.is_consistent()) {
                declared = true;
                break;
            }
        }
        let per_user = decoders
            .iter()
            .zip(&info)
            .map(|(d, bits)| d.hard_decision().iter().zip(bits).filter(|(a, b)| a != b).count() as u64)
            .collect();
        Ok(FrameOutcome { per_user, iterations, declared, clamped })
    }
}

/// Builds the `K` per-user code instances (independent interleavers).
pub fn build_user_codes(cfg: &SimConfig) -> Result<(SystemDims, Vec<CodeInstance>)> {
    let resolved = cfg.resolve()?;
    let codes = (0..resolved.dims.k())
        .map(|u| CodeInstance::build(&resolved.params, cfg.info_len, derive_seed(cfg.seed, Stream::Code, u as u64)))
        .collect::<Result<Vec<_>>>()?;
    Ok((resolved.dims, codes))
}

/// Simulates every Eb/N0 point of the configuration.
pub fn run_ber_simulation(cfg: &SimConfig) -> Result<BerResult> {
    cfg.resolve()?;
    if cfg.ebn0_grid.is_empty() {
        return Err(Error::Config("ebn0_grid is empty".into()));
    }
    let (dims, codes) = build_user_codes(cfg)?;
    let rate = codes[0].realized_rate();
    let setup = Setup { cfg, dims, codes: &codes, limits: DetectorLimits::default() };
    let mut points = Vec::with_capacity(cfg.ebn0_grid.len());
    for &ebn0_db in &cfg.ebn0_grid {
        let sigma_n = ebn0_db_to_sigma(ebn0_db, rate);
        let mut p = BerPoint {
            ebn0_db,
            sigma_n,
            bits: 0,
            errors: 0,
            frames: 0,
            frame_errors: 0,
            declared_decoded: 0,
            undetected_frames: 0,
            per_user_errors: vec![0; dims.k()],
            mean_iterations: 0.0,
            clamped_outputs: 0,
        };
        let mut iter_sum = 0u64;
        let mut next = 0usize;
        'frames: while next < cfg.max_frames {
            let end = (next + FRAME_BATCH).min(cfg.max_frames);
            let outcomes: Vec<Result<FrameOutcome>> =
                (next..end).into_par_iter().map(|f| setup.frame(f as u64, sigma_n)).collect();
            for o in outcomes {
                let o = o?;
                let errs: u64 = o.per_user.iter().sum();
                p.frames += 1;
                p.bits += (dims.k() * cfg.info_len) as u64;
                p.errors += errs;
                p.frame_errors += (errs > 0) as u64;
                p.declared_decoded += o.declared as u64;
                p.undetected_frames += (o.declared && errs > 0) as u64;
                p.clamped_outputs += o.clamped;
                for (acc, e) in p.per_user_errors.iter_mut().zip(&o.per_user) {
                    *acc += e;
                }
                iter_sum += o.iterations as u64;
                let enough_errors = cfg.max_bit_errors > 0 && p.errors >= cfg.max_bit_errors;
                if enough_errors && p.bits >= cfg.min_bits {
                    break 'frames;
                }
            }
            next = end;
        }
        p.mean_iterations = iter_sum as f64 / p.frames as f64;
        points.push(p);
    }
    Ok(BerResult { config: cfg.clone(), dims, rate, points })
}
