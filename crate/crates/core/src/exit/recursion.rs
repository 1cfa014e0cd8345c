//! Iterated detector/decoder variance transfer, decoding thresholds and
//! tunnel gaps.

use std::io::Write;

use serde::Serialize;

use super::decoder_exit::{AnalyticDecoder, DecoderTransfer, ExitCurve, FeedbackInfo};
use super::jfunc::{mutual_info_to_variance, JTables, McConfig};
use super::transfer::{Interference, LmmseTransfer};
use crate::channel::SystemDims;
use crate::codec::CodeParams;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, Stream};

/// How the fed-back variance is obtained from the decoder output.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum FeedbackVariance {
    /// Deterministic quadrature (per LLR class for the analytic decoder).
    #[default]
    Quadrature,
    /// Seeded Monte-Carlo expectation over a single Gaussian LLR with the
    /// decoder's output information.
    MonteCarlo { samples: usize, seed: u64 },
}

/// Settings of the iterated transfer analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExitModel {
    pub interference: Interference,
    pub feedback: FeedbackInfo,
    pub variance: FeedbackVariance,
    /// Convergence when `v <= eps` or `I_e >= 1 - eps`.
    pub eps_conv: f64,
    /// Stall when every `|v_l - v_(l-1)|` in the last `stall_window`
    /// iterations is below `stall_tol`.
    pub stall_tol: f64,
    pub stall_window: usize,
    pub max_iters: usize,
}

impl Default for ExitModel {
    fn default() -> Self {
        Self {
            interference: Interference::ExcludeSelf,
            feedback: FeedbackInfo::APosteriori,
            variance: FeedbackVariance::Quadrature,
            eps_conv: 1e-4,
            stall_tol: 1e-6,
            stall_window: 5,
            max_iters: 5000,
        }
    }
}

impl ExitModel {
    /// Extrinsic feedback with the large-system detector transfer.
    pub fn turbo_extrinsic() -> Self {
        Self { interference: Interference::LargeSystem, feedback: FeedbackInfo::Extrinsic, ..Self::default() }
    }
}

/// One step of the recursion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExitState {
    pub iteration: usize,
    /// Prior variance entering the detector.
    pub v: f64,
    pub v_e: f64,
    pub i_a: f64,
    pub i_e: f64,
    pub m_a: f64,
    pub m_e: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Converged,
    Stalled,
    /// Iteration budget exhausted without convergence or stall.
    Undetermined,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExitTrajectory {
    pub states: Vec<ExitState>,
    pub verdict: Verdict,
    /// Variance after the last decoder step.
    pub final_v: f64,
}

impl ExitTrajectory {
    pub fn converged(&self) -> bool {
        self.verdict == Verdict::Converged
    }

    pub fn iterations_used(&self) -> usize {
        self.states.len()
    }

    /// Writes `iteration,v,v_e,i_a,i_e` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["iteration", "v", "v_e", "i_a", "i_e"])?;
        for s in &self.states {
            wr.serialize((s.iteration, s.v, s.v_e, s.i_a, s.i_e))?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// `sigma_n` for a given `Eb/N0` in dB and rate, from `Eb/N0 = 1 / (2 R sigma_n^2)`.
pub fn ebn0_db_to_sigma(ebn0_db: f64, rate: f64) -> f64 {
    (1.0 / (2.0 * rate * 10f64.powf(ebn0_db / 10.0))).sqrt()
}

pub fn sigma_to_ebn0_db(sigma_n: f64, rate: f64) -> f64 {
    10.0 * (1.0 / (2.0 * rate * sigma_n * sigma_n)).log10()
}

/// Runs the detector/decoder variance recursion starting from `v = 1`.
pub fn run_exit_recursion<D: DecoderTransfer>(
    decoder: &D,
    dims: SystemDims,
    sigma_n: f64,
    model: &ExitModel,
) -> Result<ExitTrajectory> {
    let det = LmmseTransfer::new(dims.k(), dims.m(), sigma_n, model.interference)?;
    let t = JTables::global();
    let mut warm = D::Warm::default();
    let mut v = 1.0f64;
    let mut states = Vec::new();
    let mut small_steps = 0usize;
    for it in 0..model.max_iters {
        let v_e = det.extrinsic_variance(v);
        let i_a = t.j((4.0 / v_e).sqrt());
        let out = decoder.transfer(i_a, &mut warm)?;
        let v_next = match model.variance {
            FeedbackVariance::Quadrature => out.v,
            FeedbackVariance::MonteCarlo { samples, seed } => {
                let cfg = McConfig { samples, seed: derive_seed(seed, Stream::FeedbackVariance, it as u64) };
                mutual_info_to_variance(out.i_e.min(1.0 - 1e-12), &cfg)?.mean
            }
        };
        if !v_next.is_finite() {
            return Err(Error::Numerical(format!("non-finite variance at iteration {it}")));
        }
        let m_e = t.j_inv(out.i_e).powi(2) / 2.0;
        states.push(ExitState { iteration: it, v, v_e, i_a, i_e: out.i_e, m_a: 2.0 / v_e, m_e });
        if v_next <= model.eps_conv || out.i_e >= 1.0 - model.eps_conv {
            return Ok(ExitTrajectory { states, verdict: Verdict::Converged, final_v: v_next });
        }
        if (v_next - v).abs() < model.stall_tol {
            small_steps += 1;
            if small_steps >= model.stall_window {
                return Ok(ExitTrajectory { states, verdict: Verdict::Stalled, final_v: v_next });
            }
        } else {
            small_steps = 0;
        }
        v = v_next;
    }
    Ok(ExitTrajectory { states, verdict: Verdict::Undetermined, final_v: v })
}

/// Search window and resolution for threshold bisection, in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdWindow {
    pub lo_db: f64,
    pub hi_db: f64,
    pub scan_step_db: f64,
    pub resolution_db: f64,
}

impl Default for ThresholdWindow {
    fn default() -> Self {
        Self { lo_db: -15.0, hi_db: 5.0, scan_step_db: 0.5, resolution_db: 0.01 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdReport {
    /// Upper end of the final bracket: the smallest probed Eb/N0 that converged.
    pub threshold_db: f64,
    pub bracket_db: (f64, f64),
    pub sigma_n: f64,
    pub rate: f64,
}

/// Bisects the converged/not-converged boundary in Eb/N0.
///
/// A coarse scan over the window first checks that convergence switches
/// exactly once; several switches are reported as [`Error::NonMonotone`].
pub fn decoding_threshold_with<D: DecoderTransfer + Sync>(
    decoder: &D,
    rate: f64,
    dims: SystemDims,
    window: &ThresholdWindow,
    model: &ExitModel,
) -> Result<ThresholdReport> {
    if !(window.hi_db > window.lo_db) || !(window.scan_step_db > 0.0) || !(window.resolution_db > 0.0) {
        return Err(Error::invalid("threshold window must satisfy lo < hi with positive steps"));
    }
    let converges = |db: f64| -> Result<bool> {
        Ok(run_exit_recursion(decoder, dims, ebn0_db_to_sigma(db, rate), model)?.converged())
    };
    let n = ((window.hi_db - window.lo_db) / window.scan_step_db).ceil() as usize;
    let grid: Vec<f64> = (0..=n).map(|i| (window.lo_db + i as f64 * window.scan_step_db).min(window.hi_db)).collect();
    let flags = grid.iter().map(|&db| converges(db)).collect::<Result<Vec<bool>>>()?;
    let switches: Vec<usize> = (1..flags.len()).filter(|&i| flags[i] != flags[i - 1]).collect();
    if flags[0] {
        return Err(Error::Infeasible(format!("converges already at the window start {} dB", window.lo_db)));
    }
    if switches.is_empty() {
        return Err(Error::Infeasible(format!("no convergence within [{}, {}] dB", window.lo_db, window.hi_db)));
    }
    if switches.len() > 1 {
        return Err(Error::NonMonotone(switches.iter().map(|&i| grid[i]).collect()));
    }
    let (mut lo, mut hi) = (grid[switches[0] - 1], grid[switches[0]]);
    while hi - lo > window.resolution_db {
        let mid = 0.5 * (lo + hi);
        if converges(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(ThresholdReport { threshold_db: hi, bracket_db: (lo, hi), sigma_n: ebn0_db_to_sigma(hi, rate), rate })
}

/// Threshold of `params` using the analytic decoder transfer.
pub fn decoding_threshold(
    params: &CodeParams,
    dims: SystemDims,
    window: &ThresholdWindow,
    model: &ExitModel,
) -> Result<ThresholdReport> {
    let dec = AnalyticDecoder::new(params, model.feedback);
    decoding_threshold_with(&dec, params.rate(), dims, window, model)
}

/// Narrowest vertical opening of the tunnel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TunnelGap {
    pub min_gap: f64,
    /// Decoder-output information where the minimum occurs.
    pub at_info: f64,
}

/// Evenly spaced information grid on `[0, top]`.
pub fn info_grid(points: usize, top: f64) -> Vec<f64> {
    (0..points).map(|i| top * i as f64 / (points - 1).max(1) as f64).collect()
}

/// Minimum over `grid` of `psi(decoder(detector(v(I)))) - I`, where `v(I)`
/// is the variance fed back by information `I` and `psi` maps the next
/// variance back to information.
pub fn tunnel_gap<D: DecoderTransfer>(decoder: &D, det: &LmmseTransfer, grid: &[f64]) -> Result<TunnelGap> {
    let t = JTables::global();
    let mut warm = D::Warm::default();
    let mut best = TunnelGap { min_gap: f64::INFINITY, at_info: 0.0 };
    for &i in grid {
        let v = t.info_to_variance(i);
        let v_e = det.extrinsic_variance(v);
        let i_a = t.j((4.0 / v_e).sqrt());
        let out = decoder.transfer(i_a, &mut warm)?;
        let gap = out.i_e - i;
        if gap < best.min_gap {
            best = TunnelGap { min_gap: gap, at_info: i };
        }
    }
    Ok(best)
}

/// Writes `index,v,v_e,i_a,i_e` rows for a decoder curve, with `v_e` the
/// detector variance that yields each `i_a`.
pub fn write_curve_csv<W: Write>(curve: &ExitCurve, w: W) -> Result<()> {
    let t = JTables::global();
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["index", "v", "v_e", "i_a", "i_e"])?;
    for (i, p) in curve.points().iter().enumerate() {
        let s = t.j_inv(p.i_a);
        let v_e = if s > 0.0 { 4.0 / (s * s) } else { f64::INFINITY };
        wr.serialize((i, p.v, v_e, p.i_a, p.i_e))?;
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::presets;

    #[test]
    fn ebn0_conversion_roundtrip() {
        let s = ebn0_db_to_sigma(-9.22, 0.2);
        assert!((sigma_to_ebn0_db(s, 0.2) + 9.22).abs() < 1e-12);
        assert!((sigma_to_ebn0_db(4.58, 0.2) + 9.238).abs() < 1e-3);
    }

    #[test]
    fn noiseless_converges_fast() {
        let p = presets::find("table1-full").unwrap().params();
        let dims = SystemDims::new(8, 8).unwrap();
        let d = AnalyticDecoder::new(&p, FeedbackInfo::Extrinsic);
        let tr = run_exit_recursion(&d, dims, 0.05, &ExitModel::turbo_extrinsic()).unwrap();
        assert!(tr.converged());
        assert!(tr.iterations_used() < 10);
    }

    #[test]
    fn trajectory_variance_non_increasing() {
        let p = presets::find("table1-full").unwrap().params();
        let dims = SystemDims::new(8, 8).unwrap();
        let d = AnalyticDecoder::new(&p, FeedbackInfo::APosteriori);
        let tr = run_exit_recursion(&d, dims, ebn0_db_to_sigma(-9.0, p.rate()), &ExitModel::default()).unwrap();
        assert!(tr.converged());
        for w in tr.states.windows(2) {
            assert!(w[1].v <= w[0].v + 1e-12);
        }
    }
}
