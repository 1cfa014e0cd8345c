//! Decoder transfer functions: a Gaussian-approximation density evolution
//! of the MU-IRA graph, and Monte-Carlo curves measured on the real decoder.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::jfunc::{j_inverse, JTables};
use crate::codec::{CodeInstance, CodeParams, MuIraDecoder};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed, Stream};

/// Which decoder output is fed back to the detector in the analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FeedbackInfo {
    /// Extrinsic LLRs, excluding each bit's own channel observation.
    Extrinsic,
    /// A-posteriori LLRs, including the channel observation.
    #[default]
    APosteriori,
}

/// Decoder response to a-priori information `I_a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoderOutput {
    /// Information equivalent to `v` for a single consistent Gaussian LLR.
    pub i_e: f64,
    /// Average soft-symbol variance `E[1 - tanh^2(L/2)]` fed back.
    pub v: f64,
}

/// A map from a-priori to output information.
///
/// `warm` carries solver state between calls; callers that evaluate
/// non-decreasing `i_a` sequences may reuse it, others pass a fresh value.
pub trait DecoderTransfer {
    type Warm: Default + Clone;

    fn transfer(&self, i_a: f64, warm: &mut Self::Warm) -> Result<DecoderOutput>;
}

/// Gaussian-approximation density evolution of the full MU-IRA graph
/// (repetition copies, information combiner, combiner checks, accumulator),
/// iterated to its fixed point for each channel information value.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticDecoder {
    q: usize,
    alpha: usize,
    degrees: Vec<f64>,
    lambda: Vec<f64>,
    node: Vec<f64>,
    w_rep: f64,
    feedback: FeedbackInfo,
    tol: f64,
    max_inner: usize,
}

/// Fixed-point state of [`AnalyticDecoder`]: check-to-bit and
/// check-to-parity information at the last evaluated `i_a`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GaState {
    i_a: f64,
    i_cv: f64,
    i_cp: f64,
}

impl AnalyticDecoder {
    pub fn new(params: &CodeParams, feedback: FeedbackInfo) -> Self {
        let lambda = params.lambda();
        let s = lambda.inverse_mean_degree();
        let q = params.q() as f64;
        let parity_per_info = 1.0 / (params.alpha() as f64 * s);
        Self {
            q: params.q(),
            alpha: params.alpha(),
            degrees: lambda.degrees().iter().map(|&d| d as f64).collect(),
            lambda: lambda.fractions().to_vec(),
            node: lambda.node_fractions(),
            w_rep: q / (q + parity_per_info),
            feedback,
            tol: 1e-11,
            max_inner: 20_000,
        }
    }

    pub fn feedback(&self) -> FeedbackInfo {
        self.feedback
    }

    /// Evaluates a whole curve with warm starts (grid must be sorted).
    pub fn curve(&self, grid: &[f64]) -> Result<ExitCurve> {
        let mut warm = GaState::default();
        let points = grid
            .iter()
            .map(|&i_a| {
                let o = self.transfer(i_a, &mut warm)?;
                Ok(CurvePoint { i_a, i_e: o.i_e, i_e_avg: o.i_e, v: o.v })
            })
            .collect::<Result<Vec<_>>>()?;
        ExitCurve::new(points, self.feedback)
    }
}

impl DecoderTransfer for AnalyticDecoder {
    type Warm = GaState;

    fn transfer(&self, i_a: f64, warm: &mut GaState) -> Result<DecoderOutput> {
        if !(0.0..=1.0).contains(&i_a) {
            return Err(Error::invalid(format!("a-priori information {i_a} outside [0, 1]")));
        }
        if i_a < warm.i_a {
            *warm = GaState::default();
        }
        let t = JTables::global();
        let s_ch2 = t.j_inv(i_a).powi(2);
        let q = self.q as f64;
        let alpha = self.alpha as f64;
        let (mut i_cv, mut i_cp) = (warm.i_cv, warm.i_cp);
        let mut converged = false;
        for _ in 0..self.max_inner {
            let jcv2 = t.j_inv(i_cv).powi(2);
            let i_vc: f64 = self
                .degrees
                .iter()
                .zip(&self.lambda)
                .map(|(&d, &l)| l * t.j((q * s_ch2 + (d - 1.0) * jcv2).sqrt()))
                .sum();
            let i_pc = t.j((s_ch2 + t.j_inv(i_cp).powi(2)).sqrt());
            let a = t.j_inv(1.0 - i_vc).powi(2);
            let b = t.j_inv(1.0 - i_pc).powi(2);
            let n_cv = 1.0 - t.j(((alpha - 1.0) * a + 2.0 * b).sqrt());
            let n_cp = 1.0 - t.j((alpha * a + b).sqrt());
            let delta = (n_cv - i_cv).abs().max((n_cp - i_cp).abs());
            i_cv = n_cv;
            i_cp = n_cp;
            if delta < self.tol {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Numerical(format!("decoder density evolution did not settle at I_a={i_a}")));
        }
        *warm = GaState { i_a, i_cv, i_cp };
        let app = matches!(self.feedback, FeedbackInfo::APosteriori);
        let jcv2 = t.j_inv(i_cv).powi(2);
        let jcp2 = t.j_inv(i_cp).powi(2);
        let rep_ch = if app { q } else { q - 1.0 } * s_ch2;
        let v_rep: f64 =
            self.degrees.iter().zip(&self.node).map(|(&d, &nu)| nu * t.phi((rep_ch + d * jcv2).sqrt())).sum();
        let par_ch = if app { s_ch2 } else { 0.0 };
        let v_par = t.phi((par_ch + 2.0 * jcp2).sqrt());
        let v = self.w_rep * v_rep + (1.0 - self.w_rep) * v_par;
        Ok(DecoderOutput { i_e: t.variance_to_info(v), v })
    }
}

/// One sample of a decoder transfer curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub i_a: f64,
    /// Variance-equivalent output information.
    pub i_e: f64,
    /// Average mutual information of the output LLRs.
    pub i_e_avg: f64,
    /// Average fed-back soft-symbol variance.
    pub v: f64,
}

/// A sampled decoder transfer curve, sorted by `i_a`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExitCurve {
    points: Vec<CurvePoint>,
    feedback: FeedbackInfo,
}

impl ExitCurve {
    pub fn new(mut points: Vec<CurvePoint>, feedback: FeedbackInfo) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::invalid("a transfer curve needs at least two points"));
        }
        points.sort_by(|a, b| a.i_a.total_cmp(&b.i_a));
        Ok(Self { points, feedback })
    }

    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }

    pub fn feedback(&self) -> FeedbackInfo {
        self.feedback
    }

    /// Grid indices where the output information drops by more than `tol`
    /// relative to the running maximum (Monte-Carlo noise).
    pub fn monotonicity_violations(&self, tol: f64) -> Vec<usize> {
        let mut best = f64::NEG_INFINITY;
        let mut out = Vec::new();
        for (i, p) in self.points.iter().enumerate() {
            if p.i_e < best - tol {
                out.push(i);
            }
            best = best.max(p.i_e);
        }
        out
    }
}

impl DecoderTransfer for ExitCurve {
    type Warm = ();

    /// Linear interpolation of the fed-back variance; clamped at the ends.
    fn transfer(&self, i_a: f64, _: &mut ()) -> Result<DecoderOutput> {
        let p = &self.points;
        let idx = p.partition_point(|x| x.i_a <= i_a);
        let v = if idx == 0 {
            p[0].v
        } else if idx == p.len() {
            p[p.len() - 1].v
        } else {
            let (a, b) = (&p[idx - 1], &p[idx]);
            let t = (i_a - a.i_a) / (b.i_a - a.i_a);
            a.v + t * (b.v - a.v)
        };
        Ok(DecoderOutput { i_e: JTables::global().variance_to_info(v), v })
    }
}

/// Settings for measuring a transfer curve on the real decoder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McExitConfig {
    pub info_len: usize,
    pub activations: usize,
    pub feedback: FeedbackInfo,
    pub seed: u64,
}

impl Default for McExitConfig {
    fn default() -> Self {
        Self { info_len: 10_000, activations: 1, feedback: FeedbackInfo::Extrinsic, seed: 0 }
    }
}

/// Measures `(I_a, I_e, v)` by feeding the decoder consistent Gaussian
/// LLRs for the all-zero codeword.
pub fn decoder_exit_curve(params: &CodeParams, grid: &[f64], cfg: &McExitConfig) -> Result<ExitCurve> {
    if cfg.activations == 0 {
        return Err(Error::invalid("at least one decoder activation is required"));
    }
    let code = CodeInstance::build(params, cfg.info_len, cfg.seed)?;
    let points = grid
        .par_iter()
        .enumerate()
        .map(|(gi, &i_a)| measure_point(&code, i_a, cfg, derive_seed(cfg.seed, Stream::ExitMeasurement, gi as u64)))
        .collect::<Result<Vec<_>>>()?;
    ExitCurve::new(points, cfg.feedback)
}

fn measure_point(code: &CodeInstance, i_a: f64, cfg: &McExitConfig, seed: u64) -> Result<CurvePoint> {
    let sigma = if i_a >= 1.0 { 60.0 } else { j_inverse::<f64>(i_a)? };
    let mean = sigma * sigma / 2.0;
    let mut rng = rng_from_seed(seed);
    let ch: Vec<f64> = (0..code.codeword_len()).map(|_| mean + sigma * rng.sample::<f64, _>(StandardNormal)).collect();
    let mut dec = MuIraDecoder::<f64>::new(code);
    for _ in 0..cfg.activations {
        dec.activate_codeword(&ch)?;
    }
    let ext = dec.extrinsic_codeword();
    let (mut mi, mut var) = (0.0, 0.0);
    for (e, c) in ext.iter().zip(&ch) {
        let l = match cfg.feedback {
            FeedbackInfo::Extrinsic => *e,
            FeedbackInfo::APosteriori => e + c,
        };
        mi += (-l).exp().ln_1p() / std::f64::consts::LN_2;
        let t = (l / 2.0).tanh();
        var += 1.0 - t * t;
    }
    let n = ext.len() as f64;
    let v = var / n;
    Ok(CurvePoint { i_a, i_e: JTables::global().variance_to_info(v), i_e_avg: 1.0 - mi / n, v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::presets;

    #[test]
    fn zero_input_gives_zero_output() {
        let p = presets::find("table1-full").unwrap().params();
        for fb in [FeedbackInfo::Extrinsic, FeedbackInfo::APosteriori] {
            let d = AnalyticDecoder::new(&p, fb);
            let o = d.transfer(0.0, &mut GaState::default()).unwrap();
            assert!(o.i_e.abs() < 1e-9 && (o.v - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn analytic_curve_is_monotone() {
        let p = presets::find("table1-severe-k64").unwrap().params();
        let d = AnalyticDecoder::new(&p, FeedbackInfo::Extrinsic);
        let grid: Vec<f64> = (0..=50).map(|i| i as f64 / 50.0 * 0.99).collect();
        let c = d.curve(&grid).unwrap();
        assert!(c.monotonicity_violations(1e-9).is_empty());
    }

    #[test]
    fn warm_start_matches_cold() {
        let p = presets::find("table1-over").unwrap().params();
        let d = AnalyticDecoder::new(&p, FeedbackInfo::APosteriori);
        let mut w = GaState::default();
        for &i in &[0.1, 0.2, 0.25, 0.3] {
            let warm = d.transfer(i, &mut w).unwrap();
            let cold = d.transfer(i, &mut GaState::default()).unwrap();
            assert!((warm.v - cold.v).abs() < 1e-7, "{i}: {} vs {}", warm.v, cold.v);
        }
    }

    #[test]
    fn curve_interpolation() {
        let pts = vec![
            CurvePoint { i_a: 0.0, i_e: 0.0, i_e_avg: 0.0, v: 1.0 },
            CurvePoint { i_a: 1.0, i_e: 1.0, i_e_avg: 1.0, v: 0.0 },
        ];
        let c = ExitCurve::new(pts, FeedbackInfo::Extrinsic).unwrap();
        assert!((c.transfer(0.25, &mut ()).unwrap().v - 0.75).abs() < 1e-15);
        assert_eq!(c.transfer(2.0, &mut ()).unwrap().v, 0.0);
    }
}
