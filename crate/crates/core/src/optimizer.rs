//! Degree-distribution search: for every `(q, alpha)` the largest rate with
//! an open detector/decoder tunnel at the target noise level.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::SystemDims;
use crate::codec::{rate_from, CodeParams, DegreeDistribution};
use crate::error::{Error, Result};
use crate::exit::{
    decoding_threshold, info_grid, run_exit_recursion, sigma_to_ebn0_db, tunnel_gap, AnalyticDecoder, ExitModel,
    LmmseTransfer, ThresholdWindow,
};
use crate::rng::{derive_seed2, rng_from_seed, SimRng, Stream};

/// Search settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub sigma_n: f64,
    pub degree_set: Vec<usize>,
    pub alpha_range: (usize, usize),
    pub q_max: usize,
    /// Differential-evolution population size.
    pub population: usize,
    /// Generations per feasibility test.
    pub generations: usize,
    /// Bisection stops when the rate bracket is narrower than this.
    pub rate_tolerance: f64,
    /// Required minimum tunnel opening in mutual-information units.
    pub margin: f64,
    /// Information grid points on `[0, 0.99]` for the tunnel gap.
    pub gap_points: usize,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            k: 8,
            m: 8,
            sigma_n: 4.58,
            degree_set: vec![3, 10, 30, 50, 80, 100],
            alpha_range: (1, 5),
            q_max: 5,
            population: 24,
            generations: 40,
            rate_tolerance: 1e-3,
            margin: 1e-3,
            gap_points: 60,
            seed: 1,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        SystemDims::new(self.k, self.m)?;
        if !(self.sigma_n > 0.0) {
            return Err(Error::Config("sigma_n must be positive".into()));
        }
        if self.degree_set.is_empty() || self.degree_set.iter().any(|&d| d < 2) {
            return Err(Error::Config("degree_set must be non-empty with degrees >= 2".into()));
        }
        let mut sorted = self.degree_set.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.degree_set.len() {
            return Err(Error::Config("degree_set contains duplicates".into()));
        }
        if self.alpha_range.0 == 0 || self.alpha_range.0 > self.alpha_range.1 {
            return Err(Error::Config("alpha_range must be 1 <= lo <= hi".into()));
        }
        if self.q_max == 0 {
            return Err(Error::Config("q_max must be >= 1".into()));
        }
        if self.population < 4 || self.generations == 0 || self.gap_points < 2 {
            return Err(Error::Config("population >= 4, generations >= 1 and gap_points >= 2 required".into()));
        }
        if !(self.rate_tolerance > 0.0) || !(self.margin >= 0.0) {
            return Err(Error::Config("rate_tolerance must be positive and margin non-negative".into()));
        }
        Ok(())
    }

    fn degrees(&self) -> Vec<usize> {
        let mut d = self.degree_set.clone();
        d.sort_unstable();
        d
    }
}

/// One feasibility test in the search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchLogRow {
    pub q: usize,
    pub alpha: usize,
    pub target_rate: f64,
    pub feasible: bool,
    pub min_gap: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerReport {
    pub params: CodeParams,
    pub rate: f64,
    /// Tunnel open with the required margin and the recursion converges.
    pub feasible: bool,
    pub min_gap: f64,
    pub design_ebn0_db: f64,
    /// Independently bisected threshold of the returned code.
    pub threshold_db: Option<f64>,
    /// `threshold_db <= design_ebn0_db + 0.05`.
    pub verified: bool,
    pub log: Vec<SearchLogRow>,
}

impl OptimizerReport {
    pub fn write_log_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for row in &self.log {
            wr.serialize(row)?;
        }
        wr.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct Candidate {
    lambda: Vec<f64>,
    gap: f64,
}

/// Fixed-rate slice of the simplex: every candidate is mixed with a pure
/// lowest- or highest-degree distribution so that `sum lambda_i / i`
/// equals the target exactly.
struct Slice<'a> {
    degrees: &'a [usize],
    target_s: f64,
}

impl Slice<'_> {
    fn s_of(&self, l: &[f64]) -> f64 {
        l.iter().zip(self.degrees).map(|(x, &d)| x / d as f64).sum()
    }

    fn project(&self, w: &[f64]) -> Vec<f64> {
        let sum: f64 = w.iter().sum();
        let mut l: Vec<f64> =
            if sum > 0.0 { w.iter().map(|x| x / sum).collect() } else { vec![1.0 / w.len() as f64; w.len()] };
        let s = self.s_of(&l);
        let n = l.len();
        let (pure, s_pure) = if s < self.target_s {
            (0, 1.0 / self.degrees[0] as f64)
        } else {
            (n - 1, 1.0 / self.degrees[n - 1] as f64)
        };
        if (s_pure - s).abs() > 0.0 {
            let t = ((self.target_s - s) / (s_pure - s)).clamp(0.0, 1.0);
            for x in l.iter_mut() {
                *x *= 1.0 - t;
            }
            l[pure] += t;
        }
        // Tiny fractions are rounded away and the remainder rebalanced.
        for x in l.iter_mut() {
            if *x < 1e-6 {
                *x = 0.0;
            }
        }
        let sum: f64 = l.iter().sum();
        l.iter_mut().for_each(|x| *x /= sum);
        l
    }
}

fn params_from(q: usize, alpha: usize, q_max: usize, degrees: &[usize], l: &[f64]) -> Result<CodeParams> {
    let entries: Vec<(usize, f64)> = degrees.iter().copied().zip(l.iter().copied()).filter(|e| e.1 > 0.0).collect();
    CodeParams::with_q_max(q, alpha, DegreeDistribution::normalized(&entries)?, q_max)
}

struct Evaluator<'a> {
    cfg: &'a OptimizerConfig,
    model: &'a ExitModel,
    det: LmmseTransfer,
    grid: Vec<f64>,
    degrees: Vec<usize>,
}

impl Evaluator<'_> {
    fn gap(&self, q: usize, alpha: usize, l: &[f64]) -> f64 {
        let Ok(p) = params_from(q, alpha, self.cfg.q_max, &self.degrees, l) else {
            return f64::NEG_INFINITY;
        };
        let dec = AnalyticDecoder::new(&p, self.model.feedback);
        tunnel_gap(&dec, &self.det, &self.grid).map(|g| g.min_gap).unwrap_or(-1.0)
    }

    /// Differential evolution maximizing the tunnel gap on the slice with
    /// rate `target_s`. Stops early once the margin is met.
    fn search(
        &self,
        q: usize,
        alpha: usize,
        target_s: f64,
        seeds: &[Vec<f64>],
        rng: &mut SimRng,
    ) -> (Candidate, usize) {
        let slice = Slice { degrees: &self.degrees, target_s };
        let d = self.degrees.len();
        let np = self.cfg.population;
        let mut genes: Vec<Vec<f64>> = Vec::with_capacity(np);
        for s in seeds.iter().take(np / 2) {
            genes.push(s.clone());
        }
        while genes.len() < np {
            genes.push((0..d).map(|_| rng.random::<f64>()).collect());
        }
        let eval = |g: &Vec<f64>| {
            let l = slice.project(g);
            let gap = self.gap(q, alpha, &l);
            Candidate { lambda: l, gap }
        };
        let mut pop: Vec<Candidate> = genes.par_iter().map(eval).collect();
        let mut evals = np;
        let best_of = |pop: &[Candidate]| {
            pop.iter().cloned().fold(None::<Candidate>, |b, c| match b {
                Some(b) if b.gap >= c.gap => Some(b),
                _ => Some(c),
            })
        };
        let mut best = best_of(&pop).expect("non-empty population");
        if d == 1 {
            return (best, evals);
        }
        let (f, cr) = (0.6, 0.9);
        for _ in 0..self.cfg.generations {
            if best.gap >= self.cfg.margin {
                break;
            }
            let trials: Vec<Vec<f64>> = (0..np)
                .map(|i| {
                    let pick = |rng: &mut SimRng, not: &[usize]| loop {
                        let r = rng.random_range(0..np);
                        if !not.contains(&r) {
                            break r;
                        }
                    };
                    let a = pick(rng, &[i]);
                    let b = pick(rng, &[i, a]);
                    let c = pick(rng, &[i, a, b]);
                    let jr = rng.random_range(0..d);
                    (0..d)
                        .map(|j| {
                            if j == jr || rng.random::<f64>() < cr {
                                (genes[a][j] + f * (genes[b][j] - genes[c][j])).clamp(0.0, 1.0)
                            } else {
                                genes[i][j]
                            }
                        })
                        .collect()
                })
                .collect();
            let results: Vec<Candidate> = trials.par_iter().map(eval).collect();
            evals += np;
            for (i, (t, r)) in trials.into_iter().zip(results).enumerate() {
                if r.gap >= pop[i].gap {
                    genes[i] = t;
                    pop[i] = r;
                }
            }
            best = best_of(&pop).expect("non-empty population");
        }
        (best, evals)
    }
}

/// Searches `(q, alpha, lambda)` for the largest rate whose tunnel stays
/// open by `cfg.margin` at `cfg.sigma_n`, then re-verifies the winner by
/// threshold bisection.
pub fn optimize_degree_distribution(cfg: &OptimizerConfig, model: &ExitModel) -> Result<OptimizerReport> {
    cfg.validate()?;
    let dims = SystemDims::new(cfg.k, cfg.m)?;
    let degrees = cfg.degrees();
    let ev = Evaluator {
        cfg,
        model,
        det: LmmseTransfer::new(cfg.k, cfg.m, cfg.sigma_n, model.interference)?,
        grid: info_grid(cfg.gap_points, 0.99),
        degrees: degrees.clone(),
    };
    let s_min = 1.0 / *degrees.last().expect("non-empty") as f64;
    let s_max = 1.0 / degrees[0] as f64;
    let mut log = Vec::new();
    let mut best: Option<(usize, usize, Candidate, f64)> = None;
    let mut best_infeasible: Option<(usize, usize, Candidate, f64)> = None;

    for q in 1..=cfg.q_max {
        for alpha in cfg.alpha_range.0..=cfg.alpha_range.1 {
            let rate_of = |s: f64| rate_from(q, alpha, s);
            let floor_rate = best.as_ref().map(|b| b.3 + cfg.rate_tolerance).unwrap_or(0.0);
            if rate_of(s_max) <= floor_rate - cfg.rate_tolerance || rate_of(s_max) < floor_rate {
                continue;
            }
            // S achieving the floor rate: r = aS / (q a S + 1) => S = r / (a (1 - q r)).
            let s_for = |r: f64| r / (alpha as f64 * (1.0 - q as f64 * r));
            let mut step = 0u64;
            let mut test = |s: f64, seeds: &[Vec<f64>], log: &mut Vec<SearchLogRow>| {
                let mut rng = rng_from_seed(derive_seed2(cfg.seed, Stream::Optimizer, (q * 16 + alpha) as u64, step));
                step += 1;
                let (cand, evals) = ev.search(q, alpha, s, seeds, &mut rng);
                let feasible = cand.gap >= cfg.margin;
                log.push(SearchLogRow {
                    q,
                    alpha,
                    target_rate: rate_of(s),
                    feasible,
                    min_gap: cand.gap,
                    evaluations: evals,
                });
                (cand, feasible)
            };
            let mut lo_s = if floor_rate > 0.0 { s_for(floor_rate).max(s_min) } else { s_min };
            if lo_s > s_max {
                continue;
            }
            let (cand, ok) = test(lo_s, &[], &mut log);
            if !ok {
                let worse = best_infeasible.as_ref().is_none_or(|b| cand.gap > b.2.gap);
                if best.is_none() && worse {
                    best_infeasible = Some((q, alpha, cand, rate_of(lo_s)));
                }
                continue;
            }
            let mut lo_cand = cand;
            let mut hi_s = s_max;
            if (s_max - lo_s) > 0.0 {
                let (c, ok) = test(s_max, std::slice::from_ref(&lo_cand.lambda), &mut log);
                if ok {
                    lo_cand = c;
                    lo_s = s_max;
                }
            }
            while rate_of(hi_s) - rate_of(lo_s) > cfg.rate_tolerance && lo_s < hi_s {
                let mid = 0.5 * (lo_s + hi_s);
                let (c, ok) = test(mid, std::slice::from_ref(&lo_cand.lambda), &mut log);
                if ok {
                    lo_s = mid;
                    lo_cand = c;
                } else {
                    hi_s = mid;
                }
            }
            let r = rate_of(lo_s);
            if best.as_ref().is_none_or(|b| r > b.3) {
                best = Some((q, alpha, lo_cand, r));
            }
        }
    }

    let design_ebn0_db_for = |rate: f64| sigma_to_ebn0_db(cfg.sigma_n, rate);
    let (q, alpha, cand, _, feasible) = match (best, best_infeasible) {
        (Some((q, a, c, r)), _) => (q, a, c, r, true),
        (None, Some((q, a, c, r))) => (q, a, c, r, false),
        (None, None) => return Err(Error::Infeasible("search produced no candidate".into())),
    };
    let params = params_from(q, alpha, cfg.q_max, &degrees, &cand.lambda)?;
    let rate = params.rate();
    let design = design_ebn0_db_for(rate);
    let dec = AnalyticDecoder::new(&params, model.feedback);
    let converges = run_exit_recursion(&dec, dims, cfg.sigma_n, model)?.converged();
    let window = ThresholdWindow { lo_db: design - 6.0, hi_db: design + 6.0, ..ThresholdWindow::default() };
    let threshold_db = decoding_threshold(&params, dims, &window, model).ok().map(|t| t.threshold_db);
    let verified = threshold_db.is_some_and(|t| t <= design + 0.05);
    Ok(OptimizerReport {
        params,
        rate,
        feasible: feasible && converges,
        min_gap: cand.gap,
        design_ebn0_db: design,
        threshold_db,
        verified,
        log,
    })
}
