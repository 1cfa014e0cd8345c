use super::degree::DegreeDistribution;
use crate::error::{Error, Result};

/// Default upper bound on the repetition number.
pub const DEFAULT_Q_MAX: usize = 5;

/// Parameters of one MU-IRA code: repetition number `q`, combiner size
/// `alpha` and information-node degree distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeParams {
    q: usize,
    alpha: usize,
    lambda: DegreeDistribution,
}

impl CodeParams {
    pub fn new(q: usize, alpha: usize, lambda: DegreeDistribution) -> Result<Self> {
        Self::with_q_max(q, alpha, lambda, DEFAULT_Q_MAX)
    }

    pub fn with_q_max(q: usize, alpha: usize, lambda: DegreeDistribution, q_max: usize) -> Result<Self> {
        if q == 0 || q > q_max {
            return Err(Error::invalid(format!("repetition number q={q} outside 1..={q_max}")));
        }
        if alpha == 0 {
            return Err(Error::invalid("combiner size alpha must be >= 1"));
        }
        Ok(Self { q, alpha, lambda })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    pub fn lambda(&self) -> &DegreeDistribution {
        &self.lambda
    }

    /// `alpha S / (alpha q S + 1)` with `S = sum_i lambda_i / i`.
    pub fn rate(&self) -> f64 {
        rate_from(self.q, self.alpha, self.lambda.inverse_mean_degree())
    }

    /// Sign applied to repetition copy `r` at modulation: +1, -1, +1, ...
    pub fn rep_sign(&self, r: usize) -> i8 {
        rep_sign(r)
    }

    /// The alternating pattern `[+1, -1, +1, ...]` of length `q`.
    pub fn rep_pattern(&self) -> Vec<i8> {
        (0..self.q).map(rep_sign).collect()
    }
}

pub(crate) fn rep_sign(r: usize) -> i8 {
    if r.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Rate for a given `q`, `alpha` and `S = sum_i lambda_i / i`.
pub fn rate_from(q: usize, alpha: usize, s: f64) -> f64 {
    let a = alpha as f64 * s;
    a / (q as f64 * a + 1.0)
}

pub fn code_rate(params: &CodeParams) -> f64 {
    params.rate()
}
