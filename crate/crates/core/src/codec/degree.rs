use crate::error::{Error, Result};

const SUM_TOL: f64 = 1e-9;

/// Edge-perspective degree distribution `lambda(x) = sum_i lambda_i x^(i-1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDistribution {
    degrees: Vec<usize>,
    fractions: Vec<f64>,
}

impl DegreeDistribution {
    /// Validates entries: degrees >= 2 and strictly increasing, fractions
    /// positive and summing to one within 1e-9.
    pub fn new(entries: &[(usize, f64)]) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("degree distribution is empty"));
        }
        for w in entries.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::invalid(format!(
                    "degrees must be strictly increasing ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        if let Some(&(d, _)) = entries.iter().find(|e| e.0 < 2) {
            return Err(Error::invalid(format!("degree {d} < 2")));
        }
        if let Some(&(d, l)) = entries.iter().find(|e| !(e.1 > 0.0 && e.1 <= 1.0)) {
            return Err(Error::invalid(format!("fraction for degree {d} out of (0, 1]: {l}")));
        }
        let sum: f64 = entries.iter().map(|e| e.1).sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::invalid(format!("edge fractions sum to {sum}, expected 1")));
        }
        Ok(Self { degrees: entries.iter().map(|e| e.0).collect(), fractions: entries.iter().map(|e| e.1).collect() })
    }

    /// Rescales positive fractions to sum to one, then validates. Entries
    /// with zero fraction are dropped.
    pub fn normalized(entries: &[(usize, f64)]) -> Result<Self> {
        let kept: Vec<(usize, f64)> = entries.iter().copied().filter(|e| e.1 != 0.0).collect();
        let sum: f64 = kept.iter().map(|e| e.1).sum();
        if !(sum > 0.0) || kept.iter().any(|e| e.1 < 0.0) {
            return Err(Error::invalid("degree fractions must be non-negative with positive sum"));
        }
        let scaled: Vec<(usize, f64)> = kept.iter().map(|&(d, l)| (d, l / sum)).collect();
        Self::new(&scaled)
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn fractions(&self) -> &[f64] {
        &self.fractions
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.degrees.iter().copied().zip(self.fractions.iter().copied())
    }

    /// `sum_i lambda_i / i`, the number of information bits per edge.
    pub fn inverse_mean_degree(&self) -> f64 {
        self.entries().map(|(d, l)| l / d as f64).sum()
    }

    /// Node-perspective fractions `(lambda_i / i) / sum_j (lambda_j / j)`.
    pub fn node_fractions(&self) -> Vec<f64> {
        let s = self.inverse_mean_degree();
        self.entries().map(|(d, l)| l / d as f64 / s).collect()
    }

    pub fn max_degree(&self) -> usize {
        *self.degrees.last().expect("non-empty")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(DegreeDistribution::new(&[(2, 1.0)]).is_ok());
        assert!(DegreeDistribution::new(&[(1, 1.0)]).is_err());
        assert!(DegreeDistribution::new(&[(3, 0.5), (3, 0.5)]).is_err());
        assert!(DegreeDistribution::new(&[(10, 0.5), (3, 0.5)]).is_err());
        assert!(DegreeDistribution::new(&[(3, 0.5), (10, 0.4)]).is_err());
        assert!(DegreeDistribution::new(&[(3, 0.0), (10, 1.0)]).is_err());
        assert!(DegreeDistribution::new(&[]).is_err());
    }

    #[test]
    fn normalization_rescales() {
        let d = DegreeDistribution::normalized(&[(3, 0.2), (10, 0.6000001)]).unwrap();
        let s: f64 = d.fractions().iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn node_fractions_sum_to_one() {
        let d = DegreeDistribution::new(&[(3, 0.5), (10, 0.5)]).unwrap();
        let nf = d.node_fractions();
        assert!((nf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // (0.5/3) / (0.5/3 + 0.05)
        assert!((nf[0] - (0.5 / 3.0) / (0.5 / 3.0 + 0.05)).abs() < 1e-12);
    }
}
