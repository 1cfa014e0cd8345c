//! Built-in code configurations: the optimized MU-IRA codes, the
//! single-user IRA codes (repetition number 1) and the MAC-IRA code
//! (combiner size 1).

use super::degree::DegreeDistribution;
use super::params::CodeParams;
use crate::error::{Error, Result};

/// A named code with the system it was designed for.
#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub q: usize,
    pub alpha: usize,
    pub lambda: &'static [(usize, f64)],
    /// Users and antennas of the design point.
    pub k: usize,
    pub m: usize,
    /// Nominal rate as published.
    pub nominal_rate: f64,
    /// Design noise level, for the optimized MU-IRA codes.
    pub design_sigma_n: Option<f64>,
    /// Published decoding threshold in dB.
    pub reference_threshold_db: Option<f64>,
    /// Published capacity limit in dB.
    pub reference_capacity_db: Option<f64>,
    /// Whether the preset's antenna count must match the simulated system.
    pub dims_bound: bool,
}

impl Preset {
    /// Code parameters with `lambda` rescaled to sum to exactly one.
    pub fn params(&self) -> CodeParams {
        let lambda = DegreeDistribution::normalized(self.lambda).expect("preset distribution is valid");
        CodeParams::new(self.q, self.alpha, lambda).expect("preset parameters are valid")
    }
}

#[allow(clippy::too_many_arguments)]
const fn mu(
    name: &'static str,
    description: &'static str,
    k: usize,
    m: usize,
    sigma_n: f64,
    rate: f64,
    q: usize,
    alpha: usize,
    lambda: &'static [(usize, f64)],
    threshold: f64,
    capacity: f64,
) -> Preset {
    Preset {
        name,
        description,
        q,
        alpha,
        lambda,
        k,
        m,
        nominal_rate: rate,
        design_sigma_n: Some(sigma_n),
        reference_threshold_db: Some(threshold),
        reference_capacity_db: Some(capacity),
        dims_bound: true,
    }
}

const fn su(
    name: &'static str,
    description: &'static str,
    k: usize,
    m: usize,
    rate: f64,
    alpha: usize,
    lambda: &'static [(usize, f64)],
) -> Preset {
    Preset {
        name,
        description,
        q: 1,
        alpha,
        lambda,
        k,
        m,
        nominal_rate: rate,
        design_sigma_n: None,
        reference_threshold_db: None,
        reference_capacity_db: None,
        dims_bound: false,
    }
}

pub static PRESETS: &[Preset] = &[
    mu(
        "table1-full",
        "MU-IRA, full loading K=8 M=8, R=0.2",
        8,
        8,
        4.58,
        0.2,
        2,
        4,
        &[(3, 0.14619), (10, 0.212715), (30, 0.223699), (50, 0.112159), (100, 0.305237)],
        -9.22,
        -9.39,
    ),
    mu(
        "table1-over",
        "MU-IRA, over loading K=16 M=8, R=0.15",
        16,
        8,
        5.27,
        0.15,
        2,
        3,
        &[(3, 0.129157), (10, 0.173591), (30, 0.125162), (80, 0.384998), (100, 0.187092)],
        -9.2,
        -9.28,
    ),
    mu(
        "table1-severe-k24",
        "MU-IRA, severe loading K=24 M=8, R=0.13",
        24,
        8,
        5.52,
        0.13,
        2,
        2,
        &[(3, 0.174135), (10, 0.153139), (30, 0.254471), (50, 0.085083), (80, 0.333171)],
        -8.99,
        -9.06,
    ),
    mu(
        "table1-severe-k32",
        "MU-IRA, severe loading K=32 M=8, R=0.1",
        32,
        8,
        6.34,
        0.1,
        2,
        2,
        &[(3, 0.121532), (10, 0.113888), (30, 0.103885), (80, 0.152555), (100, 0.50814)],
        -9.05,
        -9.1,
    ),
    mu(
        "table1-severe-k32m4",
        "MU-IRA, severe loading K=32 M=4, R=0.1",
        32,
        4,
        3.81,
        0.1,
        4,
        2,
        &[(3, 0.207197), (10, 0.036035), (30, 0.139163), (50, 0.048337), (80, 0.136988), (100, 0.43228)],
        -4.65,
        -4.74,
    ),
    mu(
        "table1-severe-k64",
        "MU-IRA, severe loading K=64 M=8, R=0.1",
        64,
        8,
        5.43,
        0.1,
        4,
        2,
        &[(3, 0.204955), (10, 0.044794), (30, 0.0638), (50, 0.066099), (80, 0.313755), (100, 0.306596)],
        -7.71,
        -7.78,
    ),
    su(
        "table3-r020",
        "SU-IRA (q=1), R=0.2",
        8,
        8,
        0.2,
        4,
        &[(3, 0.099822), (10, 0.214201), (30, 0.023108), (80, 0.186412), (100, 0.476457)],
    ),
    su(
        "table3-r015",
        "SU-IRA (q=1), R=0.15",
        16,
        8,
        0.15,
        3,
        &[(3, 0.091575), (10, 0.171829), (30, 0.122928), (80, 0.278914), (100, 0.334754)],
    ),
    su(
        "table3-r013",
        "SU-IRA (q=1), R=0.13",
        24,
        8,
        0.13,
        2,
        &[(3, 0.118814), (10, 0.204525), (30, 0.196695), (50, 0.346954), (80, 0.016878), (100, 0.116134)],
    ),
    su(
        "table3-r010",
        "SU-IRA (q=1), R=0.1",
        32,
        8,
        0.1,
        2,
        &[(3, 0.085867), (10, 0.132226), (30, 0.198883), (80, 0.276011), (100, 0.307013)],
    ),
    Preset {
        name: "mac-ira",
        description: "MAC-IRA (alpha=1), R=0.08",
        q: 5,
        alpha: 1,
        lambda: &[(2, 0.063021), (3, 0.228288), (10, 0.111951), (30, 0.226877), (50, 0.369864)],
        k: 8,
        m: 8,
        nominal_rate: 0.08,
        design_sigma_n: None,
        reference_threshold_db: None,
        reference_capacity_db: None,
        dims_bound: false,
    },
];

pub fn all() -> &'static [Preset] {
    PRESETS
}

pub fn find(name: &str) -> Result<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name).ok_or_else(|| Error::UnknownPreset(name.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inventory() {
        assert_eq!(all().len(), 11);
        assert!(find("nope").is_err());
        let mut names: Vec<_> = all().iter().map(|p| p.name).collect();
        names.dedup();
        assert_eq!(names.len(), 11);
    }

    #[test]
    fn rates_match_nominal() {
        for p in all() {
            let r = p.params().rate();
            let tol = if p.name == "mac-ira" { 0.002 } else { 0.005 };
            assert!((r - p.nominal_rate).abs() < tol, "{}: {r}", p.name);
        }
        assert!((find("table1-full").unwrap().params().rate() - 0.1992).abs() < 1e-3);
    }
}
