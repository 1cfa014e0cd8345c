//! TOML experiment description.

use serde::{Deserialize, Serialize};

use crate::channel::{CsiModel, Fading, SystemDims};
use crate::codec::{presets, CodeParams, DegreeDistribution};
use crate::error::{Error, Result};

/// Inline code parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeParamsSpec {
    pub q: usize,
    pub alpha: usize,
    /// `[degree, edge fraction]` pairs.
    pub lambda: Vec<(usize, f64)>,
}

impl CodeParamsSpec {
    pub fn from_params(p: &CodeParams) -> Self {
        Self { q: p.q(), alpha: p.alpha(), lambda: p.lambda().entries().collect() }
    }

    pub fn to_params(&self, q_max: usize) -> Result<CodeParams> {
        let lambda = DegreeDistribution::new(&self.lambda).map_err(|e| Error::Config(e.to_string()))?;
        CodeParams::with_q_max(self.q, self.alpha, lambda, q_max).map_err(|e| Error::Config(e.to_string()))
    }
}

/// A preset name or explicit parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CodeSpec {
    Preset(String),
    Params(CodeParamsSpec),
}

/// Simulation settings. Every field except `code` has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Users; defaults to the preset's design value.
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Receive antennas; defaults to the preset's design value.
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    pub code: CodeSpec,
    #[serde(default = "default_info_len")]
    pub info_len: usize,
    #[serde(default = "default_tau_max")]
    pub tau_max: usize,
    #[serde(default)]
    pub ebn0_grid: Vec<f64>,
    #[serde(default = "default_fading")]
    pub fading: Fading,
    #[serde(default)]
    pub csi: CsiModel,
    /// Frame budget per Eb/N0 point.
    #[serde(default = "default_max_frames")]
    pub max_frames: usize,
    /// Stop a point once this many bit errors are collected (0 disables).
    #[serde(default = "default_max_bit_errors")]
    pub max_bit_errors: u64,
    /// Never stop a point before this many information bits.
    #[serde(default)]
    pub min_bits: u64,
    #[serde(default = "default_true")]
    pub early_stop: bool,
    #[serde(default = "default_q_max")]
    pub q_max: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_info_len() -> usize {
    4096
}
fn default_tau_max() -> usize {
    250
}
fn default_fading() -> Fading {
    Fading::Fast
}
fn default_max_frames() -> usize {
    100
}
fn default_max_bit_errors() -> u64 {
    1000
}
fn default_true() -> bool {
    true
}
fn default_q_max() -> usize {
    crate::codec::DEFAULT_Q_MAX
}

impl SimConfig {
    /// A configuration for a named preset with default settings.
    pub fn for_preset(name: &str) -> Self {
        Self::for_code(CodeSpec::Preset(name.to_string()))
    }

    /// A configuration for `code` with default settings.
    pub fn for_code(code: CodeSpec) -> Self {
        Self {
            k: None,
            m: None,
            code,
            info_len: default_info_len(),
            tau_max: default_tau_max(),
            ebn0_grid: Vec::new(),
            fading: default_fading(),
            csi: CsiModel::default(),
            max_frames: default_max_frames(),
            max_bit_errors: default_max_bit_errors(),
            min_bits: 0,
            early_stop: true,
            q_max: default_q_max(),
            seed: 0,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Checks the configuration and resolves the preset and dimensions.
    pub fn resolve(&self) -> Result<ResolvedCode> {
        let (params, preset) = match &self.code {
            CodeSpec::Preset(name) => {
                let p = presets::find(name)?;
                (p.params(), Some(p))
            }
            CodeSpec::Params(spec) => (spec.to_params(self.q_max)?, None),
        };
        let k = self.k.or(preset.map(|p| p.k));
        let m = self.m.or(preset.map(|p| p.m));
        let (Some(k), Some(m)) = (k, m) else {
            return Err(Error::Config("K and M are required when the code is not a preset".into()));
        };
        let dims = SystemDims::new(k, m).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(p) = preset {
            if p.dims_bound && p.m != m {
                return Err(Error::Config(format!(
                    "preset `{}` was designed for M={} but the configuration sets M={m}",
                    p.name, p.m
                )));
            }
        }
        if self.tau_max == 0 {
            return Err(Error::Config("tau_max must be >= 1".into()));
        }
        if self.info_len == 0 {
            return Err(Error::Config("info_len must be >= 1".into()));
        }
        if self.max_frames == 0 {
            return Err(Error::Config("max_frames must be >= 1".into()));
        }
        if self.fading.coherence_len() == 0 {
            return Err(Error::Config("block fading length must be >= 1".into()));
        }
        self.csi.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.ebn0_grid.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("ebn0_grid entries must be finite".into()));
        }
        Ok(ResolvedCode { dims, params, preset })
    }
}

/// Code and system dimensions after preset lookup.
#[derive(Debug, Clone)]
pub struct ResolvedCode {
    pub dims: SystemDims,
    pub params: CodeParams,
    pub preset: Option<&'static presets::Preset>,
}

/// Parses `start:stop:step` (inclusive of `stop` within half a step) or a
/// comma-separated list.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("malformed Eb/N0 grid `{s}`"));
    if s.contains(':') {
        let parts: Vec<f64> =
            s.split(':').map(|x| x.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<_>>()?;
        let [a, b, step] = parts[..] else { return Err(bad()) };
        if !(step > 0.0) || b < a {
            return Err(bad());
        }
        let n = ((b - a) / step + 0.5).floor() as usize;
        // Rounded to 1e-9 dB so printed grids are clean.
        Ok((0..=n).map(|i| ((a + i as f64 * step) * 1e9).round() / 1e9).collect())
    } else {
        s.split(',').map(|x| x.trim().parse::<f64>().map_err(|_| bad())).collect()
    }
}
