//! Flat key=value experiment configuration with dotted sections.
//!
//! Example:
//! ```text
//! system.n_ue = 6
//! system.n_rrh = 2
//! system.m_antennas = 4
//! system.l_chains = 2
//! system.tau = 2
//! scheme = joint
//! sweep.axis = l_chains
//! sweep.values = 1,2,3,4
//! ```
//! Unknown keys are rejected; omitted keys take the documented defaults.

use std::collections::BTreeMap;
use std::path::Path;

use cfran_core::optimizer::{OptimizerConfig, Scheme};
use cfran_core::scenario::SystemConfig;

use crate::error::{HarnessError, Result};

/// Which parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Iterations,
    LChains,
    Tau,
    SnrDb,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Iterations => "iterations",
            SweepAxis::LChains => "l_chains",
            SweepAxis::Tau => "tau",
            SweepAxis::SnrDb => "snr_db",
        }
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "iterations" => Ok(SweepAxis::Iterations),
            "l_chains" => Ok(SweepAxis::LChains),
            "tau" => Ok(SweepAxis::Tau),
            "snr_db" => Ok(SweepAxis::SnrDb),
            other => Err(HarnessError::Config(format!(
                "sweep.axis: unknown axis '{other}' (expected iterations, l_chains, tau or snr_db)"
            ))),
        }
    }
}

/// ADC model selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdcMode {
    OneBit,
    HighResNoiseless,
}

impl AdcMode {
    pub fn name(self) -> &'static str {
        match self {
            AdcMode::OneBit => "one-bit",
            AdcMode::HighResNoiseless => "high-res-noiseless",
        }
    }
}

impl std::str::FromStr for AdcMode {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one-bit" => Ok(AdcMode::OneBit),
            "high-res-noiseless" => Ok(AdcMode::HighResNoiseless),
            other => Err(HarnessError::Config(format!(
                "adc: unknown mode '{other}' (expected one-bit or high-res-noiseless)"
            ))),
        }
    }
}

/// Sweep axis plus the value list.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

/// One batch experiment: base scenario, optimizer knobs, scheme, sweep.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub base: SystemConfig,
    pub optimizer: OptimizerConfig,
    pub scheme: Scheme,
    pub sweep: SweepSpec,
    /// Geometry draws per sweep point.
    pub n_placements: usize,
    /// Monte-Carlo MSE draws per placement; 0 means analytic only.
    pub n_channel_trials: usize,
    pub adc: AdcMode,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        self.base
            .validate()
            .map_err(|e| HarnessError::Config(format!("system.*: {e}")))?;
        self.optimizer
            .validate()
            .map_err(|e| HarnessError::Config(format!("optimizer.*: {e}")))?;
        if self.n_placements == 0 {
            return Err(HarnessError::Config("n_placements must be >= 1".into()));
        }
        if self.sweep.values.is_empty() {
            return Err(HarnessError::Config("sweep.values must not be empty".into()));
        }
        for &v in &self.sweep.values {
            let integral = v.fract() == 0.0 && v >= 0.0;
            match self.sweep.axis {
                SweepAxis::Iterations if !integral => {
                    return Err(HarnessError::Config(format!(
                        "sweep.values: iteration count {v} is not a nonnegative integer"
                    )));
                }
                SweepAxis::LChains | SweepAxis::Tau if !integral || v < 1.0 => {
                    return Err(HarnessError::Config(format!(
                        "sweep.values: {} value {v} is not a positive integer",
                        self.sweep.axis.name()
                    )));
                }
                SweepAxis::SnrDb if !v.is_finite() => {
                    return Err(HarnessError::Config(format!(
                        "sweep.values: SNR value {v} is not finite"
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

struct KeyMap {
    entries: BTreeMap<String, String>,
}

impl KeyMap {
    fn parse(src: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in src.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                HarnessError::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            let key = key.trim().to_string();
            if entries.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(HarnessError::Config(format!("duplicate key '{key}'")));
            }
        }
        Ok(KeyMap { entries })
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key)
    }

    fn parse_as<T: std::str::FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        match self.take(key) {
            None => Ok(default),
            Some(raw) => raw.parse::<T>().map_err(|_| {
                HarnessError::Config(format!("{key}: cannot parse value '{raw}'"))
            }),
        }
    }

    fn require_usize(&mut self, key: &str) -> Result<usize> {
        let raw = self
            .take(key)
            .ok_or_else(|| HarnessError::Config(format!("missing required key '{key}'")))?;
        raw.parse::<usize>()
            .map_err(|_| HarnessError::Config(format!("{key}: cannot parse value '{raw}'")))
    }
}

/// Parse a config file into an [`ExperimentSpec`].
pub fn parse_config(path: &Path) -> Result<ExperimentSpec> {
    let src = std::fs::read_to_string(path)?;
    parse_config_str(&src)
}

/// Parse config text into an [`ExperimentSpec`].
pub fn parse_config_str(src: &str) -> Result<ExperimentSpec> {
    let mut map = KeyMap::parse(src)?;

    let n_ue = map.require_usize("system.n_ue")?;
    let n_rrh = map.require_usize("system.n_rrh")?;
    let m_antennas = map.require_usize("system.m_antennas")?;
    let l_chains = map.require_usize("system.l_chains")?;
    let tau = map.require_usize("system.tau")?;
    if l_chains > m_antennas {
        return Err(HarnessError::Config(format!(
            "system.l_chains ({l_chains}) exceeds system.m_antennas ({m_antennas})"
        )));
    }

    let mut base = SystemConfig::new(n_ue, n_rrh, m_antennas, l_chains, tau);
    base.power_per_ue = map.parse_as("system.power_per_ue", base.power_per_ue)?;
    let snr_db = map.parse_as("system.snr_db", base.snr_db)?;
    base = base.with_snr_db(snr_db);
    if let Some(raw) = map.take("system.noise_var") {
        base.noise_var = raw.parse::<f64>().map_err(|_| {
            HarnessError::Config(format!("system.noise_var: cannot parse value '{raw}'"))
        })?;
    }
    base.area_side_m = map.parse_as("system.area_side_m", base.area_side_m)?;
    base.d_over_lambda = map.parse_as("system.d_over_lambda", base.d_over_lambda)?;
    base.delta_spread = map.parse_as("system.delta_spread", base.delta_spread)?;
    base.rng_seed = map.parse_as("system.rng_seed", base.rng_seed)?;

    let defaults = OptimizerConfig::default();
    let optimizer = OptimizerConfig {
        max_outer_iters: map.parse_as("optimizer.max_outer_iters", defaults.max_outer_iters)?,
        gamma0: map.parse_as("optimizer.gamma0", defaults.gamma0)?,
        gamma_decay: map.parse_as("optimizer.gamma_decay", defaults.gamma_decay)?,
        inner_max_iters: map.parse_as("optimizer.inner_max_iters", defaults.inner_max_iters)?,
        inner_tol: map.parse_as("optimizer.inner_tol", defaults.inner_tol)?,
        outer_tol: map.parse_as("optimizer.outer_tol", defaults.outer_tol)?,
    };

    let scheme = match map.take("scheme") {
        None => Scheme::Joint,
        Some(raw) => raw
            .parse::<Scheme>()
            .map_err(|e| HarnessError::Config(format!("scheme: {e}")))?,
    };
    let adc = match map.take("adc") {
        None => AdcMode::OneBit,
        Some(raw) => raw.parse::<AdcMode>()?,
    };
    let n_placements = map.parse_as("n_placements", 50usize)?;
    let n_channel_trials = map.parse_as("n_channel_trials", 0usize)?;

    let axis = match map.take("sweep.axis") {
        None => SweepAxis::Iterations,
        Some(raw) => raw.parse::<SweepAxis>()?,
    };
    let values = match map.take("sweep.values") {
        None => vec![optimizer.max_outer_iters as f64],
        Some(raw) => raw
            .split(',')
            .map(|tok| {
                tok.trim().parse::<f64>().map_err(|_| {
                    HarnessError::Config(format!("sweep.values: cannot parse entry '{tok}'"))
                })
            })
            .collect::<Result<Vec<f64>>>()?,
    };

    if let Some((key, _)) = map.entries.iter().next() {
        return Err(HarnessError::Config(format!("unknown key '{key}'")));
    }

    let spec = ExperimentSpec {
        base,
        optimizer,
        scheme,
        sweep: SweepSpec { axis, values },
        n_placements,
        n_channel_trials,
        adc,
    };
    spec.validate()?;
    Ok(spec)
}
