//! Batch experiment harness: seeded sweeps over the design schemes with
//! CSV emission.
//!
//! Every record's seed is a hash of (base seed, sweep value, placement), so
//! any single record can be reproduced in isolation, and paired-seed
//! comparisons across schemes share placements and initial designs. Sweep
//! points and placements fan out through the core execution layer.

pub mod config;
pub mod csv;
pub mod error;

use std::time::Instant;

use cfran_core::estimation::{
    analytic_mse, assemble_global, empirical_mse, highres_empirical_mse, highres_per_ue_mse,
    HighResStats,
};
use cfran_core::frontend::FrontEndStats;
use cfran_core::optimizer::{
    combiner_trace_objective, highres_combiner_opt, highres_pilot_opt, init_design,
    refresh_bussgang, run_alternating_design, OptimizerConfig, Scheme,
};
use cfran_core::rng::{mix_seed, substream};
use cfran_core::scenario::{sample_geometry, ChannelStats, SystemConfig};
use cfran_core::{exec, Error as CoreError};

pub use config::{parse_config, parse_config_str, AdcMode, ExperimentSpec, SweepAxis, SweepSpec};
pub use csv::{emit_csv, parse_csv, render_csv, CsvRow};
pub use error::{HarnessError, Result};

// Substream tags: geometry, initial design, empirical trials, combiner search.
const TAG_GEOMETRY: u64 = 1;
const TAG_DESIGN: u64 = 2;
const TAG_EMPIRICAL: u64 = 3;
const TAG_HR_COMBINER: u64 = 4;

/// One (scheme, sweep point, placement) result.
#[derive(Debug, Clone)]
pub struct ResultRecord {
    pub scheme: Scheme,
    pub sweep_name: String,
    pub sweep_value: f64,
    pub placement: usize,
    /// Record seed; the record is reproducible from this value alone.
    pub seed: u64,
    pub sum_mse_analytic: f64,
    pub sum_mse_empirical: Option<f64>,
    pub per_ue_mse: Vec<f64>,
    pub iterations: usize,
    /// Wall-clock time of this record's computation; informational only and
    /// excluded from reproducibility comparisons.
    pub wall_time_ms: f64,
}

impl ResultRecord {
    /// Equality of everything reproducible (all fields except wall time).
    pub fn results_equal(&self, other: &ResultRecord) -> bool {
        self.scheme == other.scheme
            && self.sweep_name == other.sweep_name
            && self.sweep_value == other.sweep_value
            && self.placement == other.placement
            && self.seed == other.seed
            && self.sum_mse_analytic == other.sum_mse_analytic
            && self.sum_mse_empirical == other.sum_mse_empirical
            && self.per_ue_mse == other.per_ue_mse
            && self.iterations == other.iterations
    }
}

/// Record seed for (base seed, sweep value, placement index).
pub fn record_seed(base_seed: u64, sweep_value: f64, placement: usize) -> u64 {
    mix_seed(&[base_seed, sweep_value.to_bits(), placement as u64])
}

/// Apply a sweep value to the base configuration.
fn apply_sweep(
    spec: &ExperimentSpec,
    value: f64,
) -> std::result::Result<(SystemConfig, OptimizerConfig), String> {
    let mut cfg = spec.base.clone();
    let mut opt = spec.optimizer.clone();
    match spec.sweep.axis {
        SweepAxis::Iterations => {
            if value.fract() != 0.0 || value < 0.0 {
                return Err(format!("iteration count {value} is not a nonnegative integer"));
            }
            opt.max_outer_iters = value as usize;
        }
        SweepAxis::LChains => {
            if value.fract() != 0.0 || value < 1.0 {
                return Err(format!("RF-chain count {value} is not a positive integer"));
            }
            let l = value as usize;
            if l > cfg.m_antennas {
                return Err(format!(
                    "L = {l} exceeds M = {} antennas",
                    cfg.m_antennas
                ));
            }
            cfg.l_chains = l;
        }
        SweepAxis::Tau => {
            if value.fract() != 0.0 || value < 1.0 {
                return Err(format!("pilot length {value} is not a positive integer"));
            }
            cfg.tau = value as usize;
        }
        SweepAxis::SnrDb => {
            if !value.is_finite() {
                return Err(format!("SNR {value} is not finite"));
            }
            cfg = cfg.with_snr_db(value);
        }
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok((cfg, opt))
}

/// Run one fully seeded (sweep value, placement) point.
///
/// Geometry is seeded by (base seed, placement) only, so every sweep value
/// of a placement index shares the same UE/RRH drop; that pairs the points
/// of a sweep and keeps cross-value trends out of the placement noise. The
/// design and Monte-Carlo streams hash the sweep value in as well.
pub fn run_point(spec: &ExperimentSpec, sweep_value: f64, placement: usize) -> Result<ResultRecord> {
    let started = Instant::now();
    let (cfg, opt) =
        apply_sweep(spec, sweep_value).map_err(HarnessError::Config)?;
    let seed = record_seed(spec.base.rng_seed, sweep_value, placement);

    let placement_seed = mix_seed(&[spec.base.rng_seed, placement as u64]);
    let geometry = sample_geometry(&cfg, &mut substream(placement_seed, TAG_GEOMETRY));
    let stats = ChannelStats::from_geometry(&cfg, &geometry)?;

    let (per_ue, sum_analytic, empirical, iterations) = match spec.adc {
        AdcMode::OneBit => run_one_bit_point(spec, &cfg, &opt, &stats, seed)?,
        AdcMode::HighResNoiseless => run_highres_point(spec, &cfg, &opt, &stats, seed)?,
    };

    for &v in &per_ue {
        if v < 0.0 {
            return Err(HarnessError::Core(CoreError::InvalidCovariance(format!(
                "negative per-UE MSE {v}"
            ))));
        }
    }

    Ok(ResultRecord {
        scheme: spec.scheme,
        sweep_name: spec.sweep.axis.name().to_string(),
        sweep_value,
        placement,
        seed,
        sum_mse_analytic: sum_analytic,
        sum_mse_empirical: empirical,
        per_ue_mse: per_ue,
        iterations,
        wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}

fn run_one_bit_point(
    spec: &ExperimentSpec,
    cfg: &SystemConfig,
    opt: &OptimizerConfig,
    stats: &ChannelStats,
    seed: u64,
) -> Result<(Vec<f64>, f64, Option<f64>, usize)> {
    let trace = run_alternating_design(cfg, stats, opt, spec.scheme, &mut substream(seed, TAG_DESIGN))?;
    trace.pilots.validate()?;
    trace.combiners.validate()?;

    // Re-derive the final model so the per-UE split matches the recorded sum.
    let states = refresh_bussgang(&trace.pilots, &trace.combiners, stats, cfg.noise_var)?;
    let fe = FrontEndStats::compute(&trace.pilots, &trace.combiners, stats, cfg.noise_var)?;
    let model = assemble_global(stats, &fe, &states)?;
    let (per_ue, sum) = analytic_mse(&model, &trace.filters);

    let empirical = if spec.n_channel_trials > 0 {
        Some(
            empirical_mse(
                &trace.pilots,
                &trace.combiners,
                &trace.filters,
                stats,
                cfg.noise_var,
                spec.n_channel_trials,
                mix_seed(&[seed, TAG_EMPIRICAL]),
            )
            .sum(),
        )
    } else {
        None
    };
    Ok((per_ue, sum, empirical, trace.iterations))
}

fn run_highres_point(
    spec: &ExperimentSpec,
    cfg: &SystemConfig,
    opt: &OptimizerConfig,
    stats: &ChannelStats,
    seed: u64,
) -> Result<(Vec<f64>, f64, Option<f64>, usize)> {
    let (mut pilots, mut combiners) = init_design(cfg, &mut substream(seed, TAG_DESIGN));
    if spec.scheme.optimizes_combiners() {
        let mut rng = substream(seed, TAG_HR_COMBINER);
        for i in 0..cfg.n_rrh {
            combiners.w[i] = highres_combiner_opt(&stats.q_corr[i], cfg.l_chains, opt, &mut rng)?;
        }
    }
    if spec.scheme.optimizes_pilots() {
        let weights = (0..cfg.n_rrh)
            .map(|i| combiner_trace_objective(&stats.q_corr[i], &combiners.w[i]))
            .collect::<cfran_core::Result<Vec<f64>>>()?;
        pilots = highres_pilot_opt(stats, &weights, &pilots.power_budget, cfg.tau, opt)?;
    }
    pilots.validate()?;
    combiners.validate()?;

    let hr = HighResStats::compute(stats, &pilots, &combiners)?;
    let per_ue = highres_per_ue_mse(&hr)?;
    let sum = per_ue.iter().sum();
    let empirical = if spec.n_channel_trials > 0 {
        Some(
            highres_empirical_mse(
                &hr,
                stats,
                spec.n_channel_trials,
                mix_seed(&[seed, TAG_EMPIRICAL]),
            )?
            .sum(),
        )
    } else {
        None
    };
    Ok((per_ue, sum, empirical, 0))
}

/// Run the full sweep: every feasible (sweep value × placement) point.
/// Infeasible sweep points are skipped with a logged reason.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<Vec<ResultRecord>> {
    spec.validate()?;
    let mut tasks: Vec<(f64, usize)> = Vec::new();
    for &value in &spec.sweep.values {
        match apply_sweep(spec, value) {
            Ok(_) => tasks.extend((0..spec.n_placements).map(|p| (value, p))),
            Err(reason) => {
                log::warn!(
                    "skipping sweep point {}={value}: {reason}",
                    spec.sweep.axis.name()
                );
            }
        }
    }
    let outcomes = exec::map_indexed(tasks.len(), |idx| {
        let (value, placement) = tasks[idx];
        run_point(spec, value, placement)
    });
    outcomes.into_iter().collect()
}
