//! Config-format contract: defaults, rejection messages, and the named
//! experiment configurations.

use cfran_core::optimizer::Scheme;
use cfran_harness::{parse_config_str, AdcMode, HarnessError, SweepAxis};

const MINIMAL: &str = "
system.n_ue = 6
system.n_rrh = 2
system.m_antennas = 4
system.l_chains = 2
system.tau = 2
";

#[test]
fn minimal_config_gets_documented_defaults() {
    let spec = parse_config_str(MINIMAL).unwrap();
    assert_eq!(spec.base.power_per_ue, 1.0);
    assert_eq!(spec.base.snr_db, 10.0);
    assert!((spec.base.noise_var - 0.1).abs() < 1e-12);
    assert_eq!(spec.base.area_side_m, 100.0);
    assert_eq!(spec.base.d_over_lambda, 0.5);
    assert_eq!(spec.base.delta_spread, 25.0);
    assert_eq!(spec.base.rng_seed, 1);
    assert_eq!(spec.optimizer.max_outer_iters, 30);
    assert_eq!(spec.optimizer.gamma0, 1.0);
    assert_eq!(spec.optimizer.gamma_decay, 0.05);
    assert_eq!(spec.optimizer.inner_max_iters, 200);
    assert_eq!(spec.optimizer.inner_tol, 1e-6);
    assert_eq!(spec.optimizer.outer_tol, 1e-4);
    assert_eq!(spec.scheme, Scheme::Joint);
    assert_eq!(spec.adc, AdcMode::OneBit);
    assert_eq!(spec.n_placements, 50);
    assert_eq!(spec.n_channel_trials, 0);
    assert_eq!(spec.sweep.axis, SweepAxis::Iterations);
    assert_eq!(spec.sweep.values, vec![30.0]);
}

#[test]
fn chain_count_over_antennas_names_both_keys() {
    let src = MINIMAL.replace("system.l_chains = 2", "system.l_chains = 5");
    let err = parse_config_str(&src).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("system.l_chains"), "message: {msg}");
    assert!(msg.contains("system.m_antennas"), "message: {msg}");
    assert!(matches!(err, HarnessError::Config(_)));
}

#[test]
fn unknown_key_is_rejected_by_name() {
    let src = format!("{MINIMAL}\nsystem.bogus_knob = 3\n");
    let msg = parse_config_str(&src).unwrap_err().to_string();
    assert!(msg.contains("system.bogus_knob"), "message: {msg}");
}

#[test]
fn missing_required_key_is_named() {
    let src = MINIMAL.replace("system.tau = 2\n", "");
    let msg = parse_config_str(&src).unwrap_err().to_string();
    assert!(msg.contains("system.tau"), "message: {msg}");
}

#[test]
fn malformed_value_is_named() {
    let src = MINIMAL.replace("system.tau = 2", "system.tau = two");
    let msg = parse_config_str(&src).unwrap_err().to_string();
    assert!(msg.contains("system.tau"), "message: {msg}");

    let src = format!("{MINIMAL}\nsweep.values = 1,x,3\n");
    let msg = parse_config_str(&src).unwrap_err().to_string();
    assert!(msg.contains("sweep.values"), "message: {msg}");
}

#[test]
fn snr_figure_config_parses() {
    let src = "
system.n_ue = 6
system.n_rrh = 2
system.m_antennas = 10
system.l_chains = 2
system.tau = 3
scheme = joint
sweep.axis = snr_db
sweep.values = -10,-5,0,5,10,15,20
";
    let spec = parse_config_str(src).unwrap();
    assert_eq!(spec.base.m_antennas, 10);
    assert_eq!(spec.base.l_chains, 2);
    assert_eq!(spec.base.tau, 3);
    assert_eq!(spec.sweep.values.len(), 7);
}

#[test]
fn comments_and_overrides_parse() {
    let src = "
# experiment
system.n_ue = 3   # users
system.n_rrh = 1
system.m_antennas = 2
system.l_chains = 1
system.tau = 2
scheme = combiner-opt
adc = high-res-noiseless
n_placements = 7
n_channel_trials = 11
optimizer.gamma0 = 0.9
sweep.axis = tau
sweep.values = 1, 2, 3
system.rng_seed = 99
";
    let spec = parse_config_str(src).unwrap();
    assert_eq!(spec.scheme, Scheme::CombinerOpt);
    assert_eq!(spec.adc, AdcMode::HighResNoiseless);
    assert_eq!(spec.n_placements, 7);
    assert_eq!(spec.n_channel_trials, 11);
    assert_eq!(spec.optimizer.gamma0, 0.9);
    assert_eq!(spec.sweep.axis, SweepAxis::Tau);
    assert_eq!(spec.sweep.values, vec![1.0, 2.0, 3.0]);
    assert_eq!(spec.base.rng_seed, 99);
}

#[test]
fn bad_sweep_values_rejected() {
    let src = format!("{MINIMAL}\nsweep.axis = tau\nsweep.values = 1.5,2\n");
    assert!(parse_config_str(&src).is_err());
    let src = format!("{MINIMAL}\nsweep.axis = l_chains\nsweep.values = 0\n");
    assert!(parse_config_str(&src).is_err());
}

#[test]
fn duplicate_key_rejected() {
    let src = format!("{MINIMAL}\nsystem.n_ue = 7\n");
    let msg = parse_config_str(&src).unwrap_err().to_string();
    assert!(msg.contains("duplicate"), "message: {msg}");
}
