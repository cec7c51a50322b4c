//! Rayon-vs-sequential comparison on the two data-parallel hot paths: the
//! Monte-Carlo MSE loop and a batch of independent optimizer runs.
//!
//! With `--no-default-features` only the sequential benches compile.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

#[cfg(feature = "parallel")]
use cfran_core::estimation::empirical_mse;
use cfran_core::estimation::{
    assemble_global, empirical_mse_seq, mmse_filter, FilterSet,
};
use cfran_core::exec;
use cfran_core::frontend::{CombinerSet, FrontEndStats, PilotSet};
use cfran_core::optimizer::{init_design, refresh_bussgang, run_alternating_design, OptimizerConfig, Scheme};
use cfran_core::rng::{mix_seed, substream};
use cfran_core::scenario::{sample_geometry, ChannelStats, SystemConfig};

struct Setup {
    cfg: SystemConfig,
    stats: ChannelStats,
    pilots: PilotSet,
    combiners: CombinerSet,
    filters: FilterSet,
}

fn setup() -> Setup {
    let cfg = SystemConfig::new(6, 2, 4, 2, 2).with_seed(11);
    let geo = sample_geometry(&cfg, &mut substream(11, 0));
    let stats = ChannelStats::from_geometry(&cfg, &geo).unwrap();
    let (pilots, combiners) = init_design(&cfg, &mut substream(11, 1));
    let states = refresh_bussgang(&pilots, &combiners, &stats, cfg.noise_var).unwrap();
    let fe = FrontEndStats::compute(&pilots, &combiners, &stats, cfg.noise_var).unwrap();
    let model = assemble_global(&stats, &fe, &states).unwrap();
    let filters = mmse_filter(&model).unwrap();
    Setup {
        cfg,
        stats,
        pilots,
        combiners,
        filters,
    }
}

fn bench_empirical_mse(c: &mut Criterion) {
    let s = setup();
    let trials = 2_000usize;
    let mut group = c.benchmark_group("empirical_mse");
    group.sample_size(10);
    group.bench_function("seq", |b| {
        b.iter(|| {
            black_box(empirical_mse_seq(
                &s.pilots,
                &s.combiners,
                &s.filters,
                &s.stats,
                s.cfg.noise_var,
                trials,
                99,
            ))
        })
    });
    #[cfg(feature = "parallel")]
    group.bench_function("par", |b| {
        b.iter(|| {
            black_box(empirical_mse(
                &s.pilots,
                &s.combiners,
                &s.filters,
                &s.stats,
                s.cfg.noise_var,
                trials,
                99,
            ))
        })
    });
    group.finish();
}

fn bench_placement_batch(c: &mut Criterion) {
    let cfg = SystemConfig::new(6, 2, 4, 2, 2).with_seed(13);
    let opt = OptimizerConfig::default();
    let placements = 8usize;
    let run_one = |p: usize| {
        let geo = sample_geometry(&cfg, &mut substream(mix_seed(&[13, p as u64]), 0));
        let stats = ChannelStats::from_geometry(&cfg, &geo).unwrap();
        run_alternating_design(&cfg, &stats, &opt, Scheme::Joint, &mut substream(13, p as u64))
            .unwrap()
            .final_sum_mse()
    };
    let mut group = c.benchmark_group("placement_batch");
    group.sample_size(10);
    group.bench_function("seq", |b| {
        b.iter(|| black_box(exec::map_indexed_seq(placements, run_one)))
    });
    #[cfg(feature = "parallel")]
    group.bench_function("par", |b| {
        b.iter(|| black_box(exec::map_indexed_par(placements, run_one)))
    });
    group.finish();
}

criterion_group!(benches, bench_empirical_mse, bench_placement_batch);
criterion_main!(benches);
