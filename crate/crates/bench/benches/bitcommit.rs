use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use steerlab_core::bitcommit::{dense_honest_marginal, simulate, Mode, ProtocolConfig};

fn cfg(mode: Mode, b: u8, b2: u8, sites: usize, trials: usize) -> ProtocolConfig {
    ProtocolConfig {
        sites,
        trials,
        seed: 1,
        mode,
        committed_bit: b,
        unveiled_bit: b2,
        record_trials: false,
        dense: false,
    }
}

fn simulation(c: &mut Criterion) {
    let mut g = c.benchmark_group("simulate");
    g.sample_size(10);
    let cheat = cfg(Mode::Cheat, 0, 1, 8, 1000);
    g.bench_function("cheat/N=8/T=1000", |b| b.iter(|| simulate(black_box(&cheat)).unwrap()));
    let honest = cfg(Mode::Honest, 0, 1, 4, 4000);
    g.bench_function("honest/N=4/T=4000", |b| b.iter(|| simulate(black_box(&honest)).unwrap()));
    g.finish();
}

fn dense(c: &mut Criterion) {
    let mut g = c.benchmark_group("dense_marginal");
    for n in [3usize, 5] {
        g.bench_function(format!("N={n}"), |b| b.iter(|| dense_honest_marginal(0, black_box(n)).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, simulation, dense);
criterion_main!(benches);
