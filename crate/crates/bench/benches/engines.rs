use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use imitation_core::complete::{run_complete, step_aggregate, step_per_vertex, CompleteRun};
use imitation_core::cycle::{run_to_absorption, step, CycleDynamics};
use imitation_core::oracle::{complete_chain, solve_absorption};
use imitation_core::sweep::{run_cell, Initial, SweepSpec, Topology};
use imitation_core::{CompleteState, CounterRng, GameParams, InitialSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cycle(c: &mut Criterion) {
    let p = GameParams::new(0.2, 0.9).unwrap();
    let mut g = c.benchmark_group("cycle_step");
    for n in [100usize, 10_000] {
        let s = InitialSpec::new(n, 0.5, 1).unwrap().sample_seeded();
        let rng = CounterRng::new(2);
        g.bench_with_input(BenchmarkId::new("fresh", n), &s, |b, s| {
            b.iter(|| step(black_box(s), &p, &rng))
        });
        g.bench_with_input(BenchmarkId::new("in_place", n), &s, |b, s| {
            let mut dynamics = CycleDynamics::new(&p);
            let mut cur = s.clone();
            b.iter(|| dynamics.advance(&mut cur, &rng))
        });
    }
    g.finish();

    let a = GameParams::new(-0.5, 1.8).unwrap();
    let s = InitialSpec::new(1000, 0.5, 3).unwrap().sample_seeded();
    c.bench_function("cycle_absorb_region_a_n1000", |b| {
        let mut seed = 0;
        b.iter(|| {
            seed += 1;
            run_to_absorption(&s, &a, 1_000_000, &CounterRng::new(seed))
        })
    });
}

fn complete(c: &mut Criterion) {
    let p = GameParams::new(0.5, 2.0).unwrap();
    let s = CompleteState::new(1000, 400).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    c.bench_function("complete_step_aggregate_n1000", |b| {
        b.iter(|| step_aggregate(black_box(&s), &p, &mut rng))
    });
    c.bench_function("complete_step_per_vertex_n1000", |b| {
        b.iter(|| step_per_vertex(black_box(&s), &p, &mut rng))
    });
    let small = CompleteState::new(12, 3).unwrap();
    let opts = CompleteRun {
        max_generations: 100_000,
        band_eps: None,
        skip_idle: true,
    };
    c.bench_function("complete_skip_idle_n12_1e5_gens", |b| {
        b.iter(|| run_complete(&small, &p, opts, &mut rng))
    });
}

fn oracle(c: &mut Criterion) {
    let p = GameParams::new(0.2, 0.9).unwrap();
    let mut g = c.benchmark_group("oracle");
    g.sample_size(10);
    g.bench_function("cycle_n10", |b| {
        b.iter(|| solve_absorption(10, &p).unwrap())
    });
    g.bench_function("complete_n200", |b| {
        b.iter(|| complete_chain(200, &p).unwrap())
    });
    g.finish();
}

fn sweep(c: &mut Criterion) {
    let mut spec = SweepSpec::square(Topology::Cycle, 100, Initial::CoopProb(0.5), 20);
    spec.reps = 10;
    let mut g = c.benchmark_group("sweep");
    g.sample_size(10);
    g.bench_function("cycle_cell_10_reps", |b| {
        b.iter(|| run_cell(&spec, 12, 7).unwrap())
    });
    g.finish();
}

criterion_group!(benches, cycle, complete, oracle, sweep);
criterion_main!(benches);
