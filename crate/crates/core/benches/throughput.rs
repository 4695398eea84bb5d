//! Seed-level throughput: the same batch of tabular decision-making runs
//! through `par::map` and through `par::map_sequential`.
//!
//! `cargo bench -p admiral-core` compares both; with
//! `--no-default-features` the two paths are identical.

use std::sync::Arc;

use admiral::advisor::{AdvisorPanel, Grade, MazeAdvisor};
use admiral::env::{GridMazeEnv, GridMazeLayout, ObservationMode};
use admiral::par;
use admiral::rng::RunRngs;
use admiral::tabular::{train_dm, DmConfig, Schedule};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

const EPISODES: usize = 200;

fn one_run(layout: &Arc<GridMazeLayout>, seed: u64) -> f64 {
    let mut env = GridMazeEnv::from_shared(Arc::clone(layout), ObservationMode::Joint);
    let config = DmConfig {
        alpha: 0.1,
        beta: 0.9,
        epsilon: Schedule::new(0.1, 0.0, EPISODES).unwrap(),
        epsilon_prime: Schedule::new(0.8, 0.0, EPISODES).unwrap(),
        q_init: 0.0,
        early_stop: None,
        exploring_starts: false,
    };
    let advisor = MazeAdvisor::new(Arc::clone(layout), Grade::BEST);
    let mut rngs = RunRngs::from_seed(seed);
    train_dm(&mut env, AdvisorPanel::shared(Box::new(advisor), 2), &config, EPISODES, &mut rngs)
        .unwrap()
        .cumulative_reward(0)
}

fn seeds(c: &mut Criterion) {
    let layout = Arc::new(GridMazeLayout::default());
    let mut group = c.benchmark_group("dm_seed_batch");
    group.sample_size(10);
    for n in [4u64, 16] {
        group.throughput(Throughput::Elements(n));
        group.bench_with_input(BenchmarkId::new("par_map", n), &n, |b, &n| {
            b.iter(|| par::map((0..n).collect(), |s| one_run(&layout, s)))
        });
        group.bench_with_input(BenchmarkId::new("sequential", n), &n, |b, &n| {
            b.iter(|| par::map_sequential((0..n).collect(), |s| one_run(&layout, s)))
        });
    }
    group.finish();
}

criterion_group!(benches, seeds);
criterion_main!(benches);
