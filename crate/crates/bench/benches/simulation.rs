//! Hot-path benchmarks: single-round resolution, full defender runs at the
//! benchmark scale, and the exhaustive abstraction check.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use mpmab_core::defense::{Resync, ResyncParams};
use mpmab_core::env::{
    resolve_round, stream, AgentAction, BanditInstance, RewardKind, SensingMode, STREAM_ENV,
};
use mpmab_core::metagame::verify_bound;
use mpmab_core::sim::{run_game, Agent};
use std::hint::black_box;

fn instance(horizon: u64) -> BanditInstance {
    BanditInstance {
        means: vec![0.95, 0.85, 0.75, 0.65, 0.55, 0.45, 0.35, 0.25, 0.15, 0.05],
        reward_kind: RewardKind::Bernoulli,
        defenders: 5,
        attackers: 2,
        horizon,
        sensing: SensingMode::NonDistinguishable,
    }
}

fn bench_resolve_round(c: &mut Criterion) {
    let inst = instance(1000);
    let actions = [
        AgentAction::Pull(1),
        AgentAction::Pull(2),
        AgentAction::Pull(3),
        AgentAction::Pull(3),
        AgentAction::Pull(5),
        AgentAction::Pull(2),
        AgentAction::NoPull,
    ];
    let rewards = [1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0];
    c.bench_function("resolve_round k10 p7", |b| {
        b.iter(|| resolve_round(black_box(&actions), &inst, black_box(&rewards)).unwrap())
    });
}

fn bench_full_run(c: &mut Criterion) {
    let horizon = 20_000u64;
    let inst = instance(horizon);
    let params = ResyncParams::new(10, 5, horizon, 3000).unwrap();
    c.bench_function("resync run T=20k", |b| {
        b.iter_batched(
            || {
                let team: Vec<Resync> =
                    (1..=5).map(|j| Resync::new(params, j).unwrap()).collect();
                (team, stream(1, STREAM_ENV))
            },
            |(mut team, mut env_rng)| {
                let mut defs: Vec<&mut dyn Agent> =
                    team.iter_mut().map(|d| d as &mut dyn Agent).collect();
                let mut silent1 = mpmab_core::attack::Silent;
                let mut silent2 = mpmab_core::attack::Silent;
                let mut atts: Vec<&mut dyn Agent> = vec![&mut silent1, &mut silent2];
                run_game(&inst, &mut defs, &mut atts, &mut env_rng, false).unwrap()
            },
            BatchSize::LargeInput,
        )
    });
}

fn bench_verify_bound(c: &mut Criterion) {
    c.bench_function("verify_bound horizon 10", |b| {
        b.iter(|| verify_bound(black_box(10), None))
    });
}

criterion_group!(benches, bench_resolve_round, bench_full_run, bench_verify_bound);
criterion_main!(benches);
