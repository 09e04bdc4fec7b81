use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use swarmbench::bench::{run_trial, AlgorithmId, ScenarioConfig};
use swarmbench::coverage::{CoverageGrid, CoverageParams};
use swarmbench::dmarrt::{grow_rrt, DmaRrtParams, PlanningContext};
use swarmbench::sim::{load_map, spawn_robots, MapId, SimParams, WorldState};
use swarmbench::swarm::{qp_solve_2d, HalfPlane};
use swarmbench::vec2;

fn qp(c: &mut Criterion) {
    // a ring of neighbor constraints around the origin
    let constraints: Vec<HalfPlane> = (0..12)
        .map(|k| {
            let a = (k as f64) * std::f64::consts::TAU / 12.0;
            HalfPlane::new(vec2(a.cos(), a.sin()), 0.2)
        })
        .collect();
    c.bench_function("qp_solve_2d/12", |b| b.iter(|| qp_solve_2d(black_box(vec2(0.5, 0.1)), black_box(&constraints))));
}

fn accrual(c: &mut Criterion) {
    let params = CoverageParams::default();
    let positions: Vec<_> = (0..16).map(|i| vec2(1.0 + i as f64, 10.0)).collect();
    c.bench_function("coverage_accrue/16", |b| {
        b.iter_batched(
            || CoverageGrid::new(20.0, 20.0, &params),
            |mut g| {
                g.accrue(black_box(&positions), 0.02, &params);
                g
            },
            criterion::BatchSize::SmallInput,
        )
    });
}

fn rrt(c: &mut Criterion) {
    let map = load_map(MapId::Concave, 1.0).unwrap();
    let params = DmaRrtParams::default();
    let ctx = PlanningContext {
        map: &map,
        others: &[],
        collision_radius: 0.1,
        v_max: 0.5,
        params: &params,
    };
    let start = map.spawn_region.to_polygon().vertices[0] + vec2(0.3, 0.3);
    c.bench_function("grow_rrt/concave", |b| {
        b.iter(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            grow_rrt(black_box(start), 0.0, &map.goal, &ctx, &mut rng).unwrap()
        })
    });
}

fn physics(c: &mut Criterion) {
    let map = Arc::new(load_map(MapId::Uniform, 1.0).unwrap());
    let sim = SimParams::default();
    let robots = spawn_robots(&map, 16, &sim, 1).unwrap();
    let controls = vec![vec2(0.4, 0.3); 16];
    c.bench_function("world_step/16", |b| {
        b.iter_batched(
            || WorldState::new(Arc::clone(&map), robots.clone(), sim.v_max, 1),
            |mut w| {
                w.step(&controls, sim.dt).unwrap();
                w
            },
            criterion::BatchSize::SmallInput,
        )
    });
}

fn trial(c: &mut Criterion) {
    let mut group = c.benchmark_group("trial");
    group.sample_size(10);
    for algo in [AlgorithmId::Pbc, AlgorithmId::Idc] {
        let mut cfg = ScenarioConfig::new(MapId::EmptyDense, algo, 4, 1).unwrap();
        cfg.cutoff_s = 60.0;
        group.bench_function(algo.as_str(), |b| b.iter(|| run_trial(black_box(&cfg)).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, qp, accrual, rrt, physics, trial);
criterion_main!(benches);
