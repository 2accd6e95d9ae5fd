//! Benchmarks for the hot paths of the solver: hybrid smoothing, residual
//! evaluation, ghost exchange, and full cycles of each type.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use faultmg::grid::{build_hierarchy, BoundaryData};
use faultmg::partition::{build_partition, Partition};
use faultmg::solver::{CycleType, Solver, SolverConfig};
use faultmg::state::{DistField, SimState};

fn setup(n0: usize, levels: usize, counts: [usize; 3]) -> Partition {
    let hierarchy = build_hierarchy(n0, levels, BoundaryData::harmonic()).unwrap();
    build_partition(&hierarchy, counts).unwrap()
}

fn bench_smooth(c: &mut Criterion) {
    let part = setup(4, 3, [2, 2, 2]);
    c.bench_function("smooth_sweep_32", |b| {
        let mut solver = Solver::new(&part, SolverConfig::default()).unwrap();
        let mut state = SimState::new(&part);
        b.iter(|| solver.smooth(&mut state, part.num_levels - 1, 1).unwrap());
        std::hint::black_box(&state);
    });
}

fn bench_residual(c: &mut Criterion) {
    let part = setup(4, 3, [2, 2, 2]);
    c.bench_function("residual_norm_32", |b| {
        let mut solver = Solver::new(&part, SolverConfig::default()).unwrap();
        let state = SimState::new(&part);
        b.iter(|| std::hint::black_box(solver.residual_norm(&state, part.num_levels - 1).unwrap()));
    });
}

fn bench_exchange(c: &mut Criterion) {
    let part = setup(4, 3, [2, 2, 2]);
    let alive = vec![true; 8];
    c.bench_function("ghost_exchange_32", |b| {
        let mut field = DistField::zeros(&part, part.num_levels - 1);
        b.iter(|| field.exchange(&part, &alive).unwrap());
    });
}

fn bench_cycles(c: &mut Criterion) {
    let part = setup(4, 3, [2, 2, 2]);
    let mut group = c.benchmark_group("cycle_32");
    for ty in [CycleType::V, CycleType::W, CycleType::F] {
        group.bench_function(format!("{ty}"), |b| {
            let mut solver = Solver::new(&part, SolverConfig::default()).unwrap();
            b.iter_batched(
                || SimState::new(&part),
                |mut state| {
                    solver.cycle_at(&mut state, part.num_levels - 1, ty).unwrap();
                    state
                },
                BatchSize::LargeInput,
            );
        });
    }
    group.finish();
}

criterion_group!(benches, bench_smooth, bench_residual, bench_exchange, bench_cycles);
criterion_main!(benches);
