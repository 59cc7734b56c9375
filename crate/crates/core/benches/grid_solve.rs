//! Sequential against rayon-parallel Newton solves of the double-wave
//! fixture, plus the finite-difference verification sweep.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use kwave::solver::{double_wave_solver, Grid};
use kwave::verify::{field_jacobians, FD_STEP};
use kwave::Exec;

fn grid_solve(c: &mut Criterion) {
    let mut solver = double_wave_solver();
    let mut group = c.benchmark_group("grid_solve");
    group.sample_size(10);
    for n in [8usize, 16] {
        let grid = Grid::from_spec(&format!("t=1:3:{n}, x=1:3:{n}, y=0.2:0.9:{n}"), &solver.independent).unwrap();
        for exec in [Exec::Sequential, Exec::Parallel] {
            solver.cfg.exec = exec;
            group.bench_with_input(BenchmarkId::new(format!("{exec:?}"), n * n * n), &grid, |b, g| {
                b.iter(|| solver.solve(g).unwrap())
            });
        }
    }
    group.finish();
}

fn jacobians(c: &mut Criterion) {
    let solver = double_wave_solver();
    let grid = Grid::from_spec("t=1:3:10, x=1:3:10, y=0.2:0.9:10", &solver.independent).unwrap();
    let field = solver.solve(&grid).unwrap();
    let mut group = c.benchmark_group("field_jacobians");
    group.sample_size(10);
    for exec in [Exec::Sequential, Exec::Parallel] {
        group.bench_function(format!("{exec:?}"), |b| b.iter(|| field_jacobians(&solver, &field, FD_STEP, exec)));
    }
    group.finish();
}

criterion_group!(benches, grid_solve, jacobians);
criterion_main!(benches);
