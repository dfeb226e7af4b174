use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use crossflux_bench::channel_fixture;
use crossflux_core::linalg::LuPattern;
use crossflux_core::{Assembler, NewtonOptions, SparseLu, StepSolver};

fn assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("assembly");
    for level in [0, 1] {
        let f = channel_fixture(level);
        let cfg = &f.problem.config;
        let asm = Assembler::new(&f.mesh, cfg.num_species());
        let x = f.problem.initial.to_unknowns();
        let mut jac = asm.pattern();
        group.bench_with_input(BenchmarkId::new("residual", level), &level, |b, _| {
            b.iter(|| asm.residual(&x, &x, f.dt, &f.mesh, cfg, &f.problem.bc))
        });
        group.bench_with_input(BenchmarkId::new("residual_and_jacobian", level), &level, |b, _| {
            b.iter(|| asm.residual_and_jacobian(&x, &x, f.dt, &f.mesh, cfg, &f.problem.bc, &mut jac))
        });
    }
    group.finish();
}

fn factorization(c: &mut Criterion) {
    let mut group = c.benchmark_group("lu");
    for level in [0, 1] {
        let f = channel_fixture(level);
        let cfg = &f.problem.config;
        let asm = Assembler::new(&f.mesh, cfg.num_species());
        let x = f.problem.initial.to_unknowns();
        let mut jac = asm.pattern();
        let r = asm.residual_and_jacobian(&x, &x, f.dt, &f.mesh, cfg, &f.problem.bc, &mut jac);
        let pattern = LuPattern::analyze(&jac).unwrap();
        group.bench_with_input(BenchmarkId::new("numeric", level), &level, |b, _| {
            b.iter(|| SparseLu::factorize_with(&jac, &pattern).unwrap())
        });
        let lu = SparseLu::factorize_with(&jac, &pattern).unwrap();
        group.bench_with_input(BenchmarkId::new("solve", level), &level, |b, _| b.iter(|| lu.solve(&r).unwrap()));
    }
    group.finish();
}

fn time_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("time_step");
    group.sample_size(10);
    for (level, reuse) in [(0, false), (0, true), (1, true)] {
        let f = channel_fixture(level);
        let opts = NewtonOptions { jacobian_reuse: reuse, ..Default::default() };
        let mut solver = StepSolver::new(&f.mesh, &f.problem.config, &f.problem.bc, opts).unwrap();
        let name = if reuse { "chord" } else { "newton" };
        group.bench_with_input(BenchmarkId::new(name, level), &level, |b, _| {
            b.iter(|| solver.solve(&f.problem.initial, f.dt).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, assembly, factorization, time_step);
criterion_main!(benches);
