use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use wavedg::{
    assemble_mass, assemble_stiffness, run, solve, step_dg0, step_dg1, DgScheme, FeSpace,
    TimePartition,
};
use wavedg_bench::fixture;

fn bench_assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("assembly");
    for nx in [128usize, 512] {
        let space = FeSpace::uniform(0.0, std::f64::consts::PI, nx).unwrap();
        group.bench_with_input(BenchmarkId::new("mass", nx), &space, |b, s| {
            b.iter(|| assemble_mass(black_box(s)))
        });
        group.bench_with_input(BenchmarkId::new("stiffness", nx), &space, |b, s| {
            b.iter(|| assemble_stiffness(black_box(s)))
        });
    }
    group.finish();
}

fn bench_steps(c: &mut Criterion) {
    let mut group = c.benchmark_group("step");
    for nx in [128usize, 512] {
        let f = fixture(nx);
        let zero = vec![0.0; f.space.n_dof()];
        group.bench_with_input(BenchmarkId::new("dg0", nx), &f, |b, f| {
            b.iter(|| step_dg0(&f.mass, &f.stiffness, &f.state, 0.05, black_box(&zero)))
        });
        group.bench_with_input(BenchmarkId::new("dg1", nx), &f, |b, f| {
            b.iter(|| {
                step_dg1(
                    &f.mass,
                    &f.stiffness,
                    &f.state,
                    0.05,
                    (black_box(&zero), black_box(&zero)),
                )
            })
        });
    }
    group.finish();
}

fn bench_solve(c: &mut Criterion) {
    let f = fixture(256);
    let b_vec: Vec<f64> = (0..f.space.n_dof()).map(|i| (i as f64 * 0.1).sin()).collect();
    c.bench_function("solve/stiffness_256", |b| {
        b.iter(|| solve(&f.stiffness, black_box(&b_vec), true))
    });
}

fn bench_trajectory(c: &mut Criterion) {
    // Whole-march cost with factorization reuse on a uniform partition.
    let f = fixture(128);
    let part = TimePartition::uniform(1.0, 32).unwrap();
    c.bench_function("run/dg1_nx128_nt32", |b| {
        b.iter(|| {
            run(
                DgScheme::Dg1,
                &f.mass,
                &f.stiffness,
                &part,
                f.state.clone(),
                None,
            )
        })
    });
}

criterion_group!(benches, bench_assembly, bench_steps, bench_solve, bench_trajectory);
criterion_main!(benches);
