use criterion::{black_box, criterion_group, criterion_main, Criterion};

use chained_motion::planner::plan;
use chained_motion::presets::{chained_transfer, manipulator_transfer};
use chained_motion::simulation::run;

fn bench_plan(c: &mut Criterion) {
    let bc = chained_transfer().chained_boundary().unwrap();
    c.bench_function("plan five steps", |b| {
        b.iter(|| plan(black_box(&bc), black_box(1.0)).unwrap())
    });
}

fn bench_closed_loop(c: &mut Criterion) {
    let mut group = c.benchmark_group("closed-loop run");
    group.sample_size(20);

    let chained = chained_transfer();
    group.bench_function("chained", |b| b.iter(|| run(black_box(&chained)).unwrap()));

    let manipulator = manipulator_transfer();
    group.bench_function("manipulator", |b| {
        b.iter(|| run(black_box(&manipulator)).unwrap())
    });

    group.finish();
}

criterion_group!(benches, bench_plan, bench_closed_loop);
criterion_main!(benches);
