use std::f64::consts::TAU;

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use smeasure::measure::{solve_s_measure, GridMeasure, SolveOptions, TransferOperator};
use smeasure::rotation::rotation_number;
use smeasure::tongue::solve_tongue_point;
use smeasure::{AnalyticCircleMap, ContinuedFraction, MonotoneFamily};

const CRITICAL_GOLDEN_A: f64 = 0.6066610634699852;

fn critical() -> AnalyticCircleMap {
    AnalyticCircleMap::arnold(CRITICAL_GOLDEN_A, 1.0 / TAU)
}

fn transfer(c: &mut Criterion) {
    let f = critical();
    c.bench_function("transfer_build_4096", |b| b.iter(|| TransferOperator::build(black_box(&f), -1.0, 4096).unwrap()));
}

fn solve(c: &mut Criterion) {
    let f = critical();
    let init = GridMeasure::lebesgue(4096).unwrap();
    let opts = SolveOptions::default();
    let mut g = c.benchmark_group("solve");
    g.sample_size(10);
    g.bench_function("critical_s-1_4096", |b| b.iter(|| solve_s_measure(&f, -1.0, 4096, &opts, &init).unwrap()));
    g.finish();
}

fn rotation(c: &mut Criterion) {
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let rot = AnalyticCircleMap::rotation(golden);
    let f = critical();
    c.bench_function("rho_rotation_1e-10", |b| b.iter(|| rotation_number(black_box(&rot), 1e-10, 1 << 26).unwrap()));
    c.bench_function("rho_critical_1e-10", |b| b.iter(|| rotation_number(black_box(&f), 1e-10, 1 << 26).unwrap()));
}

fn tongue(c: &mut Criterion) {
    let fam = MonotoneFamily::arnold();
    let alpha = ContinuedFraction::golden(80);
    c.bench_function("tongue_point_critical", |b| {
        b.iter(|| solve_tongue_point(&fam, &alpha, black_box(1.0 / TAU), 1e-12).unwrap())
    });
}

criterion_group!(benches, transfer, solve, rotation, tongue);
criterion_main!(benches);
