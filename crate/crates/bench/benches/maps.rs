use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use darkpump::pulsecraft::superop::{sequence_map, step_map};
use darkpump::scenario::reference_target;
use darkpump::{
    build_liouvillian, compose_sequence, dark_basis, initial_state_grid, integrate_master,
    objective, recommended_duration, spectrum, DensityOperator, FieldParams, Mode, PulseSequence,
    Rates, Tolerances,
};

fn field() -> FieldParams {
    FieldParams::new(1.1, 0.4, 2.0, -0.7)
}

fn sequence(n: usize) -> PulseSequence {
    let steps = (0..n)
        .map(|k| FieldParams::new(0.3 + 0.4 * k as f64, 0.2 * k as f64, 1.0, -0.5 * k as f64))
        .collect();
    PulseSequence::new(steps, Mode::Alpha).unwrap()
}

fn maps(c: &mut Criterion) {
    let fp = field();
    let rho = DensityOperator::pure_ground(&reference_target().psi1).unwrap();
    c.bench_function("dark_basis", |b| b.iter(|| dark_basis(black_box(&fp))));
    c.bench_function("step_map_9x9", |b| {
        b.iter(|| step_map(black_box(&fp), Mode::Alpha))
    });
    let seq = sequence(4);
    c.bench_function("compose_sequence_n4", |b| {
        b.iter(|| compose_sequence(black_box(&rho), &seq).unwrap())
    });
    c.bench_function("sequence_map_n4", |b| {
        b.iter(|| sequence_map(black_box(&seq)))
    });
}

fn optimizer(c: &mut Criterion) {
    let grid = initial_state_grid(5).unwrap();
    let target = reference_target();
    let params = sequence(4).angle_vector();
    c.bench_function("objective_grid625_n4", |b| {
        b.iter(|| objective(black_box(&params), &grid, &target, Mode::Alpha).unwrap())
    });
}

fn generator(c: &mut Criterion) {
    let fp = field();
    let rates = Rates::beta(1.0, 0.5, 0.3);
    c.bench_function("liouvillian_spectrum", |b| {
        b.iter(|| spectrum(&build_liouvillian(black_box(&fp), &rates, 1.0)).unwrap())
    });
    let alpha = Rates::alpha(1.0);
    let t = recommended_duration(&build_liouvillian(&fp, &alpha, 1.0), 1e-6).unwrap();
    let rho = DensityOperator::pure_ground(&reference_target().psi2).unwrap();
    let tol = Tolerances {
        rtol: 1e-8,
        atol: 1e-11,
    };
    c.bench_function("integrate_pulse", |b| {
        b.iter(|| integrate_master(black_box(&rho), &fp, &alpha, t, tol).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = maps, optimizer, generator
}
criterion_main!(benches);
