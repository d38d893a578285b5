#![allow(dead_code)]

use std::f64::consts::{PI, TAU};

use darkpump::linalg::{c, Ground, Mat4, C64};
use darkpump::{DensityOperator, FieldParams};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gauss(r: &mut ChaCha8Rng) -> C64 {
    let re: f64 = StandardNormal.sample(r);
    let im: f64 = StandardNormal.sample(r);
    c(re, im)
}

pub fn random_field(r: &mut ChaCha8Rng) -> FieldParams {
    FieldParams::new(
        r.random::<f64>() * PI,
        r.random::<f64>() * TAU,
        r.random::<f64>() * TAU,
        r.random::<f64>() * TAU,
    )
    .with_xi(r.random::<f64>() * TAU)
    .with_omega(0.1 + 3.0 * r.random::<f64>())
    .with_delta(4.0 * r.random::<f64>() - 2.0)
}

/// Full-rank random state on all four levels (`G G† / Tr`).
pub fn random_density(r: &mut ChaCha8Rng) -> DensityOperator {
    let g = Mat4::from_fn(|_, _| gauss(r));
    let m = g * g.adjoint();
    let tr = m.trace().re;
    DensityOperator::new(m / c(tr, 0.0)).unwrap()
}

/// Random pure state, possibly with excited-state amplitude.
pub fn random_pure4(r: &mut ChaCha8Rng) -> DensityOperator {
    let v = nalgebra::Vector4::from_fn(|_, _| gauss(r)).normalize();
    DensityOperator::new(v * v.adjoint()).unwrap()
}

pub fn random_ground(r: &mut ChaCha8Rng) -> Ground {
    Ground::from_fn(|_, _| gauss(r)).normalize()
}

/// Random trace-one Hermitian matrix that need not be positive.
pub fn random_trace_one_hermitian(r: &mut ChaCha8Rng) -> DensityOperator {
    let g = Mat4::from_fn(|_, _| gauss(r));
    let mut h = (g + g.adjoint()) * c(0.5, 0.0);
    let shift = (1.0 - h.trace().re) / 4.0;
    for k in 0..4 {
        h[(k, k)] += c(shift, 0.0);
    }
    DensityOperator::from_matrix_unchecked(h)
}

pub fn field_strategy() -> impl Strategy<Value = FieldParams> {
    (
        0.0..PI,
        0.0..TAU,
        0.0..TAU,
        0.0..TAU,
        0.0..TAU,
        0.05..5.0f64,
        -3.0..3.0f64,
    )
        .prop_map(|(t, p, mm, mp, xi, om, de)| {
            FieldParams::new(t, p, mm, mp)
                .with_xi(xi)
                .with_omega(om)
                .with_delta(de)
        })
}

pub fn seed_strategy() -> impl Strategy<Value = u64> {
    any::<u64>()
}
