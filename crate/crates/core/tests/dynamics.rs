mod common;

use common::*;
use darkpump::dynamics::analytic_map;
use darkpump::linalg::{frobenius, trace_product};
use darkpump::{
    build_liouvillian, dark_basis, hs_distance, integrate_master, recommended_duration,
    slowest_rate, verify_map_with, DensityOperator, FieldParams, Mode, Rates, Tolerances,
};

fn unit_field(r: &mut rand_chacha::ChaCha8Rng) -> FieldParams {
    let f = random_field(r);
    FieldParams::new(f.theta, f.phi, f.mu_minus, f.mu_plus)
}

#[test]
fn recommended_duration_certifies_alpha_map_to_1e8() {
    let mut r = rng(41);
    let rates = Rates::alpha(1.0);
    for _ in 0..20 {
        let fp = unit_field(&mut r);
        let rho = random_pure4(&mut r);
        let check = verify_map_with(&rho, &fp, &rates, 1e-10, Tolerances::default()).unwrap();
        assert!(
            check.distance < 1e-8,
            "{:e} after t = {}",
            check.distance,
            check.duration
        );
    }
}

#[test]
fn both_modes_converge_to_their_maps() {
    let mut r = rng(42);
    for rates in [Rates::alpha(1.0), Rates::beta(1.0, 1.0, 1.0)] {
        for _ in 0..8 {
            let fp = unit_field(&mut r);
            let rho = random_density(&mut r);
            let check = verify_map_with(&rho, &fp, &rates, 1e-10, Tolerances::default()).unwrap();
            assert!(
                check.distance < 1e-6,
                "{:?}: {:e}",
                rates.mode,
                check.distance
            );
        }
    }
}

#[test]
fn trace_is_conserved_without_external_loss() {
    let mut r = rng(43);
    let fp = unit_field(&mut r);
    let traj = integrate_master(
        &random_density(&mut r),
        &fp,
        &Rates::alpha(1.0),
        40.0,
        Tolerances::default(),
    )
    .unwrap();
    assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
    assert_eq!(traj.times[0], 0.0);
    for s in &traj.states {
        assert!((s.trace() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn dark_population_never_decreases_for_square_pulses() {
    let mut r = rng(44);
    for rates in [
        Rates::alpha(1.0),
        Rates::beta(1.0, 1.0, 1.0),
        Rates::beta(0.5, 2.0, 0.3),
    ] {
        for _ in 0..5 {
            let fp = random_field(&mut r);
            let basis = dark_basis(&fp);
            let traj = integrate_master(
                &random_density(&mut r),
                &fp,
                &rates,
                60.0,
                Tolerances::default(),
            )
            .unwrap();
            let weights: Vec<f64> = traj
                .states
                .iter()
                .map(|s| trace_product(&basis.projector, s.matrix()).re)
                .collect();
            for w in weights.windows(2) {
                assert!(
                    w[1] >= w[0] - 1e-6,
                    "{:?}: dark weight fell from {} to {}",
                    rates.mode,
                    w[0],
                    w[1]
                );
            }
        }
    }
}

#[test]
fn endpoint_error_shrinks_with_tolerance() {
    let fp = FieldParams::new(1.2, 0.4, 2.0, 0.7);
    let rho = DensityOperator::pure_ground(&darkpump::scenario::reference_psi1()).unwrap();
    let rates = Rates::alpha(1.0);
    let reference = integrate_master(
        &rho,
        &fp,
        &rates,
        10.0,
        Tolerances {
            rtol: 1e-13,
            atol: 1e-15,
        },
    )
    .unwrap();
    let errors: Vec<f64> = [1e-4, 1e-6, 1e-8, 1e-10]
        .iter()
        .map(|&rtol| {
            let t = integrate_master(
                &rho,
                &fp,
                &rates,
                10.0,
                Tolerances {
                    rtol,
                    atol: rtol * 1e-3,
                },
            )
            .unwrap();
            frobenius(&(t.final_state.matrix() - reference.final_state.matrix()))
        })
        .collect();
    for w in errors.windows(2) {
        assert!(w[1] < w[0], "{errors:?}");
    }
}

#[test]
fn beta_convergence_speed_is_positive_for_all_rate_ratios() {
    let fp = FieldParams::new(0.9, 0.3, 1.0, 2.0);
    for g_in in [0.1, 1.0, 10.0] {
        for g_ext in [0.1, 1.0, 10.0] {
            for rp in [0.1, 1.0, 10.0] {
                let l = build_liouvillian(&fp, &Rates::beta(g_in, g_ext, rp), 1.0);
                let rate = slowest_rate(&l).unwrap();
                assert!(rate.is_finite() && rate > 0.0);
                assert!(recommended_duration(&l, 1e-10).unwrap().is_finite());
            }
        }
    }
}

#[test]
fn longer_pulses_approach_the_map() {
    let fp = FieldParams::new(0.7, 1.1, 0.2, 3.0);
    let rho = DensityOperator::pure_ground(&darkpump::scenario::reference_psi2()).unwrap();
    let rates = Rates::beta(1.0, 1.0, 1.0);
    let expected = analytic_map(&rho, &fp, Mode::Beta).unwrap();
    let l = build_liouvillian(&fp, &rates, 1.0);
    let dist = |res: f64| {
        let t = recommended_duration(&l, res).unwrap();
        hs_distance(
            &integrate_master(&rho, &fp, &rates, t, Tolerances::default())
                .unwrap()
                .final_state,
            &expected,
        )
    };
    let (short, long) = (dist(1e-3), dist(1e-9));
    assert!(long < short && long < 1e-6, "{short:e} {long:e}");
}
