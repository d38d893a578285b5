//! Time integration of the full master equation through one pulse, and the
//! harness that checks the asymptotic maps against it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lambda::{dark_basis, DensityOperator, Envelope, FieldParams};
use crate::linalg::{c, unvectorize, vectorize, Mat16, Mat4, Vec16};
use crate::liouvillian::{
    build_liouvillian, slowest_rate, GeneratorParts, Liouvillian, Mode, Rates,
};
use crate::relax::{apply_ta, apply_tb, hs_distance};

/// Number of evenly spaced output intervals per trajectory.
pub const OUTPUT_INTERVALS: usize = 64;

/// Snapshots more negative than `POSITIVITY_FACTOR · atol` are rejected.
pub const POSITIVITY_FACTOR: f64 = 100.0;

const MAX_STEPS: usize = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rtol: 1e-9,
            atol: 1e-12,
        }
    }
}

/// Snapshots of `ρ(t)` on an even grid, endpoint included.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityOperator>,
    pub final_state: DensityOperator,
    /// Accepted and rejected Runge–Kutta steps.
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

// Dormand–Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

/// Right-hand side `M(t) r + d` with `M(t) = fixed + E(t) drive`.
struct Rhs {
    parts: GeneratorParts,
    envelope: Envelope,
    duration: f64,
    /// Cached `M` when the envelope is constant.
    constant: Option<Mat16>,
}

impl Rhs {
    fn new(fp: &FieldParams, rates: &Rates, duration: f64) -> Self {
        let parts = GeneratorParts::new(fp, rates);
        let constant = match fp.envelope {
            Envelope::Square => Some(parts.at(1.0)),
            Envelope::SineSquared => None,
        };
        Rhs {
            parts,
            envelope: fp.envelope,
            duration,
            constant,
        }
    }

    fn eval(&self, t: f64, r: &Vec16) -> Vec16 {
        match &self.constant {
            Some(m) => m * r + self.parts.d,
            None => {
                let e = self.envelope.value(t, self.duration);
                self.parts.fixed * r + self.parts.drive * (r * c(e, 0.0)) + self.parts.d
            }
        }
    }
}

/// `h Σ w_i k_i`.
fn comb(h: f64, terms: &[(f64, &Vec16)]) -> Vec16 {
    let mut out = Vec16::zeros();
    for (w, k) in terms {
        out.axpy(c(h * w, 0.0), k, c(1.0, 0.0));
    }
    out
}

struct Stepper<'a> {
    rhs: &'a Rhs,
    tol: Tolerances,
    accepted: usize,
    rejected: usize,
}

impl Stepper<'_> {
    fn error_norm(&self, y: &Vec16, y_new: &Vec16, err: &Vec16) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..16 {
            let scale = self.tol.atol + self.tol.rtol * y[i].norm().max(y_new[i].norm());
            worst = worst.max(err[i].norm() / scale);
        }
        worst
    }

    /// Advance from `t` to exactly `t_end`, returning the step size to try next.
    fn advance(
        &mut self,
        t: &mut f64,
        y: &mut Vec16,
        k1: &mut Vec16,
        t_end: f64,
        mut h: f64,
    ) -> Result<f64> {
        let f = |t: f64, r: &Vec16| self.rhs.eval(t, r);
        while *t < t_end {
            if self.accepted + self.rejected > MAX_STEPS {
                return Err(Error::StepSizeUnderflow { t: *t, h });
            }
            let last = t_end - *t <= h;
            let h_try = if last { t_end - *t } else { h };
            if h_try < 1e-13 * t.abs().max(1.0) {
                return Err(Error::StepSizeUnderflow { t: *t, h: h_try });
            }
            let k2 = f(*t + C2 * h_try, &(*y + comb(h_try, &[(A21, &*k1)])));
            let k3 = f(
                *t + C3 * h_try,
                &(*y + comb(h_try, &[(A31, &*k1), (A32, &k2)])),
            );
            let k4 = f(
                *t + C4 * h_try,
                &(*y + comb(h_try, &[(A41, &*k1), (A42, &k2), (A43, &k3)])),
            );
            let k5 = f(
                *t + C5 * h_try,
                &(*y + comb(h_try, &[(A51, &*k1), (A52, &k2), (A53, &k3), (A54, &k4)])),
            );
            let k6 = f(
                *t + h_try,
                &(*y + comb(
                    h_try,
                    &[(A61, &*k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
                )),
            );
            let y_new = *y
                + comb(
                    h_try,
                    &[(B1, &*k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
                );
            let k7 = f(*t + h_try, &y_new);
            let err = comb(
                h_try,
                &[
                    (E1, &*k1),
                    (E3, &k3),
                    (E4, &k4),
                    (E5, &k5),
                    (E6, &k6),
                    (E7, &k7),
                ],
            );
            let en = self.error_norm(y, &y_new, &err);
            let factor = if en == 0.0 {
                5.0
            } else {
                (0.9 * en.powf(-0.2)).clamp(0.2, 5.0)
            };
            if en <= 1.0 {
                self.accepted += 1;
                *t = if last { t_end } else { *t + h_try };
                *y = y_new;
                *k1 = k7;
                // keep the unclamped step size when the final step was shortened
                h = if last {
                    h.max(h_try * factor)
                } else {
                    h_try * factor
                };
            } else {
                self.rejected += 1;
                h = h_try * factor.min(1.0);
            }
        }
        Ok(h)
    }
}

fn hermitian_part(m: &Mat4) -> Mat4 {
    (m + m.adjoint()) * c(0.5, 0.0)
}

/// Integrate `dρ/dt = unvec(M(t) vec ρ + d)` over `[0, t_final]`.
///
/// The pulse envelope is stretched over the whole window. Uses the
/// Dormand–Prince 5(4) pair with per-component error control
/// `|err_i| ≤ atol + rtol |y_i|`.
pub fn integrate_master(
    rho0: &DensityOperator,
    fp: &FieldParams,
    rates: &Rates,
    t_final: f64,
    tol: Tolerances,
) -> Result<Trajectory> {
    if !(t_final.is_finite() && t_final > 0.0) {
        return Err(Error::InvalidArgument("t_final must be positive".into()));
    }
    if !(tol.rtol > 0.0 && tol.atol > 0.0) {
        return Err(Error::InvalidArgument(
            "rtol and atol must be positive".into(),
        ));
    }
    fp.validate()?;
    rates.validate()?;

    let rhs = Rhs::new(fp, rates, t_final);
    let mut stepper = Stepper {
        rhs: &rhs,
        tol,
        accepted: 0,
        rejected: 0,
    };
    let scale = rhs.parts.at(1.0).norm().max(1e-3);
    let mut h = (0.01 / scale).min(t_final / OUTPUT_INTERVALS as f64);

    let mut t = 0.0;
    let mut y = vectorize(rho0.matrix());
    let mut k1 = rhs.eval(t, &y);
    let mut times = Vec::with_capacity(OUTPUT_INTERVALS + 1);
    let mut states = Vec::with_capacity(OUTPUT_INTERVALS + 1);
    times.push(0.0);
    states.push(*rho0);
    let floor = -POSITIVITY_FACTOR * tol.atol;
    for k in 1..=OUTPUT_INTERVALS {
        let t_out = t_final * k as f64 / OUTPUT_INTERVALS as f64;
        h = stepper.advance(&mut t, &mut y, &mut k1, t_out, h)?;
        let rho = DensityOperator::from_matrix_unchecked(hermitian_part(&unvectorize(&y)));
        let min_eig = rho.min_eigenvalue();
        if min_eig < floor {
            return Err(Error::PositivityViolation { t, min_eig });
        }
        times.push(t_out);
        states.push(rho);
    }
    let final_state = *states.last().expect("at least one snapshot");
    Ok(Trajectory {
        times,
        states,
        final_state,
        accepted_steps: stepper.accepted,
        rejected_steps: stepper.rejected,
    })
}

/// Pulse length that lets the slowest decaying mode fall to `residual`:
/// `ln(1/residual) / slowest_rate`.
pub fn recommended_duration(l: &Liouvillian, residual: f64) -> Result<f64> {
    if !(residual > 0.0 && residual < 1.0) {
        return Err(Error::InvalidArgument("residual must lie in (0, 1)".into()));
    }
    Ok((1.0 / residual).ln() / slowest_rate(l)?)
}

/// Outcome of one map-versus-dynamics comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapCheck {
    pub distance: f64,
    pub duration: f64,
    pub slowest_rate: f64,
}

/// Analytic asymptotic map for one pulse in the given regime.
pub fn analytic_map(
    rho: &DensityOperator,
    fp: &FieldParams,
    mode: Mode,
) -> Result<DensityOperator> {
    match mode {
        Mode::Alpha => apply_ta(rho, &dark_basis(fp)),
        Mode::Beta => apply_tb(rho, fp),
    }
}

/// Integrate for the recommended duration and compare with the analytic map.
pub fn verify_map_with(
    rho0: &DensityOperator,
    fp: &FieldParams,
    rates: &Rates,
    residual: f64,
    tol: Tolerances,
) -> Result<MapCheck> {
    let l = build_liouvillian(fp, rates, 1.0);
    let rate = slowest_rate(&l)?;
    let duration = recommended_duration(&l, residual)?;
    let traj = integrate_master(rho0, fp, rates, duration, tol)?;
    let expected = analytic_map(rho0, fp, rates.mode)?;
    Ok(MapCheck {
        distance: hs_distance(&traj.final_state, &expected),
        duration,
        slowest_rate: rate,
    })
}

/// Hilbert–Schmidt distance between the integrated endpoint and the analytic map.
pub fn verify_map(
    rho0: &DensityOperator,
    fp: &FieldParams,
    rates: &Rates,
    residual: f64,
) -> Result<f64> {
    verify_map_with(rho0, fp, rates, residual, Tolerances::default()).map(|m| m.distance)
}
