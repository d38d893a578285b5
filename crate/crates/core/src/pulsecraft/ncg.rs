//! Nonlinear conjugate gradients (Polak–Ribière+, strong-Wolfe line search)
//! driven by central finite differences.

/// Stopping and differencing controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgSettings {
    pub max_iter: usize,
    /// Stop as soon as `f ≤ f_target`.
    pub f_target: f64,
    /// Central-difference step per coordinate.
    pub fd_step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// `f` after every accepted step, starting with the initial value.
    pub history: Vec<f64>,
    pub reached_target: bool,
}

const C1: f64 = 1e-4;
const C2: f64 = 0.1;

struct Counted<F> {
    f: F,
    evals: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counted<F> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        self.evals += 1;
        (self.f)(x)
    }

    fn gradient(&mut self, x: &[f64], h: f64, out: &mut [f64]) {
        let mut probe = x.to_vec();
        for i in 0..x.len() {
            probe[i] = x[i] + h;
            let up = self.eval(&probe);
            probe[i] = x[i] - h;
            let down = self.eval(&probe);
            probe[i] = x[i];
            out[i] = (up - down) / (2.0 * h);
        }
    }

    fn along(&mut self, x: &[f64], d: &[f64], alpha: f64) -> f64 {
        let p: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + alpha * b).collect();
        self.eval(&p)
    }

    /// Directional derivative by a central difference whose largest
    /// coordinate step is `h`.
    fn slope(&mut self, x: &[f64], d: &[f64], alpha: f64, h: f64) -> f64 {
        let scale = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let da = h / scale;
        (self.along(x, d, alpha + da) - self.along(x, d, alpha - da)) / (2.0 * da)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Safeguarded minimizer of the quadratic through `(lo, f_lo, d_lo)` and `(hi, f_hi)`.
fn interpolate(lo: f64, f_lo: f64, d_lo: f64, hi: f64, f_hi: f64) -> f64 {
    let span = hi - lo;
    let denom = 2.0 * (f_hi - f_lo - d_lo * span);
    let mut t = if denom > 0.0 {
        -d_lo * span * span / denom
    } else {
        0.5 * span
    };
    let (a, b) = if span > 0.0 {
        (0.1 * span, 0.9 * span)
    } else {
        (0.9 * span, 0.1 * span)
    };
    if !t.is_finite() {
        t = 0.5 * span;
    }
    lo + t.clamp(a, b)
}

/// Strong-Wolfe step along `d`; returns `(alpha, f(x + alpha d))` when a
/// step with sufficient decrease was found.
fn line_search<F: FnMut(&[f64]) -> f64>(
    obj: &mut Counted<F>,
    x: &[f64],
    d: &[f64],
    f0: f64,
    g0: f64,
    alpha_init: f64,
    h: f64,
) -> Option<(f64, f64)> {
    let armijo = |a: f64, fa: f64| fa <= f0 + C1 * a * g0;
    let mut best: Option<(f64, f64)> = None;
    let note = |a: f64, fa: f64, best: &mut Option<(f64, f64)>| {
        if armijo(a, fa) && best.is_none_or(|(_, fb)| fa < fb) {
            *best = Some((a, fa));
        }
    };

    let (mut a_prev, mut f_prev, mut d_prev) = (0.0, f0, g0);
    let mut a = alpha_init;
    let (mut lo, mut f_lo, mut d_lo, mut hi, mut f_hi);
    let mut i = 0;
    loop {
        let fa = obj.along(x, d, a);
        note(a, fa, &mut best);
        if !armijo(a, fa) || (i > 0 && fa >= f_prev) {
            (lo, f_lo, d_lo, hi, f_hi) = (a_prev, f_prev, d_prev, a, fa);
            break;
        }
        let da = obj.slope(x, d, a, h);
        if da.abs() <= -C2 * g0 {
            return Some((a, fa));
        }
        if da >= 0.0 {
            (lo, f_lo, d_lo, hi, f_hi) = (a, fa, da, a_prev, f_prev);
            break;
        }
        (a_prev, f_prev, d_prev) = (a, fa, da);
        a *= 2.5;
        i += 1;
        if i >= 25 {
            return best;
        }
    }

    for _ in 0..40 {
        if (hi - lo).abs() <= 1e-14 * lo.abs().max(1e-300) {
            break;
        }
        let aj = interpolate(lo, f_lo, d_lo, hi, f_hi);
        let fj = obj.along(x, d, aj);
        note(aj, fj, &mut best);
        if !armijo(aj, fj) || fj >= f_lo {
            (hi, f_hi) = (aj, fj);
        } else {
            let dj = obj.slope(x, d, aj, h);
            if dj.abs() <= -C2 * g0 {
                return Some((aj, fj));
            }
            if dj * (hi - lo) >= 0.0 {
                (hi, f_hi) = (lo, f_lo);
            }
            (lo, f_lo, d_lo) = (aj, fj, dj);
        }
    }
    best
}

/// Minimize `f` from `x0`.
pub fn minimize<F: FnMut(&[f64]) -> f64>(f: F, x0: &[f64], settings: CgSettings) -> CgOutcome {
    let n = x0.len();
    let h = settings.fd_step;
    let mut obj = Counted { f, evals: 0 };
    let mut x = x0.to_vec();
    let mut fx = obj.eval(&x);
    let mut history = vec![fx];
    if n == 0 || fx <= settings.f_target {
        return CgOutcome {
            x,
            f: fx,
            iterations: 0,
            evaluations: obj.evals,
            history,
            reached_target: fx <= settings.f_target,
        };
    }

    let mut g = vec![0.0; n];
    obj.gradient(&x, h, &mut g);
    let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut slope = dot(&g, &d);
    let dmax = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut alpha = if dmax > 0.0 { 0.1 / dmax } else { 1.0 };
    let mut iterations = 0;
    let mut steepest = true;

    while iterations < settings.max_iter && fx > settings.f_target {
        if !(slope < 0.0) {
            // not a descent direction
            d = g.iter().map(|v| -v).collect();
            slope = dot(&g, &d);
            steepest = true;
            if !(slope < 0.0) {
                break;
            }
        }
        let found = line_search(&mut obj, &x, &d, fx, slope, alpha, h);
        let Some((a, fa)) = found else {
            if steepest {
                break;
            }
            d = g.iter().map(|v| -v).collect();
            slope = dot(&g, &d);
            let dmax = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            alpha = 0.1 / dmax;
            steepest = true;
            continue;
        };
        iterations += 1;
        for (xi, di) in x.iter_mut().zip(&d) {
            *xi += a * di;
        }
        fx = fa;
        history.push(fx);

        let mut g_new = vec![0.0; n];
        obj.gradient(&x, h, &mut g_new);
        let gg = dot(&g, &g);
        let beta = if gg > 0.0 {
            (dot(&g_new, &g_new) - dot(&g_new, &g)) / gg
        } else {
            0.0
        };
        let restart = iterations % (2 * n) == 0;
        let beta = if restart { 0.0 } else { beta.max(0.0) };
        steepest = beta == 0.0;
        let old_slope = slope;
        for (di, gi) in d.iter_mut().zip(&g_new) {
            *di = -gi + beta * *di;
        }
        g = g_new;
        slope = dot(&g, &d);
        alpha = if slope < 0.0 {
            (a * old_slope / slope).min(10.0 * a)
        } else {
            a
        };
        if !(alpha.is_finite() && alpha > 0.0) {
            alpha = a;
        }
    }

    CgOutcome {
        x,
        f: fx,
        iterations,
        evaluations: obj.evals,
        history,
        reached_target: fx <= settings.f_target,
    }
}
