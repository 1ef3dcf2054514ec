//! Dormand–Prince 5(4) with FSAL, PI step-size control and 4th-order dense
//! output, for complex state vectors.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

const A21: f64 = 0.2;
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

const C2: f64 = 0.2;
const C3: f64 = 0.3;
const C4: f64 = 0.8;
const C5: f64 = 8.0 / 9.0;

const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;

// 5th minus embedded 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// dense output
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;
const EXPO: f64 = 0.2 - BETA * 0.75;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Initial step; chosen automatically when `None`.
    pub first_step: Option<f64>,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            max_steps: 10_000_000,
            first_step: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evaluations: usize,
    /// Largest scaled error norm among accepted steps (≤ 1 by construction).
    pub max_error_estimate: f64,
    /// Last accepted step size.
    pub last_step: f64,
}

impl OdeStats {
    pub fn merge(&mut self, other: &OdeStats) {
        self.accepted += other.accepted;
        self.rejected += other.rejected;
        self.rhs_evaluations += other.rhs_evaluations;
        self.max_error_estimate = self.max_error_estimate.max(other.max_error_estimate);
        self.last_step = other.last_step;
    }
}

fn error_norm(err: &[C64], y0: &[C64], y1: &[C64], rtol: f64, atol: f64) -> f64 {
    let mut acc = 0.0;
    for ((e, a), b) in err.iter().zip(y0).zip(y1) {
        let sc = atol + rtol * a.norm().max(b.norm());
        let r = e.norm() / sc;
        acc += r * r;
    }
    (acc / err.len().max(1) as f64).sqrt()
}

fn combine(out: &mut [C64], y: &[C64], h: f64, terms: &[(f64, &[C64])]) {
    out.copy_from_slice(y);
    for &(c, k) in terms {
        if c == 0.0 {
            continue;
        }
        let hc = h * c;
        for (o, ki) in out.iter_mut().zip(k) {
            *o += ki * hc;
        }
    }
}

/// Integrates `dy/dt = f(t, y)` from `t0` to `t1`, reporting the solution at
/// every time in `samples` that lies in `[t0, t1]` (ascending) through
/// `on_sample`. Returns the state at `t1`.
#[allow(clippy::too_many_arguments)]
pub fn integrate<F, S>(
    mut f: F,
    t0: f64,
    t1: f64,
    y0: &[C64],
    samples: &[f64],
    opts: &OdeOptions,
    mut on_sample: S,
    stats: &mut OdeStats,
) -> Result<Vec<C64>>
where
    F: FnMut(f64, &[C64], &mut [C64]),
    S: FnMut(f64, &[C64]) -> Result<()>,
{
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut pending = samples
        .iter()
        .copied()
        .filter(|&s| s >= t0 && s <= t1)
        .peekable();
    while let Some(&s) = pending.peek() {
        if s == t0 {
            on_sample(s, &y)?;
            pending.next();
        } else {
            break;
        }
    }
    if t1 <= t0 {
        return Ok(y);
    }

    let mut k1 = vec![C64::default(); n];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut k5 = k1.clone();
    let mut k6 = k1.clone();
    let mut k7 = k1.clone();
    let mut tmp = k1.clone();
    let mut y_new = k1.clone();
    let mut err = k1.clone();
    let mut dense = k1.clone();
    let mut interp = k1.clone();

    f(t0, &y, &mut k1);
    stats.rhs_evaluations += 1;

    let span = t1 - t0;
    let mut h = match opts.first_step {
        Some(h) => h.min(span),
        None => initial_step(&mut f, t0, &y, &k1, opts, &mut tmp, &mut k2, stats).min(span),
    };
    let mut t = t0;
    let mut err_old: f64 = 1e-4;
    let mut last_rejected = false;
    let mut steps = 0usize;

    while t < t1 {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::SolverDivergence { t, step: h });
        }
        let mut last = false;
        if t + h >= t1 || t + 1.01 * h >= t1 {
            h = t1 - t;
            last = true;
        }
        if h <= 1e-14 * t.abs().max(1.0) {
            return Err(Error::SolverDivergence { t, step: h });
        }

        combine(&mut tmp, &y, h, &[(A21, &k1)]);
        f(t + C2 * h, &tmp, &mut k2);
        combine(&mut tmp, &y, h, &[(A31, &k1), (A32, &k2)]);
        f(t + C3 * h, &tmp, &mut k3);
        combine(&mut tmp, &y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        f(t + C4 * h, &tmp, &mut k4);
        combine(
            &mut tmp,
            &y,
            h,
            &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)],
        );
        f(t + C5 * h, &tmp, &mut k5);
        combine(
            &mut tmp,
            &y,
            h,
            &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        );
        let t_new = if last { t1 } else { t + h };
        f(t_new, &tmp, &mut k6);
        combine(
            &mut y_new,
            &y,
            h,
            &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
        );
        f(t_new, &y_new, &mut k7);
        stats.rhs_evaluations += 6;

        for i in 0..n {
            err[i] =
                (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
        }
        let e = error_norm(&err, &y, &y_new, opts.rtol, opts.atol);
        if !e.is_finite() {
            return Err(Error::SolverDivergence { t, step: h });
        }

        if e <= 1.0 {
            // accepted: emit samples in (t, t_new] by dense output
            let mut dense_ready = false;
            while let Some(&s) = pending.peek() {
                if s > t_new {
                    break;
                }
                if s == t_new {
                    on_sample(s, &y_new)?;
                } else {
                    if !dense_ready {
                        for i in 0..n {
                            dense[i] = (k1[i] * D1
                                + k3[i] * D3
                                + k4[i] * D4
                                + k5[i] * D5
                                + k6[i] * D6
                                + k7[i] * D7)
                                * h;
                        }
                        dense_ready = true;
                    }
                    let th = (s - t) / h;
                    let th1 = 1.0 - th;
                    for i in 0..n {
                        let c1 = y_new[i] - y[i];
                        let c2 = k1[i] * h - c1;
                        let c3 = c1 - k7[i] * h - c2;
                        interp[i] = y[i] + (c1 + (c2 + (c3 + dense[i] * th1) * th) * th1) * th;
                    }
                    on_sample(s, &interp)?;
                }
                pending.next();
            }

            stats.accepted += 1;
            stats.max_error_estimate = stats.max_error_estimate.max(e);
            stats.last_step = h;
            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(&mut k1, &mut k7);
            t = t_new;

            let e_safe = e.max(1e-10);
            let mut fac = SAFETY * e_safe.powf(-EXPO) * err_old.powf(BETA);
            fac = fac.clamp(FAC_MIN, FAC_MAX);
            if last_rejected {
                fac = fac.min(1.0);
            }
            err_old = e_safe;
            h *= fac;
            last_rejected = false;
        } else {
            stats.rejected += 1;
            let fac = (SAFETY * e.powf(-0.2)).max(FAC_MIN);
            h *= fac;
            last_rejected = true;
        }
    }
    Ok(y)
}

/// Starting step from the derivative magnitudes.
#[allow(clippy::too_many_arguments)]
fn initial_step<F>(
    f: &mut F,
    t0: f64,
    y0: &[C64],
    f0: &[C64],
    opts: &OdeOptions,
    tmp: &mut [C64],
    f1: &mut [C64],
    stats: &mut OdeStats,
) -> f64
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    let n = y0.len().max(1) as f64;
    let scale = |y: &C64| opts.atol + opts.rtol * y.norm();
    let d0 = (y0
        .iter()
        .map(|y| (y.norm() / scale(y)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let d1 = (f0
        .iter()
        .zip(y0)
        .map(|(f, y)| (f.norm() / scale(y)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    for i in 0..y0.len() {
        tmp[i] = y0[i] + f0[i] * h0;
    }
    f(t0 + h0, tmp, f1);
    stats.rhs_evaluations += 1;
    let d2 = (f1
        .iter()
        .zip(f0)
        .zip(y0)
        .map(|((a, b), y)| ((a - b).norm() / scale(y)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt()
        / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1)
}
