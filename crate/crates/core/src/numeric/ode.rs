//! Adaptive Dormand–Prince 5(4) integrator for real-valued ODE systems.
//!
//! The solver steps exactly onto every requested output time instead of
//! interpolating, so output accuracy equals the step accuracy.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Optional first trial step (μs). Chosen automatically when `None`.
    pub initial_step: Option<f64>,
    /// Upper bound on any single step, useful for oscillatory problems.
    pub max_step: Option<f64>,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            max_steps: 2_000_000,
            initial_step: None,
            max_step: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error("integrator failure at t = {t}: {reason} (step {h:e}, {accepted} accepted, {rejected} rejected)")]
    IntegratorFailure {
        t: f64,
        h: f64,
        accepted: usize,
        rejected: usize,
        reason: String,
    },
    #[error("output grid must be non-decreasing and start at or after t0")]
    BadGrid,
}

#[derive(Debug, Clone)]
pub struct OdeSolution {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub accepted: usize,
    pub rejected: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

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
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrate `dy/dt = f(t, y)` from `t0` and report the state at each time
/// in `grid` (which must be non-decreasing and `>= t0`).
pub fn integrate<F>(
    mut rhs: F,
    t0: f64,
    y0: &[f64],
    grid: &[f64],
    opts: &OdeOptions,
) -> Result<OdeSolution, OdeError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    if grid.windows(2).any(|w| w[1] < w[0]) || grid.first().is_some_and(|&g| g < t0) {
        return Err(OdeError::BadGrid);
    }
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];

    rhs(t, &y, &mut k1);
    let span = grid.last().map_or(0.0, |&g| g - t0);
    let mut h = match opts.initial_step {
        Some(h) => h,
        None => initial_step(&y, &k1, span, opts),
    };
    if let Some(hmax) = opts.max_step {
        h = h.min(hmax);
    }

    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let mut states = Vec::with_capacity(grid.len());

    let fail = |t: f64, h: f64, a: usize, r: usize, reason: &str| OdeError::IntegratorFailure {
        t,
        h,
        accepted: a,
        rejected: r,
        reason: reason.to_string(),
    };

    for &target in grid {
        while t < target {
            if accepted + rejected >= opts.max_steps {
                return Err(fail(t, h, accepted, rejected, "step budget exhausted"));
            }
            let remaining = target - t;
            let mut step = h.min(remaining);
            // avoid leaving a sliver smaller than round-off before the target
            if remaining - step < 1e-12 * remaining.abs().max(1.0) {
                step = remaining;
            }
            if step <= f64::EPSILON * t.abs().max(1e-300) * 4.0 {
                return Err(fail(t, step, accepted, rejected, "step size underflow"));
            }

            for i in 0..n {
                tmp[i] = y[i] + step * A21 * k1[i];
            }
            rhs(t + C2 * step, &tmp, &mut k2);
            for i in 0..n {
                tmp[i] = y[i] + step * (A31 * k1[i] + A32 * k2[i]);
            }
            rhs(t + C3 * step, &tmp, &mut k3);
            for i in 0..n {
                tmp[i] = y[i] + step * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            rhs(t + C4 * step, &tmp, &mut k4);
            for i in 0..n {
                tmp[i] = y[i] + step * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            rhs(t + C5 * step, &tmp, &mut k5);
            for i in 0..n {
                tmp[i] = y[i]
                    + step
                        * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            rhs(t + step, &tmp, &mut k6);
            for i in 0..n {
                y_new[i] = y[i]
                    + step
                        * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
            }
            rhs(t + step, &y_new, &mut k7);

            let mut err = 0.0;
            for i in 0..n {
                let e = step
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i]
                        + E7 * k7[i]);
                let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
                err += (e / sc).powi(2);
            }
            let err = if n == 0 { 0.0 } else { (err / n as f64).sqrt() };
            if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
                return Err(fail(t, step, accepted, rejected, "non-finite state"));
            }

            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                t = if step == remaining { target } else { t + step };
                std::mem::swap(&mut y, &mut y_new);
                std::mem::swap(&mut k1, &mut k7);
                accepted += 1;
                // a step truncated to hit the grid says little about the
                // natural step size, so keep the larger of the two
                h = if step < h { h.max(step * factor) } else { step * factor };
            } else {
                rejected += 1;
                h = step * factor.min(1.0);
            }
            if let Some(hmax) = opts.max_step {
                h = h.min(hmax);
            }
        }
        states.push(y.clone());
    }

    Ok(OdeSolution {
        times: grid.to_vec(),
        states,
        accepted,
        rejected,
    })
}

fn initial_step(y: &[f64], f: &[f64], span: f64, opts: &OdeOptions) -> f64 {
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for (yi, fi) in y.iter().zip(f) {
        let sc = opts.atol + opts.rtol * yi.abs();
        d0 += (yi / sc).powi(2);
        d1 += (fi / sc).powi(2);
    }
    let n = y.len().max(1) as f64;
    let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
    let h = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    if span > 0.0 {
        h.min(span)
    } else {
        h
    }
}
