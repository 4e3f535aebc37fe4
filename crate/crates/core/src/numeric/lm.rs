//! Levenberg–Marquardt nonlinear least squares with a central-difference
//! Jacobian. Sized for the handful of parameters used by the curve fits in
//! this crate; the normal equations are solved densely.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop when the relative cost decrease falls below this.
    pub ftol: f64,
    /// Stop when every relative parameter step falls below this.
    pub xtol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            ftol: 1e-15,
            xtol: 1e-13,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmResult {
    pub params: Vec<f64>,
    /// Sum of squared residuals at `params`.
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimise `Σ r_i(p)²`.
///
/// `residuals(p, out)` fills `out` (length `m`). `scales[j]` is a typical
/// magnitude for parameter `j`; it sets the finite-difference step.
pub fn minimize<F>(
    mut residuals: F,
    p0: &[f64],
    m: usize,
    scales: &[f64],
    opts: &LmOptions,
) -> LmResult
where
    F: FnMut(&[f64], &mut [f64]),
{
    let n = p0.len();
    let mut p = p0.to_vec();
    let mut r = vec![0.0; m];
    residuals(&p, &mut r);
    let mut cost = sum_sq(&r);
    let mut lambda = 1e-3;
    let mut jac = DMatrix::<f64>::zeros(m, n);
    let mut rp = vec![0.0; m];
    let mut rm = vec![0.0; m];
    let mut trial = vec![0.0; m];
    let mut converged = false;
    let mut iterations = 0;

    if !cost.is_finite() {
        return LmResult {
            params: p,
            cost,
            iterations,
            converged,
        };
    }

    'outer: while iterations < opts.max_iterations {
        iterations += 1;
        for j in 0..n {
            let h = 1e-7 * p[j].abs().max(scales[j].abs()).max(f64::MIN_POSITIVE);
            let orig = p[j];
            p[j] = orig + h;
            residuals(&p, &mut rp);
            p[j] = orig - h;
            residuals(&p, &mut rm);
            p[j] = orig;
            for i in 0..m {
                jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let g = &jt * DVector::from_column_slice(&r);
        if g.amax() == 0.0 {
            converged = true;
            break;
        }

        loop {
            let mut a = jtj.clone();
            for j in 0..n {
                let d = jtj[(j, j)].max(1e-300);
                a[(j, j)] += lambda * d;
            }
            let step = match a.lu().solve(&(-&g)) {
                Some(s) => s,
                None => {
                    lambda *= 10.0;
                    if lambda > 1e16 {
                        break 'outer;
                    }
                    continue;
                }
            };
            let cand: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            residuals(&cand, &mut trial);
            let new_cost = sum_sq(&trial);
            if new_cost.is_finite() && new_cost <= cost {
                let rel_drop = (cost - new_cost) / cost.max(f64::MIN_POSITIVE);
                let small_step = step
                    .iter()
                    .zip(&p)
                    .zip(scales)
                    .all(|((s, pj), sc)| s.abs() <= opts.xtol * pj.abs().max(sc.abs()));
                p = cand;
                std::mem::swap(&mut r, &mut trial);
                cost = new_cost;
                lambda = (lambda / 3.0).max(1e-12);
                if rel_drop < opts.ftol || small_step || cost == 0.0 {
                    converged = true;
                    break 'outer;
                }
                break;
            }
            lambda *= 2.0;
            if lambda > 1e16 {
                // no downhill direction left at this precision
                converged = true;
                break 'outer;
            }
        }
    }

    LmResult {
        params: p,
        cost,
        iterations,
        converged,
    }
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}
