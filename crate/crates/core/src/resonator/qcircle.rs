//! Q-circle fit of a single resonance.
//!
//! Near resonance `s21 = bg + A/(1 + 2iQ(f − f0)/f0)` traces a circle of
//! diameter |A| whose angle about the centre turns as
//! `θ0 − 2·atan(2Q(f − f0)/f0)`. The fit runs in three stages: an algebraic
//! circle, geometric refinement, then a phase-versus-frequency fit for
//! `(f0, Q)`. A final joint fit of the complex model with a linear
//! background polishes the estimates.

use serde::{Deserialize, Serialize};

use super::record::SParamRecord;
use super::ResonatorError;
use crate::numeric::lm::{minimize, LmOptions};
use crate::spin::C64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QCircleFit {
    /// MHz
    pub f0: f64,
    pub q_loaded: f64,
    pub center: [f64; 2],
    pub radius: f64,
    /// RMS of the complex model residual over the window.
    pub residual: f64,
    /// Off-resonance transmission level |bg| at f0.
    pub background: f64,
}

impl QCircleFit {
    /// Unloaded Q of a two-port transmission resonator, `Q_L / (1 − d)` with
    /// `d = 2·radius` the resonant peak of normalized |s21|. `None` when `d`
    /// is not a valid coupling fraction.
    pub fn q_unloaded(&self) -> Option<f64> {
        let d = 2.0 * self.radius;
        (d < 1.0).then(|| self.q_loaded / (1.0 - d))
    }
}

fn opts() -> LmOptions {
    LmOptions {
        max_iterations: 500,
        ftol: 1e-20,
        xtol: 1e-12,
    }
}

/// Least-squares circle `x² + y² + Dx + Ey + F = 0` on centred, scaled data.
fn algebraic_circle(z: &[C64]) -> Result<(C64, f64), ResonatorError> {
    let n = z.len() as f64;
    let mean = z.iter().fold(C64::new(0.0, 0.0), |a, b| a + b) / n;
    let scale = z.iter().map(|p| (p - mean).norm()).fold(0.0, f64::max);
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(ResonatorError::CircleFitDegenerate);
    }
    let mut ata = nalgebra::Matrix3::<f64>::zeros();
    let mut atb = nalgebra::Vector3::<f64>::zeros();
    for p in z {
        let q = (p - mean) / scale;
        let row = nalgebra::Vector3::new(q.re, q.im, 1.0);
        ata += row * row.transpose();
        atb -= row * q.norm_sqr();
    }
    let sol = ata.lu().solve(&atb).ok_or(ResonatorError::CircleFitDegenerate)?;
    let c = C64::new(-sol[0] / 2.0, -sol[1] / 2.0);
    let r2 = c.norm_sqr() - sol[2];
    // collinear data fits a huge circle; reject anything much larger than the spread
    if !(r2 > 0.0) || !r2.is_finite() || r2.sqrt() > 1e3 {
        return Err(ResonatorError::CircleFitDegenerate);
    }
    Ok((mean + c * scale, r2.sqrt() * scale))
}

fn geometric_circle(z: &[C64], c0: C64, r0: f64) -> (C64, f64) {
    let res = minimize(
        |p, out| {
            let c = C64::new(p[0], p[1]);
            for (o, q) in out.iter_mut().zip(z) {
                *o = (q - c).norm() - p[2];
            }
        },
        &[c0.re, c0.im, r0],
        z.len(),
        &[r0, r0, r0],
        &opts(),
    );
    let p = res.params;
    if res.cost.is_finite() && p[2] > 0.0 {
        (C64::new(p[0], p[1]), p[2])
    } else {
        (c0, r0)
    }
}

fn unwrap(angles: &mut [f64]) {
    let two_pi = 2.0 * std::f64::consts::PI;
    for i in 1..angles.len() {
        let d = angles[i] - angles[i - 1];
        angles[i] -= two_pi * (d / two_pi).round();
    }
}

/// Fit the resonance inside the inclusive index `window` of `rec`.
pub fn qcircle_fit(rec: &SParamRecord, window: (usize, usize)) -> Result<QCircleFit, ResonatorError> {
    let (lo, hi) = window;
    if hi >= rec.len() || hi < lo || hi - lo + 1 < 12 {
        return Err(ResonatorError::InsufficientData(format!(
            "window {lo}..={hi} needs ≥ 12 points inside a {}-point record",
            rec.len()
        )));
    }
    let f: Vec<f64> = rec.freqs[lo..=hi].to_vec();
    let mut z: Vec<C64> = rec.s21[lo..=hi].to_vec();
    let m = z.len();

    let (c_alg, r_alg) = algebraic_circle(&z)?;
    let (mut center, radius) = geometric_circle(&z, c_alg, r_alg);

    // a passive resonance turns clockwise; mirror anticlockwise data
    let mut theta: Vec<f64> = z.iter().map(|p| (p - center).arg()).collect();
    unwrap(&mut theta);
    let mirrored = theta[m - 1] > theta[0];
    if mirrored {
        for p in &mut z {
            *p = p.conj();
        }
        center = center.conj();
        theta = z.iter().map(|p| (p - center).arg()).collect();
        unwrap(&mut theta);
    }

    // steepest phase slope marks the resonance
    let (mut k_best, mut slope_best) = (1, 0.0f64);
    for k in 1..m - 1 {
        let s = (theta[k + 1] - theta[k - 1]) / (f[k + 1] - f[k - 1]);
        if s.abs() > slope_best.abs() {
            k_best = k;
            slope_best = s;
        }
    }
    let f0_guess = f[k_best];
    // dθ/df at f0 is −4Q/f0
    let q_guess = (slope_best.abs() * f0_guess / 4.0).max(1.0);
    let width = f0_guess / q_guess;
    let phase = minimize(
        |p, out| {
            for k in 0..m {
                let x = 2.0 * p[1] * (f[k] - p[2]) / p[2];
                out[k] = p[0] - 2.0 * x.atan() - theta[k];
            }
        },
        &[theta[k_best], q_guess, f0_guess],
        m,
        &[1.0, q_guess, width],
        &opts(),
    );
    let [theta0, q_phase, f0_phase] = [phase.params[0], phase.params[1].abs(), phase.params[2]];
    if !(q_phase > 0.0) || !f0_phase.is_finite() {
        return Err(ResonatorError::FitFailed("phase fit".into()));
    }

    // joint complex fit: bg0 + bg1·(f − f0) + A/(1 + 2iQ(f − f0)/f0)
    let a0 = C64::from_polar(2.0 * radius, theta0);
    let bg0 = center - a0 / 2.0;
    let fc = f0_phase;
    let model = |p: &[f64], fk: f64| {
        let x = 2.0 * p[6] * (fk - p[7]) / p[7];
        C64::new(p[0], p[1]) + C64::new(p[2], p[3]) * (fk - fc) + C64::new(p[4], p[5]) / C64::new(1.0, x)
    };
    let span = f[m - 1] - f[0];
    let scale = radius.max(bg0.norm());
    let p0 = [bg0.re, bg0.im, 0.0, 0.0, a0.re, a0.im, q_phase, f0_phase];
    let full = minimize(
        |p, out| {
            for k in 0..m {
                let d = model(p, f[k]) - z[k];
                out[2 * k] = d.re;
                out[2 * k + 1] = d.im;
            }
        },
        &p0,
        2 * m,
        &[scale, scale, scale / span, scale / span, radius, radius, q_phase, f0_phase / q_phase],
        &opts(),
    );
    let p = if full.cost.is_finite() && full.params[6] > 0.0 && full.params[7] > 0.0 {
        full.params
    } else {
        p0.to_vec()
    };
    let residual = (0..m)
        .map(|k| (model(&p, f[k]) - z[k]).norm_sqr())
        .sum::<f64>();
    let residual = (residual / m as f64).sqrt();
    let bg = C64::new(p[0], p[1]) + C64::new(p[2], p[3]) * (p[7] - fc);
    let amp = C64::new(p[4], p[5]);
    let mut c = bg + amp / 2.0;
    if mirrored {
        c = c.conj();
    }
    let fit = QCircleFit {
        f0: p[7],
        q_loaded: p[6],
        center: [c.re, c.im],
        radius: amp.norm() / 2.0,
        residual,
        background: bg.norm(),
    };
    if !(fit.radius > 0.0) || !(fit.q_loaded > 0.0) {
        return Err(ResonatorError::CircleFitDegenerate);
    }
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rng::substream;
    use crate::resonator::{
        find_modes, linear_grid, synth_s21_modesum, Background, FindModesOptions, ResonatorMode,
        ResonatorModeSet,
    };
    use rand_distr::{Distribution, Normal};

    fn single(f0: f64, q: f64, amp: C64, bg: Background) -> ResonatorModeSet {
        ResonatorModeSet::new(vec![ResonatorMode::new(f0, q, amp).unwrap()], bg)
    }

    fn around(f0: f64, q: f64, halfwidths: f64, n: usize) -> Vec<f64> {
        let w = f0 / (2.0 * q) * halfwidths;
        (0..n).map(|i| f0 - w + 2.0 * w * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn noiseless_recovers_f0_and_q() {
        let ms = single(104.8, 8505.2, C64::new(0.6, 0.2), Background::default());
        let rec = synth_s21_modesum(&ms, &around(104.8, 8505.2, 6.0, 200)).unwrap();
        let fit = qcircle_fit(&rec, (0, 199)).unwrap();
        assert!((fit.f0 / 104.8 - 1.0).abs() < 1e-4);
        assert!((fit.q_loaded / 8505.2 - 1.0).abs() < 1e-4);
        assert!((fit.radius - C64::new(0.6, 0.2).norm() / 2.0).abs() < 1e-6);
        assert!(fit.residual < 1e-9);
    }

    #[test]
    fn handles_background_slope_and_mirrored_rotation() {
        let bg = Background {
            offset: C64::new(0.1, -0.05),
            slope: C64::new(0.5, 0.2),
            f_ref: 104.8,
        };
        let ms = single(104.8, 5500.0, C64::new(-0.3, 0.4), bg);
        let mut rec = synth_s21_modesum(&ms, &around(104.8, 5500.0, 8.0, 120)).unwrap();
        let fit = qcircle_fit(&rec, (0, 119)).unwrap();
        assert!((fit.q_loaded / 5500.0 - 1.0).abs() < 1e-4, "{fit:?}");
        for s in &mut rec.s21 {
            *s = s.conj();
        }
        let fit = qcircle_fit(&rec, (0, 119)).unwrap();
        assert!((fit.q_loaded / 5500.0 - 1.0).abs() < 1e-4, "{fit:?}");
        assert!((fit.f0 / 104.8 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn closure_over_q_range() {
        for q in [1e3, 3e3, 1e4, 3e4, 1e5] {
            let ms = single(105.0, q, C64::new(0.8, 0.0), Background::default());
            let rec = synth_s21_modesum(&ms, &around(105.0, q, 6.0, 80)).unwrap();
            let fit = qcircle_fit(&rec, (0, 79)).unwrap();
            assert!((fit.q_loaded / q - 1.0).abs() < 1e-3, "Q={q}: {fit:?}");
            assert!((fit.f0 / 105.0 - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn noisy_fit_within_two_percent() {
        let ms = single(104.8, 8505.2, C64::new(1.0, 0.0), Background::default());
        let clean = synth_s21_modesum(&ms, &around(104.8, 8505.2, 6.0, 200)).unwrap();
        let noise = Normal::new(0.0, 1e-3).unwrap();
        let mut errs = Vec::new();
        for seed in 0..30 {
            let mut rec = clean.clone();
            let mut rng = substream(seed, 1, 0);
            for s in &mut rec.s21 {
                *s += C64::new(noise.sample(&mut rng), noise.sample(&mut rng));
            }
            let fit = qcircle_fit(&rec, (0, 199)).unwrap();
            errs.push((fit.q_loaded / 8505.2 - 1.0).abs());
        }
        errs.sort_by(f64::total_cmp);
        assert!(errs[28] < 0.02, "{errs:?}");
    }

    #[test]
    fn windows_from_find_modes() {
        let modes = [(102.9, 5500.0), (104.5, 7800.0), (106.3, 8500.0)];
        let ms = ResonatorModeSet::new(
            modes
                .iter()
                .map(|&(f, q)| ResonatorMode::new(f, q, C64::new(0.7, 0.0)).unwrap())
                .collect(),
            Background::default(),
        );
        let rec = synth_s21_modesum(&ms, &linear_grid(102.0, 107.0, 0.0005)).unwrap();
        let c = find_modes(&rec, &FindModesOptions::default());
        assert_eq!(c.len(), 3);
        for (cand, &(f, q)) in c.iter().zip(&modes) {
            let fit = qcircle_fit(&rec, cand.window).unwrap();
            assert!((fit.q_loaded / q - 1.0).abs() < 0.02, "{fit:?}");
            assert!((fit.f0 - f).abs() < 1e-3 * f / q);
        }
    }

    #[test]
    fn collinear_points_are_degenerate() {
        let freqs = linear_grid(100.0, 101.0, 0.05);
        let s21 = freqs.iter().map(|&f| C64::new(f - 100.0, 2.0 * (f - 100.0))).collect();
        let rec = SParamRecord::new(freqs, s21, "line");
        assert_eq!(qcircle_fit(&rec, (0, 20)), Err(ResonatorError::CircleFitDegenerate));
    }

    #[test]
    fn small_window_rejected() {
        let freqs = linear_grid(100.0, 101.0, 0.1);
        let rec = SParamRecord::new(freqs.clone(), vec![C64::new(1.0, 0.0); freqs.len()], "t");
        assert!(matches!(qcircle_fit(&rec, (0, 5)), Err(ResonatorError::InsufficientData(_))));
    }

    #[test]
    fn unloaded_q_needs_partial_coupling() {
        let fit = QCircleFit {
            f0: 100.0,
            q_loaded: 5000.0,
            center: [0.0, 0.0],
            radius: 0.25,
            residual: 0.0,
            background: 1.0,
        };
        assert!((fit.q_unloaded().unwrap() - 10000.0).abs() < 1e-9);
    }
}
