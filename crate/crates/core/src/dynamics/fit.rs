//! Damped-cosine fit of Rabi traces:
//! `offset + amplitude·exp(−decay·t)·cos(2π·omega_r·t + phase)`.

use serde::{Deserialize, Serialize};

use super::rabi::RabiTrace;
use super::DynamicsError;
use crate::numeric::lm::{minimize, LmOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RabiFit {
    /// MHz
    pub omega_r: f64,
    /// μs⁻¹
    pub decay_rate: f64,
    /// rad, in (−π, π]
    pub phase: f64,
    pub offset: f64,
    pub amplitude: f64,
    pub residual_rms: f64,
}

impl RabiFit {
    pub fn model(&self, t: f64) -> f64 {
        damped_cosine(&[self.offset, self.amplitude, self.decay_rate, self.omega_r, self.phase], t)
    }
}

fn damped_cosine(p: &[f64], t: f64) -> f64 {
    p[0] + p[1] * (-p[2] * t).exp() * (2.0 * std::f64::consts::PI * p[3] * t + p[4]).cos()
}

/// Peak-to-median ratio the periodogram must exceed.
const MIN_PEAK_RATIO: f64 = 8.0;

fn periodogram_power(t: &[f64], y: &[f64], f: f64) -> f64 {
    let w = 2.0 * std::f64::consts::PI * f;
    let (mut c, mut s) = (0.0, 0.0);
    for (ti, yi) in t.iter().zip(y) {
        c += yi * (w * ti).cos();
        s += yi * (w * ti).sin();
    }
    c * c + s * s
}

/// Best `(offset, a, b)` for `offset + a·cos(2πft) + b·sin(2πft)`.
fn linear_phase_fit(t: &[f64], y: &[f64], f: f64) -> Option<[f64; 3]> {
    let w = 2.0 * std::f64::consts::PI * f;
    let mut ata = nalgebra::Matrix3::<f64>::zeros();
    let mut aty = nalgebra::Vector3::<f64>::zeros();
    for (ti, yi) in t.iter().zip(y) {
        let row = nalgebra::Vector3::new(1.0, (w * ti).cos(), (w * ti).sin());
        ata += row * row.transpose();
        aty += row * *yi;
    }
    ata.lu().solve(&aty).map(|v| [v[0], v[1], v[2]])
}

pub fn fit_rabi(trace: &RabiTrace) -> Result<RabiFit, DynamicsError> {
    let t = &trace.times;
    let y = &trace.signal;
    let n = t.len();
    if n < 8 || y.len() != n {
        return Err(DynamicsError::InvalidTrace(format!("need ≥ 8 points, got {n}")));
    }
    let span = t[n - 1] - t[0];
    if !(span > 0.0) {
        return Err(DynamicsError::InvalidTrace("zero time span".into()));
    }
    let mean = y.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = y.iter().map(|v| v - mean).collect();
    let var = centered.iter().map(|v| v * v).sum::<f64>() / n as f64;
    if var.sqrt() <= 1e-12 * (1.0 + mean.abs()) {
        return Err(DynamicsError::NoOscillationDetected);
    }

    let mut dts: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    dts.sort_by(f64::total_cmp);
    let f_nyq = 0.5 / dts[dts.len() / 2];
    let df = 1.0 / (span * 16.0);
    let f_lo = 0.5 / span;
    let mut freqs = Vec::new();
    let mut f = f_lo;
    while f <= f_nyq {
        freqs.push(f);
        f += df;
    }
    if freqs.len() < 3 {
        return Err(DynamicsError::NoOscillationDetected);
    }
    let power: Vec<f64> = freqs.iter().map(|&f| periodogram_power(t, &centered, f)).collect();
    let (ipk, &ppk) = power
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    let mut sorted = power.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    if !(ppk > MIN_PEAK_RATIO * median) {
        return Err(DynamicsError::NoOscillationDetected);
    }

    // golden-section refinement of the periodogram peak
    let (mut a, mut b) = (
        freqs[ipk.saturating_sub(1)],
        freqs[(ipk + 1).min(freqs.len() - 1)],
    );
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if periodogram_power(t, &centered, c) > periodogram_power(t, &centered, d) {
            b = d;
        } else {
            a = c;
        }
    }
    let f0 = 0.5 * (a + b);
    let [off0, ca, sb] = linear_phase_fit(t, y, f0).ok_or(DynamicsError::NoOscillationDetected)?;
    let amp0 = ca.hypot(sb);
    let phase0 = (-sb).atan2(ca);

    // fit with time measured from the first sample, then shift back
    let t0 = t[0];
    let ts: Vec<f64> = t.iter().map(|v| v - t0).collect();
    let p0 = [off0, amp0, 0.0, f0, phase0 + 2.0 * std::f64::consts::PI * f0 * t0];
    let scales = [amp0.max(mean.abs()).max(1e-12), amp0.max(1e-12), 1.0 / span, 1.0 / span, 1.0];
    let res = minimize(
        |p, out| {
            for i in 0..n {
                out[i] = damped_cosine(p, ts[i]) - y[i];
            }
        },
        &p0,
        n,
        &scales,
        &LmOptions::default(),
    );
    let mut p = res.params;
    // normalise: positive amplitude and frequency, phase referred to t = 0
    if p[3] < 0.0 {
        p[3] = -p[3];
        p[4] = -p[4];
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut amp_scale = (p[2] * t0).exp();
    if p[1] < 0.0 {
        p[1] = -p[1];
        p[4] += std::f64::consts::PI;
    }
    p[4] -= two_pi * p[3] * t0;
    if !amp_scale.is_finite() {
        amp_scale = 1.0;
    }
    p[1] *= amp_scale;
    let phase = wrap_phase(p[4]);
    let fit = RabiFit {
        offset: p[0],
        amplitude: p[1],
        decay_rate: p[2],
        omega_r: p[3],
        phase,
        residual_rms: (res.cost / n as f64).sqrt(),
    };
    // fewer than half a cycle in the window is drift, not an oscillation
    if !fit.omega_r.is_finite() || !fit.residual_rms.is_finite() || fit.omega_r * span < 0.5 {
        return Err(DynamicsError::NoOscillationDetected);
    }
    Ok(fit)
}

fn wrap_phase(p: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut w = p.rem_euclid(two_pi);
    if w > std::f64::consts::PI {
        w -= two_pi;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(f: impl Fn(f64) -> f64, n: usize, dt: f64, t0: f64) -> RabiTrace {
        let times: Vec<f64> = (0..n).map(|i| t0 + i as f64 * dt).collect();
        let signal = times.iter().map(|&t| f(t)).collect();
        RabiTrace::from_samples(times, signal).unwrap()
    }

    #[test]
    fn recovers_noiseless_cosine() {
        let tr = trace(|t| 0.3 + 0.5 * (2.0 * std::f64::consts::PI * 2.0 * t).cos(), 100, 0.02, 0.0);
        let fit = fit_rabi(&tr).unwrap();
        assert!((fit.omega_r - 2.0).abs() < 1e-6, "{fit:?}");
        assert!((fit.amplitude - 0.5).abs() < 1e-6);
        assert!((fit.offset - 0.3).abs() < 1e-6);
        assert!(fit.phase.abs() < 1e-6);
        assert!(fit.residual_rms < 1e-9);
    }

    #[test]
    fn recovers_damped_cosine_with_offset_time_origin() {
        let model = |t: f64| -0.1 + 0.8 * (-0.4 * t).exp() * (2.0 * std::f64::consts::PI * 1.3 * t + 0.7).cos();
        let tr = trace(model, 150, 0.03, 0.5);
        let fit = fit_rabi(&tr).unwrap();
        assert!((fit.omega_r - 1.3).abs() < 1e-6);
        assert!((fit.decay_rate - 0.4).abs() < 1e-6);
        assert!((fit.amplitude - 0.8).abs() < 1e-6);
        assert!((fit.phase - 0.7).abs() < 1e-6);
        assert!((fit.model(1.234) - model(1.234)).abs() < 1e-8);
    }

    #[test]
    fn constant_trace_has_no_oscillation() {
        let tr = trace(|_| 0.42, 50, 0.1, 0.0);
        assert_eq!(fit_rabi(&tr).unwrap_err(), DynamicsError::NoOscillationDetected);
    }

    #[test]
    fn exponential_drift_has_no_oscillation() {
        let tr = trace(|t| 0.6 * (-0.08 * t).exp(), 301, 0.01, 0.0);
        assert_eq!(fit_rabi(&tr).unwrap_err(), DynamicsError::NoOscillationDetected);
    }

    #[test]
    fn too_few_points_rejected() {
        let tr = trace(|t| t.cos(), 5, 0.1, 0.0);
        assert!(matches!(fit_rabi(&tr), Err(DynamicsError::InvalidTrace(_))));
    }
}
