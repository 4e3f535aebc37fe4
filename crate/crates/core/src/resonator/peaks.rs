//! Resonance search on |s21|.

use super::record::SParamRecord;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FindModesOptions {
    /// Minimum prominence as a fraction of the record's |s21| range.
    pub min_prominence_rel: f64,
    /// Minimum prominence in units of the estimated point-to-point noise.
    pub noise_sigmas: f64,
}

impl Default for FindModesOptions {
    fn default() -> Self {
        Self {
            min_prominence_rel: 0.05,
            noise_sigmas: 8.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeCandidate {
    /// Refined peak frequency (MHz).
    pub f0: f64,
    pub index: usize,
    pub peak: f64,
    pub prominence: f64,
    /// Inclusive index range suggested for a Q-circle fit.
    pub window: (usize, usize),
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

/// Local maxima of |s21| whose topographic prominence clears both a
/// relative threshold and a noise threshold (MAD of first differences).
pub fn find_modes(rec: &SParamRecord, opts: &FindModesOptions) -> Vec<ModeCandidate> {
    let n = rec.len();
    if n < 16 || rec.s21.len() != n {
        log::warn!("find_modes needs ≥ 16 points (got {n})");
        return Vec::new();
    }
    let mag = rec.magnitude();
    let (lo, hi) = mag
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &m| (a.min(m), b.max(m)));
    let diffs: Vec<f64> = mag.windows(2).map(|w| w[1] - w[0]).collect();
    let med = median(diffs.clone());
    let mad = median(diffs.iter().map(|d| (d - med).abs()).collect());
    let sigma = 1.4826 * mad / std::f64::consts::SQRT_2;
    let threshold = (opts.min_prominence_rel * (hi - lo))
        .max(opts.noise_sigmas * sigma)
        .max(1e-12 * hi.abs());
    if !(hi - lo > threshold) {
        return Vec::new();
    }

    let mut out = Vec::new();
    let mut i = 1;
    while i < n - 1 {
        if !(mag[i] > mag[i - 1]) {
            i += 1;
            continue;
        }
        // a plateau counts once, at its lowest-frequency point
        let mut j = i;
        while j + 1 < n && mag[j + 1] == mag[i] {
            j += 1;
        }
        if j + 1 >= n || !(mag[j + 1] < mag[i]) {
            i = j + 1;
            continue;
        }
        let peak = mag[i];
        let (mut l, mut left_min) = (i, peak);
        while l > 0 && mag[l - 1] <= peak {
            l -= 1;
            left_min = left_min.min(mag[l]);
        }
        let (mut r, mut right_min) = (j, peak);
        while r + 1 < n && mag[r + 1] <= peak {
            r += 1;
            right_min = right_min.min(mag[r]);
        }
        let prominence = peak - left_min.max(right_min);
        if prominence > threshold {
            out.push(candidate(rec, &mag, i, prominence));
        }
        i = j + 1;
    }
    out
}

fn candidate(rec: &SParamRecord, mag: &[f64], i: usize, prominence: f64) -> ModeCandidate {
    let n = mag.len();
    let half = mag[i] - prominence / 2.0;
    let mut l = i;
    while l > 0 && mag[l] > half {
        l -= 1;
    }
    let mut r = i;
    while r + 1 < n && mag[r] > half {
        r += 1;
    }
    let hw = ((r - l) / 2).max(1);
    let reach = (3 * hw).max(8);
    let window = (i.saturating_sub(reach), (i + reach).min(n - 1));

    // parabola through the three power samples around the maximum
    let f = &rec.freqs;
    let mut f0 = f[i];
    if i > 0 && i + 1 < n {
        let (y0, y1, y2) = (mag[i - 1].powi(2), mag[i].powi(2), mag[i + 1].powi(2));
        let denom = y0 - 2.0 * y1 + y2;
        if denom < 0.0 {
            let shift = 0.5 * (y0 - y2) / denom;
            if shift.abs() <= 1.0 {
                let step = if shift >= 0.0 { f[i + 1] - f[i] } else { f[i] - f[i - 1] };
                f0 = f[i] + shift * step;
            }
        }
    }
    ModeCandidate {
        f0,
        index: i,
        peak: mag[i],
        prominence,
        window,
    }
}
