//! Lorentzian mode-sum model of a multimode resonator and the normalized
//! transfer function derived from it.

use super::record::{check_grid, SParamRecord};
use super::ResonatorError;
use crate::spin::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonatorMode {
    /// MHz
    pub f0: f64,
    pub q_loaded: f64,
    /// Peak complex transmission contributed by this mode.
    pub amplitude: C64,
}

impl ResonatorMode {
    pub fn new(f0: f64, q_loaded: f64, amplitude: C64) -> Result<Self, ResonatorError> {
        if !(f0 > 0.0) || !(q_loaded > 0.0) || !f0.is_finite() || !q_loaded.is_finite() {
            return Err(ResonatorError::InvalidMode { f0, q: q_loaded });
        }
        Ok(Self {
            f0,
            q_loaded,
            amplitude,
        })
    }

    pub fn linewidth(&self) -> f64 {
        self.f0 / self.q_loaded
    }

    pub fn response(&self, f: f64) -> C64 {
        let x = 2.0 * self.q_loaded * (f - self.f0) / self.f0;
        self.amplitude / C64::new(1.0, x)
    }
}

/// `offset + slope·(f − f_ref)`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Background {
    pub offset: C64,
    pub slope: C64,
    pub f_ref: f64,
}

impl Default for Background {
    fn default() -> Self {
        Self {
            offset: C64::new(0.0, 0.0),
            slope: C64::new(0.0, 0.0),
            f_ref: 0.0,
        }
    }
}

impl Background {
    pub fn at(&self, f: f64) -> C64 {
        self.offset + self.slope * (f - self.f_ref)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResonatorModeSet {
    pub modes: Vec<ResonatorMode>,
    pub background: Background,
}

impl ResonatorModeSet {
    pub fn new(modes: Vec<ResonatorMode>, background: Background) -> Self {
        let set = Self { modes, background };
        set.warn_if_crowded();
        set
    }

    fn warn_if_crowded(&self) {
        let max_width = self
            .modes
            .iter()
            .map(ResonatorMode::linewidth)
            .fold(0.0, f64::max);
        let mut f: Vec<f64> = self.modes.iter().map(|m| m.f0).collect();
        f.sort_by(f64::total_cmp);
        if let Some(min_sep) = f.windows(2).map(|w| w[1] - w[0]).reduce(f64::min) {
            if min_sep <= max_width / 100.0 {
                log::warn!("resonator modes separated by only {min_sep} MHz");
            }
        }
    }

    /// Mode contributions without background.
    pub fn resonant(&self, f: f64) -> C64 {
        self.modes
            .iter()
            .fold(C64::new(0.0, 0.0), |acc, m| acc + m.response(f))
    }

    pub fn s21(&self, f: f64) -> C64 {
        self.background.at(f) + self.resonant(f)
    }

    pub fn strongest(&self) -> Option<&ResonatorMode> {
        self.modes
            .iter()
            .max_by(|a, b| a.amplitude.norm().total_cmp(&b.amplitude.norm()))
    }
}

/// `s21(f) = background(f) + Σ_n A_n / (1 + 2i·Q_n·(f − f0_n)/f0_n)`.
pub fn synth_s21_modesum(ms: &ResonatorModeSet, freqs: &[f64]) -> Result<SParamRecord, ResonatorError> {
    check_grid(freqs)?;
    let s21 = freqs.iter().map(|&f| ms.s21(f)).collect();
    Ok(SParamRecord::new(freqs.to_vec(), s21, "mode-sum synthesis"))
}

/// `|s21 − background|` normalized to the largest on-centre response, so the
/// strongest mode's f0 maps to exactly 1. Interference between tails can push
/// the true maximum a hair off-centre; values there are clamped to 1.
#[derive(Debug, Clone)]
pub struct TransferFunction {
    modes: ResonatorModeSet,
    norm: f64,
}

impl TransferFunction {
    pub fn new(ms: &ResonatorModeSet) -> Result<Self, ResonatorError> {
        if ms.modes.is_empty() {
            return Err(ResonatorError::EmptyModeSet);
        }
        let norm = ms
            .modes
            .iter()
            .map(|m| ms.resonant(m.f0).norm())
            .fold(0.0, f64::max);
        if !(norm > 0.0) {
            return Err(ResonatorError::ZeroTransfer);
        }
        Ok(Self {
            modes: ms.clone(),
            norm,
        })
    }

    pub fn eval(&self, f: f64) -> f64 {
        (self.modes.resonant(f).norm() / self.norm).min(1.0)
    }

    pub fn modes(&self) -> &ResonatorModeSet {
        &self.modes
    }
}

pub fn transfer_function(ms: &ResonatorModeSet, f: f64) -> Result<f64, ResonatorError> {
    Ok(TransferFunction::new(ms)?.eval(f))
}
