use serde::{Deserialize, Serialize};

use super::modes::{ResonatorModeSet, TransferFunction};
use super::ResonatorError;

/// Linear-response strain calibration. Uncalibrated by default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransductionCalib {
    /// Strain at the strongest mode peak for `p_ref_mw`.
    pub kappa: f64,
    pub p_ref_mw: f64,
}

impl Default for TransductionCalib {
    fn default() -> Self {
        Self {
            kappa: 1e-6,
            p_ref_mw: 1.0,
        }
    }
}

impl TransductionCalib {
    pub fn validate(&self) -> Result<(), ResonatorError> {
        if !(self.kappa >= 0.0) || !(self.p_ref_mw > 0.0) {
            return Err(ResonatorError::InvalidCavity(format!(
                "calibration needs kappa ≥ 0 and p_ref > 0 (got {}, {})",
                self.kappa, self.p_ref_mw
            )));
        }
        Ok(())
    }

    /// `kappa·√(p/p_ref)·t(f)`
    pub fn strain(&self, p_rf_mw: f64, f: f64, tf: &TransferFunction) -> f64 {
        self.kappa * (p_rf_mw.max(0.0) / self.p_ref_mw).sqrt() * tf.eval(f)
    }
}

/// Strain amplitude ε0 for RF power `p_rf_mw` at drive frequency `f`. A mode
/// set with no transmission gives zero strain.
pub fn strain_amplitude(p_rf_mw: f64, f: f64, ms: &ResonatorModeSet, cal: &TransductionCalib) -> f64 {
    match TransferFunction::new(ms) {
        Ok(tf) => cal.strain(p_rf_mw, f, &tf),
        Err(_) => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resonator::{Background, ResonatorMode};
    use crate::spin::C64;

    fn ms() -> ResonatorModeSet {
        ResonatorModeSet::new(
            vec![
                ResonatorMode::new(104.5, 7800.0, C64::new(0.8, 0.1)).unwrap(),
                ResonatorMode::new(106.3, 8500.0, C64::new(0.3, 0.0)).unwrap(),
            ],
            Background::default(),
        )
    }

    #[test]
    fn calibration_point_and_zero_power() {
        let cal = TransductionCalib::default();
        assert_eq!(strain_amplitude(0.0, 104.5, &ms(), &cal), 0.0);
        assert!((strain_amplitude(1.0, 104.5, &ms(), &cal) - 1e-6).abs() < 1e-15);
    }

    #[test]
    fn square_root_law() {
        let cal = TransductionCalib {
            kappa: 3e-6,
            p_ref_mw: 2.0,
        };
        for f in [100.0, 104.5, 105.0, 106.3] {
            let a = strain_amplitude(0.7, f, &ms(), &cal);
            let b = strain_amplitude(2.8, f, &ms(), &cal);
            assert!((b / a - 2.0).abs() < 1e-14);
        }
    }
}
