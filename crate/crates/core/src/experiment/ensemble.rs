//! Closed-form estimates: addressed ensemble size, shot-noise SNR, linear
//! contrast scaling and the magnetic energy ratio η.

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::constants::AVOGADRO;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpticsSpec {
    pub wavelength_nm: f64,
    pub numerical_aperture: f64,
    /// Replaces the diffraction-limited radius when set (μm).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spot_radius_um: Option<f64>,
    /// Detected photon rate R (counts/s).
    pub detected_rate_cps: f64,
    #[serde(default)]
    pub note: String,
}

impl Default for OpticsSpec {
    fn default() -> Self {
        Self {
            wavelength_nm: 532.0,
            numerical_aperture: 0.40,
            spot_radius_um: None,
            detected_rate_cps: 1e6,
            note: "10x objective, diffraction-limited spot".into(),
        }
    }
}

impl OpticsSpec {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if !(self.wavelength_nm > 0.0) {
            return Err(ExperimentError::InvalidSpec(format!("wavelength {} nm", self.wavelength_nm)));
        }
        if !(self.numerical_aperture > 0.0 && self.numerical_aperture <= 1.0) {
            return Err(ExperimentError::InvalidSpec(format!(
                "numerical aperture {} outside (0, 1]",
                self.numerical_aperture
            )));
        }
        if self.spot_radius_um.is_some_and(|r| !(r > 0.0)) || !(self.detected_rate_cps >= 0.0) {
            return Err(ExperimentError::InvalidSpec("spot radius and photon rate must be positive".into()));
        }
        Ok(())
    }

    /// `0.61·λ/NA` unless overridden (μm).
    pub fn spot_radius(&self) -> f64 {
        self.spot_radius_um
            .unwrap_or(0.61 * self.wavelength_nm * 1e-3 / self.numerical_aperture)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilmSpec {
    pub thickness_um: f64,
    pub pentacene_fraction: f64,
    /// g/cm³
    pub mass_density: f64,
    /// g/mol
    pub molar_mass: f64,
}

impl Default for FilmSpec {
    fn default() -> Self {
        Self {
            thickness_um: 1.0,
            pentacene_fraction: 0.01,
            mass_density: 1.0,
            molar_mass: 270.0,
        }
    }
}

impl FilmSpec {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let ok = self.thickness_um > 0.0
            && self.mass_density > 0.0
            && self.molar_mass > 0.0
            && self.pentacene_fraction > 0.0
            && self.pentacene_fraction <= 1.0;
        if !ok {
            return Err(ExperimentError::InvalidSpec(format!("film {self:?}")));
        }
        Ok(())
    }

    /// Pentacene number density (m⁻³).
    pub fn number_density(&self) -> f64 {
        // g/cm³ → g/m³
        self.pentacene_fraction * (self.mass_density * 1e6 / self.molar_mass) * AVOGADRO
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleEstimate {
    /// μm
    pub r: f64,
    /// m³
    pub volume: f64,
    /// m⁻³
    pub n_pc: f64,
    pub n_molecules: f64,
    pub f_t: f64,
    pub n_triplets: f64,
}

pub fn estimate_ensemble(o: &OpticsSpec, f: &FilmSpec, f_t: f64) -> Result<EnsembleEstimate, ExperimentError> {
    o.validate()?;
    f.validate()?;
    if !(0.0..=1.0).contains(&f_t) {
        return Err(ExperimentError::InvalidSpec(format!("triplet fraction {f_t} outside [0, 1]")));
    }
    let r = o.spot_radius();
    let volume = std::f64::consts::PI * (r * 1e-6).powi(2) * f.thickness_um * 1e-6;
    let n_pc = f.number_density();
    let n_molecules = n_pc * volume;
    Ok(EnsembleEstimate {
        r,
        volume,
        n_pc,
        n_molecules,
        f_t,
        n_triplets: f_t * n_molecules,
    })
}

/// Photon-shot-noise limit `C·√(R·T)`.
pub fn shot_noise_snr(c: f64, rate_cps: f64, t_s: f64) -> f64 {
    c * (rate_cps.max(0.0) * t_s.max(0.0)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledContrast {
    pub c: f64,
    pub capped: bool,
}

/// `C = N_T·c1`, limited to `ceiling` (default 1).
pub fn contrast_scaling(n_t: f64, c1: f64, ceiling: Option<f64>) -> ScaledContrast {
    let cap = ceiling.unwrap_or(1.0);
    let c = n_t.max(0.0) * c1.max(0.0);
    if c > cap {
        ScaledContrast { c: cap, capped: true }
    } else {
        ScaledContrast { c, capped: false }
    }
}

/// Stored energies of the driven mode, any single unit.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyBudget {
    pub e_ext_mag: f64,
    pub e_int_ela: f64,
    pub e_int_kin: f64,
    pub e_int_ele: f64,
    pub e_int_mag: f64,
    pub e_ext_ele: f64,
}

impl EnergyBudget {
    fn total(&self) -> f64 {
        self.e_int_ela + self.e_int_kin + self.e_int_ele + self.e_int_mag + self.e_ext_ele + self.e_ext_mag
    }
}

/// External magnetic energy as a fraction of the total.
pub fn coupling_eta(b: &EnergyBudget) -> Result<f64, ExperimentError> {
    let parts = [b.e_ext_mag, b.e_int_ela, b.e_int_kin, b.e_int_ele, b.e_int_mag, b.e_ext_ele];
    if parts.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(ExperimentError::InvalidSpec("energies must be finite and ≥ 0".into()));
    }
    let total = b.total();
    if !(total > 0.0) {
        return Err(ExperimentError::ZeroEnergyBudget);
    }
    Ok(b.e_ext_mag / total)
}
