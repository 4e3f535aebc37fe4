//! Run configuration in TOML.
//!
//! Loading order: built-in defaults, then the named preset, then the
//! user's document deep-merged on top. Unknown keys are rejected with the
//! full dotted path of the offending key.

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use super::IoError;
use crate::dynamics::{DriveSpec, Readout, TripletRateParams};
use crate::experiment::{
    CwModel, EnergyBudget, FilmSpec, InhomogeneitySpec, OpticsSpec, PhotonRateMap, PulseSequence,
};
use crate::numeric::fingerprint;
use crate::resonator::{
    strain_amplitude, Background, CavitySpec, ResonatorMode, ResonatorModeSet, ResonatorError,
    TransductionCalib,
};
use crate::spin::{
    eigensystem, strain_hamiltonian, zfs_hamiltonian, StrainCouplings, StrainField, TransitionPair,
    ZfsParams, C64,
};

pub const PRESETS: [&str; 2] = ["paper-appendix", "device-104p5"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub seed: u64,
    pub zfs: ZfsParams,
    pub couplings: StrainCouplings,
    pub strain_profile: StrainField,
    pub rates: TripletRateParams,
    pub drive: DriveConfig,
    pub resonator: ResonatorConfig,
    pub calib: TransductionCalib,
    pub inhomogeneity: InhomogeneityConfig,
    pub sweep: SweepConfig,
    pub rabi: RabiConfig,
    pub sequence: PulseSequence,
    pub photon_map: PhotonRateMap,
    pub synth: GridConfig,
    pub optics: OpticsSpec,
    pub film: FilmSpec,
    pub estimate: EstimateConfig,
    pub energy: EnergyBudget,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriveConfig {
    pub pair: TransitionPair,
    /// Coherence time of the driven pair (μs).
    pub t2_us: f64,
    pub readout: Readout,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    /// MHz
    pub f0: f64,
    pub q: f64,
    pub amplitude: f64,
    #[serde(default)]
    pub phase_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BackgroundConfig {
    pub offset_re: f64,
    pub offset_im: f64,
    pub slope_re: f64,
    pub slope_im: f64,
    pub f_ref: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResonatorConfig {
    pub modes: Vec<ModeConfig>,
    pub background: BackgroundConfig,
    pub cavity: CavitySpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InhomogeneityConfig {
    /// MHz
    pub sigma_e: f64,
    pub n_samples: usize,
}

/// Frequency grid in MHz, endpoints inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub f_start: f64,
    pub f_stop: f64,
    pub f_step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub f_start: f64,
    pub f_stop: f64,
    pub f_step: f64,
    pub power_dbm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RabiConfig {
    /// MHz
    pub f_drive: f64,
    pub power_dbm: f64,
    /// μs
    pub tau_start: f64,
    pub tau_stop: f64,
    pub tau_step: f64,
    pub powers_dbm: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimateConfig {
    /// Triplet fraction; the triplet count and SNR lines need it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_t: Option<f64>,
    /// Contrast per addressed triplet.
    pub c1: f64,
    /// Integration time (s).
    pub integration_s: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            preset: None,
            seed: 0,
            zfs: ZfsParams { d: 1400.0, e: 52.25 },
            couplings: StrainCouplings {
                g3: 1e6,
                ..StrainCouplings::default()
            },
            strain_profile: StrainField::shear_xy(1.0),
            rates: TripletRateParams::default(),
            drive: DriveConfig::default(),
            resonator: ResonatorConfig::default(),
            calib: TransductionCalib::default(),
            inhomogeneity: InhomogeneityConfig::default(),
            sweep: SweepConfig::default(),
            rabi: RabiConfig::default(),
            sequence: PulseSequence::default(),
            photon_map: PhotonRateMap::default(),
            synth: GridConfig {
                f_start: 102.0,
                f_stop: 107.0,
                f_step: 0.0005,
            },
            optics: OpticsSpec::default(),
            film: FilmSpec::default(),
            estimate: EstimateConfig::default(),
            energy: EnergyBudget {
                e_ext_mag: 5.07e-12,
                e_int_ela: 1.0 - 5.07e-12,
                ..EnergyBudget::default()
            },
        }
    }
}

impl Default for DriveConfig {
    fn default() -> Self {
        Self {
            pair: TransitionPair::Xy,
            t2_us: 5.0,
            readout: Readout::default(),
        }
    }
}

impl Default for ResonatorConfig {
    fn default() -> Self {
        let m = |f0, q, amplitude| ModeConfig {
            f0,
            q,
            amplitude,
            phase_deg: 0.0,
        };
        Self {
            modes: vec![
                m(102.9, 5500.0, 0.5),
                m(104.5, 7800.0, 1.0),
                m(104.8, 8505.2, 0.8),
                m(106.3, 8500.0, 0.6),
            ],
            background: BackgroundConfig::default(),
            cavity: CavitySpec::default(),
        }
    }
}

impl Default for InhomogeneityConfig {
    fn default() -> Self {
        Self {
            sigma_e: 0.0,
            n_samples: 1,
        }
    }
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            f_start: 100.0,
            f_stop: 110.0,
            f_step: 0.1,
            power_dbm: 0.0,
        }
    }
}

impl Default for RabiConfig {
    fn default() -> Self {
        Self {
            f_drive: 104.5,
            power_dbm: 0.0,
            tau_start: 0.0,
            tau_stop: 3.0,
            tau_step: 0.01,
            // one decade of power in eight steps
            powers_dbm: (0..8).map(|i| -10.0 + 10.0 * i as f64 / 7.0).collect(),
        }
    }
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self {
            f_t: None,
            c1: 1e-10,
            integration_s: 1.0,
        }
    }
}

fn preset_overlay(name: &str) -> Option<Table> {
    let text = match name {
        "paper-appendix" => "[zfs]\nd = 1400.0\ne = 50.0\n",
        // 2E on the 104.5 MHz drive frequency
        "device-104p5" => "[zfs]\nd = 1400.0\ne = 52.25\n",
        _ => return None,
    };
    Some(text.parse().expect("preset tables are valid TOML"))
}

fn deep_merge(base: &mut Table, over: Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => deep_merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Parse `text`, expand the preset (`preset_override` wins over the
/// document's own `preset` key) and validate.
pub fn load_config_with(text: &str, preset_override: Option<&str>) -> Result<RunConfig, IoError> {
    let user: Table = text.parse().map_err(|e: toml::de::Error| IoError::Config(e.to_string()))?;
    let doc_preset = match user.get("preset") {
        None => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => return Err(IoError::Config("preset: expected a string".into())),
    };
    let preset = preset_override.map(str::to_owned).or(doc_preset);

    let mut merged = Table::try_from(RunConfig::default()).map_err(|e| IoError::Config(e.to_string()))?;
    if let Some(name) = &preset {
        let overlay = preset_overlay(name).ok_or_else(|| {
            IoError::Config(format!("unknown preset `{name}` (available: {})", PRESETS.join(", ")))
        })?;
        deep_merge(&mut merged, overlay);
    }
    deep_merge(&mut merged, user);
    if let Some(name) = preset {
        merged.insert("preset".into(), Value::String(name));
    }

    let cfg: RunConfig = serde_path_to_error::deserialize(Value::Table(merged)).map_err(|e| {
        let path = e.path().to_string();
        IoError::Config(format!("{path}: {}", e.into_inner()))
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(text: &str) -> Result<RunConfig, IoError> {
    load_config_with(text, None)
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), IoError> {
        let bad = |m: String| Err(IoError::Config(m));
        self.zfs.validate().map_err(|e| IoError::Config(format!("zfs: {e}")))?;
        self.rates.validate().map_err(|e| IoError::Config(format!("rates: {e}")))?;
        self.calib.validate().map_err(|e| IoError::Config(format!("calib: {e}")))?;
        self.resonator
            .cavity
            .validate()
            .map_err(|e| IoError::Config(format!("resonator.cavity: {e}")))?;
        self.optics.validate().map_err(|e| IoError::Config(format!("optics: {e}")))?;
        self.film.validate().map_err(|e| IoError::Config(format!("film: {e}")))?;
        self.sequence.validate().map_err(|e| IoError::Config(format!("sequence: {e}")))?;
        self.mode_set().map_err(|e| IoError::Config(format!("resonator.modes: {e}")))?;
        if !(self.drive.t2_us > 0.0) {
            return bad(format!("drive.t2_us: must be > 0 (got {})", self.drive.t2_us));
        }
        if !(self.inhomogeneity.sigma_e >= 0.0) || self.inhomogeneity.n_samples == 0 {
            return bad("inhomogeneity: need sigma_e ≥ 0 and n_samples ≥ 1".into());
        }
        for (name, g) in [
            ("sweep", GridConfig { f_start: self.sweep.f_start, f_stop: self.sweep.f_stop, f_step: self.sweep.f_step }),
            ("synth", self.synth),
            ("rabi.tau", GridConfig { f_start: self.rabi.tau_start, f_stop: self.rabi.tau_stop, f_step: self.rabi.tau_step }),
        ] {
            if !(g.f_step > 0.0) || !(g.f_stop >= g.f_start) || !g.f_start.is_finite() || !g.f_stop.is_finite() {
                return bad(format!("{name}: need step > 0 and stop ≥ start"));
            }
        }
        if self.rabi.tau_start < 0.0 {
            return bad("rabi.tau_start: must be ≥ 0".into());
        }
        if let Some(f_t) = self.estimate.f_t {
            if !(0.0..=1.0).contains(&f_t) {
                return bad(format!("estimate.f_t: {f_t} outside [0, 1]"));
            }
        }
        Ok(())
    }

    /// Short stable digest of the canonical serialized form.
    pub fn hash(&self) -> String {
        fingerprint(&toml::to_string(self).expect("config always serializes"))
    }

    pub fn mode_set(&self) -> Result<ResonatorModeSet, ResonatorError> {
        let modes = self
            .resonator
            .modes
            .iter()
            .map(|m| ResonatorMode::new(m.f0, m.q, C64::from_polar(m.amplitude, m.phase_deg.to_radians())))
            .collect::<Result<Vec<_>, _>>()?;
        let b = &self.resonator.background;
        Ok(ResonatorModeSet::new(
            modes,
            Background {
                offset: C64::new(b.offset_re, b.offset_im),
                slope: C64::new(b.slope_re, b.slope_im),
                f_ref: b.f_ref,
            },
        ))
    }

    pub fn cw_model(&self) -> Result<CwModel, ResonatorError> {
        Ok(CwModel {
            zfs: self.zfs,
            couplings: self.couplings,
            rates: self.rates,
            modes: self.mode_set()?,
            calib: self.calib,
            strain_profile: self.strain_profile,
            t2_us: self.drive.t2_us,
        })
    }

    pub fn inhomogeneity_spec(&self) -> InhomogeneitySpec {
        InhomogeneitySpec {
            sigma_e: self.inhomogeneity.sigma_e,
            n_samples: self.inhomogeneity.n_samples,
            seed: self.seed,
        }
    }

    /// Drive of the configured pair at RF frequency `f` (MHz) and power
    /// `p_mw`: strain through the resonator transfer, Rabi frequency from the
    /// strain matrix element, detuning from the zero-field transition.
    pub fn drive_at(&self, f: f64, p_mw: f64) -> Result<DriveSpec, IoError> {
        let ms = self.mode_set().map_err(|e| IoError::Config(e.to_string()))?;
        let eps0 = strain_amplitude(p_mw, f, &ms, &self.calib);
        let h = strain_hamiltonian(&self.strain_profile.scaled(eps0), &self.couplings);
        let es = eigensystem(&zfs_hamiltonian(&self.zfs)).map_err(|e| IoError::Numeric(e.to_string()))?;
        Ok(DriveSpec {
            pair: self.drive.pair,
            rabi_frequency: es.matrix_element(&h, self.drive.pair).norm(),
            detuning: f - es.transition_frequency(self.drive.pair),
            t2: self.drive.t2_us,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_appendix_preset() {
        let cfg = load_config("preset = \"paper-appendix\"\n").unwrap();
        assert_eq!((cfg.zfs.d, cfg.zfs.e), (1400.0, 50.0));
    }

    #[test]
    fn device_preset_puts_xy_on_drive() {
        let cfg = load_config_with("", Some("device-104p5")).unwrap();
        let es = eigensystem(&zfs_hamiltonian(&cfg.zfs)).unwrap();
        assert!((es.transition_frequency(TransitionPair::Xy) - 104.5).abs() < 1e-9);
    }

    #[test]
    fn overrides_beat_preset() {
        let cfg = load_config("preset = \"paper-appendix\"\n[zfs]\ne = 40.0\n").unwrap();
        assert_eq!((cfg.zfs.d, cfg.zfs.e), (1400.0, 40.0));
        let cfg = load_config_with("preset = \"paper-appendix\"\n", Some("device-104p5")).unwrap();
        assert_eq!(cfg.zfs.e, 52.25);
    }

    #[test]
    fn unknown_key_names_its_path() {
        let err = load_config("[zfs]\nq = 1.0\n").unwrap_err().to_string();
        assert!(err.contains("zfs.q"), "{err}");
        let err = load_config("[rates]\nk_x = \"fast\"\n").unwrap_err().to_string();
        assert!(err.contains("rates.k_x"), "{err}");
        assert!(load_config("preset = \"nope\"\n").is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = load_config("").unwrap();
        let b = load_config("seed = 0\n").unwrap();
        let c = load_config("seed = 1\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn default_roundtrips_through_toml() {
        let cfg = RunConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(load_config(&text).unwrap(), cfg);
    }

    #[test]
    fn default_drive_is_resonant() {
        let cfg = RunConfig::default();
        let d = cfg.drive_at(104.5, 1.0).unwrap();
        assert!(d.detuning.abs() < 1e-9);
        assert!(d.rabi_frequency > 0.1 && d.rabi_frequency < 10.0, "{}", d.rabi_frequency);
    }
}
