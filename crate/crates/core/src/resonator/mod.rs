//! Multimode SAW resonator: S21 synthesis from a Lorentzian mode sum or a
//! one-dimensional transfer-matrix cavity, resonance search, Q-circle
//! fitting and RF-power to strain transduction.
//!
//! Frequencies are in MHz throughout.

mod cavity;
mod modes;
mod peaks;
mod qcircle;
mod record;
mod transduction;

use thiserror::Error;

pub use cavity::{synth_s21_cavity, CavitySpec, GratingSpec, IdtSpec};
pub use modes::{
    synth_s21_modesum, transfer_function, Background, ResonatorMode, ResonatorModeSet,
    TransferFunction,
};
pub use peaks::{find_modes, FindModesOptions, ModeCandidate};
pub use qcircle::{qcircle_fit, QCircleFit};
pub(crate) use record::check_grid;
pub use record::{linear_grid, SParamRecord};
pub use transduction::{strain_amplitude, TransductionCalib};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResonatorError {
    #[error("invalid mode (f0 = {f0}, Q = {q}); both must be positive")]
    InvalidMode { f0: f64, q: f64 },
    #[error("mode set is empty")]
    EmptyModeSet,
    #[error("all mode amplitudes are zero")]
    ZeroTransfer,
    #[error("frequency grid must be finite and strictly increasing")]
    NonMonotoneGrid,
    #[error("S-parameter arrays differ in length from the frequency grid")]
    LengthMismatch,
    #[error("non-finite S-parameter value")]
    NonFinite,
    #[error("non-passive section: {0}")]
    NonPassiveSection(String),
    #[error("invalid cavity: {0}")]
    InvalidCavity(String),
    #[error("fit window too small: {0}")]
    InsufficientData(String),
    #[error("circle fit is degenerate (points collinear or coincident)")]
    CircleFitDegenerate,
    #[error("fit did not converge: {0}")]
    FitFailed(String),
}
