//! End-to-end experiment models: CW contrast spectra with inhomogeneous
//! broadening, pulsed sequences with photon counting, ensemble-size and
//! sensitivity estimates and the magnetic coupling-efficiency ratio.

mod cw;
mod ensemble;
mod pulsed;

use thiserror::Error;

use crate::dynamics::DynamicsError;
use crate::resonator::ResonatorError;
use crate::spin::SpinError;

pub use cw::{cw_spectrum, CwModel, Execution, InhomogeneitySpec, SweepMeta, SweepResult};
pub use ensemble::{
    contrast_scaling, coupling_eta, estimate_ensemble, shot_noise_snr, EnergyBudget,
    EnsembleEstimate, FilmSpec, OpticsSpec, ScaledContrast,
};
pub use pulsed::{pulse_sequence_run, PhotonRateMap, PulseCounts, PulseSequence, Window};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("invalid pulse sequence: {0}")]
    InvalidSequence(String),
    #[error("readout window is empty")]
    EmptyReadout,
    #[error("energy budget sums to zero")]
    ZeroEnergyBudget,
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Resonator(#[from] ResonatorError),
    #[error(transparent)]
    Spin(#[from] SpinError),
}
