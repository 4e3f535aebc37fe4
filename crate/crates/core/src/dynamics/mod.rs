//! Triplet population and coherence dynamics: the optical-cycle rate
//! model (CW steady states), Lindblad propagation for pulsed drive, Rabi
//! traces and their damped-cosine fits.

mod fit;
mod lindblad;
mod rabi;
mod rates;

use thiserror::Error;

use crate::numeric::ode::OdeError;

pub use fit::{fit_rabi, RabiFit};
pub use lindblad::{
    diagonal_state, ket_bra, lindblad_propagate, validate_density_matrix, CMat, CollapseOperator,
    DensityTrajectory, LindbladDiagnostics,
};
pub use rabi::{
    pulsed_collapse_operators, rabi_trace, rotating_frame_hamiltonian, saturation_rate, DriveSpec,
    RabiTrace, Readout, SINK,
};
pub use rates::{
    build_rate_matrix, propagate_populations, spectral_gap, steady_state, Level,
    PopulationTrajectory, Populations, RateMatrix, TripletRateParams, N_LEVELS,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("invalid rate `{0}` = {1} (rates must be finite and ≥ 0)")]
    InvalidRate(&'static str, f64),
    #[error("branching ratios sum to {0}, expected 1")]
    InvalidBranching(f64),
    #[error("rate model has {0} closed classes reachable from S0; steady state is not unique")]
    DegenerateChain(usize),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid drive: {0}")]
    InvalidDrive(String),
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
    #[error("no oscillation detected above the noise floor")]
    NoOscillationDetected,
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Integrator(#[from] OdeError),
}
