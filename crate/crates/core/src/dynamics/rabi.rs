//! Pulsed drive of one triplet pair and the resulting Rabi traces.
//!
//! The coherent drive is a rotating-wave two-level block embedded in a
//! four-level space `{Tx, Ty, Tz, G}`, where `G` collects population that
//! has decayed out of the triplet manifold.

use serde::{Deserialize, Serialize};

use super::lindblad::{
    diagonal_state, ket_bra, lindblad_propagate, CMat, CollapseOperator, LindbladDiagnostics,
};
use super::rates::TripletRateParams;
use super::DynamicsError;
use crate::numeric::fingerprint;
use crate::numeric::ode::OdeOptions;
use crate::spin::{TransitionPair, C64};

/// Index of the decayed-population sink in the four-level pulsed model.
pub const SINK: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSpec {
    pub pair: TransitionPair,
    /// On-resonance Rabi frequency Ω₁ (MHz).
    pub rabi_frequency: f64,
    /// Drive minus transition frequency (MHz).
    pub detuning: f64,
    /// Coherence time of the driven pair (μs).
    pub t2: f64,
}

impl DriveSpec {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.rabi_frequency >= 0.0) || !self.rabi_frequency.is_finite() {
            return Err(DynamicsError::InvalidDrive(format!(
                "Rabi frequency must be ≥ 0 (got {})",
                self.rabi_frequency
            )));
        }
        if !(self.t2 > 0.0) {
            return Err(DynamicsError::InvalidDrive(format!("t2 must be > 0 (got {})", self.t2)));
        }
        if !self.detuning.is_finite() {
            return Err(DynamicsError::InvalidDrive("non-finite detuning".into()));
        }
        Ok(())
    }

    /// Incoherent transfer rate (μs⁻¹) equivalent to this drive in the
    /// strong-dephasing limit; see [`saturation_rate`].
    pub fn incoherent_rate(&self) -> f64 {
        saturation_rate(self.rabi_frequency, self.detuning, self.t2)
    }
}

/// `W = (2πΩ₁)²·T₂ / (2(1 + (2πδT₂)²))` in μs⁻¹ for Ω₁, δ in MHz and
/// T₂ in μs. This is the adiabatic elimination of the pair coherence from
/// the same Lindblad model used for pulsed dynamics.
pub fn saturation_rate(rabi_frequency: f64, detuning: f64, t2: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let w = two_pi * rabi_frequency;
    w * w * t2 / (2.0 * (1.0 + (two_pi * detuning * t2).powi(2)))
}

/// How final triplet populations become a scalar signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Readout {
    /// `sign·(p_a − p_b)` for the driven pair `(a, b)`.
    PairDifference { sign: f64 },
    /// `Σ w_i p_i` over `(Tx, Ty, Tz)`.
    Weighted { weights: [f64; 3] },
}

impl Default for Readout {
    fn default() -> Self {
        Readout::PairDifference { sign: 1.0 }
    }
}

impl Readout {
    pub fn evaluate(&self, pair: TransitionPair, triplet: &[f64]) -> f64 {
        match *self {
            Readout::PairDifference { sign } => {
                let (a, b) = pair.levels();
                sign * (triplet[a.index()] - triplet[b.index()])
            }
            Readout::Weighted { weights } => weights.iter().zip(triplet).map(|(w, p)| w * p).sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RabiTrace {
    /// Acoustic pulse lengths (μs).
    pub times: Vec<f64>,
    pub signal: Vec<f64>,
    pub drive: DriveSpec,
    pub model_hash: String,
    pub seed: Option<u64>,
    #[serde(skip)]
    pub diagnostics: LindbladDiagnostics,
}

impl RabiTrace {
    /// Build a trace from raw samples (e.g. measured data).
    pub fn from_samples(times: Vec<f64>, signal: Vec<f64>) -> Result<Self, DynamicsError> {
        if times.len() != signal.len() {
            return Err(DynamicsError::InvalidTrace("length mismatch".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(DynamicsError::InvalidTrace("times must be strictly increasing".into()));
        }
        if signal.iter().any(|s| !s.is_finite()) {
            return Err(DynamicsError::InvalidTrace("non-finite signal".into()));
        }
        Ok(Self {
            times,
            signal,
            drive: DriveSpec {
                pair: TransitionPair::Xy,
                rabi_frequency: 0.0,
                detuning: 0.0,
                t2: f64::INFINITY,
            },
            model_hash: String::new(),
            seed: None,
            diagnostics: LindbladDiagnostics::default(),
        })
    }
}

/// Rotating-frame Hamiltonian (MHz) of the driven pair in `{Tx, Ty, Tz, G}`.
pub fn rotating_frame_hamiltonian(drive: &DriveSpec) -> CMat {
    let (a, b) = drive.pair.levels();
    let (a, b) = (a.index(), b.index());
    let mut h = CMat::zeros(4, 4);
    h[(a, a)] = C64::new(-drive.detuning / 2.0, 0.0);
    h[(b, b)] = C64::new(drive.detuning / 2.0, 0.0);
    h[(a, b)] = C64::new(drive.rabi_frequency / 2.0, 0.0);
    h[(b, a)] = C64::new(drive.rabi_frequency / 2.0, 0.0);
    h
}

/// Dephasing of the driven pair at `1/t2`, bidirectional sublevel
/// relaxation and decay of each sublevel into the sink.
pub fn pulsed_collapse_operators(drive: &DriveSpec, rates: &TripletRateParams) -> Vec<CollapseOperator> {
    let (a, b) = drive.pair.levels();
    let (a, b) = (a.index(), b.index());
    let mut ops = Vec::new();
    if drive.t2.is_finite() {
        // L = P_a − P_b at rate r damps the a–b coherence at 2r
        let l = ket_bra(4, a, a) - ket_bra(4, b, b);
        ops.push(CollapseOperator::new(l, 0.5 / drive.t2));
    }
    for pair in TransitionPair::ALL {
        let (i, j) = pair.levels();
        let g = rates.relaxation(pair);
        ops.push(CollapseOperator::new(ket_bra(4, j.index(), i.index()), g));
        ops.push(CollapseOperator::new(ket_bra(4, i.index(), j.index()), g));
    }
    for (i, k) in rates.decay().iter().enumerate() {
        ops.push(CollapseOperator::new(ket_bra(4, SINK, i), *k));
    }
    ops
}

/// Signal versus acoustic pulse length τ.
///
/// Each τ starts from the ISC-polarized triplet (`diag(P_x, P_y, P_z)`),
/// is driven for τ, and the final populations are mapped through
/// `readout`. All τ share one propagation since the drive is constant.
pub fn rabi_trace(
    drive: &DriveSpec,
    rate_p: &TripletRateParams,
    tau_grid: &[f64],
    readout: &Readout,
    opts: &OdeOptions,
) -> Result<RabiTrace, DynamicsError> {
    drive.validate()?;
    rate_p.validate()?;
    if tau_grid.windows(2).any(|w| !(w[1] > w[0])) || tau_grid.first().is_some_and(|&t| t < 0.0) {
        return Err(DynamicsError::InvalidTrace("τ grid must be increasing and ≥ 0".into()));
    }
    let [px, py, pz] = rate_p.branch;
    let rho0 = diagonal_state(&[px, py, pz, 0.0]);
    let h = rotating_frame_hamiltonian(drive);
    let ops = pulsed_collapse_operators(drive, rate_p);
    let mut opts = *opts;
    if opts.max_step.is_none() && drive.rabi_frequency > 0.0 {
        opts.max_step = Some(0.1 / drive.rabi_frequency.max(drive.detuning.abs()));
    }
    let traj = lindblad_propagate(|_| h.clone(), &ops, &rho0, tau_grid, &opts)?;
    let signal = traj
        .populations()
        .iter()
        .map(|p| readout.evaluate(drive.pair, &p[..3]))
        .collect();
    Ok(RabiTrace {
        times: tau_grid.to_vec(),
        signal,
        drive: *drive,
        model_hash: fingerprint(&format!("{drive:?}|{rate_p:?}|{readout:?}")),
        seed: None,
        diagnostics: traj.diagnostics,
    })
}
