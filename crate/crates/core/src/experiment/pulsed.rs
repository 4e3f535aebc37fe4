//! Pulsed sequence: laser polarization, acoustic pulse of length τ, then a
//! photon-counting readout window, repeated.
//!
//! Each repetition starts from the ground state. Dark intervals evolve
//! under the rate model without pumping. During the acoustic pulse the
//! triplet block evolves coherently; singlet population is parked in the
//! sink level of the pulsed model and returned to `S0` afterwards.
//! Populations are held fixed over the readout window.

use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::dynamics::{
    build_rate_matrix, lindblad_propagate, pulsed_collapse_operators, rotating_frame_hamiltonian,
    propagate_populations, CMat, DriveSpec, Level, LindbladDiagnostics, Populations,
    TripletRateParams, SINK,
};
use crate::numeric::ode::OdeOptions;
use crate::numeric::rng::substream;
use crate::spin::{TransitionPair, C64};

/// `(start, duration)` in μs from the start of a repetition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub start: f64,
    pub duration: f64,
}

impl Window {
    pub fn end(&self) -> f64 {
        self.start + self.duration
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSequence {
    pub laser: Window,
    pub acoustic: Window,
    pub readout: Window,
    pub repetitions: usize,
}

impl Default for PulseSequence {
    fn default() -> Self {
        Self {
            laser: Window {
                start: 0.0,
                duration: 2.0,
            },
            acoustic: Window {
                start: 2.1,
                duration: 0.0,
            },
            readout: Window {
                start: 2.2,
                duration: 0.5,
            },
            repetitions: 1000,
        }
    }
}

impl PulseSequence {
    pub fn with_tau(&self, tau: f64) -> Self {
        let shift = tau - self.acoustic.duration;
        Self {
            acoustic: Window {
                duration: tau,
                ..self.acoustic
            },
            readout: Window {
                start: self.readout.start + shift,
                ..self.readout
            },
            ..*self
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        for (name, w) in [("laser", self.laser), ("acoustic", self.acoustic), ("readout", self.readout)] {
            if !(w.start >= 0.0) || !(w.duration >= 0.0) || !w.end().is_finite() {
                return Err(ExperimentError::InvalidSequence(format!("{name} window {w:?}")));
            }
        }
        if self.readout.duration == 0.0 {
            return Err(ExperimentError::EmptyReadout);
        }
        if self.acoustic.start < self.laser.end() {
            return Err(ExperimentError::InvalidSequence(
                "acoustic pulse must start after the laser pulse ends".into(),
            ));
        }
        if self.readout.start < self.acoustic.end() {
            log::warn!("readout window overlaps the acoustic pulse; reading populations at pulse end");
        }
        Ok(())
    }
}

/// Mean detected photon rate (counts/μs) as a linear function of the
/// populations `(S0, S1, Tx, Ty, Tz)`, plus a constant background.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhotonRateMap {
    pub weights: [f64; 5],
    pub background: f64,
}

impl Default for PhotonRateMap {
    /// Placeholder: bright singlets, sublevel-dependent dim triplets.
    fn default() -> Self {
        Self {
            weights: [1.0, 1.0, 0.2, 0.6, 0.9],
            background: 0.0,
        }
    }
}

impl PhotonRateMap {
    pub fn rate(&self, p: &Populations) -> f64 {
        self.weights.iter().zip(p).map(|(w, p)| w * p).sum::<f64>() + self.background
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseCounts {
    pub per_repetition: Vec<u64>,
    pub total: u64,
    /// Expected counts per repetition.
    pub expected: f64,
    /// Populations at the start of the readout window.
    pub populations: Populations,
    pub diagnostics: LindbladDiagnostics,
}

fn dark_evolve(
    rates: &TripletRateParams,
    p: Populations,
    dt: f64,
    opts: &OdeOptions,
) -> Result<Populations, ExperimentError> {
    if dt <= 0.0 {
        return Ok(p);
    }
    let m = build_rate_matrix(&rates.with_pump(0.0), 0.0, TransitionPair::Xy)?;
    let traj = propagate_populations(&m, &p, &[dt], opts)?;
    Ok(traj.populations[0])
}

/// Populations at readout for one repetition (deterministic).
fn readout_populations(
    seq: &PulseSequence,
    drive: &DriveSpec,
    rates: &TripletRateParams,
    opts: &OdeOptions,
) -> Result<(Populations, LindbladDiagnostics), ExperimentError> {
    let mut p: Populations = [1.0, 0.0, 0.0, 0.0, 0.0];
    if seq.laser.duration > 0.0 {
        let m = build_rate_matrix(rates, 0.0, drive.pair)?;
        p = propagate_populations(&m, &p, &[seq.laser.duration], opts)?.populations[0];
    }
    p = dark_evolve(rates, p, seq.acoustic.start - seq.laser.end(), opts)?;

    let mut diag = LindbladDiagnostics::default();
    if seq.acoustic.duration > 0.0 {
        let t0 = Level::Tx as usize;
        let mut rho0 = CMat::zeros(4, 4);
        for i in 0..3 {
            rho0[(i, i)] = C64::new(p[t0 + i], 0.0);
        }
        let parked = p[Level::S0 as usize] + p[Level::S1 as usize];
        rho0[(SINK, SINK)] = C64::new(parked, 0.0);
        let h = rotating_frame_hamiltonian(drive);
        let ops = pulsed_collapse_operators(drive, rates);
        let mut o = *opts;
        if o.max_step.is_none() && drive.rabi_frequency > 0.0 {
            o.max_step = Some(0.1 / drive.rabi_frequency.max(drive.detuning.abs()));
        }
        let traj = lindblad_propagate(|_| h.clone(), &ops, &rho0, &[seq.acoustic.duration], &o)?;
        diag = traj.diagnostics;
        let rho = &traj.states[0];
        p = [
            rho[(SINK, SINK)].re,
            0.0,
            rho[(0, 0)].re,
            rho[(1, 1)].re,
            rho[(2, 2)].re,
        ];
    }
    p = dark_evolve(rates, p, seq.readout.start - seq.acoustic.end(), opts)?;
    Ok((p, diag))
}

/// Photon counts per repetition for one sequence. Repetition `k` draws from
/// the substream `(seed, 0, k)`.
pub fn pulse_sequence_run(
    seq: &PulseSequence,
    drive: &DriveSpec,
    rates: &TripletRateParams,
    map: &PhotonRateMap,
    seed: u64,
) -> Result<PulseCounts, ExperimentError> {
    seq.validate()?;
    drive.validate()?;
    rates.validate()?;
    let (populations, diagnostics) = readout_populations(seq, drive, rates, &OdeOptions::default())?;
    let expected = map.rate(&populations) * seq.readout.duration;
    if !(expected >= 0.0) || !expected.is_finite() {
        return Err(ExperimentError::InvalidSpec(format!("photon rate map gives mean {expected}")));
    }
    let poisson = (expected > 0.0)
        .then(|| Poisson::new(expected))
        .transpose()
        .map_err(|e| ExperimentError::InvalidSpec(e.to_string()))?;
    let per_repetition: Vec<u64> = (0..seq.repetitions)
        .map(|k| match &poisson {
            Some(d) => d.sample(&mut substream(seed, 0, k as u32)) as u64,
            None => 0,
        })
        .collect();
    Ok(PulseCounts {
        total: per_repetition.iter().sum(),
        per_repetition,
        expected,
        populations,
        diagnostics,
    })
}
