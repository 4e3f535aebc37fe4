//! Simulation and analysis toolkit for optically detected spin–acoustic
//! resonance of spin-1 molecular triplets driven by a multimode surface
//! acoustic wave resonator.
//!
//! * [`spin`]: triplet Hamiltonians, eigensystems and drive matrix elements
//! * [`dynamics`]: optical-cycle rate model, Lindblad propagation, Rabi traces
//! * [`resonator`]: S21 synthesis, peak search, Q-circle fits, strain transduction
//! * [`experiment`]: CW spectra, pulsed photon counting, ensemble and SNR estimates
//! * [`io`]: Touchstone files, run configuration, CSV/SVG output and the CLI

pub mod constants;
pub mod dynamics;
pub mod experiment;
pub mod io;
pub mod numeric;
pub mod resonator;
pub mod spin;
