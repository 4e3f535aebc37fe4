//! Spin-1 triplet: operators, zero-field-splitting and spin–strain
//! Hamiltonians, eigensystems and transition tables.
//!
//! Energies are in h·MHz (ordinary frequency). The zero-field basis is
//! `{|Tx⟩, |Ty⟩, |Tz⟩}` with `|Ta⟩` the state annihilated by `S_a`; with this
//! choice the shear channels εxy, εxz, εyz couple exactly the xy, xz and yz
//! pairs and `Tx` sits at `D/3 − E`.

mod eigen;
mod hamiltonian;
mod operators;

use thiserror::Error;

pub use eigen::{
    eigensystem, resonance_detuning, transition_table, EigenSystem, Sublevel, TransitionPair,
    TransitionRecord, DEGENERACY_TOL,
};
pub use hamiltonian::{
    strain_hamiltonian, zero_field_unitary, zfs_hamiltonian, Basis, Hamiltonian, StrainCouplings,
    StrainField, ZfsParams,
};
pub use operators::{anticommutator, commutator, max_abs, spin1_operators, CMat3, SpinMatrices, C64};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpinError {
    #[error("matrix is not Hermitian (max |H − H†| = {0:e})")]
    NotHermitian(f64),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("unknown transition pair `{0}` (expected xy, xz or yz)")]
    UnknownPair(String),
}
