use nalgebra::{SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use super::hamiltonian::{zero_field_unitary, Basis, Hamiltonian};
use super::operators::{CMat3, C64};
use super::SpinError;

/// Energies closer than this (MHz) are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sublevel {
    Tx,
    Ty,
    Tz,
}

impl Sublevel {
    pub const ALL: [Sublevel; 3] = [Sublevel::Tx, Sublevel::Ty, Sublevel::Tz];

    pub fn index(self) -> usize {
        match self {
            Sublevel::Tx => 0,
            Sublevel::Ty => 1,
            Sublevel::Tz => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransitionPair {
    Xy,
    Xz,
    Yz,
}

impl TransitionPair {
    pub const ALL: [TransitionPair; 3] = [TransitionPair::Xy, TransitionPair::Xz, TransitionPair::Yz];

    pub fn levels(self) -> (Sublevel, Sublevel) {
        match self {
            TransitionPair::Xy => (Sublevel::Tx, Sublevel::Ty),
            TransitionPair::Xz => (Sublevel::Tx, Sublevel::Tz),
            TransitionPair::Yz => (Sublevel::Ty, Sublevel::Tz),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TransitionPair::Xy => "xy",
            TransitionPair::Xz => "xz",
            TransitionPair::Yz => "yz",
        }
    }
}

impl std::str::FromStr for TransitionPair {
    type Err = SpinError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "xy" => Ok(TransitionPair::Xy),
            "xz" => Ok(TransitionPair::Xz),
            "yz" => Ok(TransitionPair::Yz),
            _ => Err(SpinError::UnknownPair(s.to_string())),
        }
    }
}

/// Eigen-decomposition of a triplet Hamiltonian.
///
/// `energies` are sorted in descending order; `states[i]` and `labels[i]`
/// belong to `energies[i]`. Each eigenvector is labeled by the Cartesian
/// triplet state it overlaps most (over all label permutations) and its
/// phase is fixed so that overlap is real and positive. Inside a
/// degenerate subspace the vectors are rotated onto the Cartesian states.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    pub energies: [f64; 3],
    pub states: [Vector3<C64>; 3],
    pub labels: [Sublevel; 3],
    pub basis: Basis,
    pub degenerate: bool,
}

impl EigenSystem {
    pub fn index_of(&self, level: Sublevel) -> usize {
        self.labels
            .iter()
            .position(|&l| l == level)
            .expect("labels form a permutation")
    }

    pub fn energy(&self, level: Sublevel) -> f64 {
        self.energies[self.index_of(level)]
    }

    pub fn state(&self, level: Sublevel) -> &Vector3<C64> {
        &self.states[self.index_of(level)]
    }

    pub fn transition_frequency(&self, pair: TransitionPair) -> f64 {
        let (a, b) = pair.levels();
        (self.energy(a) - self.energy(b)).abs()
    }

    /// `⟨a|H|b⟩` for the pair `(a, b)` (MHz).
    pub fn matrix_element(&self, op: &Hamiltonian, pair: TransitionPair) -> C64 {
        let op = op.to_basis(self.basis);
        let (a, b) = pair.levels();
        (self.state(a).adjoint() * op.matrix * self.state(b))[(0, 0)]
    }
}

fn cartesian_states(basis: Basis) -> CMat3 {
    match basis {
        Basis::Zeeman => zero_field_unitary(),
        Basis::ZeroField => CMat3::identity(),
    }
}

pub fn eigensystem(h: &Hamiltonian) -> Result<EigenSystem, SpinError> {
    let herm = h.hermiticity_error();
    if !(herm <= 1e-12 * h.norm().max(1.0)) {
        return Err(SpinError::NotHermitian(herm));
    }
    // symmetrise away the sub-tolerance anti-Hermitian residue
    let m = (h.matrix + h.matrix.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(m);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let energies = order.map(|i| eig.eigenvalues[i]);
    let mut states = order.map(|i| eig.eigenvectors.column(i).into_owned());

    let cart = cartesian_states(h.basis);
    let cart_cols: [Vector3<C64>; 3] = [0, 1, 2].map(|k| cart.column(k).into_owned());

    let mut degenerate = false;
    let mut start = 0;
    while start < 3 {
        let mut end = start + 1;
        while end < 3 && (energies[end - 1] - energies[end]).abs() < DEGENERACY_TOL {
            end += 1;
        }
        if end - start > 1 {
            degenerate = true;
            align_subspace(&mut states[start..end], &cart_cols);
        }
        start = end;
    }

    let labels = best_labels(&states, &cart_cols);
    for (v, label) in states.iter_mut().zip(labels) {
        let ov = (cart_cols[label.index()].adjoint() * *v)[(0, 0)];
        if ov.norm() > 1e-12 {
            *v *= ov.conj() / ov.norm();
        }
    }

    Ok(EigenSystem {
        energies,
        states,
        labels,
        basis: h.basis,
        degenerate,
    })
}

/// Replace an orthonormal basis of a degenerate subspace by the
/// Gram–Schmidt-orthonormalised projections of the Cartesian states that
/// overlap it most.
fn align_subspace(block: &mut [Vector3<C64>], cart: &[Vector3<C64>; 3]) {
    let k = block.len();
    let project = |c: &Vector3<C64>| -> Vector3<C64> {
        block
            .iter()
            .fold(Vector3::zeros(), |acc, v| acc + v * (v.adjoint() * c)[(0, 0)])
    };
    let mut proj: Vec<(usize, Vector3<C64>)> = cart.iter().map(project).enumerate().collect();
    proj.sort_by(|a, b| b.1.norm().total_cmp(&a.1.norm()).then(a.0.cmp(&b.0)));
    proj.truncate(k);
    proj.sort_by_key(|p| p.0);
    let mut basis: Vec<Vector3<C64>> = Vec::with_capacity(k);
    for (_, mut w) in proj {
        for b in &basis {
            let c = (b.adjoint() * w)[(0, 0)];
            w -= b * c;
        }
        let n = w.norm();
        if n < 1e-8 {
            // projection collapsed; keep the original basis
            return;
        }
        basis.push(w / C64::new(n, 0.0));
    }
    for (slot, v) in block.iter_mut().zip(basis) {
        *slot = v;
    }
}

fn best_labels(states: &[Vector3<C64>; 3], cart: &[Vector3<C64>; 3]) -> [Sublevel; 3] {
    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let w = |i: usize, c: usize| (cart[c].adjoint() * states[i])[(0, 0)].norm_sqr();
    let best = PERMS
        .iter()
        .max_by(|p, q| {
            let sp: f64 = (0..3).map(|i| w(i, p[i])).sum();
            let sq: f64 = (0..3).map(|i| w(i, q[i])).sum();
            // prefer the earlier permutation on ties
            sp.total_cmp(&sq).then(std::cmp::Ordering::Greater)
        })
        .expect("non-empty");
    best.map(|c| Sublevel::ALL[c])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub pair: TransitionPair,
    /// `|E_a − E_b|` (MHz)
    pub f_transition: f64,
    /// `|⟨a|H_drive|b⟩|` (MHz)
    pub matrix_element: f64,
    pub degenerate: bool,
}

/// Transition frequencies and drive matrix elements for the three pairs,
/// in the order xy, xz, yz.
pub fn transition_table(
    es: &EigenSystem,
    drive: &Hamiltonian,
) -> Result<Vec<TransitionRecord>, SpinError> {
    let herm = drive.hermiticity_error();
    if !(herm <= 1e-12 * drive.norm().max(1.0)) {
        return Err(SpinError::NotHermitian(herm));
    }
    Ok(TransitionPair::ALL
        .iter()
        .map(|&pair| TransitionRecord {
            pair,
            f_transition: es.transition_frequency(pair),
            matrix_element: es.matrix_element(drive, pair).norm(),
            degenerate: es.degenerate,
        })
        .collect())
}

/// Drive detuning `f_drive − f_transition` (MHz); zero on resonance.
pub fn resonance_detuning(f_drive: f64, record: &TransitionRecord) -> f64 {
    f_drive - record.f_transition
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{strain_hamiltonian, zfs_hamiltonian, StrainCouplings, StrainField, ZfsParams};

    fn paper_zfs() -> EigenSystem {
        eigensystem(&zfs_hamiltonian(&ZfsParams { d: 1400.0, e: 50.0 })).unwrap()
    }

    #[test]
    fn zfs_energies_and_labels() {
        // closed form: D/3 ± E, −2D/3
        let es = paper_zfs();
        let expect = [1400.0 / 3.0 + 50.0, 1400.0 / 3.0 - 50.0, -2.0 * 1400.0 / 3.0];
        for (a, b) in es.energies.iter().zip(expect) {
            assert!((a - b).abs() < 1e-9);
        }
        assert_eq!(es.labels, [Sublevel::Ty, Sublevel::Tx, Sublevel::Tz]);
        assert!(!es.degenerate);
        assert!((es.energies.iter().sum::<f64>()).abs() < 1e-9);
        assert!((es.energy(Sublevel::Tx) - es.energy(Sublevel::Ty)).abs() - 100.0 < 1e-9);
    }

    #[test]
    fn eigenpairs_have_small_residual() {
        let h = zfs_hamiltonian(&ZfsParams { d: 1400.0, e: 50.0 });
        let es = eigensystem(&h).unwrap();
        for i in 0..3 {
            let r = h.matrix * es.states[i] - es.states[i] * C64::new(es.energies[i], 0.0);
            assert!(r.norm() <= 1e-9 * 1400.0);
            for j in 0..3 {
                let ip = (es.states[i].adjoint() * es.states[j])[(0, 0)];
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((ip - C64::new(want, 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn zero_matrix_is_degenerate() {
        let es = eigensystem(&Hamiltonian::zero()).unwrap();
        assert!(es.degenerate);
        assert!(es.energies.iter().all(|e| e.abs() < 1e-15));
    }

    #[test]
    fn axial_only_is_twofold_degenerate() {
        let es = eigensystem(&zfs_hamiltonian(&ZfsParams { d: 1400.0, e: 0.0 })).unwrap();
        assert!(es.degenerate);
        assert!((es.energies[0] - 1400.0 / 3.0).abs() < 1e-9);
        assert!((es.energies[1] - 1400.0 / 3.0).abs() < 1e-9);
        // aligned onto the Cartesian states
        let u = zero_field_unitary();
        let ov = (u.column(0).adjoint() * es.state(Sublevel::Tx))[(0, 0)];
        assert!((ov.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_hermitian_rejected() {
        let mut m = CMat3::zeros();
        m[(0, 1)] = C64::new(1.0, 0.0);
        let err = eigensystem(&Hamiltonian::zeeman(m)).unwrap_err();
        assert!(matches!(err, SpinError::NotHermitian(_)));
    }

    #[test]
    fn zero_drive_gives_bare_transitions() {
        let es = paper_zfs();
        let t = transition_table(&es, &Hamiltonian::zero()).unwrap();
        let f: Vec<f64> = t.iter().map(|r| r.f_transition).collect();
        // xy = 2E, xz = D − E, yz = D + E
        for (a, b) in f.iter().zip([100.0, 1350.0, 1450.0]) {
            assert!((a - b).abs() < 1e-9, "{f:?}");
        }
        assert!(t.iter().all(|r| r.matrix_element == 0.0));
    }

    #[test]
    fn g2_channel_is_diagonal_and_g3_couples_xy() {
        let es = paper_zfs();
        let g = StrainCouplings {
            g2: 1e6,
            g3: 1e6,
            ..StrainCouplings::default()
        };
        let g2_drive = strain_hamiltonian(
            &StrainField {
                exx: 1e-6,
                eyy: -1e-6,
                ..StrainField::default()
            },
            &g,
        );
        let t = transition_table(&es, &g2_drive).unwrap();
        assert!(t.iter().all(|r| r.matrix_element < 1e-12));

        let g3_drive = strain_hamiltonian(&StrainField::shear_xy(1e-6), &g);
        let t = transition_table(&es, &g3_drive).unwrap();
        assert!((t[0].matrix_element - 1.0).abs() < 1e-12);
        assert!(t[1].matrix_element < 1e-12 && t[2].matrix_element < 1e-12);
    }

    #[test]
    fn detuning_against_xy_pair() {
        let es = paper_zfs();
        let t = transition_table(&es, &Hamiltonian::zero()).unwrap();
        assert!(resonance_detuning(100.0, &t[0]).abs() < 1e-9);
        assert!((resonance_detuning(104.5, &t[0]) - 4.5).abs() < 1e-9);
    }

    #[test]
    fn pair_parses() {
        assert_eq!("xz".parse::<TransitionPair>().unwrap(), TransitionPair::Xz);
        assert!("zz".parse::<TransitionPair>().is_err());
    }
}
