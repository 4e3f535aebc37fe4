use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::operators::{anticommutator, max_abs, spin1_operators, CMat3, C64};
use super::SpinError;

/// Axial and rhombic zero-field-splitting parameters, in MHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZfsParams {
    pub d: f64,
    pub e: f64,
}

impl ZfsParams {
    pub fn new(d: f64, e: f64) -> Result<Self, SpinError> {
        let p = Self { d, e };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), SpinError> {
        if !self.d.is_finite() || !self.e.is_finite() {
            return Err(SpinError::NonFinite("zfs"));
        }
        if self.e.abs() > self.d.abs() / 3.0 {
            log::warn!(
                "|E| = {} MHz exceeds |D|/3 = {} MHz (unconventional rhombicity)",
                self.e.abs(),
                self.d.abs() / 3.0
            );
        }
        Ok(())
    }

    /// Frequency of the Tx–Ty transition, `2|E|`.
    pub fn xy_splitting(&self) -> f64 {
        2.0 * self.e.abs()
    }
}

/// Symmetric strain tensor, six independent components (dimensionless).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StrainField {
    pub exx: f64,
    pub eyy: f64,
    pub ezz: f64,
    pub exy: f64,
    pub exz: f64,
    pub eyz: f64,
    /// Drive frequency (MHz) when the field is a time-harmonic amplitude.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_drive: Option<f64>,
}

impl StrainField {
    pub fn hydrostatic(e0: f64) -> Self {
        Self {
            exx: e0,
            eyy: e0,
            ezz: e0,
            ..Self::default()
        }
    }

    pub fn shear_xy(e: f64) -> Self {
        Self {
            exy: e,
            ..Self::default()
        }
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            exx: self.exx * k,
            eyy: self.eyy * k,
            ezz: self.ezz * k,
            exy: self.exy * k,
            exz: self.exz * k,
            eyz: self.eyz * k,
            f_drive: self.f_drive,
        }
    }

    pub fn components(&self) -> [f64; 6] {
        [self.exx, self.eyy, self.ezz, self.exy, self.exz, self.eyz]
    }

    pub fn is_finite(&self) -> bool {
        self.components().iter().all(|c| c.is_finite())
    }
}

/// Spin–strain coupling coefficients (MHz per unit strain).
///
/// `g1` multiplies `S² − S(S+1)`, which is identically zero for a spin-1, so
/// it never contributes to the Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StrainCouplings {
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
    pub g4: f64,
    pub g5: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    /// `{|+1⟩, |0⟩, |−1⟩}`
    Zeeman,
    /// `{|Tx⟩, |Ty⟩, |Tz⟩}`
    ZeroField,
}

/// 3×3 Hermitian operator in units of h·MHz.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    pub matrix: CMat3,
    pub basis: Basis,
}

impl Hamiltonian {
    pub fn zeeman(matrix: CMat3) -> Self {
        Self {
            matrix,
            basis: Basis::Zeeman,
        }
    }

    pub fn zero() -> Self {
        Self::zeeman(CMat3::zeros())
    }

    pub fn hermiticity_error(&self) -> f64 {
        max_abs(&(self.matrix - self.matrix.adjoint()))
    }

    pub fn norm(&self) -> f64 {
        max_abs(&self.matrix)
    }

    pub fn to_basis(&self, target: Basis) -> Hamiltonian {
        if target == self.basis {
            return self.clone();
        }
        let u = zero_field_unitary();
        let matrix = match target {
            Basis::ZeroField => u.adjoint() * self.matrix * u,
            Basis::Zeeman => u * self.matrix * u.adjoint(),
        };
        Hamiltonian {
            matrix,
            basis: target,
        }
    }

    pub fn add(&self, other: &Hamiltonian) -> Hamiltonian {
        let other = other.to_basis(self.basis);
        Hamiltonian {
            matrix: self.matrix + other.matrix,
            basis: self.basis,
        }
    }

    pub fn scaled(&self, k: f64) -> Hamiltonian {
        Hamiltonian {
            matrix: self.matrix * C64::new(k, 0.0),
            basis: self.basis,
        }
    }
}

/// Columns are the Cartesian triplet states `|Tx⟩, |Ty⟩, |Tz⟩` written in
/// the Zeeman basis. `|Ta⟩` is the state annihilated by `S_a`.
pub fn zero_field_unitary() -> CMat3 {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let z = C64::new(0.0, 0.0);
    let tx = Vector3::new(C64::new(-r, 0.0), z, C64::new(r, 0.0));
    let ty = Vector3::new(C64::new(0.0, r), z, C64::new(0.0, r));
    let tz = Vector3::new(z, C64::new(1.0, 0.0), z);
    CMat3::from_columns(&[tx, ty, tz])
}

/// `D(S_z² − ⅔) + E(S_x² − S_y²)`
pub fn zfs_hamiltonian(p: &ZfsParams) -> Hamiltonian {
    let s = spin1_operators();
    let axial = s.sz * s.sz - CMat3::identity() * C64::new(2.0 / 3.0, 0.0);
    Hamiltonian::zeeman(axial * C64::new(p.d, 0.0) + s.rhombic() * C64::new(p.e, 0.0))
}

/// Symmetry-reduced spin–strain Hamiltonian. The `g1` channel is evaluated
/// too, and is zero up to rounding because `S² = 2` for a spin-1.
pub fn strain_hamiltonian(s: &StrainField, g: &StrainCouplings) -> Hamiltonian {
    let ops = spin1_operators();
    let re = |x: f64| C64::new(x, 0.0);
    let s_sq_minus = ops.total_squared() - CMat3::identity() * re(2.0);
    let hydro = s.exx + s.eyy + s.ezz;
    let mut m = s_sq_minus * re(g.g1 * hydro);
    m += ops.rhombic() * re(g.g2 * (s.exx - s.eyy));
    m += anticommutator(&ops.sx, &ops.sy) * re(g.g3 * s.exy);
    m += anticommutator(&ops.sx, &ops.sz) * re(g.g4 * s.exz);
    m += anticommutator(&ops.sy, &ops.sz) * re(g.g5 * s.eyz);
    Hamiltonian::zeeman(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_zfs_is_zero() {
        let h = zfs_hamiltonian(&ZfsParams { d: 0.0, e: 0.0 });
        assert_eq!(h.norm(), 0.0);
    }

    #[test]
    fn zfs_is_traceless() {
        let h = zfs_hamiltonian(&ZfsParams { d: 1400.0, e: 50.0 });
        assert!(h.matrix.trace().norm() < 1e-12 * 1400.0);
    }

    #[test]
    fn zfs_is_diagonal_in_zero_field_basis() {
        // ⟨Tx|H|Tx⟩ = D/3 − E, ⟨Ty|H|Ty⟩ = D/3 + E, ⟨Tz|H|Tz⟩ = −2D/3
        let (d, e) = (1400.0, 50.0);
        let h = zfs_hamiltonian(&ZfsParams { d, e }).to_basis(Basis::ZeroField);
        let expect = [d / 3.0 - e, d / 3.0 + e, -2.0 * d / 3.0];
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { expect[i] } else { 0.0 };
                assert!((h.matrix[(i, j)] - C64::new(want, 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn unitary_columns_are_annihilated_by_their_axis() {
        let u = zero_field_unitary();
        let s = spin1_operators();
        assert!(max_abs(&(u.adjoint() * u - CMat3::identity())) < 1e-14);
        for (k, op) in [s.sx, s.sy, s.sz].iter().enumerate() {
            let v = op * u.column(k);
            assert!(v.iter().all(|c| c.norm() < 1e-14));
        }
    }

    #[test]
    fn hydrostatic_strain_is_inert() {
        let g = StrainCouplings {
            g1: 3.0e6,
            g2: 1.0e6,
            g3: 2.0e6,
            g4: 4.0e6,
            g5: 5.0e6,
        };
        let h = strain_hamiltonian(&StrainField::hydrostatic(1e-5), &g);
        assert!(h.norm() < 1e-12);
    }

    #[test]
    fn g2_shear_has_expected_scale() {
        // εxx = −εyy = 1e-6, g2 = 1e6 → 1e6·2e-6·(Sx² − Sy²) = 2·(Sx² − Sy²)
        let s = StrainField {
            exx: 1e-6,
            eyy: -1e-6,
            ..StrainField::default()
        };
        let g = StrainCouplings {
            g2: 1e6,
            ..StrainCouplings::default()
        };
        let h = strain_hamiltonian(&s, &g);
        let expect = spin1_operators().rhombic() * C64::new(2.0, 0.0);
        assert!(max_abs(&(h.matrix - expect)) < 1e-12);
        assert!((h.norm() - 2.0 * max_abs(&spin1_operators().rhombic())).abs() < 1e-12);
    }

    #[test]
    fn basis_roundtrip_is_identity() {
        let h = zfs_hamiltonian(&ZfsParams { d: 1400.0, e: 50.0 });
        let back = h.to_basis(Basis::ZeroField).to_basis(Basis::Zeeman);
        assert!(max_abs(&(back.matrix - h.matrix)) < 1e-10);
    }
}
