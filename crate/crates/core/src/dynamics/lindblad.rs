//! Lindblad master equation for small Hilbert spaces,
//!
//! `dρ/dt = −i·2π[H(t), ρ] + Σ_k γ_k (L_k ρ L_k† − ½{L_k† L_k, ρ})`,
//!
//! with `H` in MHz (ordinary frequency), time in μs and `γ_k` in μs⁻¹.

use nalgebra::{DMatrix, SymmetricEigen};

use super::DynamicsError;
use crate::numeric::ode::{integrate, OdeOptions};
use crate::spin::C64;

pub type CMat = DMatrix<C64>;

#[derive(Debug, Clone)]
pub struct CollapseOperator {
    pub op: CMat,
    /// μs⁻¹
    pub rate: f64,
}

impl CollapseOperator {
    pub fn new(op: CMat, rate: f64) -> Self {
        Self { op, rate }
    }
}

/// Worst-case structural errors observed along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LindbladDiagnostics {
    pub max_trace_drift: f64,
    pub max_hermiticity_error: f64,
    pub min_eigenvalue: f64,
}

impl LindbladDiagnostics {
    pub fn merge(&self, other: &LindbladDiagnostics) -> LindbladDiagnostics {
        LindbladDiagnostics {
            max_trace_drift: self.max_trace_drift.max(other.max_trace_drift),
            max_hermiticity_error: self.max_hermiticity_error.max(other.max_hermiticity_error),
            min_eigenvalue: self.min_eigenvalue.min(other.min_eigenvalue),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DensityTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<CMat>,
    pub diagnostics: LindbladDiagnostics,
}

impl DensityTrajectory {
    /// Diagonal of each state, i.e. level populations over time.
    pub fn populations(&self) -> Vec<Vec<f64>> {
        self.states
            .iter()
            .map(|r| (0..r.nrows()).map(|i| r[(i, i)].re).collect())
            .collect()
    }
}

fn hermiticity_error(m: &CMat) -> f64 {
    (m - m.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max)
}

fn min_eigenvalue(m: &CMat) -> f64 {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    SymmetricEigen::new(h)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub fn validate_density_matrix(rho: &CMat) -> Result<(), DynamicsError> {
    if !rho.is_square() || rho.nrows() == 0 {
        return Err(DynamicsError::InvalidState("density matrix must be square".into()));
    }
    let herm = hermiticity_error(rho);
    if herm > 1e-10 {
        return Err(DynamicsError::InvalidState(format!("not Hermitian ({herm:e})")));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
        return Err(DynamicsError::InvalidState(format!("trace {tr} ≠ 1")));
    }
    let lmin = min_eigenvalue(rho);
    if lmin < -1e-10 {
        return Err(DynamicsError::InvalidState(format!(
            "not positive semidefinite (λ_min = {lmin:e})"
        )));
    }
    Ok(())
}

fn pack(m: &CMat, out: &mut [f64]) {
    for (k, c) in m.iter().enumerate() {
        out[2 * k] = c.re;
        out[2 * k + 1] = c.im;
    }
}

fn unpack(n: usize, y: &[f64]) -> CMat {
    CMat::from_iterator(n, n, y.chunks_exact(2).map(|c| C64::new(c[0], c[1])))
}

/// Dense `n×n` complex product on column-major slices: `out = a·b`.
fn matmul(n: usize, a: &[C64], b: &[C64], out: &mut [C64]) {
    for j in 0..n {
        for i in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..n {
                acc += a[i + k * n] * b[k + j * n];
            }
            out[i + j * n] = acc;
        }
    }
}

struct Dissipator {
    l: Vec<C64>,
    l_dag: Vec<C64>,
    /// `½·L†L`
    half_ldl: Vec<C64>,
    rate: f64,
}

/// Propagate `rho0` (at `t = 0`) under `h(t)` and the collapse channels and
/// return the state on every time of `t_grid`.
pub fn lindblad_propagate<H>(
    h: H,
    collapse: &[CollapseOperator],
    rho0: &CMat,
    t_grid: &[f64],
    opts: &OdeOptions,
) -> Result<DensityTrajectory, DynamicsError>
where
    H: Fn(f64) -> CMat,
{
    validate_density_matrix(rho0)?;
    let n = rho0.nrows();
    for c in collapse {
        if c.op.nrows() != n || c.op.ncols() != n {
            return Err(DynamicsError::InvalidState("collapse operator dimension mismatch".into()));
        }
        if !(c.rate >= 0.0) {
            return Err(DynamicsError::InvalidRate("collapse rate", c.rate));
        }
    }
    let diss: Vec<Dissipator> = collapse
        .iter()
        .filter(|c| c.rate > 0.0)
        .map(|c| {
            let ld = c.op.adjoint();
            let half = (&ld * &c.op) * C64::new(0.5, 0.0);
            Dissipator {
                l: c.op.as_slice().to_vec(),
                l_dag: ld.as_slice().to_vec(),
                half_ldl: half.as_slice().to_vec(),
                rate: c.rate,
            }
        })
        .collect();

    let two_pi = 2.0 * std::f64::consts::PI;
    let nn = n * n;
    let mut rho = vec![C64::new(0.0, 0.0); nn];
    let mut drho = vec![C64::new(0.0, 0.0); nn];
    let mut t1 = vec![C64::new(0.0, 0.0); nn];
    let mut t2 = vec![C64::new(0.0, 0.0); nn];
    let mut y0 = vec![0.0; 2 * nn];
    pack(rho0, &mut y0);

    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        for (k, c) in y.chunks_exact(2).enumerate() {
            rho[k] = C64::new(c[0], c[1]);
        }
        let hm = h(t);
        let hs = hm.as_slice();
        // −i·2π(Hρ − ρH)
        matmul(n, hs, &rho, &mut t1);
        matmul(n, &rho, hs, &mut t2);
        let mi = C64::new(0.0, -two_pi);
        for k in 0..nn {
            drho[k] = mi * (t1[k] - t2[k]);
        }
        for d in &diss {
            matmul(n, &d.l, &rho, &mut t1);
            matmul(n, &t1, &d.l_dag, &mut t2);
            for k in 0..nn {
                drho[k] += t2[k] * d.rate;
            }
            matmul(n, &d.half_ldl, &rho, &mut t1);
            matmul(n, &rho, &d.half_ldl, &mut t2);
            for k in 0..nn {
                drho[k] -= (t1[k] + t2[k]) * d.rate;
            }
        }
        for (k, c) in drho.iter().enumerate() {
            dy[2 * k] = c.re;
            dy[2 * k + 1] = c.im;
        }
    };

    let sol = integrate(rhs, 0.0, &y0, t_grid, opts)?;
    let mut diag = LindbladDiagnostics {
        min_eigenvalue: f64::INFINITY,
        ..Default::default()
    };
    let states: Vec<CMat> = sol.states.iter().map(|y| unpack(n, y)).collect();
    for s in &states {
        let tr = s.trace();
        diag.max_trace_drift = diag
            .max_trace_drift
            .max(((tr.re - 1.0).powi(2) + tr.im.powi(2)).sqrt());
        diag.max_hermiticity_error = diag.max_hermiticity_error.max(hermiticity_error(s));
        diag.min_eigenvalue = diag.min_eigenvalue.min(min_eigenvalue(s));
    }
    if states.is_empty() {
        diag.min_eigenvalue = 0.0;
    }
    Ok(DensityTrajectory {
        times: sol.times,
        states,
        diagnostics: diag,
    })
}

/// `|i⟩⟨j|` in an `n`-level space.
pub fn ket_bra(n: usize, i: usize, j: usize) -> CMat {
    let mut m = CMat::zeros(n, n);
    m[(i, j)] = C64::new(1.0, 0.0);
    m
}

pub fn diagonal_state(pops: &[f64]) -> CMat {
    let n = pops.len();
    let mut m = CMat::zeros(n, n);
    for (i, p) in pops.iter().enumerate() {
        m[(i, i)] = C64::new(*p, 0.0);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{eigensystem, zfs_hamiltonian, Basis, Sublevel, ZfsParams};

    #[test]
    fn eigenstate_is_stationary() {
        let h = zfs_hamiltonian(&ZfsParams { d: 1400.0, e: 50.0 }).to_basis(Basis::ZeroField);
        let es = eigensystem(&h).unwrap();
        let hm = CMat::from_iterator(3, 3, h.matrix.iter().copied());
        let v = es.state(Sublevel::Tx);
        let rho0 = CMat::from_iterator(3, 3, (v * v.adjoint()).iter().copied());
        let grid: Vec<f64> = (0..5).map(|i| i as f64 * 0.01).collect();
        let tr = lindblad_propagate(|_| hm.clone(), &[], &rho0, &grid, &OdeOptions::default()).unwrap();
        for p in tr.populations() {
            assert!((p[0] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn amplitude_damping_decays_exponentially() {
        let rho0 = diagonal_state(&[0.0, 1.0]);
        let l = ket_bra(2, 0, 1);
        let grid = [0.0, 0.5, 1.0, 2.0];
        let tr = lindblad_propagate(
            |_| CMat::zeros(2, 2),
            &[CollapseOperator::new(l, 0.7)],
            &rho0,
            &grid,
            &OdeOptions::default(),
        )
        .unwrap();
        for (t, p) in grid.iter().zip(tr.populations()) {
            assert!((p[1] - (-0.7 * t).exp()).abs() < 1e-8);
        }
        assert!(tr.diagnostics.max_trace_drift < 1e-9);
    }

    #[test]
    fn invalid_initial_state_rejected() {
        let bad = diagonal_state(&[0.7, 0.7]);
        let r = lindblad_propagate(|_| CMat::zeros(2, 2), &[], &bad, &[1.0], &OdeOptions::default());
        assert!(matches!(r, Err(DynamicsError::InvalidState(_))));
        let neg = diagonal_state(&[1.2, -0.2]);
        let r = lindblad_propagate(|_| CMat::zeros(2, 2), &[], &neg, &[1.0], &OdeOptions::default());
        assert!(matches!(r, Err(DynamicsError::InvalidState(_))));
    }
}
