//! Five-level population model of the optical cycle:
//! `S0 → S1` pumping, fluorescence back to `S0`, spin-selective
//! intersystem crossing into `Tx/Ty/Tz`, sublevel relaxation and decay to
//! `S0`. Rates are in μs⁻¹ and the generator acts on column vectors,
//! `dp/dt = M·p`.

use nalgebra::{DMatrix, DVector, SMatrix};
use serde::{Deserialize, Serialize};

use super::DynamicsError;
use crate::numeric::ode::{integrate, OdeOptions};
use crate::spin::TransitionPair;

pub const N_LEVELS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    S0 = 0,
    S1 = 1,
    Tx = 2,
    Ty = 3,
    Tz = 4,
}

pub type Populations = [f64; N_LEVELS];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TripletRateParams {
    /// Optical pumping `S0 → S1`.
    pub pump_g: f64,
    /// Radiative `S1 → S0`.
    pub k_fluor: f64,
    /// Total intersystem crossing `S1 → T`.
    pub k_isc: f64,
    /// Fraction of the crossing flux landing in `(Tx, Ty, Tz)`.
    pub branch: [f64; 3],
    pub gamma_xy: f64,
    pub gamma_xz: f64,
    pub gamma_yz: f64,
    pub k_x: f64,
    pub k_y: f64,
    pub k_z: f64,
}

impl Default for TripletRateParams {
    /// Placeholder values of typical magnitude. None of these are measured
    /// for the film; override them for any quantitative work.
    fn default() -> Self {
        Self {
            pump_g: 0.5,
            k_fluor: 40.0,
            k_isc: 20.0,
            branch: [0.76, 0.16, 0.08],
            gamma_xy: 0.01,
            gamma_xz: 0.01,
            gamma_yz: 0.01,
            k_x: 0.05,
            k_y: 0.03,
            k_z: 0.005,
        }
    }
}

impl TripletRateParams {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let named = [
            ("pump_g", self.pump_g),
            ("k_fluor", self.k_fluor),
            ("k_isc", self.k_isc),
            ("gamma_xy", self.gamma_xy),
            ("gamma_xz", self.gamma_xz),
            ("gamma_yz", self.gamma_yz),
            ("k_x", self.k_x),
            ("k_y", self.k_y),
            ("k_z", self.k_z),
            ("branch[x]", self.branch[0]),
            ("branch[y]", self.branch[1]),
            ("branch[z]", self.branch[2]),
        ];
        for (name, v) in named {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(DynamicsError::InvalidRate(name, v));
            }
        }
        let s: f64 = self.branch.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(DynamicsError::InvalidBranching(s));
        }
        Ok(())
    }

    /// Decay rate of each triplet sublevel to `S0`, ordered (x, y, z).
    pub fn decay(&self) -> [f64; 3] {
        [self.k_x, self.k_y, self.k_z]
    }

    pub fn relaxation(&self, pair: TransitionPair) -> f64 {
        match pair {
            TransitionPair::Xy => self.gamma_xy,
            TransitionPair::Xz => self.gamma_xz,
            TransitionPair::Yz => self.gamma_yz,
        }
    }

    pub fn with_pump(&self, pump_g: f64) -> Self {
        Self { pump_g, ..*self }
    }
}

fn triplet_level(idx: usize) -> usize {
    Level::Tx as usize + idx
}

fn pair_levels(pair: TransitionPair) -> (usize, usize) {
    let (a, b) = pair.levels();
    (triplet_level(a.index()), triplet_level(b.index()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix {
    pub generator: SMatrix<f64, N_LEVELS, N_LEVELS>,
}

impl RateMatrix {
    /// Rate of the `from → to` transition.
    pub fn rate(&self, from: Level, to: Level) -> f64 {
        self.generator[(to as usize, from as usize)]
    }

    pub fn max_column_sum(&self) -> f64 {
        (0..N_LEVELS)
            .map(|j| self.generator.column(j).sum().abs())
            .fold(0.0, f64::max)
    }
}

/// Generator for rate parameters `p` plus a symmetric drive-induced rate
/// `drive_w` (μs⁻¹) between the two sublevels of `pair`.
pub fn build_rate_matrix(
    p: &TripletRateParams,
    drive_w: f64,
    pair: TransitionPair,
) -> Result<RateMatrix, DynamicsError> {
    p.validate()?;
    if !(drive_w >= 0.0) || !drive_w.is_finite() {
        return Err(DynamicsError::InvalidRate("drive_w", drive_w));
    }
    let mut g = SMatrix::<f64, N_LEVELS, N_LEVELS>::zeros();
    let mut add = |from: usize, to: usize, rate: f64| {
        g[(to, from)] += rate;
        g[(from, from)] -= rate;
    };
    let (s0, s1) = (Level::S0 as usize, Level::S1 as usize);
    add(s0, s1, p.pump_g);
    add(s1, s0, p.k_fluor);
    for (i, b) in p.branch.iter().enumerate() {
        add(s1, triplet_level(i), p.k_isc * b);
    }
    for pair in TransitionPair::ALL {
        let (a, b) = pair_levels(pair);
        let r = p.relaxation(pair);
        add(a, b, r);
        add(b, a, r);
    }
    for (i, k) in p.decay().iter().enumerate() {
        add(triplet_level(i), s0, *k);
    }
    let (a, b) = pair_levels(pair);
    add(a, b, drive_w);
    add(b, a, drive_w);
    Ok(RateMatrix { generator: g })
}

/// Stationary populations of the optical cycle started from `S0`.
///
/// Levels not reachable from `S0` carry no population. Within the
/// reachable set there must be exactly one closed communicating class;
/// the solution is supported on it.
pub fn steady_state(m: &RateMatrix) -> Result<Populations, DynamicsError> {
    let g = &m.generator;
    let edge = |from: usize, to: usize| from != to && g[(to, from)] > 0.0;

    // transitive closure of the "can reach" relation
    let mut reach = [[false; N_LEVELS]; N_LEVELS];
    for (i, row) in reach.iter_mut().enumerate() {
        for (j, r) in row.iter_mut().enumerate() {
            *r = i == j || edge(i, j);
        }
    }
    for k in 0..N_LEVELS {
        for i in 0..N_LEVELS {
            for j in 0..N_LEVELS {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    let from_ground: Vec<usize> = (0..N_LEVELS).filter(|&j| reach[0][j]).collect();
    // a level is recurrent iff everything it reaches can reach it back
    let recurrent: Vec<usize> = from_ground
        .iter()
        .copied()
        .filter(|&i| (0..N_LEVELS).all(|j| !reach[i][j] || reach[j][i]))
        .collect();
    let first = *recurrent.first().ok_or(DynamicsError::DegenerateChain(0))?;
    let closed_classes = recurrent
        .iter()
        .filter(|&&i| recurrent.iter().all(|&j| j >= i || !(reach[i][j] && reach[j][i])))
        .count();
    if closed_classes != 1 {
        return Err(DynamicsError::DegenerateChain(closed_classes));
    }
    let class: Vec<usize> = recurrent
        .iter()
        .copied()
        .filter(|&j| reach[first][j] && reach[j][first])
        .collect();

    let n = class.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for (r, &i) in class.iter().enumerate() {
        for (c, &j) in class.iter().enumerate() {
            a[(r, c)] = g[(i, j)];
        }
    }
    let mut rhs = DVector::<f64>::zeros(n);
    for c in 0..n {
        a[(n - 1, c)] = 1.0;
    }
    rhs[n - 1] = 1.0;
    let x = a
        .lu()
        .solve(&rhs)
        .ok_or(DynamicsError::DegenerateChain(closed_classes))?;

    let mut p = [0.0; N_LEVELS];
    for (r, &i) in class.iter().enumerate() {
        let v = x[r];
        if v < -1e-9 {
            return Err(DynamicsError::Numerical(format!(
                "steady-state population {v:e} at level {i}"
            )));
        }
        p[i] = v.max(0.0);
    }
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= s);
    Ok(p)
}

#[derive(Debug, Clone)]
pub struct PopulationTrajectory {
    pub times: Vec<f64>,
    pub populations: Vec<Populations>,
}

fn validate_populations(p0: &Populations) -> Result<(), DynamicsError> {
    let s: f64 = p0.iter().sum();
    if p0.iter().any(|&v| !(v >= -1e-12)) || (s - 1.0).abs() > 1e-9 {
        return Err(DynamicsError::InvalidState(format!(
            "populations must be non-negative and sum to 1 (sum = {s})"
        )));
    }
    Ok(())
}

/// Solve `dp/dt = M·p` from `p0` at `t = 0` and report `p` on `t_grid`.
pub fn propagate_populations(
    m: &RateMatrix,
    p0: &Populations,
    t_grid: &[f64],
    opts: &OdeOptions,
) -> Result<PopulationTrajectory, DynamicsError> {
    validate_populations(p0)?;
    let g = m.generator;
    let sol = integrate(
        |_, y, dy| {
            for i in 0..N_LEVELS {
                let mut acc = 0.0;
                for j in 0..N_LEVELS {
                    acc += g[(i, j)] * y[j];
                }
                dy[i] = acc;
            }
        },
        0.0,
        p0,
        t_grid,
        opts,
    )?;
    let populations = sol
        .states
        .iter()
        .map(|s| {
            let mut p = [0.0; N_LEVELS];
            p.copy_from_slice(s);
            p
        })
        .collect();
    Ok(PopulationTrajectory {
        times: sol.times,
        populations,
    })
}

/// Slowest non-zero relaxation rate of the generator (μs⁻¹), i.e. the
/// smallest `|Re λ|` over the non-stationary eigenvalues.
pub fn spectral_gap(m: &RateMatrix) -> f64 {
    let d = DMatrix::from_iterator(N_LEVELS, N_LEVELS, m.generator.iter().copied());
    let scale = m.generator.amax().max(f64::MIN_POSITIVE);
    let mut re: Vec<f64> = d
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re.abs())
        .collect();
    re.sort_by(f64::total_cmp);
    re.into_iter()
        .find(|&r| r > 1e-10 * scale)
        .unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_params() -> TripletRateParams {
        TripletRateParams {
            pump_g: 0.0,
            k_fluor: 0.0,
            k_isc: 0.0,
            branch: [1.0, 0.0, 0.0],
            gamma_xy: 0.0,
            gamma_xz: 0.0,
            gamma_yz: 0.0,
            k_x: 0.0,
            k_y: 0.0,
            k_z: 0.0,
        }
    }

    #[test]
    fn all_zero_rates_give_zero_matrix() {
        let m = build_rate_matrix(&zero_params(), 0.0, TransitionPair::Xy).unwrap();
        assert_eq!(m.generator.amax(), 0.0);
    }

    #[test]
    fn columns_sum_to_zero() {
        let m = build_rate_matrix(&TripletRateParams::default(), 0.7, TransitionPair::Xz).unwrap();
        assert!(m.max_column_sum() < 1e-12);
        for i in 0..N_LEVELS {
            for j in 0..N_LEVELS {
                if i != j {
                    assert!(m.generator[(i, j)] >= 0.0);
                }
            }
        }
    }

    #[test]
    fn pair_is_irrelevant_without_drive() {
        let p = TripletRateParams::default();
        let a = build_rate_matrix(&p, 0.0, TransitionPair::Xy).unwrap();
        let b = build_rate_matrix(&p, 0.0, TransitionPair::Yz).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn negative_rate_rejected() {
        let p = TripletRateParams {
            k_x: -1.0,
            ..TripletRateParams::default()
        };
        assert!(matches!(
            build_rate_matrix(&p, 0.0, TransitionPair::Xy),
            Err(DynamicsError::InvalidRate("k_x", _))
        ));
        assert!(matches!(
            build_rate_matrix(&TripletRateParams::default(), -0.1, TransitionPair::Xy),
            Err(DynamicsError::InvalidRate("drive_w", _))
        ));
    }

    #[test]
    fn two_level_detailed_balance() {
        // G = 1, k_fl = 10: p_S1/p_S0 = G/k_fl = 0.1 → (10/11, 1/11)
        let p = TripletRateParams {
            pump_g: 1.0,
            k_fluor: 10.0,
            ..zero_params()
        };
        let ss = steady_state(&build_rate_matrix(&p, 0.0, TransitionPair::Xy).unwrap()).unwrap();
        assert!((ss[0] - 10.0 / 11.0).abs() < 1e-12);
        assert!((ss[1] - 1.0 / 11.0).abs() < 1e-12);
        assert!((ss[1] / ss[0] - 0.1).abs() < 1e-12);
        assert_eq!(&ss[2..], &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn symmetric_parameters_give_equal_triplets() {
        let p = TripletRateParams {
            branch: [1.0 / 3.0; 3],
            k_x: 0.04,
            k_y: 0.04,
            k_z: 0.04,
            ..TripletRateParams::default()
        };
        let ss = steady_state(&build_rate_matrix(&p, 0.0, TransitionPair::Xy).unwrap()).unwrap();
        assert!((ss.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((ss[2] - ss[3]).abs() < 1e-12 && (ss[3] - ss[4]).abs() < 1e-12);
    }

    #[test]
    fn absorbing_triplet_is_a_unique_sink() {
        // no triplet decay: all population ends up shelved in the triplets
        let p = TripletRateParams {
            k_x: 0.0,
            k_y: 0.0,
            k_z: 0.0,
            ..TripletRateParams::default()
        };
        let ss = steady_state(&build_rate_matrix(&p, 0.0, TransitionPair::Xy).unwrap()).unwrap();
        assert!((ss[2] + ss[3] + ss[4] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_absorbing_classes_are_degenerate() {
        // Tx and Ty isolated from each other and from S0
        let p = TripletRateParams {
            branch: [0.5, 0.5, 0.0],
            gamma_xy: 0.0,
            gamma_xz: 0.0,
            gamma_yz: 0.0,
            k_x: 0.0,
            k_y: 0.0,
            k_z: 0.0,
            ..TripletRateParams::default()
        };
        let r = steady_state(&build_rate_matrix(&p, 0.0, TransitionPair::Xy).unwrap());
        assert!(matches!(r, Err(DynamicsError::DegenerateChain(2))));
    }

    #[test]
    fn zero_generator_keeps_populations() {
        let m = build_rate_matrix(&zero_params(), 0.0, TransitionPair::Xy).unwrap();
        let p0 = [0.2, 0.1, 0.3, 0.25, 0.15];
        let tr = propagate_populations(&m, &p0, &[0.0, 1.0, 10.0], &OdeOptions::default()).unwrap();
        for p in tr.populations {
            assert_eq!(p, p0);
        }
    }

    #[test]
    fn invalid_initial_state_rejected() {
        let m = build_rate_matrix(&TripletRateParams::default(), 0.0, TransitionPair::Xy).unwrap();
        let r = propagate_populations(&m, &[0.5, 0.0, 0.0, 0.0, 0.0], &[1.0], &OdeOptions::default());
        assert!(matches!(r, Err(DynamicsError::InvalidState(_))));
    }

    #[test]
    fn drive_equalises_pair() {
        let p = TripletRateParams::default();
        let m = build_rate_matrix(&p, 1e6, TransitionPair::Xy).unwrap();
        let ss = steady_state(&m).unwrap();
        assert!((ss[2] - ss[3]).abs() < 1e-6 * ss[2]);
    }
}
