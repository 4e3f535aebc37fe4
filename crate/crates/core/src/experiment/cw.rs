//! CW contrast spectrum: resonator-filtered strain drive of the xy pair,
//! averaged over a Gaussian distribution of the local rhombic parameter.

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::dynamics::{build_rate_matrix, saturation_rate, steady_state, Level, TripletRateParams};
use crate::numeric::rng::substream;
use crate::numeric::{fingerprint, mean_and_stderr};
use crate::resonator::{check_grid, ResonatorModeSet, TransductionCalib, TransferFunction};
use crate::spin::{
    eigensystem, strain_hamiltonian, zfs_hamiltonian, StrainCouplings, StrainField, TransitionPair,
    ZfsParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InhomogeneitySpec {
    /// Standard deviation of the local E (MHz).
    pub sigma_e: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl Default for InhomogeneitySpec {
    fn default() -> Self {
        Self {
            sigma_e: 0.0,
            n_samples: 1,
            seed: 0,
        }
    }
}

/// Everything a CW sweep needs besides the grid and the RF power.
#[derive(Debug, Clone)]
pub struct CwModel {
    pub zfs: ZfsParams,
    pub couplings: StrainCouplings,
    pub rates: TripletRateParams,
    pub modes: ResonatorModeSet,
    pub calib: TransductionCalib,
    /// Strain tensor per unit ε0; multiplied by the local strain amplitude.
    pub strain_profile: StrainField,
    /// Coherence time of the driven pair (μs).
    pub t2_us: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Serial,
    Parallel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMeta {
    pub config_hash: String,
    pub seed: u64,
    pub timestamp: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// MHz
    pub freqs: Vec<f64>,
    pub contrast: Vec<f64>,
    pub stderr: Vec<f64>,
    pub meta: SweepMeta,
}

impl SweepResult {
    /// Grid frequency of the largest |contrast|, lowest frequency on ties.
    pub fn peak(&self) -> Option<(f64, f64)> {
        let mut best: Option<(f64, f64)> = None;
        for (f, c) in self.freqs.iter().zip(&self.contrast) {
            if best.is_none_or(|(_, b)| c.abs() > b.abs()) {
                best = Some((*f, *c));
            }
        }
        best
    }
}

/// Contrast `(PL_on − PL_off)/PL_off` per frequency, with PL ∝ p(S1).
///
/// Sample `j` at frequency index `i` draws its E from the substream
/// `(inh.seed, i, j)`, so results do not depend on execution order and a
/// longer run reproduces the samples of a shorter one.
pub fn cw_spectrum(
    model: &CwModel,
    inh: &InhomogeneitySpec,
    p_rf_mw: f64,
    f_grid: &[f64],
    exec: Execution,
) -> Result<SweepResult, ExperimentError> {
    check_grid(f_grid)?;
    model.zfs.validate()?;
    model.rates.validate()?;
    model.calib.validate()?;
    if !(inh.sigma_e >= 0.0) || inh.n_samples == 0 {
        return Err(ExperimentError::InvalidSpec(format!(
            "inhomogeneity needs sigma_e ≥ 0 and n_samples ≥ 1 (got {}, {})",
            inh.sigma_e, inh.n_samples
        )));
    }
    if !(model.t2_us > 0.0) || !(p_rf_mw >= 0.0) {
        return Err(ExperimentError::InvalidSpec("t2 must be > 0 and RF power ≥ 0".into()));
    }
    let off = steady_state(&build_rate_matrix(&model.rates, 0.0, TransitionPair::Xy)?)?;
    let pl_off = off[Level::S1 as usize];
    if !(pl_off > 0.0) {
        return Err(ExperimentError::InvalidSpec("no S1 population without drive".into()));
    }
    let tf = TransferFunction::new(&model.modes).ok();
    let e_dist = Normal::new(model.zfs.e, inh.sigma_e)
        .map_err(|e| ExperimentError::InvalidSpec(e.to_string()))?;

    let point = |i: usize| -> Result<(f64, f64), ExperimentError> {
        let f = f_grid[i];
        let eps0 = tf.as_ref().map_or(0.0, |tf| model.calib.strain(p_rf_mw, f, tf));
        let h_strain = strain_hamiltonian(&model.strain_profile.scaled(eps0), &model.couplings);
        let mut samples = Vec::with_capacity(inh.n_samples);
        for j in 0..inh.n_samples {
            let mut rng = substream(inh.seed, i as u32, j as u32);
            let e_local = e_dist.sample(&mut rng);
            let es = eigensystem(&zfs_hamiltonian(&ZfsParams { d: model.zfs.d, e: e_local }))?;
            let omega = es.matrix_element(&h_strain, TransitionPair::Xy).norm();
            let delta = f - es.transition_frequency(TransitionPair::Xy);
            let w = saturation_rate(omega, delta, model.t2_us);
            let on = steady_state(&build_rate_matrix(&model.rates, w, TransitionPair::Xy)?)?;
            samples.push((on[Level::S1 as usize] - pl_off) / pl_off);
        }
        Ok(mean_and_stderr(&samples))
    };

    let points: Vec<(f64, f64)> = match exec {
        Execution::Serial => (0..f_grid.len()).map(point).collect::<Result<_, _>>()?,
        Execution::Parallel => (0..f_grid.len())
            .into_par_iter()
            .map(point)
            .collect::<Result<_, _>>()?,
    };
    let (contrast, stderr) = points.into_iter().unzip();
    Ok(SweepResult {
        freqs: f_grid.to_vec(),
        contrast,
        stderr,
        meta: SweepMeta {
            config_hash: fingerprint(&format!("{model:?}|{inh:?}|{p_rf_mw}")),
            seed: inh.seed,
            timestamp: None,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resonator::{linear_grid, Background, ResonatorMode};
    use crate::spin::C64;

    fn model(amplitude: f64, f0: f64) -> CwModel {
        CwModel {
            zfs: ZfsParams { d: 1400.0, e: 52.25 },
            couplings: StrainCouplings {
                g3: 1e6,
                ..StrainCouplings::default()
            },
            rates: TripletRateParams::default(),
            modes: ResonatorModeSet::new(
                vec![ResonatorMode::new(f0, 7800.0, C64::new(amplitude, 0.0)).unwrap()],
                Background::default(),
            ),
            calib: TransductionCalib::default(),
            strain_profile: StrainField::shear_xy(1.0),
            t2_us: 1.0,
        }
    }

    #[test]
    fn zero_transfer_gives_flat_zero() {
        let grid = linear_grid(100.0, 110.0, 0.1);
        let r = cw_spectrum(&model(0.0, 104.5), &InhomogeneitySpec::default(), 1.0, &grid, Execution::Serial)
            .unwrap();
        assert!(r.contrast.iter().all(|c| c.abs() < 1e-12));
        let r = cw_spectrum(&model(1.0, 104.5), &InhomogeneitySpec::default(), 0.0, &grid, Execution::Serial)
            .unwrap();
        assert!(r.contrast.iter().all(|c| c.abs() < 1e-12));
    }

    #[test]
    fn peak_sits_on_the_aligned_mode() {
        let grid = linear_grid(100.0, 110.0, 0.1);
        let r = cw_spectrum(&model(1.0, 104.5), &InhomogeneitySpec::default(), 1.0, &grid, Execution::Serial)
            .unwrap();
        let (f, c) = r.peak().unwrap();
        assert!((f - 104.5).abs() <= 0.1 + 1e-9, "{f}");
        assert!(c.abs() > 1e-4);
    }

    #[test]
    fn longer_run_extends_sample_prefix() {
        let grid = linear_grid(104.3, 104.7, 0.1);
        let m = model(1.0, 104.5);
        let inh = |n| InhomogeneitySpec {
            sigma_e: 0.3,
            n_samples: n,
            seed: 11,
        };
        let one = cw_spectrum(&m, &inh(1), 1.0, &grid, Execution::Serial).unwrap();
        let again = cw_spectrum(&m, &inh(1), 1.0, &grid, Execution::Parallel).unwrap();
        assert_eq!(one.contrast, again.contrast);
        let more = cw_spectrum(&m, &inh(8), 1.0, &grid, Execution::Parallel).unwrap();
        assert_ne!(one.contrast, more.contrast);
    }

    #[test]
    fn broadening_lowers_peak() {
        let grid = linear_grid(104.0, 105.0, 0.01);
        let m = model(1.0, 104.5);
        let mut last = f64::INFINITY;
        for sigma in [0.0, 0.5, 2.0] {
            let inh = InhomogeneitySpec {
                sigma_e: sigma,
                n_samples: if sigma == 0.0 { 1 } else { 400 },
                seed: 3,
            };
            let r = cw_spectrum(&m, &inh, 1.0, &grid, Execution::Parallel).unwrap();
            let peak = r.peak().unwrap().1.abs();
            assert!(peak <= last * (1.0 + 1e-9), "σ={sigma}: {peak} > {last}");
            last = peak;
        }
    }
}
