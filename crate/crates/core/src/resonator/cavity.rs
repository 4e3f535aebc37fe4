//! One-dimensional transfer-matrix cavity: grating, gap, IDT, gap, grating.
//!
//! Every section is a reciprocal acoustic two-port. Strips and electrodes
//! are point scatterers with S = [[i·r, t], [t, i·r]], `t = √(1 − r²)`;
//! free propagation over `L` is a delay `L/v` with loss in dB/μs.

use serde::{Deserialize, Serialize};

use super::record::{check_grid, SParamRecord};
use super::ResonatorError;
use crate::constants::NEPER_PER_DB;
use crate::spin::C64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GratingSpec {
    /// Strip pitch (μm).
    pub period_um: f64,
    pub strips: usize,
    pub reflectivity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdtSpec {
    /// Period of one electrode pair (μm); electrodes sit at half this pitch.
    pub period_um: f64,
    pub pairs: usize,
    pub electrode_reflectivity: f64,
    /// Scales the acoustic transmission into electrical S21.
    pub transduction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavitySpec {
    pub mirror: GratingSpec,
    pub idt: IdtSpec,
    /// Grating-to-IDT spacing on each side (μm).
    pub gap_um: f64,
    pub velocity_mps: f64,
    pub loss_db_per_us: f64,
}

impl Default for CavitySpec {
    fn default() -> Self {
        // λ ≈ 37.9 μm at 105 MHz for v = 3979 m/s
        Self {
            mirror: GratingSpec {
                period_um: 18.95,
                strips: 75,
                reflectivity: 0.03,
            },
            idt: IdtSpec {
                period_um: 37.9,
                pairs: 40,
                electrode_reflectivity: 0.001,
                transduction: 0.5,
            },
            gap_um: 1450.0,
            velocity_mps: 3979.0,
            loss_db_per_us: 0.2,
        }
    }
}

impl CavitySpec {
    pub fn validate(&self) -> Result<(), ResonatorError> {
        for (name, r) in [
            ("mirror strip", self.mirror.reflectivity),
            ("IDT electrode", self.idt.electrode_reflectivity),
        ] {
            if !(r.abs() < 1.0) {
                return Err(ResonatorError::NonPassiveSection(format!("{name} reflectivity {r}")));
            }
        }
        if !(self.idt.transduction.abs() <= 1.0) {
            return Err(ResonatorError::NonPassiveSection(format!(
                "transduction amplitude {}",
                self.idt.transduction
            )));
        }
        if self.mirror.strips == 0 || self.idt.pairs == 0 {
            return Err(ResonatorError::InvalidCavity("strip and pair counts must be ≥ 1".into()));
        }
        let positive = [
            self.mirror.period_um,
            self.idt.period_um,
            self.velocity_mps,
        ];
        if positive.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
            return Err(ResonatorError::InvalidCavity("periods and velocity must be positive".into()));
        }
        if !(self.gap_um >= 0.0) || !self.loss_db_per_us.is_finite() {
            return Err(ResonatorError::InvalidCavity("gap must be ≥ 0 and loss finite".into()));
        }
        Ok(())
    }

    /// Layout as alternating (delay in μm, scatterer reflectivity) steps.
    fn sections(&self) -> Vec<Section> {
        let mut s = Vec::new();
        let grating = |s: &mut Vec<Section>| {
            for i in 0..self.mirror.strips {
                if i > 0 {
                    s.push(Section::Delay(self.mirror.period_um));
                }
                s.push(Section::Scatter(self.mirror.reflectivity));
            }
        };
        grating(&mut s);
        s.push(Section::Delay(self.gap_um));
        for i in 0..2 * self.idt.pairs {
            if i > 0 {
                s.push(Section::Delay(self.idt.period_um / 2.0));
            }
            s.push(Section::Scatter(self.idt.electrode_reflectivity));
        }
        s.push(Section::Delay(self.gap_um));
        grating(&mut s);
        s
    }
}

#[derive(Debug, Clone, Copy)]
enum Section {
    Delay(f64),
    Scatter(f64),
}

type M2 = [[C64; 2]; 2];

fn mul(a: &M2, b: &M2) -> M2 {
    let mut c = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

/// Wave-amplitude transfer matrix mapping right-side (b2, a2) to left-side
/// (a1, b1) amplitudes, so a cascade multiplies left to right.
fn section_t(sec: Section, f_mhz: f64, v_mps: f64, alpha_np_per_us: f64) -> M2 {
    match sec {
        Section::Delay(len_um) => {
            let tau_us = len_um / v_mps;
            let phase = 2.0 * std::f64::consts::PI * f_mhz * tau_us;
            let e = C64::from_polar((-alpha_np_per_us * tau_us).exp(), -phase);
            [[e.inv(), C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), e]]
        }
        Section::Scatter(r) => {
            let t = (1.0 - r * r).sqrt();
            let ir = C64::new(0.0, r);
            [[C64::new(1.0 / t, 0.0), -ir / t], [ir / t, C64::new(1.0 / t, 0.0)]]
        }
    }
}

/// Acoustic (s11, s21, s12, s22) of the whole stack at one frequency.
fn cavity_s(spec: &CavitySpec, sections: &[Section], f: f64) -> [C64; 4] {
    let alpha = spec.loss_db_per_us * NEPER_PER_DB;
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let mut t: M2 = [[one, zero], [zero, one]];
    for &sec in sections {
        t = mul(&t, &section_t(sec, f, spec.velocity_mps, alpha));
    }
    let det = t[0][0] * t[1][1] - t[0][1] * t[1][0];
    let s21 = one / t[0][0];
    let s11 = t[1][0] / t[0][0];
    let s22 = -t[0][1] / t[0][0];
    let s12 = det / t[0][0];
    [s11, s21, s12, s22]
}

/// Electrical s21 (and s12) is the acoustic transmission scaled by the
/// transduction amplitude; s11/s22 are the bare acoustic reflections.
pub fn synth_s21_cavity(spec: &CavitySpec, freqs: &[f64]) -> Result<SParamRecord, ResonatorError> {
    spec.validate()?;
    check_grid(freqs)?;
    let sections = spec.sections();
    let k = spec.idt.transduction;
    let mut s11 = Vec::with_capacity(freqs.len());
    let mut s21 = Vec::with_capacity(freqs.len());
    let mut s12 = Vec::with_capacity(freqs.len());
    let mut s22 = Vec::with_capacity(freqs.len());
    for &f in freqs {
        let [a, b, c, d] = cavity_s(spec, &sections, f);
        s11.push(a);
        s21.push(b * k);
        s12.push(c * k);
        s22.push(d);
    }
    let mut rec = SParamRecord::new(freqs.to_vec(), s21, "transfer-matrix cavity synthesis");
    rec.s11 = Some(s11);
    rec.s12 = Some(s12);
    rec.s22 = Some(s22);
    Ok(rec)
}
