use crate::spin::C64;

use super::ResonatorError;

/// Two-port S-parameters on a frequency grid (MHz, complex linear).
///
/// Only `s21` is mandatory; synthesized records usually leave the other
/// parameters unset.
#[derive(Debug, Clone, PartialEq)]
pub struct SParamRecord {
    pub freqs: Vec<f64>,
    pub s11: Option<Vec<C64>>,
    pub s21: Vec<C64>,
    pub s12: Option<Vec<C64>>,
    pub s22: Option<Vec<C64>>,
    /// Port reference impedance (Ω).
    pub z0: f64,
    pub source: String,
}

impl SParamRecord {
    pub fn new(freqs: Vec<f64>, s21: Vec<C64>, source: impl Into<String>) -> Self {
        Self {
            freqs,
            s11: None,
            s21,
            s12: None,
            s22: None,
            z0: 50.0,
            source: source.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn validate(&self) -> Result<(), ResonatorError> {
        check_grid(&self.freqs)?;
        let n = self.freqs.len();
        let lens = [
            Some(self.s21.len()),
            self.s11.as_ref().map(Vec::len),
            self.s12.as_ref().map(Vec::len),
            self.s22.as_ref().map(Vec::len),
        ];
        if lens.iter().flatten().any(|&l| l != n) {
            return Err(ResonatorError::LengthMismatch);
        }
        let all = [Some(&self.s21), self.s11.as_ref(), self.s12.as_ref(), self.s22.as_ref()];
        if all
            .iter()
            .flatten()
            .any(|v| v.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()))
        {
            return Err(ResonatorError::NonFinite);
        }
        Ok(())
    }

    pub fn magnitude(&self) -> Vec<f64> {
        self.s21.iter().map(|c| c.norm()).collect()
    }

    /// Index of the grid point closest to `f`.
    pub fn nearest_index(&self, f: f64) -> usize {
        match self.freqs.binary_search_by(|x| x.total_cmp(&f)) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) if i >= self.freqs.len() => self.freqs.len() - 1,
            Err(i) => {
                if (self.freqs[i] - f).abs() < (f - self.freqs[i - 1]).abs() {
                    i
                } else {
                    i - 1
                }
            }
        }
    }
}

pub(crate) fn check_grid(freqs: &[f64]) -> Result<(), ResonatorError> {
    if freqs.iter().any(|f| !f.is_finite()) || freqs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(ResonatorError::NonMonotoneGrid);
    }
    Ok(())
}

/// Evenly spaced grid from `start` to `stop` inclusive (within half a step).
pub fn linear_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    if !(step > 0.0) || stop < start {
        return vec![start];
    }
    let n = ((stop - start) / step + 0.5).floor() as usize;
    (0..=n).map(|i| start + i as f64 * step).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_inclusive() {
        let g = linear_grid(100.0, 110.0, 0.1);
        assert_eq!(g.len(), 101);
        assert!((g[100] - 110.0).abs() < 1e-9);
    }

    #[test]
    fn nearest_index_picks_closest() {
        let r = SParamRecord::new(vec![1.0, 2.0, 3.0], vec![C64::new(0.0, 0.0); 3], "t");
        assert_eq!(r.nearest_index(2.4), 1);
        assert_eq!(r.nearest_index(2.6), 2);
        assert_eq!(r.nearest_index(-5.0), 0);
        assert_eq!(r.nearest_index(9.0), 2);
    }

    #[test]
    fn validation_catches_bad_records() {
        let mut r = SParamRecord::new(vec![1.0, 1.0], vec![C64::new(0.0, 0.0); 2], "t");
        assert_eq!(r.validate(), Err(ResonatorError::NonMonotoneGrid));
        r.freqs = vec![1.0, 2.0];
        r.s11 = Some(vec![]);
        assert_eq!(r.validate(), Err(ResonatorError::LengthMismatch));
    }
}
