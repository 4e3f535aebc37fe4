//! Physical constants and unit helpers.

/// Avogadro constant (mol⁻¹, exact SI value).
pub const AVOGADRO: f64 = 6.022_140_76e23;

/// Nepers per decibel of amplitude, `ln(10)/20`.
pub const NEPER_PER_DB: f64 = std::f64::consts::LN_10 / 20.0;

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dbm_roundtrip() {
        assert!((dbm_to_mw(0.0) - 1.0).abs() < 1e-15);
        assert!((dbm_to_mw(10.0) - 10.0).abs() < 1e-12);
        assert!((mw_to_dbm(dbm_to_mw(-7.3)) + 7.3).abs() < 1e-12);
    }
}
