//! Physical constants and unit conversions shared by every module.
//!
//! Frequencies are carried in THz, wavelengths in nm, lengths in km and
//! powers in mW unless a name says otherwise.

/// Speed of light in nm·THz (equivalently nm/ps).
pub const SPEED_OF_LIGHT_NM_THZ: f64 = 299_792.458;

/// Planck constant in J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Symbol rate of every channel, THz (148 GBaud).
pub const SYMBOL_RATE_THZ: f64 = 0.148;

/// WDM channel spacing, THz (150 GHz).
pub const CHANNEL_SPACING_THZ: f64 = 0.150;

/// Span length used throughout the study, km.
pub const DEFAULT_SPAN_KM: f64 = 80.0;

#[inline]
pub fn thz_to_nm(f_thz: f64) -> f64 {
    SPEED_OF_LIGHT_NM_THZ / f_thz
}

#[inline]
pub fn nm_to_thz(lambda_nm: f64) -> f64 {
    SPEED_OF_LIGHT_NM_THZ / lambda_nm
}

#[inline]
pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

#[inline]
pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[inline]
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Power attenuation in dB/km to the natural (field-power) rate in 1/km.
#[inline]
pub fn db_per_km_to_natural(alpha_db: f64) -> f64 {
    alpha_db * std::f64::consts::LN_10 / 10.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn attenuation_conversion() {
        assert!((db_per_km_to_natural(0.2) - 0.046_051_7).abs() < 1e-6);
    }

    #[test]
    fn frequency_wavelength_roundtrip() {
        let f = 193.4;
        assert!((nm_to_thz(thz_to_nm(f)) - f).abs() < 1e-12);
        assert!((thz_to_nm(193.414_489) - 1550.0).abs() < 1e-4);
    }

    #[test]
    fn dbm() {
        assert!((dbm_to_mw(15.0) - 31.622_776_601_683_79).abs() < 1e-12);
        assert!((mw_to_dbm(1.0)).abs() < 1e-15);
    }
}
