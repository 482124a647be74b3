//! Wavelength-dependent fibre parameters and the Raman gain spectrum.
//!
//! A [`FibreProfile`] stores attenuation, dispersion, effective area and the
//! nonlinear coefficient on a strictly increasing wavelength grid and
//! interpolates them linearly. Queries outside the grid are errors.

use std::f64::consts::PI;
use std::path::Path;

use crate::error::{Error, Result};
use crate::units::{db_per_km_to_natural, SPEED_OF_LIGHT_NM_THZ};

/// Nonlinear refractive index of silica, m²/W.
pub const SILICA_N2: f64 = 2.6e-20;

/// Peak Raman efficiency at the reference effective area, 1/W/km.
pub const RAMAN_PEAK_EFFICIENCY: f64 = 0.39;
/// Frequency shift of the Raman gain peak, THz.
pub const RAMAN_PEAK_SHIFT_THZ: f64 = 13.2;
/// Shift beyond which the triangular Raman gain vanishes, THz.
pub const RAMAN_CUTOFF_THZ: f64 = 15.0;

/// Sampled Raman gain efficiency versus frequency shift.
///
/// `gain` is in 1/W/km and refers to an effective area of
/// `reference_aeff_um2`; couplings between channels with other areas are
/// rescaled by the mean area of the pair.
#[derive(Debug, Clone, PartialEq)]
pub struct RamanSpectrum {
    pub shift_thz: Vec<f64>,
    pub gain: Vec<f64>,
    pub reference_aeff_um2: f64,
}

impl RamanSpectrum {
    /// Triangular approximation: linear rise to the 13.2 THz peak, linear
    /// fall to zero at 15 THz, sampled every 0.1 THz over [0, 40] THz.
    pub fn triangular(reference_aeff_um2: f64) -> Self {
        let shift_thz: Vec<f64> = (0..=400).map(|k| k as f64 * 0.1).collect();
        let gain = shift_thz.iter().map(|&df| triangular_gain(df)).collect();
        Self {
            shift_thz,
            gain,
            reference_aeff_um2,
        }
    }

    /// A spectrum with no gain anywhere; disables ISRS.
    pub fn disabled() -> Self {
        Self {
            shift_thz: vec![0.0, 40.0],
            gain: vec![0.0, 0.0],
            reference_aeff_um2: 80.0,
        }
    }

    pub fn is_disabled(&self) -> bool {
        self.gain.iter().all(|&g| g == 0.0)
    }

    /// Gain efficiency at `|shift|` (1/W/km, reference area). Zero beyond the table.
    pub fn gain_at(&self, shift_thz: f64) -> f64 {
        let df = shift_thz.abs();
        let last = *self.shift_thz.last().unwrap();
        if df >= last {
            return if df == last { *self.gain.last().unwrap() } else { 0.0 };
        }
        interp(&self.shift_thz, &self.gain, df)
    }

    /// Coupling efficiency between two channels (1/W/km), including the
    /// effective-area overlap `2 / (A_i + A_j)` relative to the reference area.
    pub fn efficiency(&self, shift_thz: f64, aeff_i_um2: f64, aeff_j_um2: f64) -> f64 {
        self.gain_at(shift_thz) * self.reference_aeff_um2 * 2.0 / (aeff_i_um2 + aeff_j_um2)
    }

    /// Parse a delimited `(delta_f_THz, gain_1_per_W_km)` table.
    pub fn parse(text: &str, reference_aeff_um2: f64) -> Result<Self> {
        let rows = parse_numeric_rows(text, 2)?;
        let mut shift_thz = Vec::with_capacity(rows.len());
        let mut gain = Vec::with_capacity(rows.len());
        for (row, vals) in rows {
            if let Some(&prev) = shift_thz.last() {
                if vals[0] <= prev {
                    return Err(load_err(row, "non-monotone frequency shift"));
                }
            } else if vals[0] != 0.0 {
                return Err(load_err(row, "Raman table must start at 0 THz"));
            }
            if vals[1] < 0.0 {
                return Err(load_err(row, "negative Raman gain"));
            }
            shift_thz.push(vals[0]);
            gain.push(vals[1]);
        }
        if shift_thz.len() < 2 {
            return Err(load_err(shift_thz.len(), "need at least 2 rows"));
        }
        if gain[0] != 0.0 {
            return Err(load_err(1, "Raman gain at 0 THz must be 0"));
        }
        Ok(Self {
            shift_thz,
            gain,
            reference_aeff_um2,
        })
    }
}

fn triangular_gain(df: f64) -> f64 {
    if df <= RAMAN_PEAK_SHIFT_THZ {
        RAMAN_PEAK_EFFICIENCY * df / RAMAN_PEAK_SHIFT_THZ
    } else if df < RAMAN_CUTOFF_THZ {
        RAMAN_PEAK_EFFICIENCY * (RAMAN_CUTOFF_THZ - df) / (RAMAN_CUTOFF_THZ - RAMAN_PEAK_SHIFT_THZ)
    } else {
        0.0
    }
}

/// Local fibre parameters at one wavelength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FibreParams {
    /// Power attenuation, natural units (1/km).
    pub alpha: f64,
    /// Power attenuation, dB/km.
    pub alpha_db: f64,
    /// Chromatic dispersion, ps/nm/km.
    pub dispersion: f64,
    /// Group-velocity dispersion, ps²/km.
    pub beta2: f64,
    /// Third-order dispersion, ps³/km.
    pub beta3: f64,
    /// Nonlinear coefficient, 1/W/km.
    pub gamma: f64,
    /// Effective area, µm².
    pub aeff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FibreProfile {
    pub wavelength_nm: Vec<f64>,
    pub attenuation_db_km: Vec<f64>,
    pub dispersion_ps_nm_km: Vec<f64>,
    pub aeff_um2: Vec<f64>,
    pub gamma_per_w_km: Vec<f64>,
    pub raman: RamanSpectrum,
}

impl FibreProfile {
    /// Build a profile from columns, checking every invariant.
    pub fn new(
        wavelength_nm: Vec<f64>,
        attenuation_db_km: Vec<f64>,
        dispersion_ps_nm_km: Vec<f64>,
        aeff_um2: Vec<f64>,
        gamma_per_w_km: Vec<f64>,
        raman: RamanSpectrum,
    ) -> Result<Self> {
        let n = wavelength_nm.len();
        if n < 2 {
            return Err(load_err(n, "need at least 2 rows"));
        }
        for v in [&attenuation_db_km, &dispersion_ps_nm_km, &aeff_um2, &gamma_per_w_km] {
            if v.len() != n {
                return Err(Error::Validation("column lengths differ".into()));
            }
        }
        for i in 0..n {
            let row = i + 1;
            if i > 0 && wavelength_nm[i] <= wavelength_nm[i - 1] {
                return Err(load_err(row, "non-monotone wavelength"));
            }
            if !(attenuation_db_km[i] > 0.0) {
                return Err(load_err(row, "non-positive attenuation"));
            }
            if !(aeff_um2[i] > 0.0) {
                return Err(load_err(row, "non-positive effective area"));
            }
            if !(gamma_per_w_km[i] > 0.0) {
                return Err(load_err(row, "non-positive nonlinear coefficient"));
            }
        }
        Ok(Self {
            wavelength_nm,
            attenuation_db_km,
            dispersion_ps_nm_km,
            aeff_um2,
            gamma_per_w_km,
            raman,
        })
    }

    /// Parse a delimited table with columns
    /// `(wavelength_nm, attenuation_dB_km, dispersion_ps_nm_km, aeff_um2, gamma_per_W_km)`.
    ///
    /// The Raman spectrum is the triangular default referenced to the
    /// profile's effective area at 1550 nm (or the grid midpoint when 1550 nm
    /// lies outside the grid).
    pub fn parse(text: &str) -> Result<Self> {
        let rows = parse_numeric_rows(text, 5)?;
        let mut cols: [Vec<f64>; 5] = Default::default();
        for (row, vals) in &rows {
            if let Some(&prev) = cols[0].last() {
                if vals[0] <= prev {
                    return Err(load_err(*row, "non-monotone wavelength"));
                }
            }
            for (c, v) in cols.iter_mut().zip(vals) {
                c.push(*v);
            }
        }
        let [wl, att, disp, aeff, gamma] = cols;
        let mut profile = Self::new(wl, att, disp, aeff, gamma, RamanSpectrum::disabled())?;
        profile.raman = RamanSpectrum::triangular(profile.reference_aeff());
        Ok(profile)
    }

    /// Effective area used to reference the Raman efficiency.
    pub fn reference_aeff(&self) -> f64 {
        let (lo, hi) = self.range_nm();
        let at = if (lo..=hi).contains(&1550.0) { 1550.0 } else { 0.5 * (lo + hi) };
        interp(&self.wavelength_nm, &self.aeff_um2, at)
    }

    pub fn with_raman(mut self, raman: RamanSpectrum) -> Self {
        self.raman = raman;
        self
    }

    pub fn range_nm(&self) -> (f64, f64) {
        (self.wavelength_nm[0], *self.wavelength_nm.last().unwrap())
    }

    fn check(&self, wavelength_nm: f64) -> Result<()> {
        let (lo, hi) = self.range_nm();
        if !(wavelength_nm >= lo && wavelength_nm <= hi) {
            return Err(Error::OutOfRange {
                wavelength_nm,
                min_nm: lo,
                max_nm: hi,
            });
        }
        Ok(())
    }

    pub fn attenuation_db(&self, wavelength_nm: f64) -> Result<f64> {
        self.check(wavelength_nm)?;
        Ok(interp(&self.wavelength_nm, &self.attenuation_db_km, wavelength_nm))
    }

    pub fn dispersion(&self, wavelength_nm: f64) -> Result<f64> {
        self.check(wavelength_nm)?;
        Ok(interp(&self.wavelength_nm, &self.dispersion_ps_nm_km, wavelength_nm))
    }

    /// All local parameters at `wavelength_nm`.
    pub fn query(&self, wavelength_nm: f64) -> Result<FibreParams> {
        self.check(wavelength_nm)?;
        let wl = &self.wavelength_nm;
        let alpha_db = interp(wl, &self.attenuation_db_km, wavelength_nm);
        let d = interp(wl, &self.dispersion_ps_nm_km, wavelength_nm);
        let aeff = interp(wl, &self.aeff_um2, wavelength_nm);
        let gamma = interp(wl, &self.gamma_per_w_km, wavelength_nm);

        // dispersion slope by centred difference, one-sided at the grid ends
        let (lo, hi) = self.range_nm();
        let h = 0.5;
        let a = (wavelength_nm - h).max(lo);
        let b = (wavelength_nm + h).min(hi);
        let slope = (interp(wl, &self.dispersion_ps_nm_km, b) - interp(wl, &self.dispersion_ps_nm_km, a)) / (b - a);

        let lam2_over_2pic = wavelength_nm * wavelength_nm / (2.0 * PI * SPEED_OF_LIGHT_NM_THZ);
        let beta2 = -d * lam2_over_2pic;
        let beta3 = lam2_over_2pic * lam2_over_2pic * (slope + 2.0 * d / wavelength_nm);
        Ok(FibreParams {
            alpha: db_per_km_to_natural(alpha_db),
            alpha_db,
            dispersion: d,
            beta2,
            beta3,
            gamma,
            aeff,
        })
    }

    /// Wavelength where the interpolated dispersion first changes sign.
    pub fn zero_dispersion_wavelength(&self) -> Option<f64> {
        let wl = &self.wavelength_nm;
        let d = &self.dispersion_ps_nm_km;
        if d[0] == 0.0 {
            return Some(wl[0]);
        }
        for k in 1..wl.len() {
            if d[k] == 0.0 {
                return Some(wl[k]);
            }
            if d[k - 1].signum() != d[k].signum() {
                let t = d[k - 1] / (d[k - 1] - d[k]);
                return Some(wl[k - 1] + t * (wl[k] - wl[k - 1]));
            }
        }
        None
    }
}

/// Read a profile file; a missing file yields [`Error::ProfileNotFound`].
pub fn load_profile(path: impl AsRef<Path>) -> Result<FibreProfile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::ProfileNotFound(path.display().to_string()),
        _ => Error::Io(e),
    })?;
    FibreProfile::parse(&text)
}

/// Read a Raman gain table and attach it to `profile`.
pub fn load_raman(profile: FibreProfile, path: impl AsRef<Path>) -> Result<FibreProfile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::ProfileNotFound(path.display().to_string()),
        _ => Error::Io(e),
    })?;
    let raman = RamanSpectrum::parse(&text, profile.reference_aeff())?;
    Ok(profile.with_raman(raman))
}

/// Parametric standard single-mode fibre stand-in.
pub mod default_model {
    use std::f64::consts::PI;

    pub const ZERO_DISPERSION_NM: f64 = 1310.0;
    pub const DISPERSION_SLOPE: f64 = 0.092;
    pub const WATER_PEAK_NM: f64 = 1383.0;
    pub const WATER_PEAK_DB_KM: f64 = 0.1;
    pub const WATER_PEAK_WIDTH_NM: f64 = 15.0;
    pub const ALPHA_1550_DB_KM: f64 = 0.19;
    // infrared absorption tail a·exp(-b/λ[µm])
    const IR_SCALE: f64 = 7.81e11;
    const IR_EXP: f64 = 48.48;

    pub fn water_peak(lambda_nm: f64) -> f64 {
        let x = (lambda_nm - WATER_PEAK_NM) / WATER_PEAK_WIDTH_NM;
        WATER_PEAK_DB_KM * (-0.5 * x * x).exp()
    }

    pub fn infrared(lambda_nm: f64) -> f64 {
        IR_SCALE * (-IR_EXP / (lambda_nm * 1e-3)).exp()
    }

    /// Rayleigh coefficient chosen so the total attenuation is 0.19 dB/km at 1550 nm.
    pub fn rayleigh_coefficient() -> f64 {
        (ALPHA_1550_DB_KM - infrared(1550.0) - water_peak(1550.0)) * 1550f64.powi(4)
    }

    pub fn attenuation_db(lambda_nm: f64) -> f64 {
        rayleigh_coefficient() / lambda_nm.powi(4) + infrared(lambda_nm) + water_peak(lambda_nm)
    }

    pub fn dispersion(lambda_nm: f64) -> f64 {
        DISPERSION_SLOPE / 4.0 * (lambda_nm - ZERO_DISPERSION_NM.powi(4) / lambda_nm.powi(3))
    }

    pub fn effective_area(lambda_nm: f64) -> f64 {
        65.0 + (95.0 - 65.0) * (lambda_nm - 1260.0) / (1675.0 - 1260.0)
    }

    /// γ = 2π·n₂/(λ·A_eff), returned in 1/W/km.
    pub fn gamma(lambda_nm: f64) -> f64 {
        2.0 * PI * super::SILICA_N2 / (lambda_nm * 1e-9 * effective_area(lambda_nm) * 1e-12) * 1e3
    }
}

/// Default profile on a 1 nm grid over [1250, 1690] nm.
pub fn make_default_profile() -> FibreProfile {
    use default_model as m;
    let wl: Vec<f64> = (1250..=1690).map(|l| l as f64).collect();
    let att = wl.iter().map(|&l| m::attenuation_db(l)).collect();
    let disp = wl.iter().map(|&l| m::dispersion(l)).collect();
    let aeff = wl.iter().map(|&l| m::effective_area(l)).collect();
    let gamma = wl.iter().map(|&l| m::gamma(l)).collect();
    let raman = RamanSpectrum::triangular(m::effective_area(1550.0));
    FibreProfile::new(wl, att, disp, aeff, gamma, raman).expect("default profile is valid")
}

/// A wavelength-flat fibre, mostly useful for tests and synthetic studies.
pub fn uniform_profile(
    alpha_db_km: f64,
    dispersion_ps_nm_km: f64,
    aeff_um2: f64,
    gamma_per_w_km: f64,
    raman: RamanSpectrum,
) -> FibreProfile {
    let wl = vec![1200.0, 1700.0];
    FibreProfile::new(
        wl,
        vec![alpha_db_km; 2],
        vec![dispersion_ps_nm_km; 2],
        vec![aeff_um2; 2],
        vec![gamma_per_w_km; 2],
        raman,
    )
    .expect("uniform profile parameters must be positive")
}

fn load_err(row: usize, msg: &str) -> Error {
    Error::Load {
        row,
        msg: msg.to_string(),
    }
}

/// Linear interpolation on a strictly increasing abscissa; `x` must lie in range.
pub(crate) fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let k = xs.partition_point(|&v| v <= x);
    if k == 0 {
        return ys[0];
    }
    if k >= xs.len() {
        return ys[xs.len() - 1];
    }
    let (x0, x1) = (xs[k - 1], xs[k]);
    let t = (x - x0) / (x1 - x0);
    ys[k - 1] + t * (ys[k] - ys[k - 1])
}

/// Split delimited text into numeric rows. Data rows are numbered from 1; the
/// first non-comment line is treated as a header when it is not numeric.
fn parse_numeric_rows(text: &str, ncols: usize) -> Result<Vec<(usize, Vec<f64>)>> {
    let mut out = Vec::new();
    let mut row = 0;
    let mut seen_first = false;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c == ';' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        if !seen_first {
            seen_first = true;
            if fields.first().map_or(true, |f| f.parse::<f64>().is_err()) {
                continue;
            }
        }
        row += 1;
        if fields.len() != ncols {
            return Err(load_err(row, &format!("expected {ncols} columns, found {}", fields.len())));
        }
        let vals = fields
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| load_err(row, "malformed number"))?;
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(load_err(row, "non-finite value"));
        }
        out.push((row, vals));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const HEADER: &str = "wavelength_nm,attenuation_dB_km,dispersion_ps_nm_km,aeff_um2,gamma_per_W_km\n";

    #[test]
    fn constant_two_row_profile() {
        let text = format!("{HEADER}1250,0.3,10,80,1.3\n1690,0.3,20,80,1.3\n");
        let p = FibreProfile::parse(&text).unwrap();
        assert_eq!(p.attenuation_db(1470.0).unwrap(), 0.3);
    }

    #[test]
    fn non_monotone_rows_name_the_row() {
        let text = format!("{HEADER}1300,0.3,10,80,1.3\n1290,0.3,20,80,1.3\n");
        let err = FibreProfile::parse(&text).unwrap_err();
        assert_eq!(err.to_string(), "load error at row 2: non-monotone wavelength");
    }

    #[test]
    fn malformed_and_nonpositive_rows() {
        let text = format!("{HEADER}1300,0.3,10,80,1.3\n1310,abc,20,80,1.3\n");
        assert!(matches!(FibreProfile::parse(&text), Err(Error::Load { row: 2, .. })));
        let text = format!("{HEADER}1300,0.3,10,80,1.3\n1310,0.3,20,0,1.3\n");
        assert!(matches!(FibreProfile::parse(&text), Err(Error::Load { row: 2, .. })));
        let text = format!("{HEADER}1300,-0.1,10,80,1.3\n1310,0.3,20,1,1.3\n");
        assert!(matches!(FibreProfile::parse(&text), Err(Error::Load { row: 1, .. })));
        let text = format!("{HEADER}1300,0.3,10,80\n");
        assert!(matches!(FibreProfile::parse(&text), Err(Error::Load { row: 1, .. })));
        let text = format!("{HEADER}1300,0.3,10,80,1.3\n");
        assert!(FibreProfile::parse(&text).is_err());
    }

    #[test]
    fn missing_file() {
        let err = load_profile("/nonexistent/fibre.csv").unwrap_err();
        assert_eq!(err.to_string(), "profile not found: /nonexistent/fibre.csv");
    }

    #[test]
    fn default_profile_matches_parametric_forms() {
        let p = make_default_profile();
        // oracle: the parametric attenuation written out independently
        let ir = |l: f64| 7.81e11 * (-48.48 / (l / 1000.0)).exp();
        let wp = |l: f64| 0.1 * (-0.5 * ((l - 1383.0) / 15.0).powi(2)).exp();
        let a = (0.19 - ir(1550.0) - wp(1550.0)) * 1550f64.powi(4);
        let expected = a / 1550f64.powi(4) + ir(1550.0) + wp(1550.0);
        assert!((p.attenuation_db(1550.0).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 0.19).abs() < 1e-12);
    }

    #[test]
    fn default_profile_shape() {
        let p = make_default_profile();
        assert!(p.dispersion(1260.0).unwrap() < 0.0);
        assert!(p.dispersion(1550.0).unwrap() > 0.0);
        let zdw = p.zero_dispersion_wavelength().unwrap();
        assert!((1290.0..=1330.0).contains(&zdw));
        assert!((zdw - 1310.0).abs() < 1e-9);
        for w in p.gamma_per_w_km.windows(2) {
            assert!(w[1] < w[0]);
        }
        assert!(p.attenuation_db(1383.0).unwrap() > p.attenuation_db(1450.0).unwrap());
        for &a in &p.attenuation_db_km {
            assert!((0.15..=0.6).contains(&a), "alpha {a}");
        }
        // exactly one interior local maximum of attenuation, close to the water peak
        let att = &p.attenuation_db_km;
        let maxima: Vec<f64> = (1..att.len() - 1)
            .filter(|&k| att[k] > att[k - 1] && att[k] > att[k + 1])
            .map(|k| p.wavelength_nm[k])
            .collect();
        assert_eq!(maxima.len(), 1);
        assert!((maxima[0] - 1383.0).abs() <= 5.0);
        let g = p.query(1550.0).unwrap().gamma;
        assert!((g - 1.226).abs() < 0.01, "gamma {g}");
    }

    #[test]
    fn raman_spectrum() {
        let r = RamanSpectrum::triangular(80.0);
        assert_eq!(r.gain_at(0.0), 0.0);
        assert!((r.gain_at(13.2) - 0.39).abs() < 1e-12);
        assert_eq!(r.gain_at(15.0), 0.0);
        assert_eq!(r.gain_at(50.0), 0.0);
        assert!(r.gain.iter().all(|&g| g >= 0.0));
        assert!((r.efficiency(13.2, 80.0, 80.0) - 0.39).abs() < 1e-12);
        assert!((r.efficiency(13.2, 70.0, 90.0) - 0.39).abs() < 1e-12);
        assert!(r.efficiency(13.2, 90.0, 90.0) < 0.39);
        assert!(RamanSpectrum::parse("dfreq,gain\n0,0\n10,0.3\n20,0\n", 80.0).is_ok());
        assert!(RamanSpectrum::parse("0,0.1\n10,0.3\n", 80.0).is_err());
    }

    #[test]
    fn query_units() {
        let p = uniform_profile(0.2, 17.0, 80.0, 1.3, RamanSpectrum::disabled());
        let q = p.query(1550.0).unwrap();
        assert!((q.alpha - 0.046_051_7).abs() < 1e-6);
        // β2 = −D λ² / (2π c)
        let expected = -17.0 * 1550.0f64.powi(2) / (2.0 * PI * 299_792.458);
        assert!((q.beta2 - expected).abs() < 1e-12);
        assert!((q.beta2 + 21.68).abs() < 0.01);
        assert!(p.query(1100.0).is_err());
        let d = make_default_profile();
        assert!(d.query(1249.0).is_err());
        assert!(d.query(1690.5).is_err());
    }

    #[test]
    fn beta2_vanishes_at_zero_dispersion() {
        let p = make_default_profile();
        let q = p.query(1310.0).unwrap();
        assert!(q.beta2.abs() < 1e-12);
        assert!(q.beta3 > 0.0);
    }

    proptest! {
        #[test]
        fn exact_at_nodes(k in 0usize..441) {
            let p = make_default_profile();
            let l = p.wavelength_nm[k];
            let q = p.query(l).unwrap();
            prop_assert_eq!(q.alpha_db, p.attenuation_db_km[k]);
            prop_assert_eq!(q.dispersion, p.dispersion_ps_nm_km[k]);
            prop_assert_eq!(q.aeff, p.aeff_um2[k]);
            prop_assert_eq!(q.gamma, p.gamma_per_w_km[k]);
        }

        #[test]
        fn beta2_opposes_dispersion(l in 1250.0f64..1690.0) {
            let q = make_default_profile().query(l).unwrap();
            if q.dispersion != 0.0 {
                prop_assert!(q.dispersion * q.beta2 < 0.0);
            }
        }
    }
}
