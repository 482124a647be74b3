//! Power evolution along one span under attenuation and inter-channel
//! stimulated Raman scattering.
//!
//! The coupled equations
//!
//! ```text
//! dP_i/dz = −α_i P_i + P_i Σ_j C_ij P_j
//! ```
//!
//! are integrated in logarithmic form, `y_i = ln ρ_i`, which keeps
//! zero-power channels well defined: they are carried as probes that feel the
//! Raman tilt but do not pump anyone.

use crate::error::{invalid, Result};
use crate::fibre::FibreProfile;
use crate::grid::ChannelGrid;
use crate::ode::{self, Tolerance};
use crate::units::thz_to_nm;

/// Spacing of the stored z grid, km.
pub const Z_STEP_KM: f64 = 0.1;

pub const RTOL: f64 = 1e-8;
pub const ATOL: f64 = 1e-12;

/// Normalised power ρ(z, f_i) on a uniform z grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerEvolution {
    pub z_km: Vec<f64>,
    /// Row-major `[n_z × n_ch]`.
    pub rho: Vec<f64>,
    pub launch_powers: Vec<f64>,
    pub n_ch: usize,
}

impl PowerEvolution {
    #[inline]
    pub fn rho(&self, iz: usize, ch: usize) -> f64 {
        self.rho[iz * self.n_ch + ch]
    }

    pub fn span_km(&self) -> f64 {
        *self.z_km.last().unwrap()
    }

    /// ρ along z for one channel.
    pub fn channel(&self, ch: usize) -> Vec<f64> {
        (0..self.z_km.len()).map(|iz| self.rho(iz, ch)).collect()
    }

    /// ρ(L, ·).
    pub fn end_of_span(&self) -> &[f64] {
        &self.rho[(self.z_km.len() - 1) * self.n_ch..]
    }
}

/// Raman coupling in 1/(mW·km) stored per receiving channel.
#[derive(Debug, Clone)]
pub struct RamanCoupling {
    rows: Vec<Vec<(usize, f64)>>,
}

impl RamanCoupling {
    pub fn new(freqs_thz: &[f64], fibre: &FibreProfile) -> Result<Self> {
        let aeff = freqs_thz
            .iter()
            .map(|&f| fibre.query(thz_to_nm(f)).map(|p| p.aeff))
            .collect::<Result<Vec<_>>>()?;
        let n = freqs_thz.len();
        let mut rows = vec![Vec::new(); n];
        if fibre.raman.is_disabled() {
            return Ok(Self { rows });
        }
        for i in 0..n {
            for j in 0..n {
                let df = freqs_thz[j] - freqs_thz[i];
                if df == 0.0 {
                    continue;
                }
                // 1/W/km → 1/mW/km
                let g = 1e-3 * fibre.raman.efficiency(df, aeff[i], aeff[j]);
                if g == 0.0 {
                    continue;
                }
                let c = if df > 0.0 {
                    g
                } else {
                    // pump depletion: one photon lost per photon gained downstream
                    -g * freqs_thz[i] / freqs_thz[j]
                };
                rows[i].push((j, c));
            }
        }
        Ok(Self { rows })
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }
}

fn validate(freqs_thz: &[f64], powers_mw: &[f64], span_km: f64) -> Result<()> {
    if freqs_thz.len() != powers_mw.len() {
        return Err(invalid("frequency and power vectors differ in length"));
    }
    if freqs_thz.is_empty() {
        return Err(invalid("no channels"));
    }
    if let Some(p) = powers_mw.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
        return Err(invalid(format!("launch power must be finite and non-negative, got {p}")));
    }
    if !(span_km > 0.0) || !span_km.is_finite() {
        return Err(invalid(format!("span length must be positive, got {span_km}")));
    }
    Ok(())
}

/// The uniform output grid for a span.
pub fn z_grid(span_km: f64) -> Vec<f64> {
    let n = ((span_km / Z_STEP_KM) - 1e-9).ceil().max(1.0) as usize;
    let dz = span_km / n as f64;
    let mut z: Vec<f64> = (0..=n).map(|k| k as f64 * dz).collect();
    z[n] = span_km;
    z
}

/// Solve one span for channels at `freqs_thz` launched with `powers_mw`.
pub fn solve_span_at(freqs_thz: &[f64], powers_mw: &[f64], fibre: &FibreProfile, span_km: f64) -> Result<PowerEvolution> {
    validate(freqs_thz, powers_mw, span_km)?;
    let n = freqs_thz.len();
    let alpha = freqs_thz
        .iter()
        .map(|&f| fibre.query(thz_to_nm(f)).map(|p| p.alpha))
        .collect::<Result<Vec<_>>>()?;
    let coupling = RamanCoupling::new(freqs_thz, fibre)?;

    let mut rhs = |_z: f64, y: &[f64], d: &mut [f64]| {
        for i in 0..n {
            let mut acc = -alpha[i];
            for &(j, c) in coupling.row(i) {
                acc += c * powers_mw[j] * y[j].exp();
            }
            d[i] = acc;
        }
    };
    let z = z_grid(span_km);
    let tol = Tolerance { rtol: RTOL, atol: ATOL };
    let (ys, _) = ode::integrate(&mut rhs, &vec![0.0; n], &z, tol)?;
    let mut rho = Vec::with_capacity(z.len() * n);
    for y in ys {
        rho.extend(y.into_iter().map(f64::exp));
    }
    Ok(PowerEvolution {
        z_km: z,
        rho,
        launch_powers: powers_mw.to_vec(),
        n_ch: n,
    })
}

pub fn solve_span(grid: &ChannelGrid, powers_mw: &[f64], fibre: &FibreProfile, span_km: f64) -> Result<PowerEvolution> {
    solve_span_at(&grid.frequencies(), powers_mw, fibre, span_km)
}

/// Amplifier gain restoring the launch profile: G_i = 1/ρ(L, i).
pub fn span_gain(evolution: &PowerEvolution) -> Vec<f64> {
    evolution.end_of_span().iter().map(|r| 1.0 / r).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fibre::{make_default_profile, uniform_profile, RamanSpectrum};
    use crate::grid::{build_grid, BandSet};

    fn raman_fibre() -> FibreProfile {
        uniform_profile(0.2, 17.0, 80.0, 1.3, RamanSpectrum::triangular(80.0))
    }

    #[test]
    fn pure_attenuation() {
        let fibre = uniform_profile(0.2, 17.0, 80.0, 1.3, RamanSpectrum::disabled());
        let evo = solve_span_at(&[190.0, 195.0, 200.0], &[10.0, 10.0, 10.0], &fibre, 80.0).unwrap();
        let expected = 10f64.powf(-0.2 * 80.0 / 10.0);
        for &r in evo.end_of_span() {
            assert!(((r - expected) / expected).abs() < 1e-9);
        }
        for g in span_gain(&evo) {
            assert!((g - 39.810_717).abs() < 1e-5);
        }
        let a = crate::units::db_per_km_to_natural(0.2);
        for (iz, z) in evo.z_km.iter().enumerate() {
            let e = (-a * z).exp();
            assert!(((evo.rho(iz, 1) - e) / e).abs() < 1e-9);
        }
    }

    #[test]
    fn raman_pumps_long_wavelengths() {
        let fibre = raman_fibre();
        let evo = solve_span_at(&[190.0, 200.0], &[50.0, 50.0], &fibre, 80.0).unwrap();
        let end = evo.end_of_span();
        assert!(end[0] > end[1]);
        let g = span_gain(&evo);
        let att_only = 10f64.powf(0.2 * 8.0);
        assert!(g[1] > att_only);
        assert!(g[0] < att_only);
    }

    #[test]
    fn photon_number_decays_at_attenuation_rate() {
        let fibre = raman_fibre();
        let f = [190.0, 200.0];
        let p = [40.0, 40.0];
        let evo = solve_span_at(&f, &p, &fibre, 80.0).unwrap();
        let a = crate::units::db_per_km_to_natural(0.2);
        let n0: f64 = p.iter().zip(&f).map(|(p, f)| p / f).sum();
        for (iz, z) in evo.z_km.iter().enumerate() {
            let n: f64 = (0..2).map(|c| p[c] * evo.rho(iz, c) / f[c]).sum();
            assert!(((n - n0 * (-a * z).exp()) / n).abs() < 1e-7, "z={z}");
        }
    }

    #[test]
    fn zero_power_channels_are_probes() {
        let fibre = raman_fibre();
        let evo = solve_span_at(&[190.0, 200.0, 203.0], &[0.0, 50.0, 0.0], &fibre, 80.0).unwrap();
        let end = evo.end_of_span();
        assert!(end.iter().all(|r| r.is_finite() && *r > 0.0));
        assert!(end[0] > end[2]);
    }

    #[test]
    fn validation() {
        let fibre = raman_fibre();
        assert!(solve_span_at(&[190.0], &[-1.0], &fibre, 80.0).is_err());
        assert!(solve_span_at(&[190.0], &[1.0], &fibre, 0.0).is_err());
        assert!(solve_span_at(&[190.0, 191.0], &[1.0], &fibre, 80.0).is_err());
    }

    #[test]
    fn doubling_power_steepens_tilt() {
        let fibre = make_default_profile();
        let grid = build_grid(76, &BandSet::all()).unwrap();
        let tilt = |p: f64| {
            let evo = solve_span(&grid, &vec![p; grid.len()], &fibre, 80.0).unwrap();
            let end = evo.end_of_span();
            // channels are in frequency order: first is the longest wavelength
            end[0] / end[grid.len() - 1]
        };
        let (t1, t2, t4) = (tilt(1.0), tilt(2.0), tilt(4.0));
        assert!(t2 >= t1 && t4 >= t2, "{t1} {t2} {t4}");
    }

    #[test]
    fn shortest_wavelength_monotone_in_z() {
        let fibre = make_default_profile();
        let grid = build_grid(138, &BandSet::all()).unwrap();
        let evo = solve_span(&grid, &vec![3.0; grid.len()], &fibre, 80.0).unwrap();
        let last = grid.len() - 1;
        let r = evo.channel(last);
        assert!(r.windows(2).all(|w| w[1] <= w[0]));
        assert!(evo.rho.iter().all(|&r| r > 0.0));
        assert!((0..grid.len()).all(|c| evo.rho(0, c) == 1.0));
    }
}
