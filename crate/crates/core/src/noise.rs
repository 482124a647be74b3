//! Per-channel noise terms and the resulting SNR.

use crate::error::{invalid, Result};
use crate::grid::ChannelGrid;
use crate::units::{db_to_linear, PLANCK, SYMBOL_RATE_THZ};

/// Noise contributions of a link, in the form the throughput cost consumes.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseBudget {
    /// ASE power accumulated over all spans, mW.
    pub p_ase: Vec<f64>,
    /// Back-to-back transceiver SNR, linear. `f64::INFINITY` for an ideal one.
    pub trx_snr: f64,
    /// NLI coefficient per channel for the whole link, 1/mW².
    pub eta: Vec<f64>,
}

impl NoiseBudget {
    pub fn new(p_ase: Vec<f64>, trx_snr: f64, eta: Vec<f64>) -> Result<Self> {
        if p_ase.len() != eta.len() {
            return Err(invalid("ASE and NLI vectors differ in length"));
        }
        if !(trx_snr > 0.0) {
            return Err(invalid(format!("transceiver SNR must be positive, got {trx_snr}")));
        }
        if p_ase.iter().chain(&eta).any(|v| !(*v >= 0.0)) {
            return Err(invalid("noise terms must be non-negative"));
        }
        Ok(Self { p_ase, trx_snr, eta })
    }

    pub fn len(&self) -> usize {
        self.p_ase.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_ase.is_empty()
    }
}

/// ASE power per channel after `n_spans` amplified spans, mW.
///
/// `P = N_s h f (F G − 1) f_s`, with the noise figure of each channel's band.
pub fn compute_ase(grid: &ChannelGrid, gains: &[f64], n_spans: usize) -> Result<Vec<f64>> {
    if gains.len() != grid.len() {
        return Err(invalid(format!("{} gains for {} channels", gains.len(), grid.len())));
    }
    let nf: Vec<f64> = grid.channels.iter().map(|c| c.band.noise_figure_db()).collect();
    ase_at(&grid.frequencies(), gains, &nf, n_spans, SYMBOL_RATE_THZ)
}

/// ASE for explicit frequencies and noise figures (dB).
pub fn ase_at(freqs_thz: &[f64], gains: &[f64], nf_db: &[f64], n_spans: usize, bandwidth_thz: f64) -> Result<Vec<f64>> {
    if freqs_thz.len() != gains.len() || nf_db.len() != gains.len() {
        return Err(invalid("frequency, gain and noise-figure vectors differ in length"));
    }
    freqs_thz
        .iter()
        .zip(gains)
        .zip(nf_db)
        .map(|((&f, &g), &nf)| {
            if !(g >= 1.0) {
                return Err(invalid(format!("amplifier gain must be at least 1, got {g}")));
            }
            let watts = PLANCK * f * 1e12 * (db_to_linear(nf) * g - 1.0) * bandwidth_thz * 1e12;
            Ok(n_spans as f64 * watts * 1e3)
        })
        .collect()
}

/// SNR of one channel at launch power `p` (already scaled by τ).
#[inline]
pub fn snr_one(p: f64, eta: f64, p_ase: f64, trx_snr: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    p / (eta * p * p * p + p_ase + p / trx_snr)
}

/// Linear SNR of every channel for launch powers `powers` scaled by `tau`.
pub fn channel_snr(powers: &[f64], budget: &NoiseBudget, tau: f64) -> Vec<f64> {
    powers
        .iter()
        .enumerate()
        .map(|(i, &p)| snr_one(tau * p, budget.eta[i], budget.p_ase[i], budget.trx_snr))
        .collect()
}

/// ASE-only and NLI-only SNRs, whose reciprocals add up (with 1/trx_snr) to 1/SNR.
pub fn snr_components(powers: &[f64], budget: &NoiseBudget, tau: f64) -> (Vec<f64>, Vec<f64>) {
    let ase = powers
        .iter()
        .zip(&budget.p_ase)
        .map(|(&p, &a)| tau * p / a)
        .collect();
    let nli = powers
        .iter()
        .zip(&budget.eta)
        .map(|(&p, &e)| 1.0 / (e * (tau * p) * (tau * p)))
        .collect();
    (ase, nli)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, BandSet};
    use proptest::prelude::*;

    #[test]
    fn ase_example() {
        let p = ase_at(&[193.4], &[39.81], &[5.0], 1, 0.148).unwrap()[0];
        let oracle = 6.626_070_15e-34 * 193.4e12 * (10f64.powf(0.5) * 39.81 - 1.0) * 148e9 * 1e3;
        assert!((p - oracle).abs() < 1e-15);
        assert!((p - 2.37e-3).abs() < 0.01e-3);
        let p6 = ase_at(&[193.4], &[39.81], &[5.0], 6, 0.148).unwrap()[0];
        assert_eq!(p6, 6.0 * p);
        assert_eq!(ase_at(&[193.4], &[1.0], &[0.0], 1, 0.148).unwrap()[0], 0.0);
        assert!(ase_at(&[193.4], &[0.5], &[5.0], 1, 0.148).is_err());
    }

    #[test]
    fn ase_uses_band_noise_figure() {
        let grid = build_grid(76, &BandSet::all()).unwrap();
        let ase = compute_ase(&grid, &vec![40.0; 76], 1).unwrap();
        let c = grid.band_indices(crate::Band::C)[0];
        let l = grid.band_indices(crate::Band::L)[0];
        // 6 dB against 5 dB, frequencies within a few percent
        assert!(ase[l] / ase[c] > 1.2);
    }

    #[test]
    fn linear_regime_and_ceiling() {
        let b = NoiseBudget::new(vec![0.01], f64::INFINITY, vec![0.0]).unwrap();
        assert!((channel_snr(&[1.0], &b, 1.0)[0] - 100.0).abs() < 1e-12);
        let b = NoiseBudget::new(vec![0.0], 100.0, vec![0.0]).unwrap();
        for p in [1e-3, 1.0, 50.0] {
            assert!((channel_snr(&[p], &b, 1.0)[0] - 100.0).abs() < 1e-12);
        }
        assert_eq!(channel_snr(&[0.0], &b, 1.0)[0], 0.0);
    }

    #[test]
    fn optimum_matches_scan() {
        let (eta, ase) = (0.01f64, 0.001f64);
        let analytic = (ase / (2.0 * eta)).powf(1.0 / 3.0);
        let best = (0..200_000)
            .map(|k| 0.2 + k as f64 * 1e-6)
            .max_by(|a, b| snr_one(*a, eta, ase, f64::INFINITY).total_cmp(&snr_one(*b, eta, ase, f64::INFINITY)))
            .unwrap();
        assert!((best - analytic).abs() < 2e-6);
        assert!((analytic - 0.368).abs() < 1e-3);
    }

    #[test]
    fn validation() {
        assert!(NoiseBudget::new(vec![0.1], 0.0, vec![0.0]).is_err());
        assert!(NoiseBudget::new(vec![0.1, 0.2], 10.0, vec![0.0]).is_err());
    }

    proptest! {
        #[test]
        fn reciprocal_decomposition(p in 0.01f64..20.0, eta in 1e-5f64..1e-1, ase in 1e-5f64..1.0, trx in 10.0f64..1000.0, tau in 0.1f64..1.0) {
            let b = NoiseBudget::new(vec![ase], trx, vec![eta]).unwrap();
            let snr = channel_snr(&[p], &b, tau)[0];
            let (sa, sn) = snr_components(&[p], &b, tau);
            let total = 1.0 / sa[0] + 1.0 / sn[0] + 1.0 / trx;
            prop_assert!(((1.0 / snr - total) / total).abs() < 1e-12);
        }

        #[test]
        fn unimodal_in_power(eta in 1e-5f64..1e-1, ase in 1e-5f64..1.0, trx in 10.0f64..1e6) {
            let s: Vec<f64> = (0..400).map(|k| snr_one(1e-3 * 1.03f64.powi(k), eta, ase, trx)).collect();
            let peak = s.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
            prop_assert!(s[..=peak].windows(2).all(|w| w[1] >= w[0]));
            prop_assert!(s[peak..].windows(2).all(|w| w[1] <= w[0]));
        }

        #[test]
        fn higher_noise_figure_lowers_snr(nf in 3.0f64..9.0, g in 1.0f64..1000.0, p in 0.01f64..10.0) {
            let a = ase_at(&[200.0], &[g], &[nf], 1, 0.148).unwrap();
            let b = ase_at(&[200.0], &[g], &[nf + 0.5], 1, 0.148).unwrap();
            prop_assert!(snr_one(p, 1e-3, b[0], 100.0) < snr_one(p, 1e-3, a[0], 100.0));
        }
    }
}
