//! Property tests over the public API.

use proptest::prelude::*;
use uwbcap_core::fibre::{uniform_profile, RamanSpectrum};
use uwbcap_core::grid::band_completion_points;
use uwbcap_core::isrs::solve_span_at;
use uwbcap_core::nli::compute_nli_at;
use uwbcap_core::optim::{cost, evaluate_budget, SegmentParameterization};
use uwbcap_core::units::{dbm_to_mw, nm_to_thz, thz_to_nm, SYMBOL_RATE_THZ};
use uwbcap_core::{
    apply_tau, build_grid, make_default_profile, saturation_bandwidth, Band, BandSet, NliConfig, SegmentMode,
};

fn adjacent(a: Band, b: Band) -> bool {
    let i = Band::ALL.iter().position(|&x| x == a).unwrap();
    Band::ALL.get(i + 1) == Some(&b)
}

fn cfg() -> ProptestConfig {
    ProptestConfig {
        cases: 24,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(cfg())]

    #[test]
    fn stronger_pumping_never_flattens_tilt(
        p in prop::collection::vec(0.5f64..30.0, 4),
        spread in 2.0f64..12.0,
    ) {
        let fibre = make_default_profile();
        let f: Vec<f64> = (0..4).map(|k| 190.0 + spread * k as f64).collect();
        let tilt = |scale: f64| {
            let q: Vec<f64> = p.iter().map(|x| x * scale).collect();
            let evo = solve_span_at(&f, &q, &fibre, 80.0).unwrap();
            let r = evo.end_of_span();
            r[0] / r[3]
        };
        prop_assert!(tilt(2.0) >= tilt(1.0) * (1.0 - 1e-9));
    }

    #[test]
    fn shortest_wavelength_decays_monotonically(p in prop::collection::vec(0.1f64..50.0, 5)) {
        let fibre = make_default_profile();
        let f = [185.0, 190.0, 195.0, 200.0, 205.0];
        let evo = solve_span_at(&f, &p, &fibre, 80.0).unwrap();
        let top = evo.channel(4);
        prop_assert!(top.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn nli_scale_invariant_without_raman(
        p in prop::collection::vec(0.05f64..5.0, 4),
        scale in 0.1f64..10.0,
        dispersion in 2.0f64..20.0,
    ) {
        let fibre = uniform_profile(0.2, dispersion, 80.0, 1.3, RamanSpectrum::disabled());
        let f = [193.0, 193.15, 193.45, 194.05];
        let c = NliConfig::with_resolution(16, 1.0);
        let eta = |q: &[f64]| {
            let evo = solve_span_at(&f, q, &fibre, 80.0).unwrap();
            compute_nli_at(&f, q, &fibre, &evo, 1, SYMBOL_RATE_THZ, &c).unwrap().eta
        };
        let a = eta(&p);
        let b = eta(&p.iter().map(|x| x * scale).collect::<Vec<_>>());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!(((x - y) / x).abs() < 1e-10);
        }
    }

    #[test]
    fn eta_positive_for_lit_channels(p in prop::collection::vec(prop_oneof![Just(0.0), 0.01f64..10.0], 5)) {
        prop_assume!(p.iter().any(|&x| x > 0.0));
        let fibre = make_default_profile();
        let f = [186.0, 190.0, 193.5, 201.0, 228.0];
        let evo = solve_span_at(&f, &p, &fibre, 80.0).unwrap();
        let r = compute_nli_at(&f, &p, &fibre, &evo, 1, SYMBOL_RATE_THZ, &NliConfig::with_resolution(16, 1.0)).unwrap();
        for (e, q) in r.eta.iter().zip(&p) {
            prop_assert!(e.is_finite());
            if *q > 0.0 {
                prop_assert!(*e > 0.0);
            }
        }
    }
}

proptest! {
    #[test]
    fn tau_never_exceeds_cap(p in prop::collection::vec(0.0f64..100.0, 1..50), lim in 0.01f64..1000.0) {
        let (tau, scaled) = apply_tau(&p, lim);
        prop_assert!(tau > 0.0 && tau <= 1.0);
        prop_assert!(scaled.iter().sum::<f64>() <= lim * (1.0 + 1e-12));
        if p.iter().sum::<f64>() > lim {
            prop_assert!((scaled.iter().sum::<f64>() - lim).abs() <= 1e-12 * lim);
        } else {
            prop_assert_eq!(&scaled, &p);
        }
    }

    #[test]
    fn grid_wavelengths_near_their_band(n in 1usize..=390) {
        let g = build_grid(n, &BandSet::all()).unwrap();
        for ch in &g.channels {
            let (lo, hi) = ch.band.wavelength_range();
            let slack = if ch.band == Band::C { 0.0 } else { 10.0 };
            let l = ch.wavelength_nm();
            prop_assert!(l >= lo - slack && l <= hi + slack, "{} channel at {l} nm", ch.band);
            prop_assert!((nm_to_thz(thz_to_nm(ch.frequency_thz)) - ch.frequency_thz).abs() < 1e-12);
        }
        // adjacent bands keep at least the guard between their edge slots
        let bands = g.populated_bands();
        for w in bands.windows(2) {
            let edge = |b: Band, upper: bool| {
                let f = g.band_indices(b).iter().map(|&i| g.channels[i].frequency_thz).collect::<Vec<_>>();
                if upper { f.iter().cloned().fold(f64::MIN, f64::max) } else { f.iter().cloned().fold(f64::MAX, f64::min) }
            };
            // w[0] is the shorter-wavelength band, so higher in frequency
            let gap_nm = thz_to_nm(edge(w[1], true) + 0.075) - thz_to_nm(edge(w[0], false) - 0.075);
            prop_assert!(gap_nm >= 5.0 - 1e-9 || !adjacent(w[0], w[1]), "{} / {}: {gap_nm}", w[0], w[1]);
        }
    }

    #[test]
    fn saturation_stays_inside_the_curve(
        ys in prop::collection::vec(0.0f64..100.0, 2..20),
        fraction in 0.1f64..1.0,
    ) {
        let pts: Vec<(f64, f64)> = ys.iter().enumerate().map(|(k, &y)| (1.0 + k as f64, y + 1.0)).collect();
        let (bw, _) = saturation_bandwidth(&pts, fraction).unwrap();
        prop_assert!(bw >= pts[0].0 && bw <= pts[pts.len() - 1].0);
    }
}

proptest! {
    #![proptest_config(cfg())]

    #[test]
    fn constrained_cost_is_flat_along_uniform_shift(shift in -5.0f64..5.0, base in 3.0f64..6.0) {
        let grid = build_grid(29, &BandSet::all()).unwrap();
        let fibre = make_default_profile();
        let seg = SegmentParameterization::new(&grid, &SegmentMode::BandPreset, (-30.0, 20.0)).unwrap();
        let launch = vec![dbm_to_mw(2.0); 29];
        let budget = evaluate_budget(&grid, &fibre, &launch, 1, 100.0, 80.0, &NliConfig::with_resolution(16, 1.0)).unwrap();
        let p_lim = dbm_to_mw(10.0);
        let x: Vec<f64> = (0..seg.n_edges()).map(|k| base + k as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| v + shift.abs()).collect();
        let (a, _) = cost(&x, &seg, &budget, p_lim);
        let (b, _) = cost(&y, &seg, &budget, p_lim);
        prop_assert!(((a - b) / a).abs() < 1e-12);
    }
}

#[test]
fn completion_points_match_band_sizes() {
    let pts = band_completion_points(&BandSet::all());
    assert_eq!(pts, vec![29, 76, 138, 174, 274, 390]);
    let sizes: usize = Band::ALL.iter().map(|b| b.channel_count()).sum();
    assert_eq!(sizes, 390);
}
