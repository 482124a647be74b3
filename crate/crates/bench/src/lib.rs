//! Fixtures shared by the criterion benches in `benches/`.

use uwbcap_core::optim::{evaluate_budget, SegmentParameterization};
use uwbcap_core::units::dbm_to_mw;
use uwbcap_core::{build_grid, make_default_profile, BandSet, ChannelGrid, FibreProfile, NliConfig, NoiseBudget, SegmentMode};

pub struct Fixture {
    pub grid: ChannelGrid,
    pub fibre: FibreProfile,
    /// Launch powers, mW.
    pub powers: Vec<f64>,
}

/// `n` channels of the full band set at a flat `dbm` per channel.
pub fn fixture(n: usize, dbm: f64) -> Fixture {
    let grid = build_grid(n, &BandSet::all()).expect("fixture grid");
    Fixture {
        powers: vec![dbm_to_mw(dbm); grid.len()],
        fibre: make_default_profile(),
        grid,
    }
}

/// Segment map and noise budget for the cost benchmarks.
pub fn cost_inputs(f: &Fixture, nli: &NliConfig) -> (SegmentParameterization, NoiseBudget) {
    let seg = SegmentParameterization::new(&f.grid, &SegmentMode::BandPreset, (-30.0, 10.0)).expect("segments");
    let budget = evaluate_budget(&f.grid, &f.fibre, &f.powers, 1, f64::INFINITY, 80.0, nli).expect("budget");
    (seg, budget)
}
