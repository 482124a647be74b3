//! WDM channel plan: band definitions, guard bands and the population order.
//!
//! Every band sits at a fixed position in the full O–U plan. The C-band is
//! centred on the midpoint of its nominal range; every other band starts one
//! 5 nm guard band away from the outermost slot of its inner neighbour and
//! grows outwards. Partially filled bands therefore keep their channels in
//! place as more are added.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::units::{nm_to_thz, thz_to_nm, CHANNEL_SPACING_THZ, SYMBOL_RATE_THZ};

/// Guard band between adjacent bands, nm.
pub const GUARD_BAND_NM: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Band {
    O,
    E,
    S,
    C,
    L,
    U,
}

/// Where a band starts filling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FillDirection {
    FromLowWavelength,
    FromHighWavelength,
    CenterOut,
}

impl Band {
    /// Short to long wavelength.
    pub const ALL: [Band; 6] = [Band::O, Band::E, Band::S, Band::C, Band::L, Band::U];
    /// Order in which bands are populated.
    pub const POPULATION_ORDER: [Band; 6] = [Band::C, Band::L, Band::S, Band::U, Band::E, Band::O];

    /// Nominal wavelength range, nm.
    pub fn wavelength_range(self) -> (f64, f64) {
        match self {
            Band::O => (1260.0, 1360.0),
            Band::E => (1360.0, 1460.0),
            Band::S => (1460.0, 1530.0),
            Band::C => (1530.0, 1565.0),
            Band::L => (1565.0, 1625.0),
            Band::U => (1625.0, 1675.0),
        }
    }

    /// Amplifier noise figure, dB.
    pub fn noise_figure_db(self) -> f64 {
        match self {
            Band::O => 5.0,
            Band::E => 7.0,
            Band::S => 7.0,
            Band::C => 5.0,
            Band::L => 6.0,
            Band::U => 8.0,
        }
    }

    /// Channels in the fully populated band.
    pub fn channel_count(self) -> usize {
        match self {
            Band::O => 116,
            Band::E => 100,
            Band::S => 62,
            Band::C => 29,
            Band::L => 47,
            Band::U => 36,
        }
    }

    pub fn fill_direction(self) -> FillDirection {
        match self {
            Band::C => FillDirection::CenterOut,
            Band::L | Band::U => FillDirection::FromLowWavelength,
            Band::S | Band::E | Band::O => FillDirection::FromHighWavelength,
        }
    }

    /// Nominal band width between its wavelength edges, THz.
    pub fn nominal_bandwidth_thz(self) -> f64 {
        let (lo, hi) = self.wavelength_range();
        nm_to_thz(lo) - nm_to_thz(hi)
    }

    /// Channel centre frequencies of the fully populated band, in fill order.
    pub fn slot_frequencies(self) -> Vec<f64> {
        let n = self.channel_count();
        let half = 0.5 * CHANNEL_SPACING_THZ;
        match self {
            Band::C => {
                let (lo, hi) = self.wavelength_range();
                let centre = 0.5 * (nm_to_thz(lo) + nm_to_thz(hi));
                (0..n)
                    .map(|k| {
                        // 0, +1, −1, +2, −2, …
                        let step = ((k + 1) / 2) as f64;
                        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                        centre + sign * step * CHANNEL_SPACING_THZ
                    })
                    .collect()
            }
            _ => {
                let inner = self.inner_neighbour().expect("non-C bands have an inner neighbour");
                let inner_slots = inner.slot_frequencies();
                if self.fill_direction() == FillDirection::FromLowWavelength {
                    // grows towards lower frequency
                    let inner_edge = inner_slots.iter().cloned().fold(f64::INFINITY, f64::min) - half;
                    let start = nm_to_thz(thz_to_nm(inner_edge) + GUARD_BAND_NM) - half;
                    (0..n).map(|k| start - k as f64 * CHANNEL_SPACING_THZ).collect()
                } else {
                    let inner_edge = inner_slots.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + half;
                    let start = nm_to_thz(thz_to_nm(inner_edge) - GUARD_BAND_NM) + half;
                    (0..n).map(|k| start + k as f64 * CHANNEL_SPACING_THZ).collect()
                }
            }
        }
    }

    /// The neighbour on the C-band side.
    fn inner_neighbour(self) -> Option<Band> {
        match self {
            Band::C => None,
            Band::L => Some(Band::C),
            Band::U => Some(Band::L),
            Band::S => Some(Band::C),
            Band::E => Some(Band::S),
            Band::O => Some(Band::E),
        }
    }

    /// Segment width used to split the band for the optimizer, THz.
    pub fn segment_width_thz(self) -> f64 {
        if self == Band::O {
            0.75
        } else {
            1.5
        }
    }

    /// Segment count for the fully populated band in the reference table.
    pub fn preset_segments(self) -> usize {
        match self {
            Band::O => 15,
            Band::E => 6,
            Band::S => 4,
            Band::C => 2,
            Band::L => 3,
            Band::U => 2,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Band::O => 'O',
            Band::E => 'E',
            Band::S => 'S',
            Band::C => 'C',
            Band::L => 'L',
            Band::U => 'U',
        }
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for Band {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "O" => Ok(Band::O),
            "E" => Ok(Band::E),
            "S" => Ok(Band::S),
            "C" => Ok(Band::C),
            "L" => Ok(Band::L),
            "U" => Ok(Band::U),
            other => Err(invalid(format!("unknown band '{other}'"))),
        }
    }
}

/// A set of bands, kept in short-to-long wavelength order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BandSet(Vec<Band>);

impl BandSet {
    pub fn all() -> Self {
        Self(Band::ALL.to_vec())
    }

    pub fn new(bands: impl IntoIterator<Item = Band>) -> Result<Self> {
        let mut v: Vec<Band> = bands.into_iter().collect();
        v.sort();
        v.dedup();
        if v.is_empty() {
            return Err(invalid("empty band set"));
        }
        Ok(Self(v))
    }

    pub fn contains(&self, band: Band) -> bool {
        self.0.contains(&band)
    }

    pub fn iter(&self) -> impl Iterator<Item = Band> + '_ {
        self.0.iter().copied()
    }

    pub fn capacity(&self) -> usize {
        self.0.iter().map(|b| b.channel_count()).sum()
    }
}

impl FromStr for BandSet {
    type Err = Error;
    /// Parses a string of band letters such as `"OESCLU"` or `"C,L"`.
    fn from_str(s: &str) -> Result<Self> {
        let bands = s
            .chars()
            .filter(|c| c.is_ascii_alphabetic())
            .map(|c| c.to_string().parse())
            .collect::<Result<Vec<Band>>>()?;
        Self::new(bands)
    }
}

impl fmt::Display for BandSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel {
    pub frequency_thz: f64,
    pub band: Band,
    /// Zero-based step at which the channel was added.
    pub added_at: usize,
}

impl Channel {
    pub fn wavelength_nm(&self) -> f64 {
        thz_to_nm(self.frequency_thz)
    }
}

/// Channel plan, ordered by increasing frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelGrid {
    pub channels: Vec<Channel>,
    pub bands: BandSet,
    pub symbol_rate_thz: f64,
    pub spacing_thz: f64,
}

impl ChannelGrid {
    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.channels.iter().map(|c| c.frequency_thz).collect()
    }

    pub fn wavelengths(&self) -> Vec<f64> {
        self.channels.iter().map(|c| c.wavelength_nm()).collect()
    }

    /// Indices of channels in `band`, in frequency order.
    pub fn band_indices(&self, band: Band) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.channels[i].band == band).collect()
    }

    /// Bands with at least one channel, short to long wavelength.
    pub fn populated_bands(&self) -> Vec<Band> {
        Band::ALL
            .iter()
            .copied()
            .filter(|&b| self.channels.iter().any(|c| c.band == b))
            .collect()
    }

    /// Channel indices in the order they were added.
    pub fn population_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by_key(|&i| self.channels[i].added_at);
        idx
    }

    /// Sum over populated bands of the slot-occupied width, THz.
    pub fn occupied_bandwidth(&self) -> Result<f64> {
        if self.is_empty() {
            return Err(invalid("empty grid"));
        }
        Ok(self
            .populated_bands()
            .into_iter()
            .map(|b| {
                let f: Vec<f64> = self.band_indices(b).iter().map(|&i| self.channels[i].frequency_thz).collect();
                let max = f.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let min = f.iter().cloned().fold(f64::INFINITY, f64::min);
                max - min + self.spacing_thz
            })
            .sum())
    }

    /// Sum of the nominal widths of the populated bands, THz.
    pub fn band_edge_bandwidth(&self) -> f64 {
        self.populated_bands().into_iter().map(|b| b.nominal_bandwidth_thz()).sum()
    }
}

/// Populate `n_channels` channels of `bands` in the fixed population order.
pub fn build_grid(n_channels: usize, bands: &BandSet) -> Result<ChannelGrid> {
    let capacity = bands.capacity();
    if n_channels == 0 {
        return Err(invalid("at least one channel is required"));
    }
    if n_channels > capacity {
        return Err(Error::Capacity {
            requested: n_channels,
            capacity,
        });
    }
    let mut channels = Vec::with_capacity(n_channels);
    'outer: for band in Band::POPULATION_ORDER.iter().copied().filter(|&b| bands.contains(b)) {
        for f in band.slot_frequencies() {
            if channels.len() == n_channels {
                break 'outer;
            }
            let added_at = channels.len();
            channels.push(Channel {
                frequency_thz: f,
                band,
                added_at,
            });
        }
    }
    channels.sort_by(|a, b| a.frequency_thz.total_cmp(&b.frequency_thz));
    Ok(ChannelGrid {
        channels,
        bands: bands.clone(),
        symbol_rate_thz: SYMBOL_RATE_THZ,
        spacing_thz: CHANNEL_SPACING_THZ,
    })
}

/// Cumulative channel counts at which each band of `bands` becomes full.
pub fn band_completion_points(bands: &BandSet) -> Vec<usize> {
    let mut total = 0;
    Band::POPULATION_ORDER
        .iter()
        .filter(|b| bands.contains(**b))
        .map(|b| {
            total += b.channel_count();
            total
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn c_band_only() {
        let g = build_grid(29, &BandSet::all()).unwrap();
        assert!(g.channels.iter().all(|c| c.band == Band::C));
        let bw = g.occupied_bandwidth().unwrap();
        assert!((bw - 4.35).abs() < 1e-9);
        assert!((Band::C.nominal_bandwidth_thz() - 4.38).abs() < 0.01);
        for w in g.channels.windows(2) {
            assert!((w[1].frequency_thz - w[0].frequency_thz - 0.15).abs() < 1e-9);
        }
        let (lo, hi) = Band::C.wavelength_range();
        assert!(g.channels.iter().all(|c| (lo..=hi).contains(&c.wavelength_nm())));
    }

    #[test]
    fn single_channel_at_c_centre() {
        let g = build_grid(1, &BandSet::all()).unwrap();
        let centre = 0.5 * (nm_to_thz(1530.0) + nm_to_thz(1565.0));
        assert_eq!(g.len(), 1);
        assert!((g.channels[0].frequency_thz - centre).abs() < 1e-12);
        assert!((g.occupied_bandwidth().unwrap() - 0.15).abs() < 1e-12);
    }

    #[test]
    fn full_grid_counts_and_bandwidth() {
        let g = build_grid(390, &BandSet::all()).unwrap();
        let counts: Vec<usize> = Band::ALL.iter().map(|&b| g.band_indices(b).len()).collect();
        assert_eq!(counts, vec![116, 100, 62, 29, 47, 36]);
        let bw = g.occupied_bandwidth().unwrap();
        assert!((bw - 58.5).abs() < 1e-9, "{bw}");
        assert!((g.band_edge_bandwidth() - 58.95).abs() < 0.01);
        assert!(build_grid(391, &BandSet::all()).is_err());
        let err = build_grid(30, &"C".parse().unwrap()).unwrap_err();
        assert!(matches!(err, Error::Capacity { capacity: 29, .. }));
    }

    #[test]
    fn guard_bands_and_spacing() {
        let g = build_grid(390, &BandSet::all()).unwrap();
        for w in g.channels.windows(2) {
            let (a, b) = (w[0], w[1]);
            if a.band == b.band {
                assert!((b.frequency_thz - a.frequency_thz - 0.15).abs() < 1e-9);
            } else {
                // slot edges are exactly one guard band apart
                let gap = thz_to_nm(a.frequency_thz + 0.075) - thz_to_nm(b.frequency_thz - 0.075);
                assert!((gap - GUARD_BAND_NM).abs() < 1e-9, "{gap}");
                assert!(a.wavelength_nm() - b.wavelength_nm() >= GUARD_BAND_NM);
            }
        }
        // the whole plan fits the default fibre grid
        let wl = g.wavelengths();
        assert!(wl.iter().all(|&l| (1250.0..=1690.0).contains(&l)));
    }

    #[test]
    fn fill_directions() {
        let bands = BandSet::all();
        // first L channel sits next to the C-band, first S channel too
        let g = build_grid(30, &bands).unwrap();
        let l = g.channels.iter().find(|c| c.band == Band::L).unwrap();
        let full_l: Vec<f64> = Band::L.slot_frequencies();
        assert_eq!(l.frequency_thz, full_l.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        let g = build_grid(77, &bands).unwrap();
        let s = g.channels.iter().find(|c| c.band == Band::S).unwrap();
        assert_eq!(s.frequency_thz, Band::S.slot_frequencies().iter().cloned().fold(f64::INFINITY, f64::min));
        assert_eq!(band_completion_points(&bands), vec![29, 76, 138, 174, 274, 390]);
    }

    #[test]
    fn band_subset() {
        let g = build_grid(47, &"L".parse().unwrap()).unwrap();
        assert!(g.channels.iter().all(|c| c.band == Band::L));
        let s: BandSet = "u, l,c".parse().unwrap();
        assert_eq!(s.to_string(), "CLU");
        assert!("X".parse::<BandSet>().is_err());
    }

    proptest! {
        #[test]
        fn population_is_incremental(n in 1usize..390) {
            let bands = BandSet::all();
            let a = build_grid(n, &bands).unwrap();
            let b = build_grid(n + 1, &bands).unwrap();
            for c in &a.channels {
                prop_assert!(b.channels.iter().any(|d| d.frequency_thz == c.frequency_thz && d.added_at == c.added_at));
            }
            let order = b.population_order();
            prop_assert_eq!(b.channels[order[n]].added_at, n);
        }
    }
}
