//! Text tables, run summaries and simple SVG plots.
//!
//! Every table starts with a `#` comment block carrying [`ARTIFACT_VERSION`]
//! and the resolved configuration, followed by one CSV header line. Numbers
//! are written in Rust's shortest round-trip form, so identical inputs give
//! byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::Result;
use crate::grid::ChannelGrid;
use crate::noise::snr_components;
use crate::optim::OptimizationResult;
use crate::sweep::SweepResult;
use crate::units::{linear_to_db, mw_to_dbm};
use crate::ARTIFACT_VERSION;

/// `#`-prefixed block with the version line followed by `config`, line by line.
pub fn preamble(config: &str) -> String {
    let mut s = format!("# {ARTIFACT_VERSION}\n");
    for line in config.lines() {
        let _ = writeln!(s, "# {line}");
    }
    s
}

fn table(preamble: &str, columns: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut s = preamble.to_string();
    s.push_str(&columns.join(","));
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

pub fn grid_table(preamble: &str, grid: &ChannelGrid) -> String {
    table(
        preamble,
        &["channel_index", "band", "frequency_THz", "wavelength_nm", "added_at"],
        grid.channels.iter().enumerate().map(|(i, c)| {
            vec![
                i.to_string(),
                c.band.to_string(),
                c.frequency_thz.to_string(),
                c.wavelength_nm().to_string(),
                c.added_at.to_string(),
            ]
        }),
    )
}

pub fn launch_table(preamble: &str, grid: &ChannelGrid, result: &OptimizationResult) -> String {
    table(
        preamble,
        &["channel_index", "band", "frequency_THz", "wavelength_nm", "launch_dBm", "launch_mW"],
        grid.channels.iter().enumerate().map(|(i, c)| {
            let p = result.launch_mw[i];
            vec![
                i.to_string(),
                c.band.to_string(),
                c.frequency_thz.to_string(),
                c.wavelength_nm().to_string(),
                mw_to_dbm(p).to_string(),
                p.to_string(),
            ]
        }),
    )
}

pub fn snr_table(preamble: &str, grid: &ChannelGrid, result: &OptimizationResult) -> String {
    table(
        preamble,
        &["channel_index", "band", "frequency_THz", "wavelength_nm", "snr_dB", "p_ase_mW", "p_nli_mW"],
        grid.channels.iter().enumerate().map(|(i, c)| {
            let p = result.launch_mw[i];
            vec![
                i.to_string(),
                c.band.to_string(),
                c.frequency_thz.to_string(),
                c.wavelength_nm().to_string(),
                linear_to_db(result.snr[i]).to_string(),
                result.budget.p_ase[i].to_string(),
                (result.budget.eta[i] * p * p * p).to_string(),
            ]
        }),
    )
}

pub fn eta_table(preamble: &str, grid: &ChannelGrid, eta: &[f64]) -> String {
    table(
        preamble,
        &["channel_index", "frequency_THz", "wavelength_nm", "eta_per_mW2"],
        grid.channels.iter().enumerate().map(|(i, c)| {
            vec![
                i.to_string(),
                c.frequency_thz.to_string(),
                c.wavelength_nm().to_string(),
                eta[i].to_string(),
            ]
        }),
    )
}

/// End-of-span ρ and the amplifier gain that restores it.
pub fn rho_table(preamble: &str, grid: &ChannelGrid, rho_end: &[f64]) -> String {
    table(
        preamble,
        &["channel_index", "frequency_THz", "wavelength_nm", "rho_end", "gain_dB"],
        grid.channels.iter().enumerate().map(|(i, c)| {
            vec![
                i.to_string(),
                c.frequency_thz.to_string(),
                c.wavelength_nm().to_string(),
                rho_end[i].to_string(),
                (-linear_to_db(rho_end[i])).to_string(),
            ]
        }),
    )
}

/// `key = value` lines after the preamble.
pub fn summary(preamble: &str, grid: &ChannelGrid, result: &OptimizationResult) -> Result<String> {
    let mut s = preamble.to_string();
    let (ase, nli) = snr_components(&result.powers_mw, &result.budget, result.tau);
    let mean_db = |v: &[f64]| linear_to_db(v.iter().sum::<f64>() / v.len() as f64);
    let entries = [
        ("n_channels", grid.len().to_string()),
        ("bands", grid.populated_bands().iter().map(|b| b.to_string()).collect::<String>()),
        ("occupied_bandwidth_THz", grid.occupied_bandwidth()?.to_string()),
        ("band_edge_bandwidth_THz", grid.band_edge_bandwidth().to_string()),
        ("throughput_Tbps", result.throughput_tbps.to_string()),
        ("total_power_dBm", result.total_launch_dbm().to_string()),
        ("total_power_mW", result.total_launch_mw().to_string()),
        ("tau", result.tau.to_string()),
        ("mean_snr_dB", mean_db(&result.snr).to_string()),
        ("mean_snr_ase_dB", mean_db(&ase).to_string()),
        ("mean_snr_nli_dB", mean_db(&nli).to_string()),
        ("converged", result.converged.to_string()),
        ("outer_iterations", result.outer_iterations.to_string()),
        ("inner_iterations", result.inner_iterations.to_string()),
        ("edge_count", result.edge_dbm.len().to_string()),
    ];
    for (k, v) in entries {
        let _ = writeln!(s, "{k} = {v}");
    }
    Ok(s)
}

/// Saturation bandwidth per curve.
pub fn saturation_table(preamble: &str, result: &SweepResult) -> String {
    let opt = |v: Option<f64>, none: &str| v.map_or_else(|| none.to_string(), |x| x.to_string());
    table(
        preamble,
        &["spans", "p_lim_dBm", "trx_snr_dB", "saturation_bandwidth_THz", "non_monotone"],
        result.saturation.iter().map(|s| {
            vec![
                s.spans.to_string(),
                opt(s.p_lim_dbm, "inf"),
                opt(s.trx_snr_db, "ideal"),
                s.bandwidth_thz.to_string(),
                s.non_monotone.to_string(),
            ]
        }),
    )
}

// ---------------------------------------------------------------------------
// plots

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const W: f64 = 720.0;
const H: f64 = 440.0;
const MARGIN: (f64, f64, f64, f64) = (70.0, 20.0, 40.0, 55.0); // left, right, top, bottom
const COLOURS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

/// Line plot of `series`. `None` when there is nothing finite to draw.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> Option<String> {
    let finite = || series.iter().flat_map(|s| s.points.iter()).filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in finite() {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        return None;
    }
    if x1 - x0 < 1e-12 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    let pad = ((y1 - y0) * 0.05).max(1e-9);
    y0 -= pad;
    y1 += pad;

    let (ml, mr, mt, mb) = MARGIN;
    let pw = W - ml - mr;
    let ph = H - mt - mb;
    let sx = |x: f64| ml + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| mt + (y1 - y) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(s, r##"<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>"##);
    for t in nice_ticks(x0, x1, 8) {
        let x = sx(t);
        let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{mt}" x2="{x:.2}" y2="{:.2}" stroke="#ddd"/>"##, mt + ph);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, mt + ph + 16.0, fmt_tick(t));
    }
    for t in nice_ticks(y0, y1, 6) {
        let y = sy(t);
        let _ = writeln!(s, r##"<line x1="{ml}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/>"##, ml + pw);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, ml - 6.0, y + 4.0, fmt_tick(t));
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, ml + pw / 2.0, H - 12.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text transform="translate(16 {:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
        mt + ph / 2.0,
        escape(y_label)
    );
    for (k, ser) in series.iter().enumerate() {
        let colour = COLOURS[k % COLOURS.len()];
        let pts: Vec<String> = ser
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        if pts.is_empty() {
            continue;
        }
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
        let ly = mt + 14.0 + 16.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{colour}" stroke-width="2"/>"#,
            ml + pw - 150.0,
            ml + pw - 130.0
        );
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, ml + pw - 125.0, ly + 4.0, escape(&ser.label));
    }
    s.push_str("</svg>\n");
    Some(s)
}

fn fmt_tick(v: f64) -> String {
    let r = (v * 1e6).round() / 1e6;
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Write a plot, logging instead of failing.
pub fn write_plot(path: &Path, svg: Option<String>) {
    match svg {
        Some(svg) => {
            if let Err(e) = fs::write(path, svg) {
                log::warn!("could not write plot {}: {e}", path.display());
            }
        }
        None => log::warn!("nothing to plot for {}", path.display()),
    }
}

/// Per-channel series split by band, x in nm.
pub fn band_series(grid: &ChannelGrid, values: &[f64]) -> Vec<Series> {
    grid.populated_bands()
        .into_iter()
        .map(|b| Series {
            label: format!("{b}-band"),
            points: grid.band_indices(b).into_iter().map(|i| (grid.channels[i].wavelength_nm(), values[i])).collect(),
        })
        .collect()
}

/// Throughput against occupied bandwidth, one series per sweep curve.
pub fn throughput_series(result: &SweepResult) -> Vec<Series> {
    let mut keys: Vec<_> = Vec::new();
    for r in &result.records {
        if !keys.contains(&r.curve_key()) {
            keys.push(r.curve_key());
        }
    }
    keys.into_iter()
        .map(|(s, c, t)| Series {
            label: format!(
                "{s} span, {}, {}",
                c.map_or("no cap".into(), |c| format!("{c} dBm")),
                t.map_or("ideal".into(), |t| format!("{t} dB"))
            ),
            points: result.curve(s, c, t).iter().map(|r| (r.bandwidth_thz, r.throughput_tbps)).collect(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, BandSet};

    #[test]
    fn preamble_and_table_shape() {
        let pre = preamble("[link]\nspans = 1\n");
        assert!(pre.contains("\n# spans = 1\n"));
        assert!(pre.starts_with(&format!("# {ARTIFACT_VERSION}\n")));
        let grid = build_grid(3, &BandSet::all()).unwrap();
        let t = grid_table(&pre, &grid);
        let data: Vec<&str> = t.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data.len(), 4);
        assert!(data.iter().all(|l| l.split(',').count() == 5));
    }

    #[test]
    fn ticks_cover_range() {
        let t = nice_ticks(0.3, 9.7, 8);
        assert_eq!(t, vec![2.0, 4.0, 6.0, 8.0]);
        assert!(nice_ticks(-3.0, -1.0, 4).iter().all(|v| (-3.0..=-1.0).contains(v)));
    }

    #[test]
    fn plot_skips_empty_and_non_finite() {
        assert!(line_plot("t", "x", "y", &[]).is_none());
        let s = Series {
            label: "a<b".into(),
            points: vec![(0.0, 1.0), (1.0, f64::NAN), (2.0, 3.0)],
        };
        let svg = line_plot("t", "x", "y", &[s]).unwrap();
        assert!(svg.contains("a&lt;b"));
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn single_point_plot() {
        let s = Series {
            label: "one".into(),
            points: vec![(5.0, 5.0)],
        };
        assert!(line_plot("t", "x", "y", &[s]).unwrap().contains("polyline"));
    }
}
