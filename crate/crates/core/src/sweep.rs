//! Throughput versus occupied bandwidth: one optimisation per schedule point,
//! for every combination of span count, power cap and transceiver.
//!
//! Each (spans, cap, transceiver) combination is a curve. Points along a curve
//! are solved in order, each warm-started from the previous optimum with the
//! newly added channels at the lower power bound. Curves run in parallel.
//!
//! With an output directory every finished point is persisted as
//! `points/<scenario_id>.json`; a rerun loads those instead of recomputing, so
//! an interrupted sweep resumes where it stopped and reproduces the same
//! numbers bit for bit.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::fibre::FibreProfile;
use crate::grid::{band_completion_points, build_grid, Band, BandSet, ChannelGrid};
use crate::optim::{optimize, throughput_tbps, OptimizationResult, OptimizerOptions};
use crate::units::{db_to_linear, dbm_to_mw, linear_to_db};
use crate::ARTIFACT_VERSION;

pub const RESULTS_FILE: &str = "results.csv";
pub const POINTS_DIR: &str = "points";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    /// Channel counts, strictly increasing.
    pub schedule: Vec<usize>,
    pub spans: Vec<usize>,
    /// Total power caps in dBm, strictly increasing; `f64::INFINITY` for none.
    pub caps_dbm: Vec<f64>,
    /// Back-to-back SNR in dB; `f64::INFINITY` for an ideal transceiver.
    pub trx_snr_db: Vec<f64>,
    pub bands: BandSet,
    pub options: OptimizerOptions,
}

impl SweepPlan {
    /// Every 10 channels plus the band completion points.
    pub fn default_schedule(bands: &BandSet) -> Vec<usize> {
        let cap = bands.capacity();
        let mut s: Vec<usize> = (10..=cap).step_by(10).collect();
        s.extend(band_completion_points(bands));
        s.sort_unstable();
        s.dedup();
        s
    }

    pub fn validate(&self) -> Result<()> {
        if self.schedule.is_empty() {
            return Err(invalid("empty channel schedule"));
        }
        if self.schedule[0] == 0 || self.schedule.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("schedule must be strictly increasing and start above zero"));
        }
        let cap = self.bands.capacity();
        if *self.schedule.last().unwrap() > cap {
            return Err(Error::Capacity {
                requested: *self.schedule.last().unwrap(),
                capacity: cap,
            });
        }
        if self.spans.is_empty() || self.spans.contains(&0) {
            return Err(invalid("span counts must be non-empty and positive"));
        }
        if self.caps_dbm.is_empty() || self.caps_dbm.iter().any(|c| c.is_nan()) {
            return Err(invalid("power caps must be non-empty numbers"));
        }
        if self.caps_dbm.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("power caps must be strictly increasing"));
        }
        if self.trx_snr_db.is_empty() || self.trx_snr_db.iter().any(|s| s.is_nan()) {
            return Err(invalid("transceiver SNRs must be non-empty numbers"));
        }
        Ok(())
    }

    /// (spans, cap dBm, trx dB) for each curve, in output order.
    pub fn curves(&self) -> Vec<(usize, f64, f64)> {
        let mut out = Vec::new();
        for &s in &self.spans {
            for &c in &self.caps_dbm {
                for &t in &self.trx_snr_db {
                    out.push((s, c, t));
                }
            }
        }
        out
    }
}

/// One optimised sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub scenario_id: String,
    pub point_index: usize,
    pub n_channels: usize,
    pub bandwidth_thz: f64,
    pub spans: usize,
    /// `None` when unconstrained.
    pub p_lim_dbm: Option<f64>,
    /// `None` for an ideal transceiver.
    pub trx_snr_db: Option<f64>,
    pub throughput_tbps: f64,
    pub total_power_dbm: f64,
    pub tau: f64,
    pub converged: bool,
    pub band_throughput_tbps: Vec<(Band, f64)>,
    /// Channel powers before τ, dBm, in grid (frequency) order.
    pub channel_dbm: Vec<f64>,
    pub snr_db: Vec<f64>,
    pub error: Option<String>,
}

impl PointRecord {
    pub fn curve_key(&self) -> (usize, Option<f64>, Option<f64>) {
        (self.spans, self.p_lim_dbm, self.trx_snr_db)
    }

    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Saturation {
    pub spans: usize,
    pub p_lim_dbm: Option<f64>,
    pub trx_snr_db: Option<f64>,
    pub bandwidth_thz: f64,
    /// The curve dips back below the threshold after first reaching it.
    pub non_monotone: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub records: Vec<PointRecord>,
    pub saturation: Vec<Saturation>,
    /// Points that were loaded from disk rather than computed.
    pub resumed: usize,
}

impl SweepResult {
    /// Successful records of one curve, ordered by channel count.
    pub fn curve(&self, spans: usize, p_lim_dbm: Option<f64>, trx_snr_db: Option<f64>) -> Vec<&PointRecord> {
        self.records
            .iter()
            .filter(|r| r.ok() && r.curve_key() == (spans, p_lim_dbm, trx_snr_db))
            .collect()
    }
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn fibre_fingerprint(fibre: &FibreProfile) -> String {
    let mut h = Sha256::new();
    for v in [
        &fibre.wavelength_nm,
        &fibre.attenuation_db_km,
        &fibre.dispersion_ps_nm_km,
        &fibre.aeff_um2,
        &fibre.gamma_per_w_km,
        &fibre.raman.shift_thz,
        &fibre.raman.gain,
    ] {
        for x in v.iter() {
            h.update(x.to_le_bytes());
        }
        h.update(b"|");
    }
    h.update(fibre.raman.reference_aeff_um2.to_le_bytes());
    hex::encode(h.finalize())
}

/// Stable identifier of a sweep point and everything its result depends on.
pub fn scenario_id(
    n_channels: usize,
    previous: Option<usize>,
    curve: (usize, f64, f64),
    bands: &BandSet,
    options: &OptimizerOptions,
    fibre_fp: &str,
) -> String {
    let mut opts = options.clone();
    opts.warm_start_dbm = None;
    let key = format!(
        "{ARTIFACT_VERSION}|{n_channels}|{previous:?}|{}|{:?}|{:?}|{bands}|{opts:?}|{fibre_fp}",
        curve.0, curve.1, curve.2
    );
    hex::encode(&Sha256::digest(key.as_bytes())[..8])
}

fn band_throughput(grid: &ChannelGrid, result: &OptimizationResult) -> Vec<(Band, f64)> {
    let mut out: Vec<(Band, f64)> = Vec::new();
    for band in Band::ALL {
        let idx = grid.band_indices(band);
        if idx.is_empty() {
            continue;
        }
        let loss: f64 = idx.iter().map(|&i| -(result.snr[i].ln_1p() / std::f64::consts::LN_2)).sum();
        out.push((band, throughput_tbps(loss, grid.symbol_rate_thz)));
    }
    out
}

struct Store {
    dir: Option<PathBuf>,
    log: Option<Mutex<fs::File>>,
}

impl Store {
    fn open(dir: Option<&Path>, header: &str) -> Result<Self> {
        let Some(dir) = dir else {
            return Ok(Self { dir: None, log: None });
        };
        fs::create_dir_all(dir.join(POINTS_DIR))?;
        let path = dir.join(RESULTS_FILE);
        let fresh = !path.exists();
        let mut file = fs::OpenOptions::new().create(true).append(true).open(path)?;
        if fresh {
            file.write_all(header.as_bytes())?;
        }
        Ok(Self {
            dir: Some(dir.to_path_buf()),
            log: Some(Mutex::new(file)),
        })
    }

    fn load(&self, id: &str) -> Option<PointRecord> {
        let path = self.dir.as_ref()?.join(POINTS_DIR).join(format!("{id}.json"));
        let text = fs::read_to_string(path).ok()?;
        serde_json::from_str(&text).ok()
    }

    fn save(&self, record: &PointRecord) -> Result<()> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let path = dir.join(POINTS_DIR).join(format!("{}.json", record.scenario_id));
        let tmp = path.with_extension("json.tmp");
        let text = serde_json::to_string(record).map_err(|e| invalid(e.to_string()))?;
        fs::write(&tmp, text)?;
        fs::rename(tmp, path)?;
        if let Some(log) = &self.log {
            let mut f = log.lock().expect("results writer poisoned");
            f.write_all(results_row(record).as_bytes())?;
            f.flush()?;
        }
        Ok(())
    }
}

pub const RESULTS_COLUMNS: &str =
    "scenario_id,n_channels,bandwidth_THz,spans,p_lim_dBm,trx_snr_dB,throughput_Tbps,total_power_dBm,tau,converged,band_throughput_Tbps";

fn opt_field(v: Option<f64>, none: &str) -> String {
    v.map_or_else(|| none.to_string(), |x| format!("{x}"))
}

/// One line of the results file.
pub fn results_row(r: &PointRecord) -> String {
    let bands = r
        .band_throughput_tbps
        .iter()
        .map(|(b, c)| format!("{b}:{c:.6}"))
        .collect::<Vec<_>>()
        .join(";");
    let status = match &r.error {
        Some(_) => "failed".to_string(),
        None => r.converged.to_string(),
    };
    format!(
        "{},{},{:.6},{},{},{},{:.6},{:.6},{:.9},{},{}\n",
        r.scenario_id,
        r.n_channels,
        r.bandwidth_thz,
        r.spans,
        opt_field(r.p_lim_dbm, "inf"),
        opt_field(r.trx_snr_db, "ideal"),
        r.throughput_tbps,
        r.total_power_dbm,
        r.tau,
        status,
        bands
    )
}

/// Comment header describing a sweep; every line starts with `#`.
pub fn sweep_header(plan: &SweepPlan, fibre_label: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# {ARTIFACT_VERSION}");
    let _ = writeln!(s, "# fibre: {fibre_label}");
    let _ = writeln!(s, "# bands: {}", plan.bands);
    let _ = writeln!(s, "# schedule: {:?}", plan.schedule);
    let _ = writeln!(s, "# spans: {:?}", plan.spans);
    let _ = writeln!(s, "# caps_dBm: {:?}", plan.caps_dbm);
    let _ = writeln!(s, "# trx_snr_dB: {:?}", plan.trx_snr_db);
    let _ = writeln!(s, "# options: {:?}", plan.options);
    let _ = writeln!(s, "{RESULTS_COLUMNS}");
    s
}

/// Run every curve of `plan`. With `out_dir`, points are persisted and reused.
pub fn run_sweep(plan: &SweepPlan, fibre: &FibreProfile, fibre_label: &str, out_dir: Option<&Path>) -> Result<SweepResult> {
    plan.validate()?;
    let header = sweep_header(plan, fibre_label);
    let store = Store::open(out_dir, &header)?;
    let fp = fibre_fingerprint(fibre);
    let curves = plan.curves();
    let n_sched = plan.schedule.len();

    let per_curve: Vec<Result<(Vec<PointRecord>, usize)>> = curves
        .par_iter()
        .enumerate()
        .map(|(ci, &curve)| run_curve(plan, fibre, &fp, &store, ci * n_sched, curve))
        .collect();

    let mut records = Vec::with_capacity(curves.len() * n_sched);
    let mut resumed = 0;
    for r in per_curve {
        let (recs, loaded) = r?;
        records.extend(recs);
        resumed += loaded;
    }
    records.sort_by_key(|r| r.point_index);
    if records.iter().all(|r| !r.ok()) {
        return Err(Error::SweepFailed);
    }

    if let Some(dir) = out_dir {
        let mut text = header;
        for r in &records {
            text.push_str(&results_row(r));
        }
        fs::write(dir.join(RESULTS_FILE), text)?;
    }

    let saturation = curves
        .iter()
        .filter_map(|&(s, c, t)| {
            let pts: Vec<(f64, f64)> = records
                .iter()
                .filter(|r| r.ok() && r.curve_key() == (s, finite(c), finite(t)))
                .map(|r| (r.bandwidth_thz, r.throughput_tbps))
                .collect();
            saturation_bandwidth(&pts, 0.9).map(|(bw, flag)| Saturation {
                spans: s,
                p_lim_dbm: finite(c),
                trx_snr_db: finite(t),
                bandwidth_thz: bw,
                non_monotone: flag,
            })
        })
        .collect();

    Ok(SweepResult {
        records,
        saturation,
        resumed,
    })
}

fn run_curve(
    plan: &SweepPlan,
    fibre: &FibreProfile,
    fp: &str,
    store: &Store,
    first_index: usize,
    curve: (usize, f64, f64),
) -> Result<(Vec<PointRecord>, usize)> {
    let (spans, cap_dbm, trx_db) = curve;
    let p_lim = if cap_dbm.is_finite() { dbm_to_mw(cap_dbm) } else { f64::INFINITY };
    let trx = if trx_db.is_finite() { db_to_linear(trx_db) } else { f64::INFINITY };
    let mut out = Vec::with_capacity(plan.schedule.len());
    let mut loaded = 0;
    // (grid, per-channel dBm) of the last successful point
    let mut previous: Option<(ChannelGrid, Vec<f64>)> = None;

    for (k, &n) in plan.schedule.iter().enumerate() {
        let prev_n = k.checked_sub(1).map(|p| plan.schedule[p]);
        let id = scenario_id(n, prev_n, curve, &plan.bands, &plan.options, fp);
        let grid = build_grid(n, &plan.bands)?;

        if let Some(rec) = store.load(&id).filter(|r| r.n_channels == n) {
            loaded += 1;
            if rec.ok() {
                previous = Some((grid, rec.channel_dbm.clone()));
            }
            out.push(PointRecord {
                point_index: first_index + k,
                ..rec
            });
            continue;
        }

        let mut opts = plan.options.clone();
        opts.warm_start_dbm = previous.as_ref().map(|(pg, dbm)| {
            let by_order: HashMap<usize, f64> = pg.channels.iter().map(|c| c.added_at).zip(dbm.iter().copied()).collect();
            grid.channels
                .iter()
                .map(|c| by_order.get(&c.added_at).copied().unwrap_or(opts.lower_dbm))
                .collect()
        });
        let bandwidth = grid.occupied_bandwidth()?;
        let record = match optimize(&grid, fibre, spans, p_lim, trx, &opts) {
            Ok(r) => {
                let seg_dbm: Vec<f64> = r.powers_mw.iter().map(|&p| linear_to_db(p)).collect();
                let rec = PointRecord {
                    scenario_id: id,
                    point_index: first_index + k,
                    n_channels: n,
                    bandwidth_thz: bandwidth,
                    spans,
                    p_lim_dbm: finite(cap_dbm),
                    trx_snr_db: finite(trx_db),
                    throughput_tbps: r.throughput_tbps,
                    total_power_dbm: r.total_launch_dbm(),
                    tau: r.tau,
                    converged: r.converged,
                    band_throughput_tbps: band_throughput(&grid, &r),
                    channel_dbm: seg_dbm.clone(),
                    snr_db: r.snr.iter().map(|&s| linear_to_db(s)).collect(),
                    error: None,
                };
                previous = Some((grid, seg_dbm));
                rec
            }
            Err(e) => {
                log::warn!("sweep point {n} channels {curve:?} failed: {e}");
                PointRecord {
                    scenario_id: id,
                    point_index: first_index + k,
                    n_channels: n,
                    bandwidth_thz: bandwidth,
                    spans,
                    p_lim_dbm: finite(cap_dbm),
                    trx_snr_db: finite(trx_db),
                    throughput_tbps: f64::NAN,
                    total_power_dbm: f64::NAN,
                    tau: f64::NAN,
                    converged: false,
                    band_throughput_tbps: Vec::new(),
                    channel_dbm: Vec::new(),
                    snr_db: Vec::new(),
                    error: Some(e.to_string()),
                }
            }
        };
        if record.ok() {
            store.save(&record)?;
        }
        out.push(record);
    }
    Ok((out, loaded))
}

/// Smallest bandwidth at which throughput reaches `fraction` of the final
/// point, interpolating linearly between points. Also reports whether the
/// curve falls back below the threshold afterwards.
pub fn saturation_bandwidth(points: &[(f64, f64)], fraction: f64) -> Option<(f64, bool)> {
    let &(_, last) = points.last()?;
    let threshold = fraction * last;
    let k = points.iter().position(|&(_, c)| c >= threshold)?;
    let non_monotone = points[k..].iter().any(|&(_, c)| c < threshold);
    if k == 0 {
        return Some((points[0].0, non_monotone));
    }
    let (b0, c0) = points[k - 1];
    let (b1, c1) = points[k];
    let w = (threshold - c0) / (c1 - c0);
    Some((b0 + w * (b1 - b0), non_monotone))
}
