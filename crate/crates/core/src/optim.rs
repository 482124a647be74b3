//! Launch-power optimisation under a total optical power cap.
//!
//! The decision variables are powers (dBm) at segment edges inside each
//! populated band; channel powers are interpolated linearly in dBm between
//! edges. A global factor τ = min(1, P_lim/ΣP) scales every channel so the cap
//! is met by construction. The cost is the negated sum of Shannon rates,
//!
//! ```text
//! 𝓛 = −Σ log₂(1 + τP_i / (η_i (τP_i)³ + P_ASE,i + P_TRX,i))
//! ```
//!
//! minimised with η and P_ASE frozen; an outer loop re-evaluates both at the
//! new powers until the throughput settles.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fibre::FibreProfile;
use crate::grid::{Band, ChannelGrid};
use crate::isrs::{solve_span, span_gain};
use crate::lbfgs::{self, LbfgsOptions};
use crate::nli::{compute_nli, NliConfig};
use crate::noise::{channel_snr, compute_ase, snr_one, NoiseBudget};
use crate::units::{dbm_to_mw, mw_to_dbm, DEFAULT_SPAN_KM};

const DBM_SLOPE: f64 = std::f64::consts::LN_10 / 10.0;

/// Ratio of ΣP to the cap that constrained iterates are lifted to.
const KINK_MARGIN: f64 = 4.0;

/// How many segments each band gets.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SegmentMode {
    /// round(B/B_p) with B the populated bandwidth of the band.
    #[default]
    Formula,
    /// The formula capped at fixed per-band maxima (O 15, E 6, S 4, C 2, L 3, U 2).
    #[serde(rename = "table1")]
    BandPreset,
    /// One variable per channel.
    PerChannel,
    /// Explicit per-band counts.
    Custom(Vec<(Band, usize)>),
}

impl std::str::FromStr for SegmentMode {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "formula" => Ok(Self::Formula),
            "table1" => Ok(Self::BandPreset),
            "per-channel" | "perchannel" => Ok(Self::PerChannel),
            _ => Err(invalid(format!("unknown segment mode '{s}'"))),
        }
    }
}

/// Edge powers and the interpolation that maps them onto channels.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentParameterization {
    /// (band, segment count) in frequency order.
    pub band_segments: Vec<(Band, usize)>,
    pub edge_freqs_thz: Vec<f64>,
    pub lower_dbm: f64,
    pub upper_dbm: f64,
    /// Two (edge, weight) pairs per channel.
    weights: Vec<[(usize, f64); 2]>,
}

impl SegmentParameterization {
    pub fn new(grid: &ChannelGrid, mode: &SegmentMode, bounds_dbm: (f64, f64)) -> Result<Self> {
        if grid.is_empty() {
            return Err(invalid("cannot parameterise an empty grid"));
        }
        if !(bounds_dbm.0 < bounds_dbm.1) {
            return Err(invalid(format!("empty power bounds {:?}", bounds_dbm)));
        }
        let mut band_segments = Vec::new();
        let mut edge_freqs = Vec::new();
        let mut weights = vec![[(0, 0.0); 2]; grid.len()];
        let mut bands = grid.populated_bands();
        bands.sort_by(|a, b| {
            let fa = grid.band_indices(*a)[0];
            let fb = grid.band_indices(*b)[0];
            fa.cmp(&fb)
        });
        for band in bands {
            let idx = grid.band_indices(band);
            let n_b = idx.len();
            let populated = n_b as f64 * grid.spacing_thz;
            let formula = ((populated / band.segment_width_thz()).round() as usize).max(1);
            let segments = match mode {
                SegmentMode::Formula => formula,
                SegmentMode::BandPreset => formula.min(band.preset_segments()),
                SegmentMode::PerChannel => n_b.saturating_sub(1),
                SegmentMode::Custom(table) => table
                    .iter()
                    .find(|(b, _)| *b == band)
                    .map(|(_, n)| *n)
                    .unwrap_or(formula)
                    .max(1),
            };
            let segments = segments.min(n_b.saturating_sub(1));
            let first = edge_freqs.len();
            let f_lo = grid.channels[idx[0]].frequency_thz;
            let f_hi = grid.channels[idx[n_b - 1]].frequency_thz;
            if segments == 0 {
                edge_freqs.push(f_lo);
                weights[idx[0]] = [(first, 1.0), (first, 0.0)];
            } else if matches!(mode, SegmentMode::PerChannel) {
                for (k, &c) in idx.iter().enumerate() {
                    edge_freqs.push(grid.channels[c].frequency_thz);
                    weights[c] = [(first + k, 1.0), (first + k, 0.0)];
                }
            } else {
                let step = (f_hi - f_lo) / segments as f64;
                edge_freqs.extend((0..=segments).map(|k| f_lo + k as f64 * step));
                for &c in &idx {
                    let u = (grid.channels[c].frequency_thz - f_lo) / step;
                    let k = (u.floor() as usize).min(segments - 1);
                    let w = u - k as f64;
                    weights[c] = [(first + k, 1.0 - w), (first + k + 1, w)];
                }
            }
            band_segments.push((band, segments));
        }
        Ok(Self {
            band_segments,
            edge_freqs_thz: edge_freqs,
            lower_dbm: bounds_dbm.0,
            upper_dbm: bounds_dbm.1,
            weights,
        })
    }

    pub fn n_edges(&self) -> usize {
        self.edge_freqs_thz.len()
    }

    pub fn n_channels(&self) -> usize {
        self.weights.len()
    }

    pub fn channel_dbm(&self, edges_dbm: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .map(|[(a, wa), (b, wb)]| wa * edges_dbm[*a] + wb * edges_dbm[*b])
            .collect()
    }

    pub fn channel_mw(&self, edges_dbm: &[f64]) -> Vec<f64> {
        self.channel_dbm(edges_dbm).into_iter().map(dbm_to_mw).collect()
    }

    /// Chain a gradient with respect to channel dBm back onto the edges.
    pub fn pullback(&self, d_channel_dbm: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_edges()];
        for (&[(a, wa), (b, wb)], &g) in self.weights.iter().zip(d_channel_dbm) {
            out[a] += wa * g;
            out[b] += wb * g;
        }
        out
    }

    /// Edge values sampling a per-channel dBm profile (linear within a band).
    pub fn edges_from_channel_dbm(&self, grid: &ChannelGrid, dbm: &[f64]) -> Vec<f64> {
        let freqs = grid.frequencies();
        self.edge_freqs_thz
            .iter()
            .map(|&fe| {
                let k = freqs.partition_point(|&f| f < fe).min(freqs.len() - 1);
                if k == 0 || freqs[k] == fe {
                    return dbm[k];
                }
                let (f0, f1) = (freqs[k - 1], freqs[k]);
                if grid.channels[k - 1].band != grid.channels[k].band {
                    return dbm[k];
                }
                let w = (fe - f0) / (f1 - f0);
                dbm[k - 1] * (1.0 - w) + dbm[k] * w
            })
            .map(|v| v.clamp(self.lower_dbm, self.upper_dbm))
            .collect()
    }
}

/// τ = min(1, P_lim/ΣP) and the scaled powers. τ = 1 when ΣP = 0.
pub fn apply_tau(powers_mw: &[f64], p_lim_mw: f64) -> (f64, Vec<f64>) {
    let total: f64 = powers_mw.iter().sum();
    let tau = if total > p_lim_mw { p_lim_mw / total } else { 1.0 };
    (tau, powers_mw.iter().map(|p| tau * p).collect())
}

/// C = −2 f_s 𝓛, Tbps when the symbol rate is in THz.
pub fn throughput_tbps(loss: f64, symbol_rate_thz: f64) -> f64 {
    -2.0 * symbol_rate_thz * loss
}

/// 𝓛 and its gradient with respect to the unscaled channel powers (mW).
pub fn cost_powers(powers_mw: &[f64], budget: &NoiseBudget, p_lim_mw: f64) -> (f64, Vec<f64>) {
    let total: f64 = powers_mw.iter().sum();
    let constrained = total > p_lim_mw;
    let tau = if constrained { p_lim_mw / total } else { 1.0 };
    let mut loss = 0.0;
    let mut dq = Vec::with_capacity(powers_mw.len());
    for (i, &p) in powers_mw.iter().enumerate() {
        let q = tau * p;
        let (eta, ase, trx) = (budget.eta[i], budget.p_ase[i], budget.trx_snr);
        let snr = snr_one(q, eta, ase, trx);
        loss -= snr.ln_1p() / LN_2;
        let den = eta * q * q * q + ase + q / trx;
        let dsnr = (ase - 2.0 * eta * q * q * q) / (den * den);
        dq.push(-dsnr / ((1.0 + snr) * LN_2));
    }
    let grad = if constrained {
        // q_i = P_lim P_i / ΣP
        let coupling: f64 = dq.iter().zip(powers_mw).map(|(g, p)| g * p).sum::<f64>() / total;
        dq.iter().map(|g| tau * (g - coupling)).collect()
    } else {
        dq
    };
    (loss, grad)
}

/// 𝓛 and its gradient with respect to the edge powers (dBm).
pub fn cost(edges_dbm: &[f64], seg: &SegmentParameterization, budget: &NoiseBudget, p_lim_mw: f64) -> (f64, Vec<f64>) {
    let p = seg.channel_mw(edges_dbm);
    let (loss, dp) = cost_powers(&p, budget, p_lim_mw);
    let d_dbm: Vec<f64> = dp.iter().zip(&p).map(|(g, p)| g * p * DBM_SLOPE).collect();
    (loss, seg.pullback(&d_dbm))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerOptions {
    pub segments: SegmentMode,
    pub lower_dbm: f64,
    pub upper_dbm: f64,
    pub initial_dbm: f64,
    pub max_outer: usize,
    /// Relative throughput change that ends the η refresh loop.
    pub outer_rtol: f64,
    pub max_inner: usize,
    pub gtol: f64,
    pub span_km: f64,
    pub nli: NliConfig,
    /// Per-channel starting powers (dBm); overrides `initial_dbm`.
    #[serde(skip)]
    pub warm_start_dbm: Option<Vec<f64>>,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            segments: SegmentMode::Formula,
            lower_dbm: -30.0,
            upper_dbm: 10.0,
            initial_dbm: 0.0,
            max_outer: 10,
            outer_rtol: 1e-3,
            max_inner: 500,
            gtol: 1e-6,
            span_km: DEFAULT_SPAN_KM,
            nli: NliConfig::default(),
            warm_start_dbm: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub edge_freqs_thz: Vec<f64>,
    pub edge_dbm: Vec<f64>,
    /// Channel powers before τ, mW.
    pub powers_mw: Vec<f64>,
    pub tau: f64,
    /// τP_i, mW.
    pub launch_mw: Vec<f64>,
    pub throughput_tbps: f64,
    pub snr: Vec<f64>,
    /// Noise terms evaluated at `launch_mw`.
    pub budget: NoiseBudget,
    pub converged: bool,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    /// Throughput after each η refresh.
    pub history: Vec<f64>,
}

impl OptimizationResult {
    pub fn total_launch_mw(&self) -> f64 {
        self.launch_mw.iter().sum()
    }

    pub fn total_launch_dbm(&self) -> f64 {
        mw_to_dbm(self.total_launch_mw())
    }

    pub fn launch_dbm(&self) -> Vec<f64> {
        self.launch_mw.iter().map(|&p| mw_to_dbm(p)).collect()
    }
}

/// η and ASE for a link launched with `launch_mw` after every span.
pub fn evaluate_budget(
    grid: &ChannelGrid,
    fibre: &FibreProfile,
    launch_mw: &[f64],
    n_spans: usize,
    trx_snr: f64,
    span_km: f64,
    nli: &NliConfig,
) -> Result<NoiseBudget> {
    let evo = solve_span(grid, launch_mw, fibre, span_km)?;
    let gains = span_gain(&evo);
    let ase = compute_ase(grid, &gains, n_spans)?;
    let eta = compute_nli(grid, launch_mw, fibre, &evo, n_spans, nli)?.eta;
    NoiseBudget::new(ase, trx_snr, eta)
}

/// Optimum with the noise budget held fixed.
pub fn optimize_frozen(
    seg: &SegmentParameterization,
    budget: &NoiseBudget,
    p_lim_mw: f64,
    x0: &[f64],
    opts: &OptimizerOptions,
) -> lbfgs::LbfgsResult {
    let n = seg.n_edges();
    let lbfgs_opts = LbfgsOptions {
        max_iter: opts.max_inner,
        gtol: opts.gtol,
        ..LbfgsOptions::default()
    };
    // Once τ < 1 the cost is flat along a uniform dB shift of every edge; keep
    // the total well above the cap so steps do not straddle the τ kink.
    let lift = |x: &mut [f64]| {
        if !p_lim_mw.is_finite() {
            return;
        }
        let total: f64 = seg.channel_mw(x).iter().sum();
        if total <= p_lim_mw {
            return;
        }
        let headroom = seg.upper_dbm - x.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
        let want = 10.0 * (KINK_MARGIN * p_lim_mw / total).log10();
        let d = want.min(headroom);
        if d > 0.0 {
            for v in x.iter_mut() {
                *v += d;
            }
        }
    };
    lbfgs::minimize_with(
        |x| cost(x, seg, budget, p_lim_mw),
        lift,
        x0,
        &vec![seg.lower_dbm; n],
        &vec![seg.upper_dbm; n],
        &lbfgs_opts,
    )
}

fn validate(n_spans: usize, p_lim_mw: f64, trx_snr: f64, opts: &OptimizerOptions) -> Result<()> {
    if n_spans == 0 {
        return Err(invalid("at least one span is required"));
    }
    if !(p_lim_mw > 0.0) {
        return Err(invalid(format!("power limit must be positive, got {p_lim_mw} mW")));
    }
    if !(trx_snr > 0.0) {
        return Err(invalid(format!("transceiver SNR must be positive, got {trx_snr}")));
    }
    if opts.max_outer == 0 {
        return Err(invalid("max_outer must be at least 1"));
    }
    if !(opts.span_km > 0.0) {
        return Err(invalid("span length must be positive"));
    }
    opts.nli.validate()
}

/// Maximise throughput over the segment edge powers.
///
/// Returns the best point seen across η refreshes, with noise terms that are
/// consistent with its launch powers. `converged` is false when the refresh
/// loop hit `max_outer` without settling.
pub fn optimize(
    grid: &ChannelGrid,
    fibre: &FibreProfile,
    n_spans: usize,
    p_lim_mw: f64,
    trx_snr: f64,
    opts: &OptimizerOptions,
) -> Result<OptimizationResult> {
    validate(n_spans, p_lim_mw, trx_snr, opts)?;
    let seg = SegmentParameterization::new(grid, &opts.segments, (opts.lower_dbm, opts.upper_dbm))?;
    let mut x = match &opts.warm_start_dbm {
        Some(w) if w.len() == grid.len() => seg.edges_from_channel_dbm(grid, w),
        Some(w) => {
            return Err(invalid(format!("warm start has {} channels, grid has {}", w.len(), grid.len())));
        }
        None => vec![opts.initial_dbm.clamp(opts.lower_dbm, opts.upper_dbm); seg.n_edges()],
    };

    let refresh = |x: &[f64]| -> Result<(NoiseBudget, f64)> {
        let (_, launch) = apply_tau(&seg.channel_mw(x), p_lim_mw);
        let budget = evaluate_budget(grid, fibre, &launch, n_spans, trx_snr, opts.span_km, &opts.nli)?;
        let c = throughput_tbps(cost(x, &seg, &budget, p_lim_mw).0, grid.symbol_rate_thz);
        Ok((budget, c))
    };

    let (mut budget, mut c_prev) = refresh(&x)?;
    let mut best = (x.clone(), budget.clone(), c_prev);
    let mut history = Vec::new();
    let mut inner_iterations = 0;
    let mut converged = false;
    let mut outer = 0;
    while outer < opts.max_outer {
        outer += 1;
        let inner = optimize_frozen(&seg, &budget, p_lim_mw, &x, opts);
        inner_iterations += inner.iterations;
        x = inner.x;
        let (b, c) = refresh(&x)?;
        budget = b;
        history.push(c);
        log::debug!("outer {outer}: {c:.4} Tbps after {} inner iterations", inner.iterations);
        if c > best.2 {
            best = (x.clone(), budget.clone(), c);
        }
        if (c - c_prev).abs() <= opts.outer_rtol * c.abs() {
            converged = true;
            break;
        }
        c_prev = c;
    }

    let (x, budget, c) = best;
    let powers = seg.channel_mw(&x);
    let (tau, launch) = apply_tau(&powers, p_lim_mw);
    let snr = channel_snr(&powers, &budget, tau);
    Ok(OptimizationResult {
        edge_freqs_thz: seg.edge_freqs_thz.clone(),
        edge_dbm: x,
        powers_mw: powers,
        tau,
        launch_mw: launch,
        throughput_tbps: c,
        snr,
        budget,
        converged,
        outer_iterations: outer,
        inner_iterations,
        history,
    })
}
