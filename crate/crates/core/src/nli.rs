//! Nonlinear interference coefficients from the integral GN model with
//! Raman-modified power profiles.
//!
//! For a probe channel `i` the NLI power spectral density at its centre is
//!
//! ```text
//! G(f_i) = 16/27 γ_i² ∬ S(f1) S(f2) S(f1+f2−f_i) |L(f1, f2, f_i)|² df1 df2
//! L      = ∫₀ᴸ sqrt(ρ(z,f1) ρ(z,f2) ρ(z,f1+f2−f_i) / ρ(z,f_i)) exp(jφz) dz
//! φ      = −4π² (f1−f_i)(f2−f_i) [β2 + πβ3 (f1+f2−2f_i)]
//! ```
//!
//! The integral is split into one self-channel island and, for every other
//! channel `j`, the two cross-channel islands where one frequency lies in
//! channel `i` and the other two in channel `j`. With ρ taken per channel the
//! z-weight of the `(i, j)` island collapses to ρ_j(z), so every island only
//! needs the one-dimensional link power `|L_j(φ)|²`. That function and its
//! running integral are tabulated once per channel; the integral across the
//! probe channel then becomes a difference of the running integral along
//! piecewise-linear phase segments, and the remaining direction is done by
//! Gauss–Legendre quadrature.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fibre::{FibreParams, FibreProfile};
use crate::grid::{Band, ChannelGrid};
use crate::isrs::PowerEvolution;
use crate::units::thz_to_nm;

/// Segment length of the link-function z quadrature at `n_m_bar = 1`, km.
pub const BASE_SEGMENT_KM: f64 = 2.0;

/// How NLI from successive spans adds up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpanAccumulation {
    /// Spans add in power: η_link = N_s η_span.
    #[default]
    Incoherent,
}

/// Accuracy controls for the NLI integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NliConfig {
    /// Frequency resolution: quadrature nodes across the interfering channel
    /// and the maximum number of phase segments across the probe channel.
    pub n_r: usize,
    /// Multiplier on the z-sample density of the link-function quadrature.
    pub n_m_bar: f64,
    pub accumulation: SpanAccumulation,
}

impl Default for NliConfig {
    fn default() -> Self {
        Self {
            n_r: 150,
            n_m_bar: 1.4,
            accumulation: SpanAccumulation::Incoherent,
        }
    }
}

impl NliConfig {
    pub fn with_resolution(n_r: usize, n_m_bar: f64) -> Self {
        Self {
            n_r,
            n_m_bar,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_r < 8 {
            return Err(invalid(format!("n_r must be at least 8, got {}", self.n_r)));
        }
        if !(self.n_m_bar > 0.0) || !self.n_m_bar.is_finite() {
            return Err(invalid(format!("n_m_bar must be positive, got {}", self.n_m_bar)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NliResult {
    /// Per-channel η for the whole link, 1/mW².
    pub eta: Vec<f64>,
    /// Launch powers the coefficients were evaluated at, mW.
    pub reference_powers: Vec<f64>,
}

impl NliResult {
    /// NLI power η_i P_i³ at the reference powers, mW.
    pub fn nli_powers(&self) -> Vec<f64> {
        self.eta
            .iter()
            .zip(&self.reference_powers)
            .map(|(e, p)| e * p * p * p)
            .collect()
    }
}

// ---------------------------------------------------------------------------
// link function

/// ∫₀ᴸ ρ(z) exp(jφz) dz for a ρ that is piecewise exponential between samples.
#[derive(Debug, Clone)]
pub struct LinkFunction {
    /// Length of the regular segments.
    h: f64,
    /// Segment start values ρ(z_k) and decay rates κ_k.
    rho: Vec<f64>,
    kappa: Vec<f64>,
    decay: Vec<f64>,
    /// Length of the final segment (may differ from `h`).
    h_last: f64,
    rho_end: f64,
}

impl LinkFunction {
    /// Build from ρ sampled on `z` (uniform, starting at 0), keeping every
    /// `stride`-th sample; the last sample is always kept.
    pub fn new(z: &[f64], rho: &[f64], stride: usize) -> Self {
        let n = z.len() - 1;
        let stride = stride.clamp(1, n.max(1));
        let mut idx: Vec<usize> = (0..n).step_by(stride).collect();
        idx.push(n);
        let mut seg_rho = Vec::with_capacity(idx.len() - 1);
        let mut kappa = Vec::with_capacity(idx.len() - 1);
        let mut decay = Vec::with_capacity(idx.len() - 1);
        for w in idx.windows(2) {
            let (a, b) = (w[0], w[1]);
            let len = z[b] - z[a];
            let k = (rho[a] / rho[b]).ln() / len;
            seg_rho.push(rho[a]);
            kappa.push(k);
            decay.push((-k * len).exp());
        }
        let h = z[idx[1]] - z[idx[0]];
        let h_last = z[n] - z[idx[idx.len() - 2]];
        Self {
            h,
            rho: seg_rho,
            kappa,
            decay,
            h_last,
            rho_end: rho[n],
        }
    }

    pub fn segments(&self) -> usize {
        self.rho.len()
    }

    /// Complex link integral at phase mismatch `phi` (1/km).
    pub fn eval(&self, phi: f64) -> (f64, f64) {
        let (sw, cw) = (phi * self.h).sin_cos();
        let (mut pr, mut pi) = (1.0, 0.0); // exp(jφ z_k)
        let (mut acc_r, mut acc_i) = (0.0, 0.0);
        let last = self.rho.len() - 1;
        for k in 0..=last {
            let (h, ehr, ehi) = if k == last && self.h_last != self.h {
                let (s, c) = (phi * self.h_last).sin_cos();
                (self.h_last, self.decay[k] * c, self.decay[k] * s)
            } else {
                (self.h, self.decay[k] * cw, self.decay[k] * sw)
            };
            // (exp(c h) − 1) / c with c = −κ + jφ
            let (cr, ci) = (-self.kappa[k], phi);
            let (er, ei) = if (cr * cr + ci * ci) * h * h < 1e-6 {
                let (zr, zi) = (cr * h, ci * h);
                // h (1 + x/2 + x²/6 + x³/24)
                let (x2r, x2i) = (zr * zr - zi * zi, 2.0 * zr * zi);
                let (x3r, x3i) = (x2r * zr - x2i * zi, x2r * zi + x2i * zr);
                (
                    h * (1.0 + zr / 2.0 + x2r / 6.0 + x3r / 24.0),
                    h * (zi / 2.0 + x2i / 6.0 + x3i / 24.0),
                )
            } else {
                let (nr, ni) = (ehr - 1.0, ehi);
                let d = cr * cr + ci * ci;
                ((nr * cr + ni * ci) / d, (ni * cr - nr * ci) / d)
            };
            let (tr, ti) = (er * pr - ei * pi, er * pi + ei * pr);
            acc_r += self.rho[k] * tr;
            acc_i += self.rho[k] * ti;
            let npr = pr * cw - pi * sw;
            pi = pr * sw + pi * cw;
            pr = npr;
        }
        (acc_r, acc_i)
    }

    pub fn power(&self, phi: f64) -> f64 {
        let (r, i) = self.eval(phi);
        r * r + i * i
    }

    /// ∫₀ᴸ ρ² dz, so that ∫ |L(φ)|² dφ over the real line equals 2π times this.
    pub fn energy(&self) -> f64 {
        let last = self.rho.len() - 1;
        (0..=last)
            .map(|k| {
                let h = if k == last { self.h_last } else { self.h };
                let k2 = 2.0 * self.kappa[k];
                let r2 = self.rho[k] * self.rho[k];
                if (k2 * h).abs() < 1e-8 {
                    r2 * h * (1.0 - 0.5 * k2 * h)
                } else {
                    r2 * (1.0 - (-k2 * h).exp()) / k2
                }
            })
            .sum()
    }

    /// Coefficient of the 1/φ² tail of |L|², averaged over its ripple.
    pub fn tail_coefficient(&self) -> f64 {
        self.rho[0] * self.rho[0] + self.rho_end * self.rho_end
    }
}

/// Tabulated |L(φ)|² and its running integral on φ = s·sinh(t), t uniform.
#[derive(Debug, Clone)]
pub struct LinkTable {
    scale: f64,
    dt: f64,
    power: Vec<f64>,
    cumulative: Vec<f64>,
    slope: Vec<f64>,
    u_max: f64,
    tail: f64,
}

const TABLE_SCALE: f64 = 0.01;
const TABLE_DT: f64 = 0.01;
const TABLE_U_MAX: f64 = 200.0;
// 3-point Gauss–Legendre on [0, 1]
const GL3_X: [f64; 3] = [0.112_701_665_379_258_3, 0.5, 0.887_298_334_620_741_7];
const GL3_W: [f64; 3] = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];

impl LinkTable {
    pub fn new(link: &LinkFunction) -> Self {
        let scale = TABLE_SCALE;
        let dt = TABLE_DT;
        let n = ((TABLE_U_MAX / scale).asinh() / dt).ceil() as usize;
        let mut power = Vec::with_capacity(n + 1);
        let mut cumulative = Vec::with_capacity(n + 1);
        let mut slope = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        for k in 0..=n {
            let t = k as f64 * dt;
            let p = link.power(scale * t.sinh());
            power.push(p);
            slope.push(p * scale * t.cosh());
            cumulative.push(acc);
            if k < n {
                let inc: f64 = GL3_X
                    .iter()
                    .zip(GL3_W)
                    .map(|(&x, w)| {
                        let tt = t + x * dt;
                        w * link.power(scale * tt.sinh()) * scale * tt.cosh()
                    })
                    .sum();
                acc += inc * dt;
            }
        }
        Self {
            scale,
            dt,
            power,
            cumulative,
            slope,
            u_max: scale * (n as f64 * dt).sinh(),
            tail: link.tail_coefficient(),
        }
    }

    /// ∫₀^φ |L|² dφ', odd in φ.
    pub fn cumulative(&self, phi: f64) -> f64 {
        let u = phi.abs();
        let v = if u >= self.u_max {
            self.cumulative[self.cumulative.len() - 1] + self.tail * (1.0 / self.u_max - 1.0 / u)
        } else {
            let t = (u / self.scale).asinh() / self.dt;
            let k = (t as usize).min(self.cumulative.len() - 2);
            let s = t - k as f64;
            // cubic Hermite in t
            let (f0, f1) = (self.cumulative[k], self.cumulative[k + 1]);
            let (d0, d1) = (self.slope[k] * self.dt, self.slope[k + 1] * self.dt);
            let s2 = s * s;
            let s3 = s2 * s;
            (2.0 * s3 - 3.0 * s2 + 1.0) * f0 + (s3 - 2.0 * s2 + s) * d0 + (-2.0 * s3 + 3.0 * s2) * f1 + (s3 - s2) * d1
        };
        v.copysign(phi)
    }

    /// ∫₀^∞ |L|² dφ over |L(0)|², the effective half-width of the link power.
    pub fn phase_width(&self) -> f64 {
        let total = self.cumulative[self.cumulative.len() - 1] + self.tail / self.u_max;
        total / self.power[0]
    }

    /// |L(φ)|², even in φ.
    pub fn power(&self, phi: f64) -> f64 {
        let u = phi.abs();
        if u >= self.u_max {
            return self.tail / (u * u);
        }
        let t = (u / self.scale).asinh() / self.dt;
        let k = (t as usize).min(self.power.len() - 2);
        let s = t - k as f64;
        self.power[k] + s * (self.power[k + 1] - self.power[k])
    }
}

// ---------------------------------------------------------------------------
// island quadrature

// 4-point Gauss–Legendre on [0, 1]
const GL4_X: [f64; 4] = [
    0.069_431_844_202_973_7,
    0.330_009_478_207_571_9,
    0.669_990_521_792_428_1,
    0.930_568_155_797_026_3,
];
const GL4_W: [f64; 4] = [
    0.173_927_422_568_726_9,
    0.326_072_577_431_273_1,
    0.326_072_577_431_273_1,
    0.173_927_422_568_726_9,
];

/// Nodes and weights over the interfering channel, symmetric about 0 where
/// the island boundary has a kink.
///
/// Cross-channel islands use uniform panels. The self-channel integrand
/// behaves like 1/(|y| + y*) because the phase vanishes with y, so its nodes
/// follow y = y*(exp(ct) − 1) with t uniform on [0, 1].
fn interferer_nodes(half_width: f64, n_r: usize, y_star: Option<f64>) -> Vec<(f64, f64)> {
    let panels = (n_r / 8).max(1);
    let mut nodes = Vec::with_capacity(8 * panels);
    let h = 1.0 / panels as f64;
    for p in 0..panels {
        for (x, w) in GL4_X.iter().zip(GL4_W) {
            let t = (p as f64 + x) * h;
            let (y, dy) = match y_star {
                Some(ys) => {
                    let c = (half_width / ys).ln_1p();
                    let e = (c * t).exp();
                    (ys * (e - 1.0), ys * c * e)
                }
                None => (half_width * t, half_width),
            };
            nodes.push((y, w * h * dy));
            nodes.push((-y, w * h * dy));
        }
    }
    nodes
}

/// Width of the self-channel near-singularity in Hz-offset units: the offset
/// at which the phase across the channel reaches the link-function width.
fn spm_scale(table: &LinkTable, beta2: f64, beta3: f64, half_width: f64) -> f64 {
    let slope = 4.0 * PI * PI * (beta2.abs() + PI * beta3.abs() * half_width) * half_width;
    (table.phase_width() / slope).max(1e-9 * half_width)
}

/// ∬ |L_j(φ(x, y))|² dx dy over the island where the probe-side frequency is
/// offset `x` from the probe centre and the interferer-side frequency is
/// offset `y` from the interferer centre, `delta` apart.
fn island_integral(
    table: &LinkTable,
    delta: f64,
    beta2: f64,
    beta3: f64,
    bandwidth: f64,
    n_r: usize,
    nodes: &[(f64, f64)],
) -> f64 {
    let hw = 0.5 * bandwidth;
    let mut total = 0.0;
    for &(y, wy) in nodes {
        let x_lo = (-hw).max(-hw - y);
        let x_hi = hw.min(hw - y);
        let width = x_hi - x_lo;
        if width <= 0.0 {
            continue;
        }
        let d = delta + y;
        // φ(x) = a x + b x²
        let a = -4.0 * PI * PI * d * (beta2 + PI * beta3 * d);
        let b = -4.0 * PI * PI * PI * beta3 * d;
        let lin = a.abs();
        let quad = b.abs() * width;
        let q = if lin + quad > 0.0 { quad / (lin + quad) } else { 0.0 };
        let pieces = ((n_r as f64 * q).floor() as usize + 1).min(n_r);
        let phase = |x: f64| x * (a + b * x);
        let step = width / pieces as f64;
        let mut inner = 0.0;
        let mut xa = x_lo;
        let mut pa = phase(xa);
        for k in 0..pieces {
            let xb = if k + 1 == pieces { x_hi } else { x_lo + (k + 1) as f64 * step };
            let pb = phase(xb);
            let dp = pb - pa;
            if dp.abs() < 1e-4 {
                inner += table.power(0.5 * (pa + pb)) * (xb - xa);
            } else {
                inner += (table.cumulative(pb) - table.cumulative(pa)) / dp * (xb - xa);
            }
            xa = xb;
            pa = pb;
        }
        total += wy * inner;
    }
    total
}

// ---------------------------------------------------------------------------
// engine

fn z_stride(evolution: &PowerEvolution, config: &NliConfig) -> usize {
    let dz = evolution.z_km[1] - evolution.z_km[0];
    let target = BASE_SEGMENT_KM / config.n_m_bar;
    ((target / dz).round() as usize).max(1)
}

/// Per-channel link tables built from an evolution.
pub fn link_tables(evolution: &PowerEvolution, config: &NliConfig) -> Vec<LinkTable> {
    let stride = z_stride(evolution, config);
    (0..evolution.n_ch)
        .into_par_iter()
        .map(|j| LinkTable::new(&LinkFunction::new(&evolution.z_km, &evolution.channel(j), stride)))
        .collect()
}

/// η for channels at explicit frequencies.
pub fn compute_nli_at(
    freqs_thz: &[f64],
    powers_mw: &[f64],
    fibre: &FibreProfile,
    evolution: &PowerEvolution,
    n_spans: usize,
    symbol_rate_thz: f64,
    config: &NliConfig,
) -> Result<NliResult> {
    config.validate()?;
    let n = freqs_thz.len();
    if powers_mw.len() != n || evolution.n_ch != n {
        return Err(invalid(format!(
            "dimension mismatch: {} channels, {} powers, evolution over {}",
            n,
            powers_mw.len(),
            evolution.n_ch
        )));
    }
    if n_spans == 0 {
        return Err(invalid("at least one span is required"));
    }
    if evolution.z_km.len() < 2 {
        return Err(invalid("evolution has no z samples"));
    }
    if powers_mw.iter().any(|p| !(*p >= 0.0)) {
        return Err(invalid("negative launch power"));
    }
    let params: Vec<FibreParams> = freqs_thz
        .iter()
        .map(|&f| fibre.query(thz_to_nm(f)))
        .collect::<Result<_>>()?;
    let tables = link_tables(evolution, config);

    let positive: Vec<f64> = powers_mw.iter().copied().filter(|&p| p > 0.0).collect();
    let fallback = if positive.is_empty() {
        1.0
    } else {
        positive.iter().sum::<f64>() / positive.len() as f64
    };

    let bw = symbol_rate_thz;
    let hw = 0.5 * bw;
    let xpm_nodes = interferer_nodes(hw, config.n_r, None);
    let spans = match config.accumulation {
        SpanAccumulation::Incoherent => n_spans as f64,
    };

    let eta: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let p = &params[i];
            let p_i = if powers_mw[i] > 0.0 { powers_mw[i] } else { fallback };
            let spm_nodes = interferer_nodes(hw, config.n_r, Some(spm_scale(&tables[i], p.beta2, p.beta3, hw)));
            let mut acc = island_integral(&tables[i], 0.0, p.beta2, p.beta3, bw, config.n_r, &spm_nodes);
            for j in 0..n {
                if j == i || powers_mw[j] == 0.0 {
                    continue;
                }
                let ratio = powers_mw[j] / p_i;
                let delta = freqs_thz[j] - freqs_thz[i];
                let island = island_integral(&tables[j], delta, p.beta2, p.beta3, bw, config.n_r, &xpm_nodes);
                acc += 2.0 * ratio * ratio * island;
            }
            // γ in 1/(mW km); PSD P/B per channel, NLI power = B·G(f_i)
            let gamma = p.gamma * 1e-3;
            spans * 16.0 / 27.0 * gamma * gamma * acc / (bw * bw)
        })
        .collect();

    Ok(NliResult {
        eta,
        reference_powers: powers_mw.to_vec(),
    })
}

pub fn compute_nli(
    grid: &ChannelGrid,
    powers_mw: &[f64],
    fibre: &FibreProfile,
    evolution: &PowerEvolution,
    n_spans: usize,
    config: &NliConfig,
) -> Result<NliResult> {
    compute_nli_at(
        &grid.frequencies(),
        powers_mw,
        fibre,
        evolution,
        n_spans,
        grid.symbol_rate_thz,
        config,
    )
}

/// Index of the O-band channel with the largest η.
pub fn nli_dip_locator(result: &NliResult, grid: &ChannelGrid, _fibre: &FibreProfile) -> Result<usize> {
    grid.band_indices(Band::O)
        .into_iter()
        .max_by(|&a, &b| result.eta[a].total_cmp(&result.eta[b]))
        .ok_or(Error::NoOBand)
}

/// Wavelength of a channel, nm. Convenience for reporting the dip.
pub fn channel_wavelength(grid: &ChannelGrid, index: usize) -> f64 {
    thz_to_nm(grid.channels[index].frequency_thz)
}
