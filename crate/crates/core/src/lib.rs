//! Launch-power optimisation and throughput estimation for ultrawideband
//! (O- to U-band) WDM links under a total optical power limit.
//!
//! The pipeline is: a [`grid::ChannelGrid`] on a [`fibre::FibreProfile`] is
//! launched with some power profile, [`isrs`] solves the Raman-coupled power
//! evolution along a span, [`nli`] turns that into per-channel nonlinear
//! interference coefficients, [`noise`] adds amplifier and transceiver noise,
//! and [`optim`] maximises the Shannon throughput over a segmented launch
//! profile. [`sweep`] drives whole experiments across channel counts and
//! [`report`] writes the resulting tables and plots.

pub mod error;
pub mod fibre;
pub mod grid;
pub mod isrs;
pub mod lbfgs;
pub mod nli;
pub mod noise;
pub mod ode;
pub mod optim;
pub mod report;
pub mod sweep;
pub mod units;

pub use error::{Error, Result};
pub use fibre::{make_default_profile, FibreParams, FibreProfile, RamanSpectrum};
pub use grid::{build_grid, Band, BandSet, Channel, ChannelGrid};
pub use isrs::{solve_span, span_gain, PowerEvolution};
pub use nli::{compute_nli, NliConfig, NliResult, SpanAccumulation};
pub use noise::{channel_snr, compute_ase, NoiseBudget};
pub use optim::{apply_tau, optimize, OptimizationResult, OptimizerOptions, SegmentMode};
pub use sweep::{run_sweep, saturation_bandwidth, SweepPlan, SweepResult};

/// Version string embedded in every emitted artifact.
pub const ARTIFACT_VERSION: &str = concat!("uwbcap ", env!("CARGO_PKG_VERSION"));
