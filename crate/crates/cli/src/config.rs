//! Run configuration: a TOML file with one section per module, overridden by
//! command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use uwbcap_core::{BandSet, NliConfig, OptimizerOptions, SegmentMode};

use crate::CliError;

/// Number or keyword, as written in the config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum NumOrWord {
    Num(f64),
    Word(String),
}

macro_rules! level {
    ($(#[$m:meta])* $name:ident, $word:literal) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
        #[serde(try_from = "NumOrWord", into = "NumOrWord")]
        pub struct $name(pub Option<f64>);

        impl $name {
            pub const KEYWORD: &'static str = $word;

            pub fn is_finite(self) -> bool {
                self.0.is_some()
            }

            /// Value in dB(m), `f64::INFINITY` for the keyword.
            pub fn db(self) -> f64 {
                self.0.unwrap_or(f64::INFINITY)
            }
        }

        impl TryFrom<NumOrWord> for $name {
            type Error = String;

            fn try_from(v: NumOrWord) -> Result<Self, String> {
                match v {
                    NumOrWord::Num(x) if x.is_finite() => Ok(Self(Some(x))),
                    NumOrWord::Num(x) => Err(format!("expected a finite number or \"{}\", got {x}", $word)),
                    NumOrWord::Word(w) => w.parse(),
                }
            }
        }

        impl From<$name> for NumOrWord {
            fn from(v: $name) -> Self {
                match v.0 {
                    Some(x) => NumOrWord::Num(x),
                    None => NumOrWord::Word($word.into()),
                }
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, String> {
                let s = s.trim();
                if s.eq_ignore_ascii_case($word) {
                    return Ok(Self(None));
                }
                match s.parse::<f64>() {
                    Ok(x) if x.is_finite() => Ok(Self(Some(x))),
                    _ => Err(format!("expected a number or \"{}\", got \"{s}\"", $word)),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                match self.0 {
                    Some(x) => write!(f, "{x}"),
                    None => f.write_str($word),
                }
            }
        }
    };
}

level!(
    /// Total launch power cap in dBm, or `inf`.
    PowerCap,
    "inf"
);
level!(
    /// Back-to-back transceiver SNR in dB, or `ideal`.
    TrxSnr,
    "ideal"
);

/// Channel count, or every slot of the band set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "NumOrWord", into = "NumOrWord")]
pub enum Channels {
    Full,
    Count(usize),
}

impl Channels {
    pub fn resolve(self, bands: &BandSet) -> usize {
        match self {
            Channels::Full => bands.capacity(),
            Channels::Count(n) => n,
        }
    }
}

impl TryFrom<NumOrWord> for Channels {
    type Error = String;

    fn try_from(v: NumOrWord) -> Result<Self, String> {
        match v {
            NumOrWord::Num(x) if x >= 1.0 && x.fract() == 0.0 => Ok(Channels::Count(x as usize)),
            NumOrWord::Num(x) => Err(format!("channel count must be a positive integer, got {x}")),
            NumOrWord::Word(w) => w.parse(),
        }
    }
}

impl From<Channels> for NumOrWord {
    fn from(c: Channels) -> Self {
        match c {
            Channels::Full => NumOrWord::Word("full".into()),
            Channels::Count(n) => NumOrWord::Num(n as f64),
        }
    }
}

impl FromStr for Channels {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("full") {
            return Ok(Channels::Full);
        }
        match s.parse::<usize>() {
            Ok(n) if n > 0 => Ok(Channels::Count(n)),
            _ => Err(format!("expected a positive channel count or \"full\", got \"{s}\"")),
        }
    }
}

impl fmt::Display for Channels {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Channels::Full => f.write_str("full"),
            Channels::Count(n) => write!(f, "{n}"),
        }
    }
}

/// Sweep channel-count schedule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Schedule {
    List(Vec<usize>),
    Named(String),
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule::Named("default".into())
    }
}

impl Schedule {
    pub fn resolve(&self, bands: &BandSet) -> Result<Vec<usize>, CliError> {
        match self {
            Schedule::List(v) => Ok(v.clone()),
            Schedule::Named(n) if n == "default" => Ok(uwbcap_core::SweepPlan::default_schedule(bands)),
            Schedule::Named(n) => Err(CliError::validation(format!("unknown schedule \"{n}\""))),
        }
    }
}

impl FromStr for Schedule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.trim() == "default" {
            return Ok(Schedule::default());
        }
        parse_list(s).map(Schedule::List)
    }
}

/// Comma-separated list.
pub fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>, String>
where
    T::Err: fmt::Display,
{
    s.split(',')
        .map(|p| p.trim().parse::<T>().map_err(|e| format!("\"{}\": {e}", p.trim())))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FibreSection {
    /// Path to a profile table, or `default` for the built-in model.
    pub profile: String,
    /// Optional Raman gain table replacing the triangular default.
    pub raman: Option<PathBuf>,
}

impl Default for FibreSection {
    fn default() -> Self {
        Self {
            profile: "default".into(),
            raman: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub bands: String,
    pub channels: Channels,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            bands: "OESCLU".into(),
            channels: Channels::Full,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IsrsSection {
    pub span_km: f64,
}

impl Default for IsrsSection {
    fn default() -> Self {
        Self {
            span_km: uwbcap_core::units::DEFAULT_SPAN_KM,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub spans: usize,
    pub trx_snr_db: TrxSnr,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            spans: 1,
            trx_snr_db: TrxSnr(None),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSection {
    pub p_lim_dbm: PowerCap,
    pub segments: SegmentMode,
    pub lower_dbm: f64,
    pub upper_dbm: f64,
    pub initial_dbm: f64,
    pub max_outer: usize,
    pub outer_rtol: f64,
    pub max_inner: usize,
    pub gtol: f64,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        let o = OptimizerOptions::default();
        Self {
            p_lim_dbm: PowerCap(None),
            segments: SegmentMode::BandPreset,
            lower_dbm: o.lower_dbm,
            upper_dbm: o.upper_dbm,
            initial_dbm: o.initial_dbm,
            max_outer: o.max_outer,
            outer_rtol: o.outer_rtol,
            max_inner: o.max_inner,
            gtol: o.gtol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub schedule: Schedule,
    pub spans: Vec<usize>,
    pub caps_dbm: Vec<PowerCap>,
    pub trx_snr_db: Vec<TrxSnr>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            schedule: Schedule::default(),
            spans: vec![1, 6],
            caps_dbm: vec![PowerCap(Some(15.0)), PowerCap(Some(20.0)), PowerCap(Some(25.0)), PowerCap(None)],
            trx_snr_db: vec![TrxSnr(None), TrxSnr(Some(20.0))],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportingSection {
    /// Output directory; derived from the scenario when absent.
    pub out: Option<PathBuf>,
    /// Worker threads, 0 for one per core.
    pub workers: usize,
    pub plots: bool,
}

impl Default for ReportingSection {
    fn default() -> Self {
        Self {
            out: None,
            workers: 0,
            plots: true,
        }
    }
}

/// Everything a run or sweep depends on.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub fibre_profile: FibreSection,
    pub channel_grid: GridSection,
    pub isrs_solver: IsrsSection,
    pub nli_engine: NliConfig,
    pub noise_budget: NoiseSection,
    pub power_optimizer: OptimizerSection,
    pub scenario_sweep: SweepSection,
    pub cli_reporting: ReportingSection,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::validation(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::validation(format!("invalid config: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn bands(&self) -> Result<BandSet, CliError> {
        self.channel_grid.bands.parse().map_err(CliError::from)
    }

    pub fn optimizer_options(&self) -> OptimizerOptions {
        let s = &self.power_optimizer;
        OptimizerOptions {
            segments: s.segments.clone(),
            lower_dbm: s.lower_dbm,
            upper_dbm: s.upper_dbm,
            initial_dbm: s.initial_dbm,
            max_outer: s.max_outer,
            outer_rtol: s.outer_rtol,
            max_inner: s.max_inner,
            gtol: s.gtol,
            span_km: self.isrs_solver.span_km,
            nli: self.nli_engine,
            warm_start_dbm: None,
        }
    }

    /// Checks that do not need the model.
    pub fn validate(&self) -> Result<(), CliError> {
        self.bands()?;
        if self.noise_budget.spans == 0 {
            return Err(CliError::validation("spans must be at least 1"));
        }
        if !(self.isrs_solver.span_km > 0.0) {
            return Err(CliError::validation("span_km must be positive"));
        }
        let o = &self.power_optimizer;
        if !(o.lower_dbm < o.upper_dbm) {
            return Err(CliError::validation("lower_dbm must be below upper_dbm"));
        }
        self.nli_engine.validate()?;
        if let Some(raman) = &self.fibre_profile.raman {
            if !raman.exists() {
                return Err(CliError::validation(format!("profile not found: {}", raman.display())));
            }
        }
        Ok(())
    }
}
