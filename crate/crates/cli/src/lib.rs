//! Command-line front end: loads a [`RunConfig`], runs a single optimisation
//! or a sweep, and writes tables, a summary and plots to an output directory.

pub mod config;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};
use uwbcap_core::fibre::{load_profile, load_raman};
use uwbcap_core::report;
use uwbcap_core::units::{db_to_linear, dbm_to_mw, linear_to_db, mw_to_dbm};
use uwbcap_core::{build_grid, make_default_profile, optimize, run_sweep, solve_span, FibreProfile, SweepPlan, SweepResult};

pub use config::{Channels, PowerCap, RunConfig, Schedule, TrxSnr};

/// Environment variable naming the root under which output directories are
/// created when none is given.
pub const OUT_ROOT_ENV: &str = "UWB_OUT_ROOT";
const FALLBACK_OUT_ROOT: &str = "uwbcap-out";

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    Validation = 1,
    NotConverged = 2,
    Internal = 3,
}

impl Exit {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug)]
pub struct CliError {
    pub exit: Exit,
    pub message: String,
}

impl CliError {
    pub fn validation(msg: impl Into<String>) -> Self {
        Self {
            exit: Exit::Validation,
            message: msg.into(),
        }
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        Self {
            exit: Exit::Internal,
            message: msg.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<uwbcap_core::Error> for CliError {
    fn from(e: uwbcap_core::Error) -> Self {
        use uwbcap_core::Error as E;
        match e {
            E::Load { .. } | E::ProfileNotFound(_) | E::OutOfRange { .. } | E::Capacity { .. } | E::Validation(_) | E::NoOBand => {
                Self::validation(e.to_string())
            }
            E::StepUnderflow { .. } | E::SweepFailed | E::Io(_) => Self::internal(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::internal(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "uwbcap", version, about = "Throughput of ultrawideband WDM links under a total launch-power limit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimise one scenario, or a sweep with --sweep.
    Run(RunArgs),
    /// Print the resolved configuration as TOML.
    Config(RunArgs),
}

#[derive(Debug, Default, Clone, Args)]
pub struct RunArgs {
    /// TOML configuration file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Fibre profile table, or "default".
    #[arg(long)]
    pub fibre: Option<String>,
    /// Band letters, e.g. "C" or "OESCLU".
    #[arg(long)]
    pub bands: Option<String>,
    /// Channel count or "full".
    #[arg(long)]
    pub channels: Option<Channels>,
    /// Span count; a comma list with --sweep.
    #[arg(long)]
    pub spans: Option<String>,
    /// Total power cap in dBm or "inf"; a comma list with --sweep.
    #[arg(long = "plim-dbm")]
    pub plim_dbm: Option<String>,
    /// Transceiver SNR in dB or "ideal"; a comma list with --sweep.
    #[arg(long = "trx-snr-db")]
    pub trx_snr_db: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads, 0 for one per core.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Run the channel-count sweep instead of a single scenario.
    #[arg(long)]
    pub sweep: bool,
    /// Sweep schedule: "default" or a comma list of channel counts.
    #[arg(long)]
    pub schedule: Option<Schedule>,
    /// Segment count rule: formula, table1 or per-channel.
    #[arg(long = "seg-mode")]
    pub seg_mode: Option<String>,
    /// NLI resolution as "n_r,n_m_bar".
    #[arg(long)]
    pub accuracy: Option<String>,
    /// Skip SVG plots.
    #[arg(long)]
    pub no_plots: bool,
}

fn single<T: std::str::FromStr>(flag: &str, s: &str) -> Result<T, CliError>
where
    T::Err: fmt::Display,
{
    let v = config::parse_list::<T>(s).map_err(|e| CliError::validation(format!("--{flag}: {e}")))?;
    match <[T; 1]>::try_from(v) {
        Ok([x]) => Ok(x),
        Err(_) => Err(CliError::validation(format!("--{flag} takes one value without --sweep"))),
    }
}

fn list<T: std::str::FromStr>(flag: &str, s: &str) -> Result<Vec<T>, CliError>
where
    T::Err: fmt::Display,
{
    config::parse_list(s).map_err(|e| CliError::validation(format!("--{flag}: {e}")))
}

/// Load the config file (if any) and apply flag overrides.
pub fn resolve_config(args: &RunArgs) -> Result<RunConfig, CliError> {
    let mut c = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(f) = &args.fibre {
        c.fibre_profile.profile = f.clone();
    }
    if let Some(b) = &args.bands {
        c.channel_grid.bands = b.clone();
    }
    if let Some(n) = args.channels {
        c.channel_grid.channels = n;
    }
    if args.sweep {
        if let Some(s) = &args.spans {
            c.scenario_sweep.spans = list("spans", s)?;
        }
        if let Some(s) = &args.plim_dbm {
            c.scenario_sweep.caps_dbm = list("plim-dbm", s)?;
        }
        if let Some(s) = &args.trx_snr_db {
            c.scenario_sweep.trx_snr_db = list("trx-snr-db", s)?;
        }
    } else {
        if let Some(s) = &args.spans {
            c.noise_budget.spans = single("spans", s)?;
        }
        if let Some(s) = &args.plim_dbm {
            c.power_optimizer.p_lim_dbm = single("plim-dbm", s)?;
        }
        if let Some(s) = &args.trx_snr_db {
            c.noise_budget.trx_snr_db = single("trx-snr-db", s)?;
        }
    }
    if let Some(s) = &args.schedule {
        c.scenario_sweep.schedule = s.clone();
    }
    if let Some(m) = &args.seg_mode {
        c.power_optimizer.segments = m.parse()?;
    }
    if let Some(a) = &args.accuracy {
        let parts: Vec<&str> = a.split(',').map(str::trim).collect();
        let bad = || CliError::validation(format!("--accuracy expects \"n_r,n_m_bar\", got \"{a}\""));
        match parts.as_slice() {
            [n_r] => c.nli_engine.n_r = n_r.parse().map_err(|_| bad())?,
            [n_r, m] => {
                c.nli_engine.n_r = n_r.parse().map_err(|_| bad())?;
                c.nli_engine.n_m_bar = m.parse().map_err(|_| bad())?;
            }
            _ => return Err(bad()),
        }
    }
    if let Some(o) = &args.out {
        c.cli_reporting.out = Some(o.clone());
    }
    if let Some(w) = args.workers {
        c.cli_reporting.workers = w;
    }
    if args.no_plots {
        c.cli_reporting.plots = false;
    }
    c.validate()?;
    Ok(c)
}

/// Profile named by the config and a label for artifact headers.
pub fn load_fibre(c: &RunConfig) -> Result<(FibreProfile, String), CliError> {
    let name = c.fibre_profile.profile.trim();
    let (mut fibre, mut label) = if name.eq_ignore_ascii_case("default") {
        (make_default_profile(), "default".to_string())
    } else {
        (load_profile(name)?, name.to_string())
    };
    if let Some(r) = &c.fibre_profile.raman {
        fibre = load_raman(fibre, r)?;
        label = format!("{label} + raman {}", r.display());
    }
    Ok((fibre, label))
}

fn short_hash(text: &str) -> String {
    hex::encode(&Sha256::digest(text.as_bytes())[..4])
}

fn output_dir(c: &RunConfig, kind: &str) -> PathBuf {
    if let Some(o) = &c.cli_reporting.out {
        return o.clone();
    }
    let root = std::env::var_os(OUT_ROOT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(FALLBACK_OUT_ROOT));
    root.join(format!("{kind}-{}", short_hash(&c.to_toml())))
}

/// Config text embedded in artifacts; output location and worker count do
/// not affect results and are left out so reruns elsewhere match byte for byte.
fn header_config(c: &RunConfig, fibre_label: &str) -> String {
    let mut c = c.clone();
    c.cli_reporting.out = None;
    c.cli_reporting.workers = 0;
    format!("fibre = {fibre_label}\n{}", c.to_toml())
}

fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::internal(e.to_string()))?;
    Ok(pool.install(f))
}

/// What a single run produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub exit: Exit,
    pub n_channels: usize,
    pub throughput_tbps: f64,
    pub total_power_dbm: f64,
    pub tau: f64,
    pub converged: bool,
}

fn write(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    fs::write(dir.join(name), text).map_err(|e| CliError::internal(format!("writing {name}: {e}")))
}

/// Optimise one scenario and write its artifacts.
pub fn run_single(c: &RunConfig) -> Result<RunOutcome, CliError> {
    let (fibre, label) = load_fibre(c)?;
    let bands = c.bands()?;
    let n = c.channel_grid.channels.resolve(&bands);
    let grid = build_grid(n, &bands)?;
    let p_lim = c.power_optimizer.p_lim_dbm.0.map_or(f64::INFINITY, dbm_to_mw);
    let trx = c.noise_budget.trx_snr_db.0.map_or(f64::INFINITY, db_to_linear);
    let opts = c.optimizer_options();
    let spans = c.noise_budget.spans;

    let (result, evo) = with_workers(c.cli_reporting.workers, || -> Result<_, CliError> {
        let r = optimize(&grid, &fibre, spans, p_lim, trx, &opts)?;
        let evo = solve_span(&grid, &r.launch_mw, &fibre, opts.span_km)?;
        Ok((r, evo))
    })??;

    let dir = output_dir(c, "run");
    fs::create_dir_all(&dir)?;
    let pre = report::preamble(&header_config(c, &label));
    write(&dir, "grid.csv", &report::grid_table(&pre, &grid))?;
    write(&dir, "launch_power.csv", &report::launch_table(&pre, &grid, &result))?;
    write(&dir, "snr.csv", &report::snr_table(&pre, &grid, &result))?;
    write(&dir, "eta.csv", &report::eta_table(&pre, &grid, &result.budget.eta))?;
    write(&dir, "rho.csv", &report::rho_table(&pre, &grid, evo.end_of_span()))?;
    let summary = report::summary(&pre, &grid, &result)?;
    write(&dir, "summary.txt", &summary)?;

    if c.cli_reporting.plots {
        let launch = result.launch_mw.iter().map(|&p| mw_to_dbm(p)).collect::<Vec<_>>();
        let snr = result.snr.iter().map(|&s| linear_to_db(s)).collect::<Vec<_>>();
        report::write_plot(
            &dir.join("launch_power.svg"),
            report::line_plot("Optimised launch power", "wavelength (nm)", "launch power (dBm)", &report::band_series(&grid, &launch)),
        );
        report::write_plot(
            &dir.join("snr.svg"),
            report::line_plot("Channel SNR", "wavelength (nm)", "SNR (dB)", &report::band_series(&grid, &snr)),
        );
    }

    let exit = if result.converged { Exit::Ok } else { Exit::NotConverged };
    Ok(RunOutcome {
        out_dir: dir,
        exit,
        n_channels: grid.len(),
        throughput_tbps: result.throughput_tbps,
        total_power_dbm: result.total_launch_dbm(),
        tau: result.tau,
        converged: result.converged,
    })
}

/// The sweep plan a config describes.
pub fn sweep_plan(c: &RunConfig) -> Result<SweepPlan, CliError> {
    let bands = c.bands()?;
    let s = &c.scenario_sweep;
    let plan = SweepPlan {
        schedule: s.schedule.resolve(&bands)?,
        spans: s.spans.clone(),
        caps_dbm: s.caps_dbm.iter().map(|p| p.db()).collect(),
        trx_snr_db: s.trx_snr_db.iter().map(|t| t.db()).collect(),
        bands,
        options: c.optimizer_options(),
    };
    plan.validate()?;
    Ok(plan)
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub out_dir: PathBuf,
    pub exit: Exit,
    pub result: SweepResult,
}

/// Run the sweep, persisting points under the output directory.
pub fn run_sweep_cmd(c: &RunConfig) -> Result<SweepOutcome, CliError> {
    let plan = sweep_plan(c)?;
    let (fibre, label) = load_fibre(c)?;
    let dir = output_dir(c, "sweep");
    fs::create_dir_all(&dir)?;
    let result = with_workers(c.cli_reporting.workers, || run_sweep(&plan, &fibre, &label, Some(&dir)))??;

    let pre = report::preamble(&header_config(c, &label));
    write(&dir, "saturation.csv", &report::saturation_table(&pre, &result))?;
    if c.cli_reporting.plots {
        report::write_plot(
            &dir.join("throughput.svg"),
            report::line_plot("Throughput", "occupied bandwidth (THz)", "throughput (Tbps)", &report::throughput_series(&result)),
        );
    }
    let all_good = result.records.iter().all(|r| r.ok() && r.converged);
    Ok(SweepOutcome {
        out_dir: dir,
        exit: if all_good { Exit::Ok } else { Exit::NotConverged },
        result,
    })
}

fn print_run(o: &RunOutcome) {
    println!("channels        {}", o.n_channels);
    println!("throughput      {:.3} Tbps", o.throughput_tbps);
    println!("total power     {:.3} dBm", o.total_power_dbm);
    println!("tau             {:.6}", o.tau);
    println!("converged       {}", o.converged);
    println!("output          {}", o.out_dir.display());
}

fn print_sweep(o: &SweepOutcome) {
    let failed = o.result.records.iter().filter(|r| !r.ok()).count();
    println!(
        "points          {} ({} resumed, {} failed)",
        o.result.records.len(),
        o.result.resumed,
        failed
    );
    println!("saturation at 90% of full-band throughput:");
    for s in &o.result.saturation {
        println!(
            "  spans {:>2}  cap {:>6}  trx {:>6}  {:8.3} THz{}",
            s.spans,
            PowerCap(s.p_lim_dbm).to_string(),
            TrxSnr(s.trx_snr_db).to_string(),
            s.bandwidth_thz,
            if s.non_monotone { "  (non-monotone)" } else { "" }
        );
    }
    println!("output          {}", o.out_dir.display());
}

/// Execute a parsed command line and return the process exit code.
pub fn execute(cli: Cli) -> i32 {
    let outcome = match cli.command {
        Command::Config(args) => resolve_config(&args).map(|c| {
            print!("{}", c.to_toml());
            Exit::Ok
        }),
        Command::Run(args) => resolve_config(&args).and_then(|c| {
            if args.sweep {
                run_sweep_cmd(&c).map(|o| {
                    print_sweep(&o);
                    o.exit
                })
            } else {
                run_single(&c).map(|o| {
                    print_run(&o);
                    o.exit
                })
            }
        }),
    };
    match outcome {
        Ok(Exit::NotConverged) => {
            eprintln!("warning: optimiser did not converge everywhere; results were written");
            Exit::NotConverged.code()
        }
        Ok(e) => e.code(),
        Err(e) => {
            eprintln!("error: {e}");
            e.exit.code()
        }
    }
}
