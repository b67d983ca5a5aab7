//! The `simulate` command: runs one of the experiment modes from a config
//! file and writes CSV output.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Parser;
use twofluid::diagnostics::{entropy_residual_l1, pressure_gap_l1, relaxation_sweep, Observable, Recorder};
use twofluid::driver::integrate;
use twofluid::harness::{compare_states, convergence_study};
use twofluid::meso::MesoSolver;
use twofluid::mixture::MacroSolver;
use twofluid::{build_macro_ic, build_meso_ic, DiagnosticsRecord, MacroState, MesoState, PhasePair, StepControls};

pub use config::{Mode, Overrides, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error in `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("cannot write {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("numerical failure: {0}")]
    Numerical(twofluid::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Io { .. } => EXIT_CONFIG,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<twofluid::Error> for CliError {
    fn from(e: twofluid::Error) -> Self {
        match e {
            twofluid::Error::InvalidParameter { name, reason } => CliError::Config { key: name.into(), reason },
            twofluid::Error::InconsistentSpec(reason) => CliError::Config { key: "profiles".into(), reason },
            other => CliError::Numerical(other),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "simulate", about = "Periodic 1-D two-phase flow experiments")]
struct Cli {
    #[arg(value_enum)]
    mode: Mode,
    /// Configuration file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding `run.output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Final time, overriding `run.t_end`.
    #[arg(long)]
    t_end: Option<f64>,
    /// Number of cells, overriding `run.cells`.
    #[arg(long)]
    cells: Option<usize>,
}

/// Parse `argv`, run the requested mode and return the process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let overrides = Overrides { output_dir: cli.out, t_end: cli.t_end, cells: cli.cells };
    let outcome = RunConfig::load(cli.mode, &cli.config, &overrides).and_then(|cfg| execute(&cfg));
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "simulate: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cfg: &RunConfig) -> Result<(), CliError> {
    let dir = &cfg.output_dir;
    create_dir(dir)?;
    match cfg.mode {
        Mode::Meso => meso_mode(cfg, dir).map(|_| ()),
        Mode::Macro => macro_mode(cfg, dir).map(|_| ()),
        Mode::Compare => compare_mode(cfg),
        Mode::Convergence => convergence_mode(cfg),
        Mode::RelaxSweep => sweep_mode(cfg),
    }
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Run the meso solver, keeping the diagnostics gathered so far if a step fails.
fn drive_meso(
    state: MesoState,
    pair: &PhasePair,
    controls: &StepControls,
    probes: &[f64],
) -> (twofluid::Result<Vec<MesoState>>, DiagnosticsRecord) {
    let mut recorder = Recorder::new(state.sample(pair));
    let snapshots = integrate(&MesoSolver { pair: *pair }, state, controls, probes, |_, next, _| {
        recorder.push(next.sample(pair));
    });
    (snapshots, recorder.finish())
}

fn drive_macro(
    state: MacroState,
    pair: &PhasePair,
    controls: &StepControls,
    probes: &[f64],
) -> (twofluid::Result<Vec<MacroState>>, DiagnosticsRecord) {
    let mut recorder = Recorder::new(state.sample(pair));
    recorder.push_mixture(None, pressure_gap_l1(&state, pair));
    let snapshots = integrate(&MacroSolver { pair: *pair }, state, controls, probes, |prev, next, _| {
        recorder.push(next.sample(pair));
        recorder.push_mixture(Some(entropy_residual_l1(prev, next, pair)), pressure_gap_l1(next, pair));
    });
    (snapshots, recorder.finish())
}

fn meso_mode(cfg: &RunConfig, dir: &Path) -> Result<Vec<MesoState>, CliError> {
    let pair = &cfg.spec.pair;
    let (snapshots, diagnostics) = drive_meso(build_meso_ic(&cfg.spec)?, pair, &cfg.controls, &cfg.spec.probes);
    output::write_diagnostics(dir, &diagnostics)?;
    let snapshots = snapshots?;
    for s in &snapshots {
        output::write_meso_snapshot(dir, s, pair)?;
    }
    Ok(snapshots)
}

fn macro_mode(cfg: &RunConfig, dir: &Path) -> Result<Vec<MacroState>, CliError> {
    let pair = &cfg.spec.pair;
    let (snapshots, diagnostics) = drive_macro(build_macro_ic(&cfg.spec)?, pair, &cfg.controls, &cfg.spec.probes);
    output::write_diagnostics(dir, &diagnostics)?;
    let snapshots = snapshots?;
    for s in &snapshots {
        output::write_macro_snapshot(dir, s, pair)?;
    }
    Ok(snapshots)
}

fn compare_mode(cfg: &RunConfig) -> Result<(), CliError> {
    let (meso_dir, macro_dir) = (cfg.output_dir.join("meso"), cfg.output_dir.join("macro"));
    create_dir(&meso_dir)?;
    create_dir(&macro_dir)?;
    let meso = meso_mode(cfg, &meso_dir)?;
    let mac = macro_mode(cfg, &macro_dir)?;
    let rows = meso
        .iter()
        .zip(&mac)
        .map(|(a, b)| compare_states(a, b).map(|(u, al)| (a.time, u, al)))
        .collect::<twofluid::Result<Vec<_>>>()?;
    output::write_comparison(&cfg.output_dir, &rows)?;
    Ok(())
}

fn convergence_mode(cfg: &RunConfig) -> Result<(), CliError> {
    let path = cfg.output_dir.join("report.csv");
    let done: Vec<_> = output::read_report(&path)?.into_iter().filter(|r| cfg.j_list.contains(&r.cells)).collect();
    let mut appender = output::ReportAppender::open(&path, &done)?;
    let mut sink: Option<CliError> = None;
    let result = convergence_study(&cfg.spec, &cfg.controls, &cfg.j_list, &done, |row| {
        appender.push(row).map_err(|e| {
            let msg = e.to_string();
            sink = Some(e);
            twofluid::Error::InconsistentSpec(msg)
        })
    });
    if let Some(e) = sink {
        return Err(e);
    }
    let report = result?;
    drop(appender);
    output::write_report(&path, &report)?;
    let fmt = |s: Option<f64>| s.map_or_else(|| "n/a".to_string(), |v| format!("{v:.3}"));
    println!("order(u, Linf) = {}  order(alpha, L1) = {}", fmt(report.u_order.slope), fmt(report.alpha_order.slope));
    Ok(())
}

fn sweep_mode(cfg: &RunConfig) -> Result<(), CliError> {
    let rows = relaxation_sweep(&cfg.spec, &cfg.controls, &cfg.eta_list, cfg.t_relax)?;
    output::write_sweep(&cfg.output_dir, &rows)?;
    Ok(())
}
