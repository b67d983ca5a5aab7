//! Run configuration: a TOML file with `[phases]`, `[profiles]`, `[run]`,
//! `[convergence]` and `[sweep]` sections. Every key is optional and falls
//! back to the default experiment; unknown keys are rejected.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;
use twofluid::driver::even_probes;
use twofluid::{default_experiment, ExperimentSpec, PhasePair, PhaseParams, PiecewiseProfile, StepControls};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    Meso,
    Macro,
    Compare,
    Convergence,
    RelaxSweep,
}

/// Everything a mode needs, validated.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mode: Mode,
    pub spec: ExperimentSpec,
    pub controls: StepControls,
    pub j_list: Vec<usize>,
    pub eta_list: Vec<f64>,
    pub t_relax: Option<f64>,
    pub output_dir: PathBuf,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    pub t_end: Option<f64>,
    pub cells: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    phases: RawPhases,
    #[serde(default)]
    profiles: RawProfiles,
    #[serde(default)]
    run: RawRun,
    #[serde(default)]
    convergence: RawConvergence,
    #[serde(default)]
    sweep: RawSweep,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPhases {
    mu_plus: Option<f64>,
    gamma_plus: Option<f64>,
    cv_plus: Option<f64>,
    mu_minus: Option<f64>,
    gamma_minus: Option<f64>,
    cv_minus: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfiles {
    alpha0: Option<RawProfile>,
    rho_plus0: Option<RawProfile>,
    rho_minus0: Option<RawProfile>,
    theta_plus0: Option<RawProfile>,
    theta_minus0: Option<RawProfile>,
    u0: Option<RawProfile>,
}

/// A constant, or `"b₀:v₀ b₁:v₁ …"` meaning `vᵢ` on `[bᵢ, bᵢ₊₁)`.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawProfile {
    Constant(f64),
    Pieces(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    cells: Option<usize>,
    t_end: Option<f64>,
    cfl: Option<f64>,
    dt_max: Option<f64>,
    probes: Option<Vec<f64>>,
    probe_count: Option<usize>,
    output_dir: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConvergence {
    j_list: Option<Vec<usize>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    eta_list: Option<Vec<f64>>,
    t_relax: Option<f64>,
}

pub const DEFAULT_CFL: f64 = 0.5;
pub const DEFAULT_DT_MAX: f64 = 1.0;
pub const DEFAULT_J_LIST: [usize; 4] = [100, 200, 400, 800];
pub const DEFAULT_ETA_LIST: [f64; 4] = [1.0, 0.5, 0.25, 0.125];

impl FromStr for PieceList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut breakpoints = Vec::new();
        let mut values = Vec::new();
        for piece in s.split_whitespace() {
            let (b, v) = piece.split_once(':').ok_or_else(|| format!("expected `start:value`, got `{piece}`"))?;
            breakpoints.push(b.trim().parse::<f64>().map_err(|e| format!("bad breakpoint `{b}`: {e}"))?);
            values.push(v.trim().parse::<f64>().map_err(|e| format!("bad value `{v}`: {e}"))?);
        }
        if breakpoints.is_empty() {
            return Err("empty profile".into());
        }
        Ok(PieceList { breakpoints, values })
    }
}

struct PieceList {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

fn profile(key: &str, raw: Option<RawProfile>, fallback: PiecewiseProfile) -> Result<PiecewiseProfile, CliError> {
    let bad = |reason: String| CliError::Config { key: format!("profiles.{key}"), reason };
    match raw {
        None => Ok(fallback),
        Some(RawProfile::Constant(v)) => PiecewiseProfile::constant(v).map_err(|e| bad(e.to_string())),
        Some(RawProfile::Pieces(text)) => {
            let pieces: PieceList = text.parse().map_err(bad)?;
            PiecewiseProfile::new(pieces.breakpoints, pieces.values).map_err(|e| bad(e.to_string()))
        }
    }
}

fn phase(prefix: &str, mu: Option<f64>, gamma: Option<f64>, cv: Option<f64>, fallback: &PhaseParams) -> Result<PhaseParams, CliError> {
    let (mu, gamma, cv) = (mu.unwrap_or(fallback.mu()), gamma.unwrap_or(fallback.gamma()), cv.unwrap_or(fallback.cv()));
    PhaseParams::new(mu, gamma, cv).map_err(|e| match e {
        twofluid::Error::InvalidParameter { name, reason } => {
            CliError::Config { key: format!("phases.{name}_{prefix}"), reason }
        }
        other => CliError::Config { key: format!("phases.*_{prefix}"), reason: other.to_string() },
    })
}

/// Map a parameter error from the core crate onto the config key it came from.
fn keyed(section: &str, e: twofluid::Error) -> CliError {
    match e {
        twofluid::Error::InvalidParameter { name, reason } => {
            let section = if name.ends_with('0') { "profiles" } else { section };
            CliError::Config { key: format!("{section}.{name}"), reason }
        }
        other => CliError::Config { key: section.into(), reason: other.to_string() },
    }
}

impl RunConfig {
    pub fn load(mode: Mode, path: &Path, overrides: &Overrides) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config {
            key: "--config".into(),
            reason: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::parse(mode, &text, overrides)
    }

    pub fn parse(mode: Mode, text: &str, overrides: &Overrides) -> Result<Self, CliError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config {
            key: "config".into(),
            reason: e.message().to_string(),
        })?;
        let base = default_experiment();

        let p = raw.phases;
        let pair = PhasePair::new(
            phase("plus", p.mu_plus, p.gamma_plus, p.cv_plus, &base.pair.plus)?,
            phase("minus", p.mu_minus, p.gamma_minus, p.cv_minus, &base.pair.minus)?,
        );

        let pr = raw.profiles;
        let run = raw.run;
        let t_end = overrides.t_end.or(run.t_end).unwrap_or(base.t_end);
        let cells = overrides.cells.or(run.cells).unwrap_or(base.cells);
        let probes = match (run.probes, run.probe_count) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config { key: "run.probes".into(), reason: "give either probes or probe_count".into() })
            }
            (Some(p), None) => p,
            (None, Some(n)) => even_probes(t_end, n),
            (None, None) => even_probes(t_end, 2),
        };
        let spec = ExperimentSpec {
            pair,
            alpha0: profile("alpha0", pr.alpha0, base.alpha0)?,
            rho_plus0: profile("rho_plus0", pr.rho_plus0, base.rho_plus0)?,
            rho_minus0: profile("rho_minus0", pr.rho_minus0, base.rho_minus0)?,
            theta_plus0: profile("theta_plus0", pr.theta_plus0, base.theta_plus0)?,
            theta_minus0: profile("theta_minus0", pr.theta_minus0, base.theta_minus0)?,
            u0: profile("u0", pr.u0, base.u0)?,
            cells,
            t_end,
            probes,
        };
        spec.validate().map_err(|e| keyed("run", e))?;
        let controls = StepControls::new(run.dt_max.unwrap_or(DEFAULT_DT_MAX), run.cfl.unwrap_or(DEFAULT_CFL), t_end)
            .map_err(|e| keyed("run", e))?;

        let j_list = raw.convergence.j_list.unwrap_or_else(|| DEFAULT_J_LIST.to_vec());
        if mode == Mode::Convergence {
            if j_list.len() < 2 {
                return Err(CliError::Config { key: "convergence.j_list".into(), reason: "need at least two entries".into() });
            }
            if j_list.windows(2).any(|w| w[0] >= w[1]) || j_list[0] < 2 {
                return Err(CliError::Config {
                    key: "convergence.j_list".into(),
                    reason: "must be strictly increasing with every entry >= 2".into(),
                });
            }
        }
        let eta_list = raw.sweep.eta_list.unwrap_or_else(|| DEFAULT_ETA_LIST.to_vec());
        if mode == Mode::RelaxSweep {
            if eta_list.is_empty() || eta_list.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
                return Err(CliError::Config { key: "sweep.eta_list".into(), reason: "entries must be positive".into() });
            }
            if eta_list.windows(2).any(|w| w[0] <= w[1]) {
                return Err(CliError::Config { key: "sweep.eta_list".into(), reason: "must be strictly decreasing".into() });
            }
        }
        if let (Mode::RelaxSweep, Some(t)) = (mode, raw.sweep.t_relax) {
            if !(0.0..=t_end).contains(&t) {
                return Err(CliError::Config { key: "sweep.t_relax".into(), reason: format!("must lie in [0, t_end], got {t}") });
            }
        }

        let output_dir = overrides
            .output_dir
            .clone()
            .or(run.output_dir)
            .unwrap_or_else(|| PathBuf::from("out"));
        Ok(Self { mode, spec, controls, j_list, eta_list, t_relax: raw.sweep.t_relax, output_dir })
    }
}
