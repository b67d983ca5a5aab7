//! Conserved totals, field bounds, Hoff functionals, entropies and their
//! production residual, the Duhamel reconstruction, and the pressure
//! relaxation sweep.

use crate::driver::StepControls;
use crate::error::{Error, Result};
use crate::initial::{build_macro_ic, ExperimentSpec};
use crate::mesh;
use crate::meso::{MesoState, RunOptions};
use crate::mixture::{run_macro_with, MacroCell, MacroState};
use crate::model::{Phase, PhaseParams, PhasePair};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Totals {
    pub mass: f64,
    /// Mass carried by phase `+`.
    pub mass_plus: f64,
    pub momentum: f64,
    pub energy: f64,
}

/// Per-time information both solvers expose to the recorder.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSample {
    pub time: f64,
    pub totals: Totals,
    pub rho_min: f64,
    pub rho_max: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    /// Cell stresses (homogenized for the mixture).
    pub sigma: Vec<f64>,
    pub volumes: Vec<f64>,
}

pub trait Observable {
    fn totals(&self, pair: &PhasePair) -> Totals;
    fn sample(&self, pair: &PhasePair) -> StateSample;
}

/// Mass, mass of phase `+`, momentum, energy.
pub fn conserved_totals<S: Observable>(state: &S, pair: &PhasePair) -> Totals {
    state.totals(pair)
}

/// Time series collected at the initial state and after every accepted step.
///
/// The macro-only series are empty for meso runs. `entropy_residual_l1[0]`
/// is NaN because the residual needs two levels.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiagnosticsRecord {
    pub times: Vec<f64>,
    pub mass_total: Vec<f64>,
    pub mass_plus: Vec<f64>,
    pub momentum_total: Vec<f64>,
    pub energy_total: Vec<f64>,
    pub rho_min: Vec<f64>,
    pub rho_max: Vec<f64>,
    pub theta_min: Vec<f64>,
    pub theta_max: Vec<f64>,
    pub a1: Vec<f64>,
    pub kappa_weighted: Vec<f64>,
    pub entropy_residual_l1: Vec<f64>,
    pub pressure_gap_l1: Vec<f64>,
}

impl DiagnosticsRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn has_mixture_series(&self) -> bool {
        !self.pressure_gap_l1.is_empty()
    }
}

pub fn kappa(t: f64) -> f64 {
    t.min(1.0)
}

/// `Σ σ²Δx` over cells.
fn stress_energy(s: &StateSample) -> f64 {
    s.sigma.iter().zip(&s.volumes).map(|(sg, dx)| sg * sg * dx).sum()
}

/// `Σ ((σ_{j+1} − σ_j)/Δx̄)² Δx̄` over edges.
fn stress_gradient_energy(s: &StateSample) -> f64 {
    let n = s.sigma.len();
    let dual = mesh::dual_volumes(&s.volumes);
    (0..n)
        .map(|j| {
            let g = (s.sigma[(j + 1) % n] - s.sigma[j]) / dual[j];
            g * g * dual[j]
        })
        .sum()
}

/// `Σ σ̇² Δx` with `σ̇` the per-cell difference quotient between two samples.
fn stress_rate_energy(prev: &StateSample, next: &StateSample) -> f64 {
    let dt = next.time - prev.time;
    prev.sigma
        .iter()
        .zip(&next.sigma)
        .zip(&next.volumes)
        .map(|((a, b), dx)| {
            let rate = (b - a) / dt;
            rate * rate * dx
        })
        .sum()
}

/// Running time integrals of the Hoff functionals.
#[derive(Debug, Clone)]
struct HoffAccumulator {
    gradient_integral: f64,
    rate_integral: f64,
    last_gradient: f64,
}

impl HoffAccumulator {
    fn new(first: &StateSample) -> Self {
        Self { gradient_integral: 0.0, rate_integral: 0.0, last_gradient: stress_gradient_energy(first) }
    }

    /// `(A₁, κ-series)` at `first`.
    fn initial(&self, first: &StateSample) -> (f64, f64) {
        (stress_energy(first), kappa(first.time) * self.last_gradient)
    }

    fn advance(&mut self, prev: &StateSample, next: &StateSample) -> (f64, f64) {
        let dt = next.time - prev.time;
        let gradient = stress_gradient_energy(next);
        self.gradient_integral += 0.5 * dt * (self.last_gradient + gradient);
        if dt > 0.0 {
            self.rate_integral += dt * kappa(next.time) * stress_rate_energy(prev, next);
        }
        self.last_gradient = gradient;
        (
            stress_energy(next) + self.gradient_integral,
            kappa(next.time) * gradient + self.rate_integral,
        )
    }
}

/// `A₁(t)` and the κ-weighted functional over a sequence of samples.
pub fn hoff_functionals(samples: &[StateSample]) -> Result<(Vec<f64>, Vec<f64>)> {
    if samples.len() < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: samples.len() });
    }
    let mut acc = HoffAccumulator::new(&samples[0]);
    let (a, k) = acc.initial(&samples[0]);
    let mut a1 = vec![a];
    let mut kw = vec![k];
    for w in samples.windows(2) {
        let (a, k) = acc.advance(&w[0], &w[1]);
        a1.push(a);
        kw.push(k);
    }
    Ok((a1, kw))
}

/// Incremental builder for a [`DiagnosticsRecord`].
#[derive(Debug, Clone)]
pub struct Recorder {
    record: DiagnosticsRecord,
    last: StateSample,
    hoff: HoffAccumulator,
}

impl Recorder {
    pub fn new(first: StateSample) -> Self {
        let hoff = HoffAccumulator::new(&first);
        let (a, k) = hoff.initial(&first);
        let mut rec = Self { record: DiagnosticsRecord::default(), last: first.clone(), hoff };
        rec.append(&first, a, k);
        rec
    }

    fn append(&mut self, s: &StateSample, a1: f64, kw: f64) {
        let r = &mut self.record;
        r.times.push(s.time);
        r.mass_total.push(s.totals.mass);
        r.mass_plus.push(s.totals.mass_plus);
        r.momentum_total.push(s.totals.momentum);
        r.energy_total.push(s.totals.energy);
        r.rho_min.push(s.rho_min);
        r.rho_max.push(s.rho_max);
        r.theta_min.push(s.theta_min);
        r.theta_max.push(s.theta_max);
        r.a1.push(a1);
        r.kappa_weighted.push(kw);
    }

    pub fn push(&mut self, s: StateSample) {
        let (a, k) = self.hoff.advance(&self.last, &s);
        self.append(&s, a, k);
        self.last = s;
    }

    /// Mixture series for the most recent sample; `None` stands for "not defined".
    pub fn push_mixture(&mut self, entropy_residual: Option<f64>, pressure_gap: f64) {
        self.record.entropy_residual_l1.push(entropy_residual.unwrap_or(f64::NAN));
        self.record.pressure_gap_l1.push(pressure_gap);
    }

    pub fn finish(self) -> DiagnosticsRecord {
        self.record
    }
}

pub fn entropy(params: &PhaseParams, rho: f64, theta: f64) -> f64 {
    params.cv() * theta.ln() - (params.gamma() - 1.0) * rho.ln()
}

/// Phase entropies, `None` for a phase below the volume-fraction floor.
pub fn entropies(cell: &MacroCell, pair: &PhasePair) -> (Option<f64>, Option<f64>) {
    let s = |ph: Phase| {
        cell.phase_density(ph).map(|rho| entropy(pair.get(ph), rho, cell.theta(ph)))
    };
    (s(Phase::Plus), s(Phase::Minus))
}

/// Right-hand side of the phase entropy balance for `phase`.
fn entropy_production(cell: &MacroCell, phase: Phase, strain: f64, pair: &PhasePair) -> f64 {
    let mu = pair.get(phase).mu();
    let own = mu * strain - cell.pressure(phase, pair);
    let other = pair.get(phase.other()).mu() * strain - cell.pressure(phase.other(), pair);
    let alpha_own = cell.alpha(phase);
    let viscous = alpha_own * mu * strain * strain;
    if !cell.is_mixed() {
        return viscous;
    }
    let (a_plus, a_minus) = (cell.alpha_plus, 1.0 - cell.alpha_plus);
    let denom = a_minus * pair.plus.mu() + a_plus * pair.minus.mu();
    let k = a_plus * a_minus / denom;
    let jump = other - own;
    (1.0 - alpha_own) * mu * a_plus * a_minus / (denom * denom) * jump * jump
        + 2.0 * k * jump * mu * strain
        + viscous
}

/// L¹ norm of the discrete entropy-balance residual between two consecutive
/// states; phases absent at either level contribute nothing.
pub fn entropy_residual_l1(prev: &MacroState, next: &MacroState, pair: &PhasePair) -> f64 {
    let dt = next.time - prev.time;
    if !(dt > 0.0) {
        return 0.0;
    }
    let strain = next.strain();
    let vols = next.volumes();
    let mut total = 0.0;
    for (j, (old, new)) in prev.cells.iter().zip(&next.cells).enumerate() {
        for phase in [Phase::Plus, Phase::Minus] {
            if !(old.has(phase) && new.has(phase)) {
                continue;
            }
            let gas = pair.get(phase);
            let ds = entropy(gas, new.rho(phase), new.theta(phase)) - entropy(gas, old.rho(phase), old.theta(phase));
            let lhs = new.alpha(phase) * new.rho(phase) * new.theta(phase) * ds / dt;
            let rhs = entropy_production(new, phase, strain[j], pair);
            total += (lhs - rhs).abs() * vols[j];
        }
    }
    total
}

/// Residual series over consecutive states of a macro trajectory.
pub fn entropy_residual(states: &[MacroState], pair: &PhasePair) -> Result<Vec<f64>> {
    if states.len() < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: states.len() });
    }
    Ok(states.windows(2).map(|w| entropy_residual_l1(&w[0], &w[1], pair)).collect())
}

/// `Σ |p₊ − p₋| Δx` over cells where both phases are present.
pub fn pressure_gap_l1(state: &MacroState, pair: &PhasePair) -> f64 {
    state
        .cells
        .iter()
        .zip(state.volumes())
        .filter(|(c, _)| c.is_mixed())
        .map(|(c, dx)| (c.pressure(Phase::Plus, pair) - c.pressure(Phase::Minus, pair)).abs() * dx)
        .sum()
}

/// Density and temperature of one Lagrangian cell rebuilt from its strain
/// history `s(t) = Δu/Δx⁰` alone, by trapezoidal quadrature of
/// `ρ = ρ₀ / (1 + ∫s)` and the variation-of-constants form of
/// `θ' = −a θ + b`, `a = (γ−1)ρ s/(c_v ρ₀)`, `b = μ ρ s²/(c_v ρ₀²)`.
pub fn duhamel_reconstruction(
    times: &[f64],
    strain: &[f64],
    rho0: f64,
    theta0: f64,
    gas: &PhaseParams,
) -> Vec<(f64, f64)> {
    let (mu, cv, g1) = (gas.mu(), gas.cv(), gas.gamma() - 1.0);
    let mut out = Vec::with_capacity(times.len());
    let mut strain_integral = 0.0;
    // A(t) = ∫a and B(t) = ∫ e^{A(τ)} b(τ) dτ, so θ = e^{−A}(θ₀ + B).
    let mut a_integral = 0.0;
    let mut b_integral = 0.0;
    let rho_at = |si: f64| rho0 / (1.0 + si);
    let coeffs = |si: f64, s: f64| {
        let rho = rho_at(si);
        (g1 * rho * s / (cv * rho0), mu * rho * s * s / (cv * rho0 * rho0))
    };
    let (mut a_prev, mut eb_prev) = coeffs(0.0, strain.first().copied().unwrap_or(0.0));
    for k in 0..times.len() {
        if k > 0 {
            let dt = times[k] - times[k - 1];
            strain_integral += 0.5 * dt * (strain[k - 1] + strain[k]);
            let (a, b) = coeffs(strain_integral, strain[k]);
            a_integral += 0.5 * dt * (a_prev + a);
            let eb = a_integral.exp() * b;
            b_integral += 0.5 * dt * (eb_prev + eb);
            a_prev = a;
            eb_prev = eb;
        }
        out.push((rho_at(strain_integral), (-a_integral).exp() * (theta0 + b_integral)));
    }
    out
}

/// Sup-in-time gaps `(|ρ − ρ̃|, |θ − θ̃|)` between the solver history of cell
/// `j` and its Duhamel reconstruction. `steps` must hold every accepted state.
pub fn duhamel_check(steps: &[MesoState], j: usize, pair: &PhasePair) -> (f64, f64) {
    let Some(first) = steps.first() else {
        return (0.0, 0.0);
    };
    let dx0 = first.volumes()[j];
    let cell0 = first.cells[j];
    let times: Vec<f64> = steps.iter().map(|s| s.time).collect();
    let strain: Vec<f64> = steps
        .iter()
        .map(|s| mesh::velocity_jumps(&s.edge_velocity)[j] / dx0)
        .collect();
    let rebuilt = duhamel_reconstruction(&times, &strain, cell0.rho, cell0.theta, pair.by_color(cell0.color));
    steps.iter().zip(rebuilt).fold((0.0_f64, 0.0_f64), |(gr, gt), (s, (rho, theta))| {
        let c = &s.cells[j];
        (gr.max((c.rho - rho).abs()), gt.max((c.theta - theta).abs()))
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub eta: f64,
    /// `sup_t Σ|p₊ − p₋|Δx` over mixed cells for `t ≥ t_relax`.
    pub pressure_gap: f64,
    /// `sup_t Σ|s±(t) − s±(t_relax)|Δx` over mixed cells.
    pub entropy_drift_plus: f64,
    pub entropy_drift_minus: f64,
}

/// Fraction of `t_end` treated as the initial transient by default.
pub const DEFAULT_TRANSIENT_FRACTION: f64 = 0.1;

/// Run the macro model with viscosities scaled by each `η` and report the
/// post-transient pressure gap and entropy drift. The CFL number (and
/// `dt_max`) are scaled by `min(η, 1)` to follow the stiffer relaxation.
pub fn relaxation_sweep(
    spec: &ExperimentSpec,
    controls: &StepControls,
    eta_list: &[f64],
    t_relax: Option<f64>,
) -> Result<Vec<SweepRow>> {
    if let Some(&bad) = eta_list.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
        return Err(Error::invalid("eta_list", format!("entries must be > 0, got {bad}")));
    }
    let t_relax = t_relax.unwrap_or(DEFAULT_TRANSIENT_FRACTION * controls.t_end());
    if !(0.0..=controls.t_end()).contains(&t_relax) {
        return Err(Error::invalid("t_relax", format!("must lie in [0, t_end], got {t_relax}")));
    }
    let state0 = build_macro_ic(spec)?;
    eta_list
        .iter()
        .map(|&eta| {
            let pair = spec.pair.scaled_viscosity(eta)?;
            let factor = eta.min(1.0);
            let ctl = controls.with_cfl(controls.cfl() * factor)?.with_dt_max(controls.dt_max() * factor)?;
            let probes = [t_relax, ctl.t_end()];
            let probes: &[f64] = if t_relax < ctl.t_end() { &probes } else { &probes[1..] };
            sweep_row(eta, state0.clone(), &pair, &ctl, probes, t_relax)
        })
        .collect()
}

fn sweep_row(
    eta: f64,
    state0: MacroState,
    pair: &PhasePair,
    controls: &StepControls,
    probes: &[f64],
    t_relax: f64,
) -> Result<SweepRow> {
    let traj = run_macro_with(state0, pair, controls, probes, RunOptions { keep_steps: true })?;
    let tol = 1e-12 * controls.t_end().max(1.0);
    let late: Vec<&MacroState> = traj.steps.iter().filter(|s| s.time >= t_relax - tol).collect();
    let pressure_gap = late.iter().map(|s| pressure_gap_l1(s, pair)).fold(0.0, f64::max);
    let reference = late.first().copied();
    let drift = |phase: Phase| {
        let Some(reference) = reference else { return 0.0 };
        late.iter()
            .map(|s| {
                s.cells
                    .iter()
                    .zip(&reference.cells)
                    .zip(s.volumes())
                    .filter(|((c, r), _)| c.is_mixed() && r.is_mixed())
                    .map(|((c, r), dx)| {
                        let gas = pair.get(phase);
                        (entropy(gas, c.rho(phase), c.theta(phase)) - entropy(gas, r.rho(phase), r.theta(phase))).abs()
                            * dx
                    })
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    };
    Ok(SweepRow {
        eta,
        pressure_gap,
        entropy_drift_plus: drift(Phase::Plus),
        entropy_drift_minus: drift(Phase::Minus),
    })
}
