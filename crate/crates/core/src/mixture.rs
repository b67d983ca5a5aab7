//! Averaged two-pressure, two-temperature model on a Lagrangian mesh moved by
//! the common velocity.
//!
//! Each cell carries the volume fraction `α₊`, the two partial masses (fixed
//! in time) and the two phase temperatures. A step runs, in order: implicit
//! momentum with the homogenized stress, mesh motion, explicit stress-driven
//! relaxation of `α₊`, density recovery from the partial masses, and the two
//! phase energy updates.

use crate::diagnostics::{entropy_residual_l1, pressure_gap_l1, Observable, Recorder, StateSample, Totals};
use crate::driver::{integrate, Integrator, StepControls, Timed};
use crate::error::{Error, Result};
use crate::mesh;
use crate::meso::{advect_edges, min_max, momentum_system, RunOptions, Trajectory};
use crate::model::{eff_coefficients, pressure_raw, relaxation_rate, sigma_convex, stress, Phase, PhasePair};

/// Below this volume fraction a phase is treated as absent: its energy
/// equation is not integrated and its density is not recovered.
pub const ALPHA_FLOOR: f64 = 1e-10;

/// Largest `α₊` excursion outside `[0, 1]` that is clamped rather than rejected.
pub const ALPHA_EXCURSION_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacroCell {
    pub alpha_plus: f64,
    /// Partial masses `α±ρ±Δx`, constant in time.
    pub m_plus: f64,
    pub m_minus: f64,
    pub theta_plus: f64,
    pub theta_minus: f64,
    /// Phase densities; for an absent phase this holds the last value it had.
    pub rho_plus: f64,
    pub rho_minus: f64,
}

impl MacroCell {
    pub fn alpha(&self, phase: Phase) -> f64 {
        match phase {
            Phase::Plus => self.alpha_plus,
            Phase::Minus => 1.0 - self.alpha_plus,
        }
    }

    pub fn partial_mass(&self, phase: Phase) -> f64 {
        match phase {
            Phase::Plus => self.m_plus,
            Phase::Minus => self.m_minus,
        }
    }

    pub fn theta(&self, phase: Phase) -> f64 {
        match phase {
            Phase::Plus => self.theta_plus,
            Phase::Minus => self.theta_minus,
        }
    }

    pub fn rho(&self, phase: Phase) -> f64 {
        match phase {
            Phase::Plus => self.rho_plus,
            Phase::Minus => self.rho_minus,
        }
    }

    pub fn mass(&self) -> f64 {
        self.m_plus + self.m_minus
    }

    /// Whether `phase` occupies a non-negligible part of the cell.
    pub fn has(&self, phase: Phase) -> bool {
        self.alpha(phase) >= ALPHA_FLOOR && self.partial_mass(phase) > 0.0
    }

    /// Density of `phase`, or `None` where it is absent.
    pub fn phase_density(&self, phase: Phase) -> Option<f64> {
        self.has(phase).then(|| self.rho(phase))
    }

    /// Phase pressure, zero where the phase is absent (it then carries no weight).
    pub fn pressure(&self, phase: Phase, pair: &PhasePair) -> f64 {
        if self.has(phase) {
            pressure_raw(pair.get(phase).gamma(), self.rho(phase), self.theta(phase))
        } else {
            0.0
        }
    }

    /// `true` when both phases are present.
    pub fn is_mixed(&self) -> bool {
        self.has(Phase::Plus) && self.has(Phase::Minus)
    }

    fn set_theta(&mut self, phase: Phase, theta: f64) {
        match phase {
            Phase::Plus => self.theta_plus = theta,
            Phase::Minus => self.theta_minus = theta,
        }
    }

    fn set_rho(&mut self, phase: Phase, rho: f64) {
        match phase {
            Phase::Plus => self.rho_plus = rho,
            Phase::Minus => self.rho_minus = rho,
        }
    }
}

/// Phase stresses `σ±` and the homogenized `σ` for the given strain.
pub fn phase_stresses(cell: &MacroCell, dudx: f64, pair: &PhasePair) -> (f64, f64, f64) {
    let s_plus = stress(pair.plus.mu(), dudx, cell.pressure(Phase::Plus, pair));
    let s_minus = stress(pair.minus.mu(), dudx, cell.pressure(Phase::Minus, pair));
    (s_plus, s_minus, sigma_convex(effective_alpha(cell), pair, s_plus, s_minus))
}

/// `α₊` as seen by the closures: an absent phase has zero weight.
fn effective_alpha(cell: &MacroCell) -> f64 {
    match (cell.has(Phase::Plus), cell.has(Phase::Minus)) {
        (true, false) => 1.0,
        (false, true) => 0.0,
        _ => cell.alpha_plus,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacroState {
    pub cells: Vec<MacroCell>,
    pub edge_velocity: Vec<f64>,
    pub edge_position: Vec<f64>,
    pub time: f64,
}

impl MacroState {
    pub fn new(cells: Vec<MacroCell>, edge_velocity: Vec<f64>, edge_position: Vec<f64>, time: f64) -> Result<Self> {
        let s = Self { cells, edge_velocity, edge_position, time };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.cells.len();
        if n < 2 {
            return Err(Error::invalid("cells", format!("need at least 2 cells, got {n}")));
        }
        if self.edge_velocity.len() != n || self.edge_position.len() != n {
            return Err(Error::invalid("cells", "edge arrays must have one entry per cell"));
        }
        let vols = mesh::checked_volumes(&self.edge_position)?;
        let length: f64 = vols.iter().sum();
        if (length - mesh::TORUS_LENGTH).abs() > 1e-12 {
            return Err(Error::invalid("edge_position", format!("cells cover {length}, not the unit torus")));
        }
        for (j, (c, dx)) in self.cells.iter().zip(&vols).enumerate() {
            if !(0.0..=1.0).contains(&c.alpha_plus) {
                return Err(Error::invalid("alpha_plus", format!("cell {j} has alpha {}", c.alpha_plus)));
            }
            if !(c.m_plus >= 0.0 && c.m_minus >= 0.0 && c.mass() > 0.0) {
                return Err(Error::invalid("cells", format!("cell {j} needs non-negative partial masses")));
            }
            for phase in [Phase::Plus, Phase::Minus] {
                if !c.has(phase) {
                    continue;
                }
                if !(c.theta(phase) > 0.0 && c.rho(phase) > 0.0) {
                    return Err(Error::invalid("cells", format!("cell {j} needs positive rho and theta")));
                }
                let m = c.alpha(phase) * c.rho(phase) * dx;
                if (m - c.partial_mass(phase)).abs() > 1e-10 * c.partial_mass(phase) {
                    return Err(Error::invalid("cells", format!("cell {j}: partial mass does not match alpha·rho·dx")));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn volumes(&self) -> Vec<f64> {
        mesh::volumes(&self.edge_position)
    }

    /// Mixture masses `m₊ + m₋`.
    pub fn masses(&self) -> Vec<f64> {
        self.cells.iter().map(MacroCell::mass).collect()
    }

    pub fn strain(&self) -> Vec<f64> {
        mesh::velocity_jumps(&self.edge_velocity)
            .iter()
            .zip(self.volumes())
            .map(|(du, v)| du / v)
            .collect()
    }

    /// Homogenized stress in every cell.
    pub fn stresses(&self, pair: &PhasePair) -> Vec<f64> {
        self.strain()
            .iter()
            .zip(&self.cells)
            .map(|(d, c)| phase_stresses(c, *d, pair).2)
            .collect()
    }

    pub fn boosted(&self, v: f64) -> Self {
        let mut s = self.clone();
        s.edge_velocity.iter_mut().for_each(|u| *u += v);
        s
    }
}

impl Timed for MacroState {
    fn time(&self) -> f64 {
        self.time
    }

    fn set_time(&mut self, t: f64) {
        self.time = t;
    }
}

/// Acoustic CFL with the fastest present phase in each cell.
pub fn macro_dt(state: &MacroState, pair: &PhasePair, controls: &StepControls) -> Result<f64> {
    let vols = mesh::checked_volumes(&state.edge_position)?;
    let jumps = mesh::velocity_jumps(&state.edge_velocity);
    let stable = state
        .cells
        .iter()
        .zip(&vols)
        .zip(&jumps)
        .map(|((c, dx), du)| {
            let speed = [Phase::Plus, Phase::Minus]
                .into_iter()
                .filter(|&ph| c.has(ph))
                .map(|ph| pair.get(ph).sound_speed(c.theta(ph)))
                .fold(0.0, f64::max);
            dx / (du.abs() + speed)
        })
        .fold(f64::INFINITY, f64::min);
    Ok(controls.clamp(controls.cfl() * stable, state.time))
}

pub fn macro_step(state: &MacroState, pair: &PhasePair, dt: f64) -> Result<MacroState> {
    let vols_old = mesh::checked_volumes(&state.edge_position)?;
    let n = state.len();
    let mut conductance = Vec::with_capacity(n);
    let mut p_eff = Vec::with_capacity(n);
    for (c, dx) in state.cells.iter().zip(&vols_old) {
        let (p_plus, p_minus) = (c.pressure(Phase::Plus, pair), c.pressure(Phase::Minus, pair));
        let (mu, p) = eff_coefficients(effective_alpha(c), pair, p_plus, p_minus);
        conductance.push(mu / dx);
        p_eff.push(p);
    }

    // (1) momentum, (2) geometry
    let system = momentum_system(&state.masses(), &conductance, &p_eff, &state.edge_velocity, dt)?;
    let velocity = system.solve()?;
    let (edges, vols) = advect_edges(&state.edge_position, &velocity, dt)?;
    let jumps = mesh::velocity_jumps(&velocity);
    let time = state.time + dt;

    let mut cells = Vec::with_capacity(n);
    for (j, (old, (dx, du))) in state.cells.iter().zip(vols.iter().zip(&jumps)).enumerate() {
        let strain = du / dx;

        // (3) volume fraction, driven by level-n pressures and the new strain
        let (s_plus, s_minus, _) = phase_stresses(old, strain, pair);
        let trial = old.alpha_plus + dt * relaxation_rate(old.alpha_plus, pair, s_plus, s_minus);
        let excursion = (-trial).max(trial - 1.0);
        if excursion > ALPHA_EXCURSION_LIMIT || !trial.is_finite() {
            return Err(Error::VolumeFractionBlowup { cell: j, alpha: trial, time });
        }
        let mut cell = MacroCell { alpha_plus: trial.clamp(0.0, 1.0), ..*old };

        // (4) densities from the fixed partial masses
        for phase in [Phase::Plus, Phase::Minus] {
            if cell.has(phase) {
                cell.set_rho(phase, cell.partial_mass(phase) / (cell.alpha(phase) * dx));
            }
        }

        // (5) phase energies with time-centered densities
        let present: Vec<Phase> = [Phase::Plus, Phase::Minus]
            .into_iter()
            .filter(|&ph| old.has(ph) && cell.has(ph))
            .collect();
        let mid_stress = |phase: Phase| {
            let gas = pair.get(phase);
            let rho_mid = 0.5 * (old.rho(phase) + cell.rho(phase));
            stress(gas.mu(), strain, pressure_raw(gas.gamma(), rho_mid, old.theta(phase)))
        };
        let (m_plus, m_minus) = (mid_stress(Phase::Plus), mid_stress(Phase::Minus));
        let alpha_eff = effective_alpha(&cell);
        let sigma = sigma_convex(alpha_eff, pair, m_plus, m_minus);
        let exchange = relaxation_rate(alpha_eff, pair, m_plus, m_minus) * sigma;
        for &phase in &present {
            let gas = pair.get(phase);
            let partial_mid =
                0.5 * (old.alpha(phase) * old.rho(phase) + cell.alpha(phase) * cell.rho(phase));
            let signed_exchange = match phase {
                Phase::Plus => exchange,
                Phase::Minus => -exchange,
            };
            let work = signed_exchange + cell.alpha(phase) * sigma * strain;
            let theta = old.theta(phase) + dt * work / (gas.cv() * partial_mid);
            if !(theta > 0.0 && theta.is_finite()) {
                return Err(Error::NegativeTemperature { cell: j, theta, time });
            }
            cell.set_theta(phase, theta);
        }
        cells.push(cell);
    }
    Ok(MacroState { cells, edge_velocity: velocity, edge_position: edges, time })
}

#[derive(Debug, Clone, Copy)]
pub struct MacroSolver {
    pub pair: PhasePair,
}

impl Integrator for MacroSolver {
    type State = MacroState;

    fn dt(&self, state: &MacroState, controls: &StepControls) -> Result<f64> {
        macro_dt(state, &self.pair, controls)
    }

    fn step(&self, state: &MacroState, dt: f64) -> Result<MacroState> {
        macro_step(state, &self.pair, dt)
    }
}

pub fn run_macro(
    state0: MacroState,
    pair: &PhasePair,
    controls: &StepControls,
    probes: &[f64],
) -> Result<Trajectory<MacroState>> {
    run_macro_with(state0, pair, controls, probes, RunOptions::default())
}

pub fn run_macro_with(
    state0: MacroState,
    pair: &PhasePair,
    controls: &StepControls,
    probes: &[f64],
    options: RunOptions,
) -> Result<Trajectory<MacroState>> {
    state0.validate()?;
    let solver = MacroSolver { pair: *pair };
    let mut recorder = Recorder::new(state0.sample(pair));
    recorder.push_mixture(None, pressure_gap_l1(&state0, pair));
    let mut steps = Vec::new();
    if options.keep_steps {
        steps.push(state0.clone());
    }
    let snapshots = integrate(&solver, state0, controls, probes, |prev, next, _| {
        recorder.push(next.sample(pair));
        recorder.push_mixture(Some(entropy_residual_l1(prev, next, pair)), pressure_gap_l1(next, pair));
        if options.keep_steps {
            steps.push(next.clone());
        }
    })?;
    Ok(Trajectory { snapshots, steps, diagnostics: recorder.finish() })
}

impl Observable for MacroState {
    fn totals(&self, pair: &PhasePair) -> Totals {
        let masses = self.masses();
        let edge_mass = mesh::edge_masses(&masses);
        let mass = masses.iter().sum();
        let mass_plus = self.cells.iter().map(|c| c.m_plus).sum();
        let momentum = edge_mass.iter().zip(&self.edge_velocity).map(|(m, u)| m * u).sum();
        let kinetic: f64 = edge_mass.iter().zip(&self.edge_velocity).map(|(m, u)| 0.5 * m * u * u).sum();
        let internal: f64 = self
            .cells
            .iter()
            .map(|c| {
                c.m_plus * pair.plus.cv() * c.theta_plus + c.m_minus * pair.minus.cv() * c.theta_minus
            })
            .sum();
        Totals { mass, mass_plus, momentum, energy: kinetic + internal }
    }

    fn sample(&self, pair: &PhasePair) -> StateSample {
        let present = || {
            self.cells
                .iter()
                .flat_map(|c| [Phase::Plus, Phase::Minus].into_iter().filter(|&ph| c.has(ph)).map(move |ph| (c, ph)))
        };
        let (rho_min, rho_max) = min_max(present().map(|(c, ph)| c.rho(ph)));
        let (theta_min, theta_max) = min_max(present().map(|(c, ph)| c.theta(ph)));
        StateSample {
            time: self.time,
            totals: self.totals(pair),
            rho_min,
            rho_max,
            theta_min,
            theta_max,
            sigma: self.stresses(pair),
            volumes: self.volumes(),
        }
    }
}
