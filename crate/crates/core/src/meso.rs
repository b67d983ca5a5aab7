//! Sharp-interface solver: every Lagrangian cell holds one pure phase.
//!
//! Thermodynamic variables live in cells and velocities on edges. One step is
//! semi-implicit Euler: the viscous flux is implicit (a cyclic tridiagonal
//! solve for the new edge velocities) while the pressure flux is explicit.
//! Masses and colors are never rewritten, so mass and color conservation
//! are exact by construction.

use crate::cyclic::CyclicTridiagonal;
use crate::diagnostics::{DiagnosticsRecord, Observable, Recorder, StateSample, Totals};
use crate::driver::{integrate, Integrator, StepControls, Timed};
use crate::error::{Error, Result};
use crate::mesh;
use crate::model::{internal_energy, pressure_raw, stress, PhasePair};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MesoCell {
    /// Lagrangian mass, constant in time.
    pub mass: f64,
    /// `1` for phase `+`, `0` for phase `-`.
    pub color: u8,
    pub rho: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MesoState {
    pub cells: Vec<MesoCell>,
    /// `edge_velocity[j]` lives on the right edge of cell `j`.
    pub edge_velocity: Vec<f64>,
    /// Unwrapped right-edge positions, strictly increasing.
    pub edge_position: Vec<f64>,
    pub time: f64,
}

impl MesoState {
    pub fn new(cells: Vec<MesoCell>, edge_velocity: Vec<f64>, edge_position: Vec<f64>, time: f64) -> Result<Self> {
        let state = Self { cells, edge_velocity, edge_position, time };
        state.validate()?;
        Ok(state)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
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
        for (j, c) in self.cells.iter().enumerate() {
            if c.color > 1 {
                return Err(Error::invalid("color", format!("cell {j} has color {}", c.color)));
            }
            if !(c.mass > 0.0 && c.rho > 0.0 && c.theta > 0.0) {
                return Err(Error::invalid("cells", format!("cell {j} needs positive mass, rho and theta")));
            }
        }
        let mass: f64 = self.cells.iter().map(|c| c.mass).sum();
        let rho_vol: f64 = self.cells.iter().zip(&vols).map(|(c, v)| c.rho * v).sum();
        if (mass - rho_vol).abs() > 1e-12 * mass {
            return Err(Error::invalid("rho", format!("cell densities integrate to {rho_vol}, masses to {mass}")));
        }
        Ok(())
    }

    pub fn volumes(&self) -> Vec<f64> {
        mesh::volumes(&self.edge_position)
    }

    pub fn masses(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.mass).collect()
    }

    /// Lagrangian strain `(u[j] - u[j-1]) / Δx_j` at the current level.
    pub fn strain(&self) -> Vec<f64> {
        mesh::velocity_jumps(&self.edge_velocity)
            .iter()
            .zip(self.volumes())
            .map(|(du, v)| du / v)
            .collect()
    }

    pub fn pressures(&self, pair: &PhasePair) -> Vec<f64> {
        self.cells
            .iter()
            .map(|c| pressure_raw(pair.by_color(c.color).gamma(), c.rho, c.theta))
            .collect()
    }

    /// Cell stress `μ_j ∂ₓu - p_j`.
    pub fn stresses(&self, pair: &PhasePair) -> Vec<f64> {
        self.strain()
            .iter()
            .zip(self.pressures(pair))
            .zip(&self.cells)
            .map(|((d, p), c)| stress(pair.by_color(c.color).mu(), *d, p))
            .collect()
    }

    /// The same state with every edge velocity shifted by `v`.
    pub fn boosted(&self, v: f64) -> Self {
        let mut s = self.clone();
        s.edge_velocity.iter_mut().for_each(|u| *u += v);
        s
    }
}

impl Timed for MesoState {
    fn time(&self) -> f64 {
        self.time
    }

    fn set_time(&mut self, t: f64) {
        self.time = t;
    }
}

/// Stable time step: acoustic CFL with the velocity jump across each cell,
/// capped by `dt_max` and by the remaining time to `t_end`.
pub fn meso_dt(state: &MesoState, pair: &PhasePair, controls: &StepControls) -> Result<f64> {
    let vols = mesh::checked_volumes(&state.edge_position)?;
    let jumps = mesh::velocity_jumps(&state.edge_velocity);
    let stable = state
        .cells
        .iter()
        .zip(&vols)
        .zip(&jumps)
        .map(|((c, dx), du)| dx / (du.abs() + pair.by_color(c.color).sound_speed(c.theta)))
        .fold(f64::INFINITY, f64::min);
    Ok(controls.clamp(controls.cfl() * stable, state.time))
}

/// Momentum system `A u^{n+1} = b` scaled by `dt`: `A = diag(m̄) + dt K` with
/// `K` the viscous conductances `μ_j / Δx_j`, `b = m̄ u^n - dt (p_{j+1} - p_j)`.
pub fn assemble_viscous_system(state: &MesoState, pair: &PhasePair, dt: f64) -> Result<CyclicTridiagonal> {
    let vols = mesh::checked_volumes(&state.edge_position)?;
    let conductance: Vec<f64> = state
        .cells
        .iter()
        .zip(&vols)
        .map(|(c, dx)| pair.by_color(c.color).mu() / dx)
        .collect();
    momentum_system(&state.masses(), &conductance, &state.pressures(pair), &state.edge_velocity, dt)
}

/// Shared by both solvers: edge `j` couples cells `j` and `j+1`.
pub(crate) fn momentum_system(
    masses: &[f64],
    conductance: &[f64],
    pressure: &[f64],
    velocity: &[f64],
    dt: f64,
) -> Result<CyclicTridiagonal> {
    if !(dt > 0.0) {
        return Err(Error::invalid("dt", format!("must be > 0, got {dt}")));
    }
    let n = masses.len();
    let edge_mass = mesh::edge_masses(masses);
    let mut lower = Vec::with_capacity(n);
    let mut diag = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    let mut rhs = Vec::with_capacity(n);
    for j in 0..n {
        let right = (j + 1) % n;
        let (k_left, k_right) = (conductance[j], conductance[right]);
        lower.push(-dt * k_left);
        upper.push(-dt * k_right);
        diag.push(edge_mass[j] + dt * (k_left + k_right));
        rhs.push(edge_mass[j] * velocity[j] - dt * (pressure[right] - pressure[j]));
    }
    CyclicTridiagonal::new(lower, diag, upper, rhs)
}

pub fn solve_cyclic_tridiagonal(system: &CyclicTridiagonal) -> Result<Vec<f64>> {
    system.solve()
}

/// Move the edges with the new velocities and return `(positions, volumes)`.
pub(crate) fn advect_edges(edges: &[f64], velocity: &[f64], dt: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let moved: Vec<f64> = edges.iter().zip(velocity).map(|(x, u)| x + dt * u).collect();
    let vols = mesh::checked_volumes(&moved)?;
    Ok((moved, vols))
}

/// One semi-implicit step of length `dt`.
pub fn meso_step(state: &MesoState, pair: &PhasePair, dt: f64) -> Result<MesoState> {
    let system = assemble_viscous_system(state, pair, dt)?;
    let velocity = solve_cyclic_tridiagonal(&system)?;
    let (edges, vols) = advect_edges(&state.edge_position, &velocity, dt)?;
    let jumps = mesh::velocity_jumps(&velocity);
    let time = state.time + dt;

    let mut cells = Vec::with_capacity(state.len());
    for (j, (c, (dx, du))) in state.cells.iter().zip(vols.iter().zip(&jumps)).enumerate() {
        let gas = pair.by_color(c.color);
        let rho = c.mass / dx;
        let rho_mid = 0.5 * (c.rho + rho);
        let strain = du / dx;
        let sigma = stress(gas.mu(), strain, pressure_raw(gas.gamma(), rho_mid, c.theta));
        let theta = c.theta + dt * sigma * strain / (gas.cv() * rho_mid);
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::NegativeTemperature { cell: j, theta, time });
        }
        cells.push(MesoCell { rho, theta, ..*c });
    }
    Ok(MesoState { cells, edge_velocity: velocity, edge_position: edges, time })
}

#[derive(Debug, Clone, Copy)]
pub struct MesoSolver {
    pub pair: PhasePair,
}

impl Integrator for MesoSolver {
    type State = MesoState;

    fn dt(&self, state: &MesoState, controls: &StepControls) -> Result<f64> {
        meso_dt(state, &self.pair, controls)
    }

    fn step(&self, state: &MesoState, dt: f64) -> Result<MesoState> {
        meso_step(state, &self.pair, dt)
    }
}

/// Which accepted states a run keeps besides the probe snapshots.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Keep every accepted state (needed by the Duhamel and entropy oracles).
    pub keep_steps: bool,
}

#[derive(Debug, Clone)]
pub struct Trajectory<S> {
    pub snapshots: Vec<S>,
    /// Every accepted state, initial state first; empty unless requested.
    pub steps: Vec<S>,
    pub diagnostics: DiagnosticsRecord,
}

pub fn run_meso(
    state0: MesoState,
    pair: &PhasePair,
    controls: &StepControls,
    probes: &[f64],
) -> Result<Trajectory<MesoState>> {
    run_meso_with(state0, pair, controls, probes, RunOptions::default())
}

pub fn run_meso_with(
    state0: MesoState,
    pair: &PhasePair,
    controls: &StepControls,
    probes: &[f64],
    options: RunOptions,
) -> Result<Trajectory<MesoState>> {
    state0.validate()?;
    let solver = MesoSolver { pair: *pair };
    let mut recorder = Recorder::new(state0.sample(pair));
    let mut steps = Vec::new();
    if options.keep_steps {
        steps.push(state0.clone());
    }
    let snapshots = integrate(&solver, state0, controls, probes, |_, next, _| {
        recorder.push(next.sample(pair));
        if options.keep_steps {
            steps.push(next.clone());
        }
    })?;
    Ok(Trajectory { snapshots, steps, diagnostics: recorder.finish() })
}

impl Observable for MesoState {
    fn totals(&self, pair: &PhasePair) -> Totals {
        let masses = self.masses();
        let edge_mass = mesh::edge_masses(&masses);
        let mass = masses.iter().sum();
        let mass_plus = self.cells.iter().filter(|c| c.color == 1).map(|c| c.mass).sum();
        let momentum = edge_mass.iter().zip(&self.edge_velocity).map(|(m, u)| m * u).sum();
        let kinetic: f64 = edge_mass.iter().zip(&self.edge_velocity).map(|(m, u)| 0.5 * m * u * u).sum();
        let internal: f64 = self
            .cells
            .iter()
            .map(|c| c.mass * internal_energy(pair.by_color(c.color), c.theta))
            .sum();
        Totals { mass, mass_plus, momentum, energy: kinetic + internal }
    }

    fn sample(&self, pair: &PhasePair) -> StateSample {
        let (rho_min, rho_max) = min_max(self.cells.iter().map(|c| c.rho));
        let (theta_min, theta_max) = min_max(self.cells.iter().map(|c| c.theta));
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

pub(crate) fn min_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}
