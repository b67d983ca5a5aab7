//! Time-stepping loop shared by both solvers: step-size selection, landing
//! exactly on probe times, and the halve-and-retry contract for rejected steps.

use crate::error::{Error, Result};

/// Maximum number of consecutive `dt` halvings before a step is abandoned.
pub const MAX_HALVINGS: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControls {
    dt_max: f64,
    cfl: f64,
    t_end: f64,
}

impl StepControls {
    pub fn new(dt_max: f64, cfl: f64, t_end: f64) -> Result<Self> {
        if !(dt_max.is_finite() && dt_max > 0.0) {
            return Err(Error::invalid("dt_max", format!("must be > 0, got {dt_max}")));
        }
        if !(cfl > 0.0 && cfl <= 1.0) {
            return Err(Error::invalid("cfl", format!("must lie in (0, 1], got {cfl}")));
        }
        if !(t_end.is_finite() && t_end >= 0.0) {
            return Err(Error::invalid("t_end", format!("must be >= 0, got {t_end}")));
        }
        Ok(Self { dt_max, cfl, t_end })
    }

    pub fn dt_max(&self) -> f64 {
        self.dt_max
    }

    pub fn cfl(&self) -> f64 {
        self.cfl
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn with_t_end(self, t_end: f64) -> Result<Self> {
        Self::new(self.dt_max, self.cfl, t_end)
    }

    pub fn with_cfl(self, cfl: f64) -> Result<Self> {
        Self::new(self.dt_max, cfl, self.t_end)
    }

    pub fn with_dt_max(self, dt_max: f64) -> Result<Self> {
        Self::new(dt_max, self.cfl, self.t_end)
    }

    /// Final clamp applied to any stability bound: respect `dt_max` and do not
    /// step past `t_end`.
    pub(crate) fn clamp(&self, stable: f64, time: f64) -> f64 {
        let remaining = self.t_end - time;
        let dt = stable.min(self.dt_max);
        if remaining <= dt {
            remaining
        } else {
            dt
        }
    }
}

/// A state advanced by an [`Integrator`].
pub trait Timed {
    fn time(&self) -> f64;
    fn set_time(&mut self, t: f64);
}

pub trait Integrator {
    type State: Timed + Clone;

    /// Admissible step from the current state, already clamped by the controls.
    fn dt(&self, state: &Self::State, controls: &StepControls) -> Result<f64>;

    fn step(&self, state: &Self::State, dt: f64) -> Result<Self::State>;
}

/// Check that probe times are sorted and lie within `[t0, t_end]`.
pub fn validate_probes(probes: &[f64], t0: f64, t_end: f64) -> Result<()> {
    let tol = 1e-12 * t_end.abs().max(1.0);
    if probes.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("probes", "must be strictly increasing"));
    }
    if let Some(&p) = probes.iter().find(|&&p| p < t0 - tol || p > t_end + tol || !p.is_finite()) {
        return Err(Error::invalid("probes", format!("{p} outside [{t0}, {t_end}]")));
    }
    Ok(())
}

/// Advance `state` to `controls.t_end()`, returning the snapshots taken at the
/// probe times. `observer` sees every accepted step as `(before, after, dt)`.
pub fn integrate<I: Integrator>(
    integrator: &I,
    state: I::State,
    controls: &StepControls,
    probes: &[f64],
    mut observer: impl FnMut(&I::State, &I::State, f64),
) -> Result<Vec<I::State>> {
    let t_end = controls.t_end();
    validate_probes(probes, state.time(), t_end)?;
    let tol = 1e-12 * t_end.abs().max(1.0);

    let mut snapshots = Vec::with_capacity(probes.len());
    let mut next_probe = 0;
    let mut current = state;
    while next_probe < probes.len() && probes[next_probe] <= current.time() + tol {
        snapshots.push(current.clone());
        next_probe += 1;
    }

    while current.time() < t_end - tol {
        let target = probes.get(next_probe).copied().unwrap_or(t_end).min(t_end);
        let mut dt = integrator.dt(&current, controls)?;
        let lands = dt >= target - current.time();
        if lands {
            dt = target - current.time();
        }

        let mut halvings = 0;
        let mut next = loop {
            match integrator.step(&current, dt) {
                Ok(s) => break s,
                Err(e) if e.is_retryable() && halvings < MAX_HALVINGS => {
                    halvings += 1;
                    dt *= 0.5;
                }
                Err(e) if e.is_retryable() => {
                    return Err(Error::StepRejected {
                        halvings,
                        time: current.time(),
                        source: Box::new(e),
                    })
                }
                Err(e) => return Err(e),
            }
        };
        if lands && halvings == 0 {
            next.set_time(target);
        }
        observer(&current, &next, dt);
        current = next;
        while next_probe < probes.len() && probes[next_probe] <= current.time() + tol {
            snapshots.push(current.clone());
            next_probe += 1;
        }
    }
    Ok(snapshots)
}

/// `count` evenly spaced probe times covering `[0, t_end]`, endpoints included.
pub fn even_probes(t_end: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![t_end],
        _ => (0..count)
            .map(|k| t_end * k as f64 / (count - 1) as f64)
            .collect(),
    }
}
