//! Initial states for the two-slab experiment: a mixture profile for the
//! averaged model and a finely interleaved pure-cell realization of it.

use crate::error::{Error, Result};
use crate::mesh;
use crate::meso::{MesoCell, MesoState};
use crate::mixture::{MacroCell, MacroState};
use crate::model::{PhaseParams, PhasePair};

/// Periodic piecewise-constant function on the unit torus: `values[i]` on
/// `[breakpoints[i], breakpoints[i+1])`, the last interval wrapping round to
/// the first breakpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseProfile {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseProfile {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.is_empty() || breakpoints.len() != values.len() {
            return Err(Error::invalid("profile", "need one value per breakpoint and at least one of each"));
        }
        if breakpoints.iter().any(|b| !(0.0..1.0).contains(b)) {
            return Err(Error::invalid("profile", "breakpoints must lie in [0, 1)"));
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("profile", "breakpoints must be strictly increasing"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("profile", "values must be finite"));
        }
        Ok(Self { breakpoints, values })
    }

    pub fn constant(value: f64) -> Result<Self> {
        Self::new(vec![0.0], vec![value])
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_constant(&self) -> bool {
        self.values.iter().all(|&v| v == self.values[0])
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.breakpoints.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.values.len();
        if n == 1 {
            return self.values[0];
        }
        let x = x.rem_euclid(mesh::TORUS_LENGTH);
        match self.breakpoints.partition_point(|&b| b <= x) {
            0 => self.values[n - 1],
            k => self.values[k - 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub pair: PhasePair,
    pub alpha0: PiecewiseProfile,
    pub rho_plus0: PiecewiseProfile,
    pub rho_minus0: PiecewiseProfile,
    pub theta_plus0: PiecewiseProfile,
    pub theta_minus0: PiecewiseProfile,
    pub u0: PiecewiseProfile,
    pub cells: usize,
    pub t_end: f64,
    pub probes: Vec<f64>,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.cells < 2 {
            return Err(Error::invalid("cells", format!("need at least 2 cells, got {}", self.cells)));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::invalid("t_end", format!("must be >= 0, got {}", self.t_end)));
        }
        if self.alpha0.values().iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::invalid("alpha0", "values must lie in [0, 1]"));
        }
        crate::driver::validate_probes(&self.probes, 0.0, self.t_end)
    }

    pub fn with_cells(&self, cells: usize) -> Self {
        Self { cells, ..self.clone() }
    }

    /// Same data with the phases relabeled and `α₊` replaced by `1 − α₊`.
    pub fn swapped(&self) -> Result<Self> {
        Ok(Self {
            pair: self.pair.swapped(),
            alpha0: self.alpha0.map(|a| 1.0 - a)?,
            rho_plus0: self.rho_minus0.clone(),
            rho_minus0: self.rho_plus0.clone(),
            theta_plus0: self.theta_minus0.clone(),
            theta_minus0: self.theta_plus0.clone(),
            ..self.clone()
        })
    }

    fn centers(&self) -> Vec<f64> {
        let j = self.cells as f64;
        (0..self.cells).map(|k| (k as f64 + 0.5) / j).collect()
    }

    /// Phase data at `x`, rejecting missing data where the phase is present.
    fn sample(&self, x: f64) -> Result<Sample> {
        let alpha = self.alpha0.eval(x);
        let s = Sample {
            alpha,
            rho_plus: self.rho_plus0.eval(x),
            rho_minus: self.rho_minus0.eval(x),
            theta_plus: self.theta_plus0.eval(x),
            theta_minus: self.theta_minus0.eval(x),
        };
        if alpha > 0.0 && !(s.rho_plus > 0.0 && s.theta_plus > 0.0) {
            return Err(Error::InconsistentSpec(format!("phase + present at x = {x} without positive rho/theta")));
        }
        if alpha < 1.0 && !(s.rho_minus > 0.0 && s.theta_minus > 0.0) {
            return Err(Error::InconsistentSpec(format!("phase - present at x = {x} without positive rho/theta")));
        }
        Ok(s)
    }

    fn edge_velocities(&self, edges: &[f64]) -> Vec<f64> {
        edges.iter().map(|&x| self.u0.eval(x)).collect()
    }
}

struct Sample {
    alpha: f64,
    rho_plus: f64,
    rho_minus: f64,
    theta_plus: f64,
    theta_minus: f64,
}

/// Two slabs: a mixed band on `[0.25, 0.75)` inside pure `+` fluid, at rest.
pub fn default_experiment() -> ExperimentSpec {
    let slab = |inside: f64, outside: f64| {
        PiecewiseProfile::new(vec![0.25, 0.75], vec![inside, outside]).expect("static profile")
    };
    ExperimentSpec {
        pair: PhasePair::new(
            PhaseParams::new(0.1, 2.0, 1.0).expect("static params"),
            PhaseParams::new(0.2, 3.0, 1.0).expect("static params"),
        ),
        alpha0: slab(0.5, 1.0),
        rho_plus0: slab(2.0, 0.2),
        rho_minus0: slab(1.0, 0.2),
        theta_plus0: slab(2.0, 0.2),
        theta_minus0: slab(1.0, 0.2),
        u0: PiecewiseProfile::constant(0.0).expect("static profile"),
        cells: 100,
        t_end: 0.1,
        probes: vec![0.0, 0.1],
    }
}

/// Pure-cell realization: cell `k` is `+` when the running sum of `α₀⁺` over
/// the centers of cells `0..=k` crosses an integer.
pub fn build_meso_ic(spec: &ExperimentSpec) -> Result<MesoState> {
    spec.validate()?;
    let edges = mesh::uniform_edges(spec.cells);
    let dx = 1.0 / spec.cells as f64;
    let mut acc = 0.0;
    let mut cells = Vec::with_capacity(spec.cells);
    for x in spec.centers() {
        let s = spec.sample(x)?;
        acc += s.alpha;
        let plus = acc >= 1.0;
        if plus {
            acc -= 1.0;
        }
        let (rho, theta) = if plus { (s.rho_plus, s.theta_plus) } else { (s.rho_minus, s.theta_minus) };
        cells.push(MesoCell { mass: rho * dx, color: u8::from(plus), rho, theta });
    }
    let u = spec.edge_velocities(&edges);
    MesoState::new(cells, u, edges, 0.0)
}

/// Mixture state sampled at cell centers.
pub fn build_macro_ic(spec: &ExperimentSpec) -> Result<MacroState> {
    spec.validate()?;
    let edges = mesh::uniform_edges(spec.cells);
    let dx = 1.0 / spec.cells as f64;
    let cells = spec
        .centers()
        .into_iter()
        .map(|x| {
            let s = spec.sample(x)?;
            Ok(MacroCell {
                alpha_plus: s.alpha,
                m_plus: s.alpha * s.rho_plus * dx,
                m_minus: (1.0 - s.alpha) * s.rho_minus * dx,
                theta_plus: s.theta_plus,
                theta_minus: s.theta_minus,
                rho_plus: s.rho_plus,
                rho_minus: s.rho_minus,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let u = spec.edge_velocities(&edges);
    MacroState::new(cells, u, edges, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Phase;

    fn constant_alpha(alpha: f64, cells: usize) -> ExperimentSpec {
        ExperimentSpec {
            alpha0: PiecewiseProfile::constant(alpha).unwrap(),
            cells,
            ..default_experiment()
        }
    }

    #[test]
    fn default_parameters() {
        let spec = default_experiment();
        assert_eq!(spec.pair.minus.mu(), 0.2);
        assert_eq!(spec.pair.minus.gamma(), 3.0);
        assert_eq!(spec.pair.plus.mu(), 0.1);
        assert_eq!(spec.alpha0.eval(0.5), 0.5);
        assert_eq!(spec.alpha0.eval(0.1), 1.0);
        assert_eq!(spec.rho_plus0.eval(0.5), 2.0);
        assert_eq!(spec.rho_minus0.eval(0.5), 1.0);
        assert_eq!(spec.theta_plus0.eval(0.9), 0.2);
        assert_eq!(spec.cells, 100);
    }

    #[test]
    fn profile_wraps_and_is_left_closed() {
        let p = PiecewiseProfile::new(vec![0.25, 0.75], vec![0.5, 1.0]).unwrap();
        assert_eq!(p.eval(0.8), 1.0);
        assert_eq!(p.eval(0.1), 1.0);
        assert_eq!(p.eval(1.5), 0.5);
        assert_eq!(p.eval(0.25), 0.5);
        assert_eq!(p.eval(0.75), 1.0);
        assert_eq!(p.eval(0.0), 1.0);
    }

    #[test]
    fn profile_rejects_bad_breakpoints() {
        assert!(PiecewiseProfile::new(vec![0.5, 0.25], vec![1.0, 2.0]).is_err());
        assert!(PiecewiseProfile::new(vec![1.0], vec![1.0]).is_err());
        assert!(PiecewiseProfile::new(vec![0.0], vec![]).is_err());
    }

    #[test]
    fn pure_plus_alpha_gives_pure_plus_cells() {
        let m = build_meso_ic(&constant_alpha(1.0, 40)).unwrap();
        assert!(m.cells.iter().all(|c| c.color == 1));
        assert!(m.cells.iter().zip(0..).all(|(c, k)| c.rho == default_experiment().rho_plus0.eval((k as f64 + 0.5) / 40.0)));
    }

    #[test]
    fn half_alpha_alternates() {
        let m = build_meso_ic(&constant_alpha(0.5, 10)).unwrap();
        let colors: Vec<u8> = m.cells.iter().map(|c| c.color).collect();
        assert_eq!(colors, vec![0, 1, 0, 1, 0, 1, 0, 1, 0, 1]);
        assert!(colors.chunks(2).all(|w| w[0] + w[1] == 1));
    }

    #[test]
    fn default_meso_ic_alternates_inside_band() {
        let m = build_meso_ic(&default_experiment()).unwrap();
        for (k, c) in m.cells.iter().enumerate() {
            let x = (k as f64 + 0.5) / 100.0;
            if (0.25..0.75).contains(&x) {
                assert_eq!(c.color, u8::from((k - 25) % 2 == 1), "cell {k}");
            } else {
                assert_eq!(c.color, 1, "cell {k}");
            }
        }
    }

    #[test]
    fn default_macro_ic_samples() {
        let s = build_macro_ic(&default_experiment()).unwrap();
        let mid = &s.cells[50];
        assert_eq!(
            (mid.alpha_plus, mid.rho_plus, mid.rho_minus, mid.theta_plus, mid.theta_minus),
            (0.5, 2.0, 1.0, 2.0, 1.0)
        );
        let out = &s.cells[10];
        assert_eq!((out.alpha_plus, out.rho_plus, out.theta_plus), (1.0, 0.2, 0.2));
        assert_eq!(out.m_minus, 0.0);
        assert_eq!(out.phase_density(Phase::Minus), None);
    }

    #[test]
    fn totals_agree_for_constant_alpha() {
        for (alpha, cells) in [(0.0, 10), (0.5, 10), (1.0, 11)] {
            let spec = ExperimentSpec { rho_plus0: PiecewiseProfile::constant(1.5).unwrap(), ..constant_alpha(alpha, cells) };
            let meso = build_meso_ic(&spec).unwrap();
            let mac = build_macro_ic(&spec).unwrap();
            let meso_plus: f64 = meso.cells.iter().filter(|c| c.color == 1).map(|c| c.mass).sum();
            let macro_plus: f64 = mac.cells.iter().map(|c| c.m_plus).sum();
            assert!((meso_plus - macro_plus).abs() < 1e-14, "alpha {alpha}");
        }
    }

    #[test]
    fn missing_phase_data_is_inconsistent() {
        let spec = ExperimentSpec { rho_minus0: PiecewiseProfile::constant(0.0).unwrap(), ..default_experiment() };
        assert!(matches!(build_macro_ic(&spec), Err(Error::InconsistentSpec(_))));
        assert!(matches!(build_meso_ic(&spec), Err(Error::InconsistentSpec(_))));
        let pure = ExperimentSpec { alpha0: PiecewiseProfile::constant(1.0).unwrap(), ..spec };
        assert!(build_macro_ic(&pure).is_ok());
    }

    #[test]
    fn too_few_cells_rejected() {
        assert!(build_meso_ic(&constant_alpha(1.0, 1)).is_err());
    }
}
