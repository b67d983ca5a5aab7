//! Solver behavior against independent ODE oracles and self-convergence.

use std::f64::consts::TAU;

use twofluid::diagnostics::{conserved_totals, Observable};
use twofluid::driver::even_probes;
use twofluid::mesh;
use twofluid::meso::{meso_step, RunOptions};
use twofluid::mixture::{macro_step, run_macro_with};
use twofluid::*;

fn controls(dt_max: f64, cfl: f64, t_end: f64) -> StepControls {
    StepControls::new(dt_max, cfl, t_end).unwrap()
}

fn smooth_meso(cells: usize) -> MesoState {
    let edges = mesh::uniform_edges(cells);
    let u = edges.iter().map(|x| 0.3 * (TAU * x).sin()).collect();
    let dx = 1.0 / cells as f64;
    let cells = (0..cells)
        .map(|k| {
            let x = (k as f64 + 0.5) * dx;
            let rho = 1.0 + 0.2 * (TAU * x).cos();
            MesoCell { mass: rho * dx, color: 1, rho, theta: 1.0 + 0.1 * (TAU * x).sin() }
        })
        .collect();
    MesoState::new(cells, u, edges, 0.0).unwrap()
}

/// State of the semi-discrete Lagrangian system: edge positions, edge
/// velocities and cell temperatures. Masses are fixed.
#[derive(Clone)]
struct Lines {
    x: Vec<f64>,
    u: Vec<f64>,
    theta: Vec<f64>,
}

impl Lines {
    fn axpy(&self, h: f64, k: &Lines) -> Lines {
        let f = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p + h * q).collect();
        Lines { x: f(&self.x, &k.x), u: f(&self.u, &k.u), theta: f(&self.theta, &k.theta) }
    }
}

/// Right-hand side of the method-of-lines system for a single-phase gas.
fn lines_rhs(s: &Lines, mass: &[f64], gas: &PhaseParams) -> Lines {
    let n = mass.len();
    let vol: Vec<f64> = (0..n)
        .map(|j| {
            let left = if j == 0 { s.x[n - 1] - 1.0 } else { s.x[j - 1] };
            s.x[j] - left
        })
        .collect();
    let strain: Vec<f64> = (0..n).map(|j| (s.u[j] - s.u[(j + n - 1) % n]) / vol[j]).collect();
    let sigma: Vec<f64> = (0..n)
        .map(|j| gas.mu() * strain[j] - (gas.gamma() - 1.0) * mass[j] / vol[j] * s.theta[j])
        .collect();
    let du = (0..n).map(|j| (sigma[(j + 1) % n] - sigma[j]) / (0.5 * (mass[j] + mass[(j + 1) % n]))).collect();
    let dtheta = (0..n).map(|j| sigma[j] * strain[j] * vol[j] / (gas.cv() * mass[j])).collect();
    Lines { x: s.u.clone(), u: du, theta: dtheta }
}

fn rk4_lines(mut s: Lines, mass: &[f64], gas: &PhaseParams, t_end: f64, steps: usize) -> Lines {
    let h = t_end / steps as f64;
    for _ in 0..steps {
        let k1 = lines_rhs(&s, mass, gas);
        let k2 = lines_rhs(&s.axpy(0.5 * h, &k1), mass, gas);
        let k3 = lines_rhs(&s.axpy(0.5 * h, &k2), mass, gas);
        let k4 = lines_rhs(&s.axpy(h, &k3), mass, gas);
        s = s.axpy(h / 6.0, &k1).axpy(h / 3.0, &k2).axpy(h / 3.0, &k3).axpy(h / 6.0, &k4);
    }
    s
}

#[test]
fn meso_matches_method_of_lines_at_first_order() {
    let state = smooth_meso(16);
    let pair = default_experiment().pair;
    let t_end = 0.1;
    let mass = state.masses();
    let oracle = rk4_lines(
        Lines {
            x: state.edge_position.clone(),
            u: state.edge_velocity.clone(),
            theta: state.cells.iter().map(|c| c.theta).collect(),
        },
        &mass,
        &pair.plus,
        t_end,
        20_000,
    );
    let dx = 1.0 / state.len() as f64;
    let errors: Vec<f64> = [1e-3, 5e-4, 2.5e-4]
        .iter()
        .map(|&dt| {
            let end = run_meso(state.clone(), &pair, &controls(dt, 1.0, t_end), &[t_end]).unwrap().snapshots.remove(0);
            let eu: f64 = end.edge_velocity.iter().zip(&oracle.u).map(|(a, b)| (a - b).abs() * dx).sum();
            let et: f64 = end.cells.iter().zip(&oracle.theta).map(|(c, b)| (c.theta - b).abs() * dx).sum();
            eu + et
        })
        .collect();
    for w in errors.windows(2) {
        assert!(w[0] / w[1] > 1.7, "{errors:?}");
    }
}

#[test]
fn meso_bounds_stay_positive_on_the_default_run() {
    let spec = default_experiment();
    let traj = run_meso(build_meso_ic(&spec).unwrap(), &spec.pair, &controls(1.0, 0.5, 0.1), &[0.1]).unwrap();
    let d = &traj.diagnostics;
    assert!(d.rho_min.iter().all(|&r| r > 0.0));
    assert!(d.theta_min.iter().all(|&t| t > 0.0));
    assert!(d.rho_max.iter().all(|r| r.is_finite()));
    assert_eq!(d.len(), d.a1.len());
    assert!(!d.has_mixture_series());
}

#[test]
fn meso_single_step_conserves_mass_and_energy_to_second_order() {
    let spec = default_experiment();
    let state = build_meso_ic(&spec).unwrap();
    let before = conserved_totals(&state, &spec.pair);
    let drift = |dt: f64| {
        let next = meso_step(&state, &spec.pair, dt).unwrap();
        let after = conserved_totals(&next, &spec.pair);
        assert_eq!(after.mass, before.mass);
        (after.energy - before.energy).abs()
    };
    let (a, b) = (drift(1e-4), drift(5e-5));
    assert!(a / b > 3.0, "{a:e} {b:e}");
}

#[test]
fn meso_energy_drift_is_first_order() {
    let spec = default_experiment();
    let state = build_meso_ic(&spec).unwrap();
    let drift = |dt: f64| {
        let traj = run_meso(state.clone(), &spec.pair, &controls(dt, 1.0, 0.05), &[0.05]).unwrap();
        let e = &traj.diagnostics.energy_total;
        (e[e.len() - 1] - e[0]).abs()
    };
    let (a, b) = (drift(2e-4), drift(1e-4));
    assert!(a / b >= 1.7, "{a:e} {b:e}");
}

fn l1_distance(a: &MesoState, b: &MesoState) -> f64 {
    let du: f64 = a.edge_velocity.iter().zip(&b.edge_velocity).map(|(x, y)| (x - y).abs()).sum();
    let dt: f64 = a.cells.iter().zip(&b.cells).map(|(x, y)| (x.theta - y.theta).abs() + (x.rho - y.rho).abs()).sum();
    (du + dt) / a.len() as f64
}

#[test]
fn two_half_steps_agree_with_one_step_to_second_order() {
    let spec = default_experiment();
    let state = smooth_meso(32);
    let gap = |dt: f64| {
        let one = meso_step(&state, &spec.pair, 2.0 * dt).unwrap();
        let half = meso_step(&state, &spec.pair, dt).unwrap();
        let two = meso_step(&half, &spec.pair, dt).unwrap();
        l1_distance(&one, &two)
    };
    let (a, b) = (gap(1e-4), gap(5e-5));
    assert!(a / b > 3.0, "{a:e} {b:e}");
}

#[test]
fn weighted_hoff_functional_self_converges() {
    let state = smooth_meso(32);
    let pair = default_experiment().pair;
    let finals: Vec<f64> = [4e-4, 2e-4, 1e-4, 5e-5]
        .iter()
        .map(|&dt| {
            let traj = run_meso(state.clone(), &pair, &controls(dt, 1.0, 0.1), &[0.1]).unwrap();
            *traj.diagnostics.kappa_weighted.last().unwrap()
        })
        .collect();
    let diffs: Vec<f64> = finals.windows(2).map(|w| (w[0] - w[1]).abs()).collect();
    for w in diffs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.6..2.5).contains(&ratio), "{finals:?}");
    }
}

#[test]
fn run_to_time_zero_returns_the_initial_state() {
    let spec = default_experiment();
    let state = build_meso_ic(&spec).unwrap();
    let traj = run_meso(state.clone(), &spec.pair, &controls(1.0, 0.5, 0.0), &[0.0]).unwrap();
    assert_eq!(traj.snapshots, vec![state]);
    let mac = build_macro_ic(&spec).unwrap();
    let traj = run_macro(mac.clone(), &spec.pair, &controls(1.0, 0.5, 0.0), &[0.0]).unwrap();
    assert_eq!(traj.snapshots.len(), 1);
    assert_eq!(traj.snapshots[0].cells, mac.cells);
}

/// Space-independent mixture ODE in `(α₊, θ₊, θ₋)`; the partial densities
/// `α±ρ±` are constant.
fn mixture_rhs(y: [f64; 3], partial: (f64, f64), pair: &PhasePair) -> [f64; 3] {
    let [a, tp, tm] = y;
    let b = 1.0 - a;
    let (mp, mm) = (pair.plus.mu(), pair.minus.mu());
    let sp = -(pair.plus.gamma() - 1.0) * partial.0 / a * tp;
    let sm = -(pair.minus.gamma() - 1.0) * partial.1 / b * tm;
    let rate = a * b * (sm - sp) / (b * mp + a * mm);
    let sigma = (a * sp / mp + b * sm / mm) / (a / mp + b / mm);
    [rate, rate * sigma / (pair.plus.cv() * partial.0), -rate * sigma / (pair.minus.cv() * partial.1)]
}

fn rk4_mixture(mut y: [f64; 3], partial: (f64, f64), pair: &PhasePair, t_end: f64, steps: usize) -> [f64; 3] {
    let h = t_end / steps as f64;
    let add = |y: [f64; 3], k: [f64; 3], s: f64| [y[0] + s * k[0], y[1] + s * k[1], y[2] + s * k[2]];
    for _ in 0..steps {
        let k1 = mixture_rhs(y, partial, pair);
        let k2 = mixture_rhs(add(y, k1, 0.5 * h), partial, pair);
        let k3 = mixture_rhs(add(y, k2, 0.5 * h), partial, pair);
        let k4 = mixture_rhs(add(y, k3, h), partial, pair);
        for i in 0..3 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    y
}

#[test]
fn homogeneous_mixture_follows_the_relaxation_ode() {
    let pair = default_experiment().pair;
    let (alpha, rp, tp, rm, tm) = (0.5, 2.0, 2.0, 1.0, 1.0);
    let n = 4;
    let dx = 1.0 / n as f64;
    let cell = MacroCell {
        alpha_plus: alpha,
        m_plus: alpha * rp * dx,
        m_minus: (1.0 - alpha) * rm * dx,
        theta_plus: tp,
        theta_minus: tm,
        rho_plus: rp,
        rho_minus: rm,
    };
    let state = MacroState::new(vec![cell; n], vec![0.0; n], mesh::uniform_edges(n), 0.0).unwrap();
    let t_end = 0.1;
    let oracle = rk4_mixture([alpha, tp, tm], (alpha * rp, (1.0 - alpha) * rm), &pair, t_end, 2_000);

    let steps = 200_000;
    let dt = t_end / steps as f64;
    let mut s = state;
    for _ in 0..steps {
        s = macro_step(&s, &pair, dt).unwrap();
    }
    assert!(s.edge_velocity.iter().all(|&u| u.abs() < 1e-12));
    for c in &s.cells {
        assert!((c.alpha_plus - oracle[0]).abs() < 1e-6, "{} vs {}", c.alpha_plus, oracle[0]);
        assert!((c.theta_plus - oracle[1]).abs() < 1e-6, "{} vs {}", c.theta_plus, oracle[1]);
        assert!((c.theta_minus - oracle[2]).abs() < 1e-6, "{} vs {}", c.theta_minus, oracle[2]);
        assert!((c.rho_plus * c.alpha_plus - alpha * rp).abs() < 1e-12);
    }
}

#[test]
fn default_macro_run_keeps_structural_invariants() {
    let spec = default_experiment();
    let state = build_macro_ic(&spec).unwrap();
    let m_plus: f64 = state.cells.iter().map(|c| c.m_plus).sum();
    let traj = run_macro_with(state, &spec.pair, &controls(1.0, 0.5, 0.1), &even_probes(0.1, 5), RunOptions { keep_steps: true })
        .unwrap();
    for s in &traj.steps {
        assert!(s.cells.iter().all(|c| (0.0..=1.0).contains(&c.alpha_plus)));
        assert_eq!(s.cells.iter().map(|c| c.m_plus).sum::<f64>(), m_plus);
        let length: f64 = s.volumes().iter().sum();
        assert!((length - 1.0).abs() < 1e-12);
    }
    // Pure cells stay pure.
    let last = traj.snapshots.last().unwrap();
    assert_eq!(last.cells[5].alpha_plus, 1.0);
    let d = &traj.diagnostics;
    assert!(d.has_mixture_series());
    assert!(d.entropy_residual_l1[0].is_nan());
    assert!(d.entropy_residual_l1[1..].iter().all(|r| r.is_finite()));
    let sample = last.sample(&spec.pair);
    assert!(sample.rho_min > 0.0 && sample.theta_min > 0.0);
}

#[test]
fn galilean_shift_of_the_smooth_single_phase_run() {
    let state = smooth_meso(20);
    let pair = default_experiment().pair;
    let ctl = controls(1.0, 0.5, 0.1);
    let probes = even_probes(0.1, 3);
    let a = run_meso(state.clone(), &pair, &ctl, &probes).unwrap();
    let b = run_meso(state.boosted(-0.7), &pair, &ctl, &probes).unwrap();
    for (s, t) in a.snapshots.iter().zip(&b.snapshots) {
        for (x, y) in s.edge_velocity.iter().zip(&t.edge_velocity) {
            assert!((x - 0.7 - y).abs() < 1e-10);
        }
        for (c, d) in s.cells.iter().zip(&t.cells) {
            assert!((c.rho - d.rho).abs() < 1e-10 && (c.theta - d.theta).abs() < 1e-10);
        }
    }
}
