//! Coarse-graining of pure-cell states, error norms between the two models,
//! mesh-convergence studies and fitted rates.

use crate::driver::StepControls;
use crate::error::{Error, Result};
use crate::initial::{build_macro_ic, build_meso_ic, ExperimentSpec};
use crate::mesh;
use crate::meso::{run_meso, MesoState};
use crate::mixture::{run_macro, MacroState};

/// Errors (and fitted orders) below this are treated as round-off.
pub const ORDER_THRESHOLD: f64 = 1e-9;

/// Local mean of the color over one pair of consecutive cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoarseSample {
    /// Volume centroid of the pair (may exceed 1 for the wrapped pair).
    pub position: f64,
    pub alpha: f64,
    pub volume: f64,
}

/// Pair cells `(2k, 2k+1)`; with odd `J` the last cell is paired with cell 0.
pub fn coarse_alpha(meso: &MesoState) -> Vec<CoarseSample> {
    let n = meso.len();
    let bounds = mesh::cell_bounds(&meso.edge_position);
    (0..n.div_ceil(2))
        .map(|k| {
            let (a, b) = (2 * k, 2 * k + 1);
            let (bl, shift) = if b < n { (b, 0.0) } else { (0, mesh::TORUS_LENGTH) };
            let (la, ra) = bounds[a];
            let (lb, rb) = (bounds[bl].0 + shift, bounds[bl].1 + shift);
            let (va, vb) = (ra - la, rb - lb);
            let (ca, cb) = (f64::from(meso.cells[a].color), f64::from(meso.cells[bl].color));
            let volume = va + vb;
            CoarseSample {
                position: (0.5 * (la + ra) * va + 0.5 * (lb + rb) * vb) / volume,
                alpha: (ca * va + cb * vb) / volume,
                volume,
            }
        })
        .collect()
}

/// `(‖u_meso − u_macro‖_∞, ‖α̂ − α_macro‖_{L¹})` at a common time.
pub fn compare_states(meso: &MesoState, mac: &MacroState) -> Result<(f64, f64)> {
    let left: f64 = meso.volumes().iter().sum();
    let right: f64 = mac.volumes().iter().sum();
    if (left - right).abs() > 1e-12 {
        return Err(Error::MeshMismatch { left, right });
    }
    let err_u = meso
        .edge_position
        .iter()
        .zip(&meso.edge_velocity)
        .map(|(&x, &u)| (u - mesh::interpolate_edges(&mac.edge_position, &mac.edge_velocity, x)).abs())
        .fold(0.0, f64::max);
    let err_alpha = coarse_alpha(meso)
        .iter()
        .map(|s| {
            let cell = mesh::locate_cell(&mac.edge_position, s.position);
            (s.alpha - mac.cells[cell].alpha_plus).abs() * s.volume
        })
        .sum();
    Ok((err_u, err_alpha))
}

/// Least-squares line `y ≈ slope·x + intercept` with its coefficient of
/// determination. Needs two distinct abscissae.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Some(LineFit { slope, intercept: my - slope * mx, r_squared })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRow {
    pub cells: usize,
    pub err_u_linf: f64,
    pub err_alpha_l1: f64,
}

/// Observed orders of one error column: `log₂` ratios of consecutive rows and
/// the least-squares slope of `ln err` against `ln(1/J)`. `None` marks rows
/// below [`ORDER_THRESHOLD`].
#[derive(Debug, Clone, PartialEq)]
pub struct FittedOrder {
    pub successive: Vec<Option<f64>>,
    pub slope: Option<f64>,
}

impl FittedOrder {
    pub fn from_column(cells: &[usize], errors: &[f64]) -> Self {
        let usable = |e: f64| e.is_finite() && e > ORDER_THRESHOLD;
        let successive = cells
            .windows(2)
            .zip(errors.windows(2))
            .map(|(j, e)| {
                (usable(e[0]) && usable(e[1])).then(|| (e[0] / e[1]).ln() / (j[1] as f64 / j[0] as f64).ln())
            })
            .collect();
        let slope = if errors.iter().all(|&e| usable(e)) {
            let xs: Vec<f64> = cells.iter().map(|&j| -(j as f64).ln()).collect();
            let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
            fit_line(&xs, &ys).map(|f| f.slope)
        } else {
            None
        };
        Self { successive, slope }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
    pub u_order: FittedOrder,
    pub alpha_order: FittedOrder,
}

impl ComparisonReport {
    pub fn from_rows(mut rows: Vec<ComparisonRow>) -> Self {
        rows.sort_by_key(|r| r.cells);
        let cells: Vec<usize> = rows.iter().map(|r| r.cells).collect();
        let eu: Vec<f64> = rows.iter().map(|r| r.err_u_linf).collect();
        let ea: Vec<f64> = rows.iter().map(|r| r.err_alpha_l1).collect();
        Self { u_order: FittedOrder::from_column(&cells, &eu), alpha_order: FittedOrder::from_column(&cells, &ea), rows }
    }
}

/// Run both models at `cells` to `controls.t_end()` and compare the end states.
pub fn convergence_row(spec: &ExperimentSpec, controls: &StepControls, cells: usize) -> Result<ComparisonRow> {
    let spec = spec.with_cells(cells);
    let probes = [controls.t_end()];
    let (meso, mac) = rayon::join(
        || build_meso_ic(&spec).and_then(|s| run_meso(s, &spec.pair, controls, &probes)),
        || build_macro_ic(&spec).and_then(|s| run_macro(s, &spec.pair, controls, &probes)),
    );
    let (meso, mac) = (meso?, mac?);
    let (err_u_linf, err_alpha_l1) = compare_states(&meso.snapshots[0], &mac.snapshots[0])?;
    Ok(ComparisonRow { cells, err_u_linf, err_alpha_l1 })
}

/// Rows for every `J` in `cells`, in order. `done` rows are reused instead of
/// recomputed, and `on_row` sees each new row as soon as it exists.
pub fn convergence_study(
    spec: &ExperimentSpec,
    controls: &StepControls,
    cells: &[usize],
    done: &[ComparisonRow],
    mut on_row: impl FnMut(&ComparisonRow) -> Result<()>,
) -> Result<ComparisonReport> {
    if cells.len() < 2 {
        return Err(Error::invalid("j_list", "need at least two cell counts"));
    }
    let mut sorted = cells.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) || sorted[0] < 2 {
        return Err(Error::invalid("j_list", "entries must be distinct and >= 2"));
    }
    let mut rows = Vec::with_capacity(cells.len());
    for &j in &sorted {
        if let Some(row) = done.iter().find(|r| r.cells == j) {
            rows.push(*row);
            continue;
        }
        let row = convergence_row(spec, controls, j)?;
        on_row(&row)?;
        rows.push(row);
    }
    Ok(ComparisonReport::from_rows(rows))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeDecay {
    pub times: Vec<f64>,
    /// Largest density jump between neighboring cells, per snapshot.
    pub amplitudes: Vec<f64>,
    /// Fitted `ln a ≈ −rate·t + c`; `None` when some amplitude is round-off.
    pub rate: Option<f64>,
    pub r_squared: Option<f64>,
}

pub fn max_jump(state: &MesoState) -> f64 {
    let n = state.len();
    (0..n)
        .map(|j| (state.cells[(j + 1) % n].rho - state.cells[j].rho).abs())
        .fold(0.0, f64::max)
}

pub fn amplitude_decay_probe(snapshots: &[MesoState]) -> Result<AmplitudeDecay> {
    if snapshots.len() < 3 {
        return Err(Error::InsufficientSamples { needed: 3, got: snapshots.len() });
    }
    let times: Vec<f64> = snapshots.iter().map(|s| s.time).collect();
    let amplitudes: Vec<f64> = snapshots.iter().map(max_jump).collect();
    let fit = if amplitudes.iter().all(|&a| a > ORDER_THRESHOLD) {
        let logs: Vec<f64> = amplitudes.iter().map(|a| a.ln()).collect();
        fit_line(&times, &logs)
    } else {
        None
    };
    Ok(AmplitudeDecay { times, amplitudes, rate: fit.map(|f| -f.slope), r_squared: fit.map(|f| f.r_squared) })
}
