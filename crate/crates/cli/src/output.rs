//! CSV writers. Floats carry 17 significant digits so files round-trip.

use std::fs::File;
use std::path::{Path, PathBuf};

use twofluid::harness::{ComparisonReport, ComparisonRow};
use twofluid::mesh;
use twofluid::diagnostics::SweepRow;
use twofluid::{DiagnosticsRecord, MacroState, MesoState, PhasePair};

use crate::CliError;

pub fn float(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x:.16e}")
    }
}

fn optional(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

fn writer(path: &Path) -> Result<csv::Writer<File>, CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn finish(mut w: csv::Writer<File>, path: &Path) -> Result<(), CliError> {
    w.flush().map_err(|e| CliError::io(path, e))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError {
    let path = path.to_path_buf();
    move |e| CliError::io(&path, std::io::Error::other(e))
}

pub fn snapshot_path(dir: &Path, time: f64) -> PathBuf {
    dir.join(format!("snapshot_{time:.6}.csv"))
}

/// `(x_left, x_right, u_left, u_right)` for every cell.
fn cell_geometry(edges: &[f64], u: &[f64]) -> Vec<(f64, f64, f64, f64)> {
    let n = u.len();
    mesh::cell_bounds(edges)
        .into_iter()
        .enumerate()
        .map(|(j, (l, r))| (l, r, u[(j + n - 1) % n], u[j]))
        .collect()
}

pub fn write_meso_snapshot(dir: &Path, state: &MesoState, pair: &PhasePair) -> Result<PathBuf, CliError> {
    let path = snapshot_path(dir, state.time);
    let mut w = writer(&path)?;
    let err = csv_err(&path);
    w.write_record(["x_left", "x_right", "color", "rho", "theta", "u_left", "u_right", "sigma"]).map_err(&err)?;
    let sigma = state.stresses(pair);
    for ((c, (l, r, ul, ur)), s) in state.cells.iter().zip(cell_geometry(&state.edge_position, &state.edge_velocity)).zip(sigma) {
        w.write_record([float(l), float(r), c.color.to_string(), float(c.rho), float(c.theta), float(ul), float(ur), float(s)])
            .map_err(&err)?;
    }
    finish(w, &path)?;
    Ok(path)
}

pub fn write_macro_snapshot(dir: &Path, state: &MacroState, pair: &PhasePair) -> Result<PathBuf, CliError> {
    let path = snapshot_path(dir, state.time);
    let mut w = writer(&path)?;
    let err = csv_err(&path);
    w.write_record([
        "x_left",
        "x_right",
        "alpha_plus",
        "rho_plus",
        "rho_minus",
        "theta_plus",
        "theta_minus",
        "u_left",
        "u_right",
        "sigma",
    ])
    .map_err(&err)?;
    let sigma = state.stresses(pair);
    for ((c, (l, r, ul, ur)), s) in state.cells.iter().zip(cell_geometry(&state.edge_position, &state.edge_velocity)).zip(sigma) {
        w.write_record([
            float(l),
            float(r),
            float(c.alpha_plus),
            float(c.rho_plus),
            float(c.rho_minus),
            float(c.theta_plus),
            float(c.theta_minus),
            float(ul),
            float(ur),
            float(s),
        ])
        .map_err(&err)?;
    }
    finish(w, &path)?;
    Ok(path)
}

/// One row per recorded sample. Mixture columns are left empty where undefined.
pub fn write_diagnostics(dir: &Path, d: &DiagnosticsRecord) -> Result<PathBuf, CliError> {
    let path = dir.join("diagnostics.csv");
    let mut w = writer(&path)?;
    let err = csv_err(&path);
    w.write_record([
        "time",
        "mass_total",
        "mass_plus",
        "momentum_total",
        "energy_total",
        "rho_min",
        "rho_max",
        "theta_min",
        "theta_max",
        "a1",
        "kappa_weighted",
        "entropy_residual_l1",
        "pressure_gap_l1",
    ])
    .map_err(&err)?;
    let mixture = d.has_mixture_series();
    for k in 0..d.len() {
        let (res, gap) = if mixture {
            (float(d.entropy_residual_l1[k]), float(d.pressure_gap_l1[k]))
        } else {
            (String::new(), String::new())
        };
        w.write_record([
            float(d.times[k]),
            float(d.mass_total[k]),
            float(d.mass_plus[k]),
            float(d.momentum_total[k]),
            float(d.energy_total[k]),
            float(d.rho_min[k]),
            float(d.rho_max[k]),
            float(d.theta_min[k]),
            float(d.theta_max[k]),
            float(d.a1[k]),
            float(d.kappa_weighted[k]),
            res,
            gap,
        ])
        .map_err(&err)?;
    }
    finish(w, &path)?;
    Ok(path)
}

pub fn write_comparison(dir: &Path, rows: &[(f64, f64, f64)]) -> Result<PathBuf, CliError> {
    let path = dir.join("compare.csv");
    let mut w = writer(&path)?;
    let err = csv_err(&path);
    w.write_record(["time", "err_u_linf", "err_alpha_l1"]).map_err(&err)?;
    for &(t, u, a) in rows {
        w.write_record([float(t), float(u), float(a)]).map_err(&err)?;
    }
    finish(w, &path)?;
    Ok(path)
}

const REPORT_HEADER: [&str; 5] = ["cells", "err_u_linf", "err_alpha_l1", "order_u", "order_alpha"];

/// Rows already present in a partial `report.csv`; a missing file means none.
pub fn read_report(path: &Path) -> Result<Vec<ComparisonRow>, CliError> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let err = csv_err(path);
    let mut reader = csv::Reader::from_path(path).map_err(&err)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(&err)?;
        let field = |i: usize| record.get(i).unwrap_or("");
        let bad = |what: &str| CliError::io(path, std::io::Error::other(format!("unreadable {what} in {record:?}")));
        rows.push(ComparisonRow {
            cells: field(0).parse().map_err(|_| bad("cells"))?,
            err_u_linf: field(1).parse().map_err(|_| bad("err_u_linf"))?,
            err_alpha_l1: field(2).parse().map_err(|_| bad("err_alpha_l1"))?,
        });
    }
    Ok(rows)
}

/// Appends finished rows to `report.csv` as they arrive.
pub struct ReportAppender {
    path: PathBuf,
    writer: csv::Writer<File>,
}

impl ReportAppender {
    pub fn open(path: &Path, existing: &[ComparisonRow]) -> Result<Self, CliError> {
        let mut writer = writer(path)?;
        let err = csv_err(path);
        writer.write_record(REPORT_HEADER).map_err(&err)?;
        for r in existing {
            writer.write_record([r.cells.to_string(), float(r.err_u_linf), float(r.err_alpha_l1), String::new(), String::new()])
                .map_err(&err)?;
        }
        writer.flush().map_err(|e| CliError::io(path, e))?;
        Ok(Self { path: path.to_path_buf(), writer })
    }

    pub fn push(&mut self, r: &ComparisonRow) -> Result<(), CliError> {
        self.writer
            .write_record([r.cells.to_string(), float(r.err_u_linf), float(r.err_alpha_l1), String::new(), String::new()])
            .map_err(csv_err(&self.path))?;
        self.writer.flush().map_err(|e| CliError::io(&self.path, e))
    }
}

/// Final report, rows in increasing `J` with the successive orders filled in.
pub fn write_report(path: &Path, report: &ComparisonReport) -> Result<(), CliError> {
    let mut w = writer(path)?;
    let err = csv_err(path);
    w.write_record(REPORT_HEADER).map_err(&err)?;
    for (k, r) in report.rows.iter().enumerate() {
        let successive = |o: &[Option<f64>]| if k == 0 { String::new() } else { optional(o.get(k - 1).copied().flatten()) };
        w.write_record([
            r.cells.to_string(),
            float(r.err_u_linf),
            float(r.err_alpha_l1),
            successive(&report.u_order.successive),
            successive(&report.alpha_order.successive),
        ])
        .map_err(&err)?;
    }
    finish(w, path)
}

pub fn write_sweep(dir: &Path, rows: &[SweepRow]) -> Result<PathBuf, CliError> {
    let path = dir.join("sweep.csv");
    let mut w = writer(&path)?;
    let err = csv_err(&path);
    w.write_record(["eta", "pressure_gap", "entropy_drift_plus", "entropy_drift_minus"]).map_err(&err)?;
    for r in rows {
        w.write_record([float(r.eta), float(r.pressure_gap), float(r.entropy_drift_plus), float(r.entropy_drift_minus)])
            .map_err(&err)?;
    }
    finish(w, &path)?;
    Ok(path)
}
