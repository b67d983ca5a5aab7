//! One-dimensional periodic viscous two-phase flow: a pure-cell mesoscopic
//! solver, an averaged two-pressure mixture solver, and the diagnostics used
//! to compare them.

pub mod cyclic;
pub mod diagnostics;
pub mod driver;
pub mod error;
pub mod harness;
pub mod initial;
pub mod mesh;
pub mod meso;
pub mod mixture;
pub mod model;

pub use cyclic::CyclicTridiagonal;
pub use diagnostics::{DiagnosticsRecord, Totals};
pub use driver::StepControls;
pub use error::{Error, Result};
pub use initial::{build_macro_ic, build_meso_ic, default_experiment, ExperimentSpec, PiecewiseProfile};
pub use meso::{run_meso, MesoCell, MesoState, Trajectory};
pub use mixture::{run_macro, MacroCell, MacroState};
pub use model::{Phase, PhaseParams, PhasePair, ThermoPoint};
