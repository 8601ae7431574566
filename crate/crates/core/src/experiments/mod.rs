//! Experiment configuration, the per-kind runners and SVG plots.

pub mod config;
pub mod plot;
pub mod run;

pub use config::{ExperimentConfig, ExperimentKind, Grids, Options, SCHEMA_VERSION};
pub use plot::{emit_plot, render_plot, PlotKind};
pub use run::{phase_diagram, run_experiment, PhaseDiagram, PhaseRow, RunSummary};
