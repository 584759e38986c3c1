//! Experiment configs, the runner behind the `stable-lab` binary, and plot output.

pub mod config;
pub mod plot;
pub mod run;

pub use config::{apply_override, ExperimentConfig, ExperimentKind, SolutionSource};
pub use plot::{emit_plot_data, plot_data, plot_from_file};
pub use run::{resolve_output, run, run_to_dir, Check, ErrorInfo, ExperimentReport, Outcome, ESTIMATE_CHECKS, VERSION};
