//! Scenario definitions, configuration files, diagnostics and study drivers.

pub mod config;
pub mod diagnostics;
pub mod io;
mod run;
mod scenario;
pub mod study;

pub use config::RunConfig;
pub use diagnostics::{conservation_report, ConservationReport, DiagnosticsRow, Drift, RunDiagnostics};
pub use run::{
    exit_code, run_scenario, RunReport, DENSE_DUMP_MAX_ENTRIES, EXIT_CONFIG, EXIT_IO, EXIT_NOT_CONVERGED, EXIT_OK,
    EXIT_POSITIVITY, TV_WARN_GROWTH,
};
pub use scenario::Scenario;
pub use study::{convergence_study, convergence_study_with, total_variation, tv_trace, ConvergenceTable, StudySolver};
