//! Configuration-driven sweeps, convergence audits and CSV output.

mod audit;
mod config;
mod engine;
mod presets;
mod record;

pub use audit::{
    commutation_check, convergence_audit, initial_n_max, resolve_numerics, run_sweep, schedule_check, subsample,
    AuditReport, CommutationReport, ScheduleCheck, N_MAX_CAP, N_MAX_INCREMENT,
};
pub use config::{
    parse_kick, preset_bloch, BackendChoice, ControlSection, ExperimentConfig, InitialStateSection, KickKind, Knob,
    ModelSection, NumericsSection, SweepSection, TimeUnit,
};
pub use engine::{aligned_units, backend_costs, sweep_at, sweep_points, AlignedGrid, Backend, SweepSetup};
pub use presets::{figure_preset, PRESET_NAMES};
pub use record::{emit_csv, read_csv, to_csv_string, ExperimentRecord, CSV_COLUMNS};
