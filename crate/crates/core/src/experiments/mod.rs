//! Configurable experiments: TOML configuration, scope CSV ingest, and the
//! simulate / sweep / calibrate / ingest drivers behind the command line.

pub mod commands;
pub mod config;
pub mod scope;

pub use commands::{
    awva_advantage_bands, calibrate, calibrate_recording, cmd_calibrate_phase, cmd_ingest,
    cmd_simulate, cmd_sweep_frequency, cmd_sweep_noise, ingest, run_frequency_sweep,
    run_noise_sweep, simulate, AdvantageBand, CommandReport, FrequencySweepRow, NoiseSweepRow,
    Simulation,
};
pub use config::{ConfigFile, ExperimentConfig, SweepConfig};
pub use scope::{ingest_scope_csv, read_scope_csv, ColumnSelection};
