//! Configuration files, run manifests, CSV tables and the subcommands that
//! tie them to the experiments.

pub mod commands;
pub mod config;
pub mod manifest;
pub mod tables;
pub mod vectors;

pub use commands::{exit_code, run_subcommand, ErrorRecord, RunOutcome, EXIT_BUDGET, EXIT_CONFIG, EXIT_FAILURE, EXIT_OK};
pub use config::{parse_config, parse_config_str, Overrides, RunConfig, RunPlan, Subcommand};
pub use manifest::{RunManifest, MANIFEST_FILE};
pub use tables::{validate_dir, validate_file, SCHEMAS};
pub use vectors::{read_vectors, write_vectors, VectorFile};
