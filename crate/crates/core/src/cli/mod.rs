//! Experiment runner: TOML configuration, artifacts and manifests.

mod config;
mod run;

pub use config::{
    DataSection, DimSection, Experiment, IntegratorSection, IterateSection, RunConfig, ShootSection,
    StabilitySection, SweepAxis, SweepSection,
};
pub use run::{execute, output_dir, run_text, write_tables, ArtifactEntry, Manifest, RunOutcome, Summary, OUT_ENV};
