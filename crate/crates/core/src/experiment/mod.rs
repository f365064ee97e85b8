//! Declarative experiments: configuration, sweeps and output files.

mod config;
mod output;
mod run;

pub use config::{
    parse_fraction, AssemblySection, DomainKindName, DomainSection, ExperimentConfig,
    ExtensionSection, GridSection, OutputFormat, OutputSection, ProblemSection, SolverSection,
    SweepSection, TimeSection, OUTPUT_DIR_ENV, PRESETS,
};
pub use output::{read_sweep_csv, write_sweep_csv, FieldDump, SweepWriter, SWEEP_HEADER};
pub use run::{dump_field, field_dump, run_single, run_sweep, FieldKind, RunOutcome};
