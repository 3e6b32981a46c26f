//! Problem files, instance generators, iteration-history tables, solver
//! matchups and offline certificate replay. The `balm` binary is a thin
//! command-line layer over this module.

mod certify;
mod format;
mod generate;
mod history;
mod matchup;

pub use certify::{certify, CertifyOptions, CertifyReport, Check, ContractionSummary, GapSummary};
pub use format::{write_atomic, BlockSpec, ProblemFile, SCHEMA_VERSION};
pub use generate::{generate_instance, Dims, InstanceKind, LASSO_WEIGHT};
pub use history::{history_to_string, parse_history, write_history, RecordedHistory};
pub use matchup::{
    method_from_name, run_matchup, write_report, MatchupEntry, MethodParams, Report, ReportRow, DEFAULT_DELTA,
    DEFAULT_R, DEFAULT_RELAXATION, METHOD_NAMES,
};
