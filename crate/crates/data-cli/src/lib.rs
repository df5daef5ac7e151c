//! Batch front end for the flaring analytics toolkit: CSV ingestion of
//! monthly report and detection data, derived-series assembly, rank
//! correlation analytics, and subcommands driving the model, geospatial,
//! and hot-source crates. All randomness flows from `--seed`.

pub mod cli;
pub mod config;
pub mod ingest;
pub mod month;
pub mod stats;
pub mod trace_io;

pub use cli::run;
pub use ingest::{
    parse_ndic_csv, parse_viirs_csv, ndic_csv, viirs_csv, FlareDetection, WellRecord,
};
pub use month::{check_contiguous, MonthStamp};
pub use stats::{
    correlation_matrix, first_difference, kde, kde_with_bandwidth, log_magnitude, spearman,
};

/// Exit code 1: bad inputs. Exit code 2: the numerics failed or did not
/// converge on valid inputs.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn validation(msg: impl Into<String>) -> CliError {
        CliError::Validation(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> CliError {
        CliError::Numerical(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl From<flaretk_inference::Error> for CliError {
    fn from(e: flaretk_inference::Error) -> CliError {
        match e {
            flaretk_inference::Error::Validation(m) => CliError::Validation(m),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<flaretk_geo::Error> for CliError {
    fn from(e: flaretk_geo::Error) -> CliError {
        CliError::Validation(e.to_string())
    }
}

impl From<flaretk_nightfire::Error> for CliError {
    fn from(e: flaretk_nightfire::Error) -> CliError {
        match e {
            flaretk_nightfire::Error::Fit(m) => CliError::Numerical(m),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError::Validation(format!("io: {e}"))
    }
}
