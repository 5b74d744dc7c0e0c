//! Reports for the worked examples, count-data ingestion and the HTTP API.
//!
//! The `posteriorlab` binary is a thin wrapper: each subcommand calls one
//! function in [`commands`] and prints the serialized report.

pub mod api;
pub mod commands;
pub mod data;
pub mod error;

pub use error::CliError;

/// Version tag carried by every JSON report.
pub const SCHEMA_VERSION: &str = "1.0";

/// Pretty-printed JSON with a trailing newline.
pub fn to_json<T: serde::Serialize>(report: &T) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
    s.push('\n');
    s
}
