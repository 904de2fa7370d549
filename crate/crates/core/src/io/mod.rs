//! File formats and the operations the command-line tool is built from.

pub mod config;
pub mod recorded;
pub mod results;

pub use config::parse_config;
pub use recorded::{analyze_recorded, read_recorded, write_recorded, Analysis, RecordedDataset};
pub use results::{read_report, write_results, OutputFiles};

/// Formats a double with 17 significant digits, enough to round-trip every
/// finite value exactly. Always uses `.` and no grouping.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}
