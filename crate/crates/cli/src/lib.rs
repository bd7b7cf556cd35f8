//! Command-line front end for `tcmesh-core`: synthetic data generation,
//! the individual analyses, and the all-in-one JSON report.

pub mod error;
pub mod report;
pub mod svg;

pub use error::CliError;
pub use report::{analyze, load, run_report, AnalysisOptions, ReportDocument};
pub use svg::{emit_svg_scatter, render_svg_scatter, PlotError, PlotSpec};
