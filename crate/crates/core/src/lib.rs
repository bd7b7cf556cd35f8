//! Trade-credit network analysis: build the customer → supplier network
//! from invoices and balance sheets, select suppliers whose invoices cover
//! their sales, and compare each supplier's sales growth with the growth
//! predicted from its customers' purchases.
//!
//! [`synth`] produces datasets with a known contagion coefficient so the
//! whole pipeline can be checked against ground truth.

pub mod growth;
pub mod ingest;
pub mod network;
pub mod stats;
pub mod synth;

pub use growth::{
    actual_log_growth, build_scatter, cagr_points, predicted_log_growth, scatter_stats, CagrPoint,
    GrowthError, GrowthPoint, MissingPolicy, Period, Quadrant, Scatter, ScatterStats,
};
pub use ingest::{
    assemble_dataset, parse_balance, parse_invoices, BalanceRecord, CoveragePolicy, Dataset,
    FirmId, IngestError, InvoiceRecord, Rating, SectorCode, SectorLetter, Year,
};
pub use network::{
    build_network, degree_sequences, filter_by_matching, key_customer, matching_ratio,
    network_summary, weak_components, KeyCustomerBasis, MatchingFilter, NetworkError,
    NetworkSummary, TradeNetwork,
};
pub use stats::{
    ccdf_points, fit_ccdf_slope, grouped_correlations, ols, pearson, rating_class, CcdfFit,
    CorrelationTable, Grouping, RatingClass, RegressionResult, SizeClass, StatsError,
};
pub use synth::{generate, scenario_boom_bust, BetaSpec, PlantedTruth, SynthConfig, SynthError};
