//! End-to-end analysis: load the two input tables, select suppliers by
//! matching ratio, run every analysis on the selection and collect the
//! results into one JSON document plus CSV and SVG side outputs.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use sha2::{Digest, Sha256};

use tcmesh_core::growth::{write_cagr_csv, write_growth_csv, CagrSet};
use tcmesh_core::ingest::{write_rejection_log, Rejection};
use tcmesh_core::network::{degree_sequences, write_degree_csv, DegreeSequences, KeyCustomerFlag};
use tcmesh_core::stats::{
    ccdf_points, size_degree_regression, write_ccdf_csv, CcdfPoint, SizeDegreeFit,
    DEFAULT_DEGREE_CUTOFF,
};
use tcmesh_core::{
    assemble_dataset, build_network, build_scatter, cagr_points, filter_by_matching,
    fit_ccdf_slope, grouped_correlations, key_customer, network_summary, ols, parse_balance,
    parse_invoices, pearson, scatter_stats, weak_components, CcdfFit, CorrelationTable,
    CoveragePolicy, Grouping, KeyCustomerBasis, MatchingFilter, MissingPolicy, NetworkSummary,
    Period, RegressionResult, Scatter, ScatterStats, TradeNetwork,
};

use crate::error::CliError;
use crate::svg::{render_svg_scatter, PlotSpec};

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const REPORT_FILE: &str = "report.json";

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisOptions {
    pub matching_lo: f64,
    pub matching_hi: f64,
    pub groupings: Vec<Grouping>,
    pub missing_policy: MissingPolicy,
    pub key_basis: KeyCustomerBasis,
    pub degree_cutoff: Option<usize>,
    /// Any rejected input row aborts the run.
    pub strict: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            matching_lo: 0.8,
            matching_hi: 1.2,
            groupings: vec![Grouping::Rating, Grouping::RatingSize, Grouping::Sector],
            missing_policy: MissingPolicy::DropRenormalize,
            key_basis: KeyCustomerBasis::AnnualSales,
            degree_cutoff: Some(DEFAULT_DEGREE_CUTOFF),
            strict: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InputDigest {
    pub sha256: String,
    pub rows: usize,
    pub accepted: usize,
    pub rejected: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InputSummary {
    pub balance: InputDigest,
    pub invoices: InputDigest,
    pub balance_duplicates: usize,
    pub invoices_flagged: usize,
    pub invoices_dropped: usize,
}

/// A parsed and assembled input pair.
pub struct Loaded {
    pub inputs: InputSummary,
    pub balance_rejections: Vec<Rejection>,
    pub invoice_rejections: Vec<Rejection>,
    pub network: TradeNetwork,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads and parses both tables. Rows that fail validation are collected
/// rather than fatal; see [`strict_check`].
pub fn load(balance_path: &Path, invoices_path: &Path) -> Result<Loaded, CliError> {
    let balance_bytes = read(balance_path)?;
    let invoice_bytes = read(invoices_path)?;
    let balances = parse_balance(balance_bytes.as_slice(), false)
        .map_err(|e| CliError::Input(format!("{}: {e}", balance_path.display())))?;
    let invoices = parse_invoices(invoice_bytes.as_slice(), false)
        .map_err(|e| CliError::Input(format!("{}: {e}", invoices_path.display())))?;
    let balance_rejections = balances.rejections.clone();
    let invoice_rejections = invoices.rejections.clone();

    let dataset = assemble_dataset(balances, invoices, &CoveragePolicy::keep());
    let report = dataset.report();
    let inputs = InputSummary {
        balance: InputDigest {
            sha256: sha256_hex(&balance_bytes),
            rows: report.balance_rows,
            accepted: report.balance_accepted,
            rejected: report.balance_rejected,
        },
        invoices: InputDigest {
            sha256: sha256_hex(&invoice_bytes),
            rows: report.invoice_rows,
            accepted: report.invoice_accepted,
            rejected: report.invoice_rejected,
        },
        balance_duplicates: report.balance_duplicates,
        invoices_flagged: report.flags.len(),
        invoices_dropped: report.invoices_dropped,
    };
    Ok(Loaded {
        inputs,
        balance_rejections,
        invoice_rejections,
        network: build_network(Arc::new(dataset)),
    })
}

/// Fails on the first rejected row, balance table first.
pub fn strict_check(loaded: &Loaded) -> Result<(), CliError> {
    let first = loaded
        .balance_rejections
        .first()
        .map(|r| ("balance", r))
        .or_else(|| loaded.invoice_rejections.first().map(|r| ("invoices", r)));
    match first {
        Some((table, r)) => Err(CliError::Input(format!(
            "strict mode: {table} line {}: {}",
            r.line, r.reason
        ))),
        None => Ok(()),
    }
}

pub const BALANCE_REJECTIONS_FILE: &str = "balance_rejections.tsv";
pub const INVOICE_REJECTIONS_FILE: &str = "invoice_rejections.tsv";

pub fn write_rejection_logs(
    dir: &Path,
    balance: &[Rejection],
    invoices: &[Rejection],
) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::write(dir, e))?;
    write_file(&dir.join(BALANCE_REJECTIONS_FILE), |w| {
        write_rejection_log(w, balance)
    })?;
    write_file(&dir.join(INVOICE_REJECTIONS_FILE), |w| {
        write_rejection_log(w, invoices)
    })
}

pub(crate) fn write_file(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::write(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::write(path, e))
}

/// Applies the matching filter. An empty selection is an error because
/// nothing downstream has data to work on.
pub fn select(loaded: &Loaded, lo: f64, hi: f64) -> Result<MatchingFilter, CliError> {
    let filter =
        filter_by_matching(&loaded.network, lo, hi).map_err(|e| CliError::Input(e.to_string()))?;
    if filter.retained.is_empty() {
        return Err(CliError::EmptyResult(format!(
            "no suppliers pass filter: 0 of {} suppliers have a matching ratio in ({lo}, {hi})",
            loaded.network.n_suppliers()
        )));
    }
    Ok(filter)
}

/// Either a computed value or the reason it could not be computed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Fitted<T> {
    pub value: Option<T>,
    pub error: Option<String>,
}

impl<T, E: ToString> From<Result<T, E>> for Fitted<T> {
    fn from(r: Result<T, E>) -> Self {
        match r {
            Ok(v) => Fitted {
                value: Some(v),
                error: None,
            },
            Err(e) => Fitted {
                value: None,
                error: Some(e.to_string()),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptionsEcho {
    pub matching_lo: f64,
    /// `null` means unbounded.
    pub matching_hi: Option<f64>,
    pub groupings: Vec<Grouping>,
    pub missing_policy: MissingPolicy,
    pub key_customer_basis: KeyCustomerBasis,
    pub degree_cutoff: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatchingAggregate {
    pub candidates: usize,
    pub with_balance: usize,
    pub missing_balance: usize,
    pub retained: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComponentSummary {
    pub count: usize,
    pub largest: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KeyCustomerCounts {
    pub with_key_customer: usize,
    pub without_key_customer: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeriodReport {
    pub period: Period,
    pub n_points: usize,
    pub n_excluded: usize,
    pub stats: Fitted<ScatterStats>,
    /// Actual on predicted log growth.
    pub regression: Fitted<RegressionResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CagrSummary {
    pub n_points: usize,
    pub n_excluded: usize,
    pub regression: Fitted<RegressionResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub tool: ToolInfo,
    pub inputs: InputSummary,
    pub options: OptionsEcho,
    pub network: NetworkSummary,
    pub components: ComponentSummary,
    pub matching: MatchingAggregate,
    pub selected_network: NetworkSummary,
    pub selected_components: ComponentSummary,
    pub in_degree_ccdf_fit: Fitted<CcdfFit>,
    pub size_degree: Fitted<SizeDegreeFit>,
    pub key_customers: KeyCustomerCounts,
    pub growth: Vec<PeriodReport>,
    pub cagr: CagrSummary,
    pub correlations: Vec<CorrelationTable>,
}

impl ReportDocument {
    pub fn to_json(&self) -> Result<String, CliError> {
        let mut s =
            serde_json::to_string_pretty(self).map_err(|e| CliError::Internal(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }
}

/// Everything the report is built from, kept for the side outputs.
pub struct Analysis {
    pub document: ReportDocument,
    pub filter: MatchingFilter,
    pub degrees: DegreeSequences,
    pub ccdf: Vec<CcdfPoint>,
    pub key_customers: Vec<KeyCustomerFlag>,
    pub scatters: Vec<Scatter>,
    pub cagr: CagrSet,
}

fn components(net: &TradeNetwork) -> ComponentSummary {
    let sizes = weak_components(net);
    ComponentSummary {
        count: sizes.len(),
        largest: sizes.first().copied().unwrap_or(0),
    }
}

/// OLS of `ys` on `xs` with Pearson r, as reported for growth scatters.
pub fn regress(xs: &[f64], ys: &[f64]) -> Result<RegressionResult, tcmesh_core::StatsError> {
    let fit = ols(xs, ys)?;
    let pearson_r = pearson(xs, ys).ok();
    Ok(RegressionResult {
        slope: fit.slope,
        intercept: fit.intercept,
        pearson_r,
        n: fit.n,
        cutoff_applied: None,
    })
}

pub fn period_report(scatter: &Scatter) -> PeriodReport {
    let xy: Vec<(f64, f64)> = scatter.points.iter().map(|p| p.xy()).collect();
    PeriodReport {
        period: scatter.period,
        n_points: scatter.points.len(),
        n_excluded: scatter.exclusions.len(),
        stats: scatter_stats(&xy).into(),
        regression: regress(&scatter.xs(), &scatter.ys()).into(),
    }
}

pub fn key_customer_flags(
    filter: &MatchingFilter,
    basis: KeyCustomerBasis,
) -> Result<Vec<KeyCustomerFlag>, CliError> {
    filter
        .retained
        .iter()
        .map(|s| key_customer(&filter.network, s, basis))
        .collect::<Result<_, _>>()
        // retained suppliers all have a 2007 balance
        .map_err(|e| CliError::Internal(e.to_string()))
}

pub fn analyze(loaded: &Loaded, opts: &AnalysisOptions) -> Result<Analysis, CliError> {
    let filter = select(loaded, opts.matching_lo, opts.matching_hi)?;
    let selected = &filter.network;

    let degrees = degree_sequences(selected);
    let in_degrees = degrees.in_values();
    let ccdf = ccdf_points(&in_degrees);
    let in_degree_ccdf_fit = fit_ccdf_slope(&ccdf, 1, None).into();
    let size_degree = size_degree_regression(selected, &filter.retained, opts.degree_cutoff).into();

    let key_customers = key_customer_flags(&filter, opts.key_basis)?;
    let with_key = key_customers.iter().filter(|f| f.has_key_customer).count();

    let scatters: Vec<Scatter> = [Period::Early, Period::Late]
        .into_iter()
        .map(|p| build_scatter(selected, &filter.retained, p, opts.missing_policy))
        .collect();
    let cagr = cagr_points(selected, &filter.retained, opts.missing_policy);
    let cagr_x: Vec<f64> = cagr.points.iter().map(|p| p.predicted_cagr).collect();
    let cagr_y: Vec<f64> = cagr.points.iter().map(|p| p.actual_cagr).collect();
    let correlations = opts
        .groupings
        .iter()
        .map(|&g| grouped_correlations(&cagr.points, g))
        .collect();

    let document = ReportDocument {
        schema_version: REPORT_SCHEMA_VERSION,
        tool: ToolInfo {
            name: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
        },
        inputs: loaded.inputs.clone(),
        options: OptionsEcho {
            matching_lo: opts.matching_lo,
            matching_hi: opts.matching_hi.is_finite().then_some(opts.matching_hi),
            groupings: opts.groupings.clone(),
            missing_policy: opts.missing_policy,
            key_customer_basis: opts.key_basis,
            degree_cutoff: opts.degree_cutoff,
        },
        network: network_summary(&loaded.network),
        components: components(&loaded.network),
        matching: MatchingAggregate {
            candidates: loaded.network.n_suppliers(),
            with_balance: filter.reports.len(),
            missing_balance: filter.missing_balance.len(),
            retained: filter.retained.len(),
        },
        selected_network: network_summary(selected),
        selected_components: components(selected),
        in_degree_ccdf_fit,
        size_degree,
        key_customers: KeyCustomerCounts {
            with_key_customer: with_key,
            without_key_customer: key_customers.len() - with_key,
        },
        growth: scatters.iter().map(period_report).collect(),
        cagr: CagrSummary {
            n_points: cagr.points.len(),
            n_excluded: cagr.exclusions.len(),
            regression: regress(&cagr_x, &cagr_y).into(),
        },
        correlations,
    };
    Ok(Analysis {
        document,
        filter,
        degrees,
        ccdf,
        key_customers,
        scatters,
        cagr,
    })
}

pub const MATCHING_FILE: &str = "matching.csv";
pub const DEGREES_IN_FILE: &str = "degrees_in.csv";
pub const DEGREES_OUT_FILE: &str = "degrees_out.csv";
pub const CCDF_FILE: &str = "ccdf_in.csv";
pub const KEY_CUSTOMERS_FILE: &str = "key_customers.csv";
pub const GROWTH_FILE: &str = "growth.csv";
pub const CAGR_FILE: &str = "cagr.csv";

pub fn write_matching_csv(mut w: impl Write, filter: &MatchingFilter) -> std::io::Result<()> {
    writeln!(w, "supplier_id,invoice_total,sales_2007,ratio,in_range")?;
    for r in &filter.reports {
        let m = &r.matching;
        writeln!(
            w,
            "{},{},{},{},{}",
            m.supplier, m.invoice_total, m.sales_2007, m.ratio, r.in_range
        )?;
    }
    Ok(())
}

pub fn write_key_customer_csv(mut w: impl Write, flags: &[KeyCustomerFlag]) -> std::io::Result<()> {
    writeln!(w, "supplier_id,has_key_customer,key_customer,share")?;
    for f in flags {
        let key = f.key_customer.as_ref().map(|c| c.as_str()).unwrap_or("");
        writeln!(
            w,
            "{},{},{},{}",
            f.supplier, f.has_key_customer, key, f.share
        )?;
    }
    Ok(())
}

pub fn write_svg(points: &[(f64, f64)], spec: &PlotSpec, path: &Path) -> Result<(), CliError> {
    let svg = render_svg_scatter(points, spec)?;
    fs::write(path, svg).map_err(|e| CliError::write(path, e))
}

pub fn growth_plot_spec(period: Period) -> PlotSpec {
    PlotSpec {
        title: format!("Supplier sales growth {}", period.label()),
        x_label: "predicted log growth".into(),
        y_label: "actual log growth".into(),
        reference_line: true,
        ..PlotSpec::default()
    }
}

pub fn growth_svg_name(period: Period) -> String {
    format!("growth_{}.svg", period.label())
}

/// Writes every side output of `analysis` into `dir`.
pub fn write_artifacts(
    dir: &Path,
    loaded: &Loaded,
    analysis: &Analysis,
    svg: bool,
) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::write(dir, e))?;
    write_rejection_logs(dir, &loaded.balance_rejections, &loaded.invoice_rejections)?;
    let mut written = vec![
        dir.join(BALANCE_REJECTIONS_FILE),
        dir.join(INVOICE_REJECTIONS_FILE),
    ];
    let mut emit = |name: &str, body: &dyn Fn(&mut BufWriter<File>) -> std::io::Result<()>| {
        let path = dir.join(name);
        write_file(&path, |w| body(w))?;
        written.push(path);
        Ok::<_, CliError>(())
    };

    emit(MATCHING_FILE, &|w| write_matching_csv(w, &analysis.filter))?;
    emit(DEGREES_IN_FILE, &|w| {
        write_degree_csv(w, &analysis.degrees.in_values())
    })?;
    emit(DEGREES_OUT_FILE, &|w| {
        write_degree_csv(w, &analysis.degrees.out_values())
    })?;
    emit(CCDF_FILE, &|w| write_ccdf_csv(w, &analysis.ccdf))?;
    emit(KEY_CUSTOMERS_FILE, &|w| {
        write_key_customer_csv(w, &analysis.key_customers)
    })?;
    emit(GROWTH_FILE, &|w| {
        write_growth_csv(w, analysis.scatters.iter().flat_map(|s| s.points.iter()))
    })?;
    emit(CAGR_FILE, &|w| write_cagr_csv(w, &analysis.cagr.points))?;
    let json = analysis.document.to_json()?;
    emit(REPORT_FILE, &|w| w.write_all(json.as_bytes()))?;

    if svg {
        for s in &analysis.scatters {
            let path = dir.join(growth_svg_name(s.period));
            let xy: Vec<(f64, f64)> = s.points.iter().map(|p| p.xy()).collect();
            write_svg(&xy, &growth_plot_spec(s.period), &path)?;
            written.push(path);
        }
        let cagr_xy: Vec<(f64, f64)> = analysis
            .cagr
            .points
            .iter()
            .map(|p| (p.predicted_cagr, p.actual_cagr))
            .collect();
        let path = dir.join("cagr.svg");
        write_svg(
            &cagr_xy,
            &PlotSpec {
                title: "Supplier sales CAGR 2006-2008".into(),
                x_label: "predicted log CAGR".into(),
                y_label: "actual log CAGR".into(),
                reference_line: true,
                ..PlotSpec::default()
            },
            &path,
        )?;
        written.push(path);
        let path = dir.join("ccdf_in.svg");
        write_svg(&log_log(&analysis.ccdf), &ccdf_plot_spec(), &path)?;
        written.push(path);
    }
    Ok(written)
}

pub fn log_log(ccdf: &[CcdfPoint]) -> Vec<(f64, f64)> {
    ccdf.iter()
        .map(|p| ((p.k as f64).ln(), p.ccdf.ln()))
        .collect()
}

pub fn ccdf_plot_spec() -> PlotSpec {
    PlotSpec {
        title: "Cumulative in-degree distribution".into(),
        x_label: "ln k".into(),
        y_label: "ln P(K >= k)".into(),
        ..PlotSpec::default()
    }
}

/// The all-in-one run: load, analyze, write `report.json` and every side
/// output into `out_dir`.
pub fn run_report(
    balance_path: &Path,
    invoices_path: &Path,
    opts: &AnalysisOptions,
    out_dir: &Path,
    svg: bool,
) -> Result<ReportDocument, CliError> {
    let loaded = load(balance_path, invoices_path)?;
    let checked = if opts.strict {
        strict_check(&loaded)
    } else {
        Ok(())
    };
    let analysis = match checked.and_then(|_| analyze(&loaded, opts)) {
        Ok(a) => a,
        Err(e) => {
            write_rejection_logs(
                out_dir,
                &loaded.balance_rejections,
                &loaded.invoice_rejections,
            )?;
            return Err(e);
        }
    };
    write_artifacts(out_dir, &loaded, &analysis, svg)?;
    Ok(analysis.document)
}
