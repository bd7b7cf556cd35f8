use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use tcmesh::error::CliError;
use tcmesh::report::{
    self, analyze, key_customer_flags, load, period_report, regress, select, strict_check,
    write_rejection_logs, AnalysisOptions, Fitted, Loaded,
};
use tcmesh_core::growth::write_growth_csv;
use tcmesh_core::network::{degree_sequences, write_degree_csv};
use tcmesh_core::stats::{
    ccdf_points, size_degree_regression, write_ccdf_csv, DEFAULT_DEGREE_CUTOFF,
};
use tcmesh_core::synth::write_outputs;
use tcmesh_core::{
    build_scatter, cagr_points, fit_ccdf_slope, generate, grouped_correlations, network_summary,
    scenario_boom_bust, weak_components, BetaSpec, Grouping, KeyCustomerBasis, MissingPolicy,
    Period, SectorLetter, SynthConfig,
};

const THREADS_ENV: &str = "TCMESH_THREADS";

#[derive(Parser)]
#[command(
    name = "tcmesh",
    version,
    about = "Trade-credit network contagion analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset with a planted contagion coefficient.
    Generate(GenerateArgs),
    /// Network size, reciprocity and component counts.
    Summary(InputArgs),
    /// Matching ratios and the retained supplier set.
    Matching(AnalysisArgs),
    /// In-degree distribution fit and size-versus-degree regression.
    Degrees(DegreeArgs),
    /// Predicted versus actual log growth for both periods.
    Growth(AnalysisArgs),
    /// Two-year predicted versus actual log CAGR.
    Cagr(AnalysisArgs),
    /// Stratified CAGR correlations.
    Correlations(CorrelationArgs),
    /// Every analysis, written as report.json plus side outputs.
    Report(ReportArgs),
}

#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    balance: PathBuf,
    #[arg(long)]
    invoices: PathBuf,
    /// Abort on the first rejected row.
    #[arg(long)]
    strict: bool,
    /// Directory for CSV side outputs and rejection logs.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, ValueEnum)]
enum MissingArg {
    DropRenormalize,
    Fail,
}

#[derive(Copy, Clone, ValueEnum)]
enum KeyBasisArg {
    Sales,
    Invoices,
}

#[derive(Args)]
struct AnalysisArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Open interval for the matching ratio, `lo:hi`; `hi` may be `inf`.
    #[arg(long, default_value = "0.8:1.2", value_parser = parse_range)]
    matching: (f64, f64),
    /// Treatment of customers lacking balance data.
    #[arg(long, value_enum, default_value = "drop-renormalize")]
    missing: MissingArg,
    /// Denominator of the key-customer share.
    #[arg(long, value_enum, default_value = "sales")]
    key_basis: KeyBasisArg,
    /// Also write SVG plots into the output directory.
    #[arg(long)]
    svg: bool,
}

#[derive(Args)]
struct DegreeArgs {
    #[command(flatten)]
    analysis: AnalysisArgs,
    /// Largest in-degree used in the size regression; `none` for no cutoff.
    #[arg(long, default_value_t = DEFAULT_DEGREE_CUTOFF.to_string())]
    cutoff: String,
    /// Smallest degree in the CCDF fit window.
    #[arg(long, default_value_t = 1)]
    k_min: usize,
    /// Largest degree in the CCDF fit window.
    #[arg(long)]
    k_max: Option<usize>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum GroupArg {
    Rating,
    /// Rating class crossed with firm size.
    Size,
    Sector,
}

impl From<GroupArg> for Grouping {
    fn from(g: GroupArg) -> Self {
        match g {
            GroupArg::Rating => Grouping::Rating,
            GroupArg::Size => Grouping::RatingSize,
            GroupArg::Sector => Grouping::Sector,
        }
    }
}

#[derive(Args)]
struct CorrelationArgs {
    #[command(flatten)]
    analysis: AnalysisArgs,
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_value = "rating,size,sector"
    )]
    group: Vec<GroupArg>,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    correlations: CorrelationArgs,
    #[arg(long, default_value_t = DEFAULT_DEGREE_CUTOFF.to_string())]
    cutoff: String,
}

#[derive(Copy, Clone, ValueEnum)]
enum Scenario {
    /// Positive customer drift in 2006-2007, negative in 2007-2008.
    BoomBust,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 500)]
    suppliers: usize,
    /// Customer pool size; defaults to 16 per supplier.
    #[arg(long)]
    customers: Option<usize>,
    /// Contagion coefficient for every supplier.
    #[arg(long, conflicts_with = "beta_class")]
    beta: Option<f64>,
    /// Coefficients by rating class, `a,b,c`.
    #[arg(long, value_parser = parse_triple)]
    beta_class: Option<(f64, f64, f64)>,
    /// Sector overrides, e.g. `D=0.5,G=0.2`.
    #[arg(long, value_delimiter = ',', value_parser = parse_sector_beta)]
    sector_beta: Vec<(SectorLetter, f64)>,
    /// Customer purchase drift per period, `early:late`.
    #[arg(long, value_parser = parse_range_any)]
    mu: Option<(f64, f64)>,
    /// Extra supplier sales drift per period, `early:late`.
    #[arg(long, value_parser = parse_range_any)]
    drift: Option<(f64, f64)>,
    #[arg(long)]
    sigma_supplier: Option<f64>,
    #[arg(long)]
    sigma_customer: Option<f64>,
    #[arg(long)]
    degree_exponent: Option<f64>,
    #[arg(long)]
    weight_tail: Option<f64>,
    /// Interval the planted matching ratios are drawn from.
    #[arg(long, value_parser = parse_range)]
    matching: Option<(f64, f64)>,
    #[arg(long, value_enum)]
    scenario: Option<Scenario>,
}

fn parse_range_any(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected `a:b`, got `{s}`"))?;
    let parse = |t: &str| -> Result<f64, String> {
        match t.trim() {
            "inf" => Ok(f64::INFINITY),
            t => t.parse::<f64>().map_err(|e| format!("`{t}`: {e}")),
        }
    };
    Ok((parse(a)?, parse(b)?))
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = parse_range_any(s)?;
    if !(lo >= 0.0 && lo.is_finite() && lo < hi) {
        return Err(format!("need 0 <= lo < hi, got `{s}`"));
    }
    Ok((lo, hi))
}

fn parse_triple(s: &str) -> Result<(f64, f64, f64), String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [a, b, c] => Ok((a, b, c)),
        _ => Err(format!("expected three values `a,b,c`, got `{s}`")),
    }
}

fn parse_sector_beta(s: &str) -> Result<(SectorLetter, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected `SECTOR=beta`, got `{s}`"))?;
    let mut chars = k.trim().chars();
    let letter = match (chars.next(), chars.next()) {
        (Some(c), None) => SectorLetter::from_char(c),
        _ => None,
    }
    .ok_or_else(|| format!("unknown sector `{k}`"))?;
    let beta = v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"))?;
    Ok((letter, beta))
}

fn parse_cutoff(s: &str) -> Result<Option<usize>, CliError> {
    match s {
        "none" => Ok(None),
        _ => s.parse().map(Some).map_err(|_| {
            CliError::Input(format!("--cutoff expects an integer or `none`, got `{s}`"))
        }),
    }
}

fn print_json(value: &impl Serialize) -> Result<(), CliError> {
    let s = serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    println!("{s}");
    Ok(())
}

fn options(args: &AnalysisArgs) -> AnalysisOptions {
    AnalysisOptions {
        matching_lo: args.matching.0,
        matching_hi: args.matching.1,
        missing_policy: match args.missing {
            MissingArg::DropRenormalize => MissingPolicy::DropRenormalize,
            MissingArg::Fail => MissingPolicy::Fail,
        },
        key_basis: match args.key_basis {
            KeyBasisArg::Sales => KeyCustomerBasis::AnnualSales,
            KeyBasisArg::Invoices => KeyCustomerBasis::InvoiceTotal,
        },
        strict: args.input.strict,
        ..AnalysisOptions::default()
    }
}

/// Loads the inputs and writes rejection logs when an output directory
/// was given, also when strict mode then refuses the input.
fn load_inputs(input: &InputArgs) -> Result<Loaded, CliError> {
    let loaded = load(&input.balance, &input.invoices)?;
    if let Some(out) = &input.out {
        write_rejection_logs(out, &loaded.balance_rejections, &loaded.invoice_rejections)?;
    }
    if input.strict {
        strict_check(&loaded)?;
    }
    for (table, rejections) in [
        ("balance", &loaded.balance_rejections),
        ("invoices", &loaded.invoice_rejections),
    ] {
        if !rejections.is_empty() {
            eprintln!("warning: {} {table} rows rejected", rejections.len());
        }
    }
    Ok(loaded)
}

fn out_path(input: &InputArgs, name: &str) -> Option<PathBuf> {
    input.out.as_ref().map(|d| d.join(name))
}

fn write_to(
    path: &Path,
    body: impl FnOnce(&mut dyn std::io::Write) -> std::io::Result<()>,
) -> Result<(), CliError> {
    let mut buf = Vec::new();
    body(&mut buf).map_err(|e| CliError::Internal(e.to_string()))?;
    std::fs::write(path, buf).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn cmd_generate(args: &GenerateArgs) -> Result<(), CliError> {
    let mut config = SynthConfig {
        n_suppliers: args.suppliers,
        customer_pool: args.customers,
        seed: args.seed,
        ..SynthConfig::default()
    };
    if let Some(b) = args.beta {
        config.beta = BetaSpec::Scalar(b);
    }
    if let Some((a, b, c)) = args.beta_class {
        config.beta = BetaSpec::ByClass { a, b, c };
    }
    config.sector_beta = args.sector_beta.iter().copied().collect::<BTreeMap<_, _>>();
    if let Some((e, l)) = args.drift {
        config.supplier_drift = [e, l];
    }
    if let Some(s) = args.sigma_supplier {
        config.sigma_supplier = s;
    }
    if let Some(s) = args.sigma_customer {
        config.sigma_customer = s;
    }
    if let Some(g) = args.degree_exponent {
        config.degree_exponent = g;
    }
    if let Some(t) = args.weight_tail {
        config.weight_tail_exponent = t;
    }
    if let Some(m) = args.matching {
        config.matching_range = m;
    }
    let result = match args.scenario {
        Some(Scenario::BoomBust) => {
            let (boom, bust) = args.mu.unwrap_or((0.05, -0.05));
            scenario_boom_bust(&config, boom, bust)
        }
        None => {
            if let Some((e, l)) = args.mu {
                config.mu = [e, l];
            }
            generate(&config)
        }
    };
    let (dataset, truth) = result.map_err(|e| CliError::Input(e.to_string()))?;
    write_outputs(&args.out, &dataset, &truth).map_err(|e| CliError::Write {
        path: args.out.clone(),
        source: std::io::Error::other(e.to_string()),
    })?;
    eprintln!(
        "wrote {} suppliers, {} invoices to {}",
        truth.suppliers.len(),
        dataset.invoices().len(),
        args.out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct SummaryOutput {
    inputs: report::InputSummary,
    network: tcmesh_core::NetworkSummary,
    components: report::ComponentSummary,
}

fn component_summary(net: &tcmesh_core::TradeNetwork) -> report::ComponentSummary {
    let sizes = weak_components(net);
    report::ComponentSummary {
        count: sizes.len(),
        largest: sizes.first().copied().unwrap_or(0),
    }
}

fn cmd_summary(args: &InputArgs) -> Result<(), CliError> {
    let loaded = load_inputs(args)?;
    print_json(&SummaryOutput {
        inputs: loaded.inputs.clone(),
        network: network_summary(&loaded.network),
        components: component_summary(&loaded.network),
    })
}

#[derive(Serialize)]
struct MatchingOutput {
    matching_lo: f64,
    matching_hi: Option<f64>,
    aggregate: report::MatchingAggregate,
    selected_network: tcmesh_core::NetworkSummary,
    selected_components: report::ComponentSummary,
    key_customers: report::KeyCustomerCounts,
}

fn cmd_matching(args: &AnalysisArgs) -> Result<(), CliError> {
    let loaded = load_inputs(&args.input)?;
    let opts = options(args);
    let filter =
        tcmesh_core::filter_by_matching(&loaded.network, opts.matching_lo, opts.matching_hi)
            .map_err(|e| CliError::Input(e.to_string()))?;
    if let Some(path) = out_path(&args.input, report::MATCHING_FILE) {
        write_to(&path, |w| report::write_matching_csv(w, &filter))?;
    }
    let filter = select(&loaded, opts.matching_lo, opts.matching_hi)?;
    let flags = key_customer_flags(&filter, opts.key_basis)?;
    if let Some(path) = out_path(&args.input, report::KEY_CUSTOMERS_FILE) {
        write_to(&path, |w| report::write_key_customer_csv(w, &flags))?;
    }
    let with_key = flags.iter().filter(|f| f.has_key_customer).count();
    print_json(&MatchingOutput {
        matching_lo: opts.matching_lo,
        matching_hi: opts.matching_hi.is_finite().then_some(opts.matching_hi),
        aggregate: report::MatchingAggregate {
            candidates: loaded.network.n_suppliers(),
            with_balance: filter.reports.len(),
            missing_balance: filter.missing_balance.len(),
            retained: filter.retained.len(),
        },
        selected_network: network_summary(&filter.network),
        selected_components: component_summary(&filter.network),
        key_customers: report::KeyCustomerCounts {
            with_key_customer: with_key,
            without_key_customer: flags.len() - with_key,
        },
    })
}

#[derive(Serialize)]
struct DegreesOutput {
    n_suppliers: usize,
    in_degree_ccdf_fit: Fitted<tcmesh_core::CcdfFit>,
    size_degree: Fitted<tcmesh_core::stats::SizeDegreeFit>,
}

fn cmd_degrees(args: &DegreeArgs) -> Result<(), CliError> {
    let cutoff = parse_cutoff(&args.cutoff)?;
    let a = &args.analysis;
    let loaded = load_inputs(&a.input)?;
    let opts = options(a);
    let filter = select(&loaded, opts.matching_lo, opts.matching_hi)?;
    let degrees = degree_sequences(&filter.network);
    let ccdf = ccdf_points(&degrees.in_values());
    if let Some(dir) = &a.input.out {
        write_to(&dir.join(report::DEGREES_IN_FILE), |w| {
            write_degree_csv(w, &degrees.in_values())
        })?;
        write_to(&dir.join(report::DEGREES_OUT_FILE), |w| {
            write_degree_csv(w, &degrees.out_values())
        })?;
        write_to(&dir.join(report::CCDF_FILE), |w| write_ccdf_csv(w, &ccdf))?;
        if a.svg {
            let path = dir.join("ccdf_in.svg");
            report::write_svg(&report::log_log(&ccdf), &report::ccdf_plot_spec(), &path)?;
        }
    }
    print_json(&DegreesOutput {
        n_suppliers: filter.retained.len(),
        in_degree_ccdf_fit: fit_ccdf_slope(&ccdf, args.k_min, args.k_max).into(),
        size_degree: size_degree_regression(&filter.network, &filter.retained, cutoff).into(),
    })
}

fn cmd_growth(args: &AnalysisArgs) -> Result<(), CliError> {
    let loaded = load_inputs(&args.input)?;
    let opts = options(args);
    let filter = select(&loaded, opts.matching_lo, opts.matching_hi)?;
    let scatters: Vec<_> = [Period::Early, Period::Late]
        .into_iter()
        .map(|p| build_scatter(&filter.network, &filter.retained, p, opts.missing_policy))
        .collect();
    if let Some(dir) = &args.input.out {
        write_to(&dir.join(report::GROWTH_FILE), |w| {
            write_growth_csv(w, scatters.iter().flat_map(|s| s.points.iter()))
        })?;
        if args.svg {
            for s in &scatters {
                let xy: Vec<_> = s.points.iter().map(|p| p.xy()).collect();
                report::write_svg(
                    &xy,
                    &report::growth_plot_spec(s.period),
                    &dir.join(report::growth_svg_name(s.period)),
                )?;
            }
        }
    }
    let reports: Vec<_> = scatters.iter().map(period_report).collect();
    print_json(&reports)
}

fn cmd_cagr(args: &AnalysisArgs) -> Result<(), CliError> {
    let loaded = load_inputs(&args.input)?;
    let opts = options(args);
    let filter = select(&loaded, opts.matching_lo, opts.matching_hi)?;
    let set = cagr_points(&filter.network, &filter.retained, opts.missing_policy);
    let xy: Vec<(f64, f64)> = set
        .points
        .iter()
        .map(|p| (p.predicted_cagr, p.actual_cagr))
        .collect();
    if let Some(dir) = &args.input.out {
        write_to(&dir.join(report::CAGR_FILE), |w| {
            tcmesh_core::growth::write_cagr_csv(w, &set.points)
        })?;
        if args.svg {
            let spec = tcmesh::PlotSpec {
                title: "Supplier sales CAGR 2006-2008".into(),
                x_label: "predicted log CAGR".into(),
                y_label: "actual log CAGR".into(),
                reference_line: true,
                ..tcmesh::PlotSpec::default()
            };
            report::write_svg(&xy, &spec, &dir.join("cagr.svg"))?;
        }
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = xy.into_iter().unzip();
    print_json(&report::CagrSummary {
        n_points: set.points.len(),
        n_excluded: set.exclusions.len(),
        regression: regress(&xs, &ys).into(),
    })
}

fn groupings(groups: &[GroupArg]) -> Vec<Grouping> {
    let mut out: Vec<Grouping> = Vec::new();
    for &g in groups {
        let g = Grouping::from(g);
        if !out.contains(&g) {
            out.push(g);
        }
    }
    out
}

fn cmd_correlations(args: &CorrelationArgs) -> Result<(), CliError> {
    let a = &args.analysis;
    let loaded = load_inputs(&a.input)?;
    let opts = options(a);
    let filter = select(&loaded, opts.matching_lo, opts.matching_hi)?;
    let set = cagr_points(&filter.network, &filter.retained, opts.missing_policy);
    let tables: Vec<_> = groupings(&args.group)
        .into_iter()
        .map(|g| grouped_correlations(&set.points, g))
        .collect();
    print_json(&tables)
}

fn cmd_report(args: &ReportArgs) -> Result<(), CliError> {
    let a = &args.correlations.analysis;
    let out = a
        .input
        .out
        .clone()
        .ok_or_else(|| CliError::Input("report needs --out <dir>".into()))?;
    let opts = AnalysisOptions {
        groupings: groupings(&args.correlations.group),
        degree_cutoff: parse_cutoff(&args.cutoff)?,
        ..options(a)
    };
    let loaded = load_inputs(&a.input)?;
    let analysis = analyze(&loaded, &opts)?;
    report::write_artifacts(&out, &loaded, &analysis, a.svg)?;
    eprintln!("wrote {}", out.join(report::REPORT_FILE).display());
    Ok(())
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::Input(format!(
            "{THREADS_ENV} must be a positive integer, got `{raw}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Internal(e.to_string()))
}

fn run(cli: &Cli) -> Result<(), CliError> {
    configure_threads()?;
    match &cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Summary(a) => cmd_summary(a),
        Command::Matching(a) => cmd_matching(a),
        Command::Degrees(a) => cmd_degrees(a),
        Command::Growth(a) => cmd_growth(a),
        Command::Cagr(a) => cmd_cagr(a),
        Command::Correlations(a) => cmd_correlations(a),
        Command::Report(a) => cmd_report(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("0.8:1.2"), Ok((0.8, 1.2)));
        assert_eq!(parse_range("0.5:inf"), Ok((0.5, f64::INFINITY)));
        assert!(parse_range("1.2:0.8").is_err());
        assert!(parse_range("-0.1:1").is_err());
        assert!(parse_range("0.8").is_err());
        assert_eq!(parse_range_any("0.05:-0.05"), Ok((0.05, -0.05)));
    }

    #[test]
    fn triples_and_sectors() {
        assert_eq!(parse_triple("0.7, 0.4,0.1"), Ok((0.7, 0.4, 0.1)));
        assert!(parse_triple("1,2").is_err());
        assert_eq!(parse_sector_beta("G=0.3"), Ok((SectorLetter::G, 0.3)));
        assert!(parse_sector_beta("Z=0.3").is_err());
        assert!(parse_sector_beta("DG=0.3").is_err());
    }

    #[test]
    fn cutoffs_and_groups() {
        assert_eq!(parse_cutoff("none").unwrap(), None);
        assert_eq!(parse_cutoff("150").unwrap(), Some(150));
        assert!(parse_cutoff("-3").is_err());
        assert_eq!(
            groupings(&[GroupArg::Size, GroupArg::Rating, GroupArg::Size]),
            vec![Grouping::RatingSize, Grouping::Rating]
        );
    }
}
