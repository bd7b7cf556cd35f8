//! Small statistics toolkit: correlation, least squares, quantiles, CCDF
//! fitting and the grouped correlation tables.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};

use serde::Serialize;
use thiserror::Error;

use crate::growth::CagrPoint;
use crate::ingest::{FirmId, Rating, SectorLetter, Year};
use crate::network::TradeNetwork;

/// Sales above this (strictly) make a firm "large", in EUR.
pub const LARGE_FIRM_SALES: f64 = 1e6;

/// In-degrees above this are left out of the size regression.
pub const DEFAULT_DEGREE_CUTOFF: usize = 150;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("too few points: need {needed}, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("degenerate-variance")]
    DegenerateVariance,
    #[error("non-finite input")]
    NonFinite,
    #[error("empty input")]
    Empty,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn check_pairs(xs: &[f64], ys: &[f64], needed: usize) -> Result<(), StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < needed {
        return Err(StatsError::TooFewPoints {
            needed,
            got: xs.len(),
        });
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    Ok(())
}

fn constant(xs: &[f64]) -> bool {
    xs.iter().all(|x| *x == xs[0])
}

/// Centered second moments `(Sxx, Syy, Sxy)` and the means.
fn moments(xs: &[f64], ys: &[f64]) -> (f64, f64, f64, f64, f64) {
    let (mx, my) = (mean(xs), mean(ys));
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    (mx, my, sxx, syy, sxy)
}

/// Pearson product-moment correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    check_pairs(xs, ys, 2)?;
    let (_, _, sxx, syy, sxy) = moments(xs, ys);
    if constant(xs) || constant(ys) {
        return Err(StatsError::DegenerateVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub n: usize,
}

/// Ordinary least squares of `ys` on `xs`.
pub fn ols(xs: &[f64], ys: &[f64]) -> Result<LinearFit, StatsError> {
    check_pairs(xs, ys, 2)?;
    let (mx, my, sxx, _, sxy) = moments(xs, ys);
    if constant(xs) {
        return Err(StatsError::DegenerateVariance);
    }
    let slope = sxy / sxx;
    Ok(LinearFit {
        slope,
        intercept: my - slope * mx,
        n: xs.len(),
    })
}

/// Quantile of sorted data by linear interpolation between order
/// statistics (position `q·(n−1)`).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

impl Quartiles {
    pub fn of(values: &[f64]) -> Result<Self, StatsError> {
        if values.is_empty() {
            return Err(StatsError::Empty);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite);
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Quartiles {
            q1: quantile_sorted(&sorted, 0.25),
            median: quantile_sorted(&sorted, 0.5),
            q3: quantile_sorted(&sorted, 0.75),
        })
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct CcdfPoint {
    pub k: usize,
    /// Fraction of nodes with degree `>= k`.
    pub ccdf: f64,
}

/// Empirical complementary CDF at each distinct degree, ascending.
pub fn ccdf_points(degrees: &[usize]) -> Vec<CcdfPoint> {
    let n = degrees.len() as f64;
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &k in degrees {
        *counts.entry(k).or_default() += 1;
    }
    let mut remaining = degrees.len();
    counts
        .into_iter()
        .map(|(k, c)| {
            let p = CcdfPoint {
                k,
                ccdf: remaining as f64 / n,
            };
            remaining -= c;
            p
        })
        .collect()
}

pub fn write_ccdf_csv(mut out: impl Write, points: &[CcdfPoint]) -> io::Result<()> {
    writeln!(out, "k,ccdf")?;
    for p in points {
        writeln!(out, "{},{}", p.k, p.ccdf)?;
    }
    Ok(())
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct CcdfFit {
    /// Slope of `ln CCDF` against `ln k`; the cumulative exponent.
    pub slope: f64,
    pub intercept: f64,
    pub k_min: usize,
    /// `None` for an open window.
    pub k_max: Option<usize>,
    pub n_points: usize,
    /// `None` when the CCDF is flat inside the window.
    pub r_squared: Option<f64>,
}

impl CcdfFit {
    /// Exponent of the degree density, one below the cumulative slope.
    pub fn density_exponent(&self) -> f64 {
        self.slope - 1.0
    }
}

/// Least-squares line through `(ln k, ln CCDF(k))` for `k_min <= k <= k_max`.
pub fn fit_ccdf_slope(
    ccdf: &[CcdfPoint],
    k_min: usize,
    k_max: Option<usize>,
) -> Result<CcdfFit, StatsError> {
    let k_min = k_min.max(1);
    let upper = k_max.unwrap_or(usize::MAX);
    let (xs, ys): (Vec<f64>, Vec<f64>) = ccdf
        .iter()
        .filter(|p| p.k >= k_min && p.k <= upper && p.ccdf > 0.0)
        .map(|p| ((p.k as f64).ln(), p.ccdf.ln()))
        .unzip();
    if xs.len() < 3 {
        return Err(StatsError::TooFewPoints {
            needed: 3,
            got: xs.len(),
        });
    }
    let fit = ols(&xs, &ys)?;
    let (_, _, _, syy, _) = moments(&xs, &ys);
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - fit.intercept - fit.slope * x).powi(2))
        .sum();
    Ok(CcdfFit {
        slope: fit.slope,
        intercept: fit.intercept,
        k_min,
        k_max,
        n_points: xs.len(),
        r_squared: (!constant(&ys)).then(|| 1.0 - ss_res / syy),
    })
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct RegressionResult {
    pub slope: f64,
    pub intercept: f64,
    /// `None` when one axis has no variance.
    pub pearson_r: Option<f64>,
    pub n: usize,
    pub cutoff_applied: Option<usize>,
}

/// Box-plot summary of `ln(sales)` for degrees with `floor(ln k) == bin`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct DegreeBin {
    pub bin: u32,
    pub degree_lo: f64,
    pub degree_hi: f64,
    pub n: usize,
    pub log_sales: Quartiles,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SizeDegreeFit {
    pub regression: RegressionResult,
    pub bins: Vec<DegreeBin>,
}

/// OLS of `ln(sales)` on `ln(k)` over pairs with `k <= cutoff`, plus unit
/// log-degree bins over every pair.
pub fn regress_size_on_degree(
    pairs: &[(usize, f64)],
    cutoff: Option<usize>,
) -> Result<SizeDegreeFit, StatsError> {
    let usable: Vec<(f64, f64)> = pairs
        .iter()
        .filter(|(k, s)| *k >= 1 && *s > 0.0)
        .map(|&(k, s)| ((k as f64).ln(), s.ln()))
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = pairs
        .iter()
        .filter(|(k, s)| *k >= 1 && *s > 0.0 && cutoff.is_none_or(|c| *k <= c))
        .map(|&(k, s)| ((k as f64).ln(), s.ln()))
        .unzip();
    if xs.len() < 3 {
        return Err(StatsError::TooFewPoints {
            needed: 3,
            got: xs.len(),
        });
    }
    let fit = ols(&xs, &ys)?;
    let pearson_r = match pearson(&xs, &ys) {
        Ok(r) => Some(r),
        Err(StatsError::DegenerateVariance) => None,
        Err(e) => return Err(e),
    };

    let mut grouped: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for (lk, ls) in usable {
        grouped.entry(lk.floor() as u32).or_default().push(ls);
    }
    let bins = grouped
        .into_iter()
        .map(|(bin, values)| {
            Ok(DegreeBin {
                bin,
                degree_lo: (bin as f64).exp(),
                degree_hi: (bin as f64 + 1.0).exp(),
                n: values.len(),
                log_sales: Quartiles::of(&values)?,
            })
        })
        .collect::<Result<_, StatsError>>()?;

    Ok(SizeDegreeFit {
        regression: RegressionResult {
            slope: fit.slope,
            intercept: fit.intercept,
            pearson_r,
            n: xs.len(),
            cutoff_applied: cutoff,
        },
        bins,
    })
}

/// Size-versus-degree regression for the given suppliers, using 2007 sales
/// and in-degree in `net`. Suppliers without a 2007 balance or without
/// customers are skipped.
pub fn size_degree_regression(
    net: &TradeNetwork,
    suppliers: &[FirmId],
    cutoff: Option<usize>,
) -> Result<SizeDegreeFit, StatsError> {
    let pairs: Vec<(usize, f64)> = suppliers
        .iter()
        .filter_map(|s| {
            let k = net.in_edges(s).len();
            let sales = net.dataset().sales(s, Year::Y2007)?;
            (k > 0).then_some((k, sales))
        })
        .collect();
    regress_size_on_degree(&pairs, cutoff)
}

/// Access-to-bank-credit class.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum RatingClass {
    A,
    B,
    C,
}

impl fmt::Display for RatingClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RatingClass::A => "A",
            RatingClass::B => "B",
            RatingClass::C => "C",
        })
    }
}

pub fn rating_class(rating: Rating) -> RatingClass {
    match rating.get() {
        1..=3 => RatingClass::A,
        4..=6 => RatingClass::B,
        _ => RatingClass::C,
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeClass {
    Large,
    Small,
}

impl SizeClass {
    pub fn of_sales(sales: f64) -> Self {
        if sales > LARGE_FIRM_SALES {
            SizeClass::Large
        } else {
            SizeClass::Small
        }
    }
}

impl fmt::Display for SizeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SizeClass::Large => "large",
            SizeClass::Small => "small",
        })
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Grouping {
    Rating,
    RatingSize,
    Sector,
}

impl Grouping {
    fn key(self, p: &CagrPoint) -> GroupKey {
        match self {
            Grouping::Rating => GroupKey::Rating(p.rating_class),
            Grouping::RatingSize => GroupKey::RatingSize(p.rating_class, p.size_class),
            Grouping::Sector => GroupKey::Sector(p.sector.letter),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum GroupKey {
    Rating(RatingClass),
    RatingSize(RatingClass, SizeClass),
    Sector(SectorLetter),
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupKey::Rating(r) => write!(f, "{r}"),
            GroupKey::RatingSize(r, s) => write!(f, "{r}/{s}"),
            GroupKey::Sector(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowStatus {
    Ok,
    Insufficient,
    DegenerateVariance,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationRow {
    pub group: String,
    pub n: usize,
    pub pearson_r: Option<f64>,
    pub status: RowStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationTable {
    pub grouping: Grouping,
    pub rows: Vec<CorrelationRow>,
}

impl CorrelationTable {
    pub fn row(&self, group: &str) -> Option<&CorrelationRow> {
        self.rows.iter().find(|r| r.group == group)
    }
}

/// Pearson r of `(predicted_cagr, actual_cagr)` within each group.
/// Groups with fewer than two points are marked insufficient.
pub fn grouped_correlations(points: &[CagrPoint], grouping: Grouping) -> CorrelationTable {
    let mut groups: BTreeMap<GroupKey, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for p in points {
        let entry = groups.entry(grouping.key(p)).or_default();
        entry.0.push(p.predicted_cagr);
        entry.1.push(p.actual_cagr);
    }
    let rows = groups
        .into_iter()
        .map(|(key, (xs, ys))| {
            let n = xs.len();
            let (pearson_r, status) = if n < 2 {
                (None, RowStatus::Insufficient)
            } else {
                match pearson(&xs, &ys) {
                    Ok(r) => (Some(r), RowStatus::Ok),
                    Err(_) => (None, RowStatus::DegenerateVariance),
                }
            };
            CorrelationRow {
                group: key.to_string(),
                n,
                pearson_r,
                status,
            }
        })
        .collect();
    CorrelationTable { grouping, rows }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{SectorCode, SectorLetter};
    use proptest::prelude::*;

    /// Textbook one-pass formula, kept apart from the centered implementation.
    fn pearson_textbook(xs: &[f64], ys: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let sx: f64 = xs.iter().sum();
        let sy: f64 = ys.iter().sum();
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        let syy: f64 = ys.iter().map(|y| y * y).sum();
        let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
        (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
    }

    #[test]
    fn pearson_perfect_lines() {
        let xs = [1.0, 2.0, 3.0, 7.0];
        let up: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let down: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert!((pearson(&xs, &up).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&xs, &down).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn pearson_small_fixture() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [1.0, 3.0, 2.0, 5.0];
        // centered sums: Sxy = 5.5, Sxx = 5, Syy = 8.75
        let expected = 5.5 / (5.0f64 * 8.75).sqrt();
        assert!((pearson_textbook(&xs, &ys) - expected).abs() < 1e-15);
        assert!((pearson(&xs, &ys).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn pearson_errors() {
        assert_eq!(
            pearson(&[1.0, 1.0], &[1.0, 2.0]),
            Err(StatsError::DegenerateVariance)
        );
        assert_eq!(
            pearson(&[1.0], &[1.0]),
            Err(StatsError::TooFewPoints { needed: 2, got: 1 })
        );
        assert_eq!(
            pearson(&[1.0, 2.0], &[1.0]),
            Err(StatsError::LengthMismatch(2, 1))
        );
        assert_eq!(
            pearson(&[1.0, f64::NAN], &[1.0, 2.0]),
            Err(StatsError::NonFinite)
        );
    }

    #[test]
    fn quartiles_interpolate() {
        let q = Quartiles::of(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!(q.q1, 1.75);
        assert_eq!(q.median, 2.5);
        assert_eq!(q.q3, 3.25);
        assert_eq!(Quartiles::of(&[]), Err(StatsError::Empty));
    }

    #[test]
    fn ccdf_small_sequences() {
        assert_eq!(
            ccdf_points(&[1, 1, 2]),
            vec![
                CcdfPoint { k: 1, ccdf: 1.0 },
                CcdfPoint {
                    k: 2,
                    ccdf: 1.0 / 3.0
                }
            ]
        );
        assert_eq!(ccdf_points(&[4, 4, 4]), vec![CcdfPoint { k: 4, ccdf: 1.0 }]);
        assert!(ccdf_points(&[]).is_empty());
    }

    #[test]
    fn ccdf_exact_power_law() {
        let pts: Vec<CcdfPoint> = (1..=100)
            .map(|k| CcdfPoint {
                k,
                ccdf: (k as f64).powf(-1.3),
            })
            .collect();
        let fit = fit_ccdf_slope(&pts, 1, None).unwrap();
        assert!((fit.slope + 1.3).abs() < 1e-9);
        assert!((fit.density_exponent() + 2.3).abs() < 1e-9);
        assert!((fit.r_squared.unwrap() - 1.0).abs() < 1e-12);

        let flat: Vec<CcdfPoint> = (1..=10).map(|k| CcdfPoint { k, ccdf: 0.5 }).collect();
        let fit = fit_ccdf_slope(&flat, 1, None).unwrap();
        assert_eq!(fit.slope, 0.0);
        assert_eq!(fit.r_squared, None);

        assert!(matches!(
            fit_ccdf_slope(&pts, 50, Some(51)),
            Err(StatsError::TooFewPoints { .. })
        ));
    }

    #[test]
    fn size_equals_degree() {
        let pairs: Vec<(usize, f64)> = (1..=20).map(|k| (k, k as f64)).collect();
        let fit = regress_size_on_degree(&pairs, None).unwrap();
        assert!((fit.regression.slope - 1.0).abs() < 1e-12);
        assert!((fit.regression.pearson_r.unwrap() - 1.0).abs() < 1e-12);
        // ln 1..ln 20 spans bins 0, 1, 2
        assert_eq!(
            fit.bins.iter().map(|b| b.n).collect::<Vec<_>>(),
            vec![2, 5, 13]
        );
    }

    #[test]
    fn constant_size_flags_degenerate_r() {
        let pairs: Vec<(usize, f64)> = (1..=20).map(|k| (k, 5e5)).collect();
        let fit = regress_size_on_degree(&pairs, Some(150)).unwrap();
        assert!(fit.regression.slope.abs() < 1e-12);
        assert_eq!(fit.regression.pearson_r, None);
    }

    #[test]
    fn cutoff_excludes_large_degrees() {
        let mut pairs: Vec<(usize, f64)> = (1..=20).map(|k| (k, k as f64)).collect();
        pairs.push((1000, 1.0));
        let cut = regress_size_on_degree(&pairs, Some(150)).unwrap();
        assert_eq!(cut.regression.n, 20);
        assert!((cut.regression.slope - 1.0).abs() < 1e-12);
        let open = regress_size_on_degree(&pairs, None).unwrap();
        assert_eq!(open.regression.n, 21);
        assert!(regress_size_on_degree(&pairs[..2], None).is_err());
    }

    #[test]
    fn rating_table() {
        let class = |r| rating_class(Rating::new(r).unwrap());
        assert_eq!(class(1), RatingClass::A);
        assert_eq!(class(3), RatingClass::A);
        assert_eq!(class(4), RatingClass::B);
        assert_eq!(class(6), RatingClass::B);
        assert_eq!(class(7), RatingClass::C);
        assert_eq!(class(9), RatingClass::C);
    }

    #[test]
    fn size_boundary_is_strict() {
        assert_eq!(SizeClass::of_sales(1e6), SizeClass::Small);
        assert_eq!(SizeClass::of_sales(1e6 + 1.0), SizeClass::Large);
    }

    fn cagr(id: &str, x: f64, y: f64, rating: u8, sales: f64) -> CagrPoint {
        let rating = Rating::new(rating).unwrap();
        CagrPoint {
            supplier: FirmId::new(id).unwrap(),
            predicted_cagr: x,
            actual_cagr: y,
            rating,
            rating_class: rating.class(),
            size_class: SizeClass::of_sales(sales),
            sector: SectorCode::letter(SectorLetter::D),
        }
    }

    #[test]
    fn grouped_table_marks_small_groups() {
        let mut points: Vec<CagrPoint> = (0..5)
            .map(|k| cagr(&format!("a{k}"), k as f64, 2.0 * k as f64, 1, 2e6))
            .collect();
        points.push(cagr("b0", 0.3, 0.1, 5, 2e6));
        let table = grouped_correlations(&points, Grouping::Rating);
        let a = table.row("A").unwrap();
        assert_eq!(a.n, 5);
        assert!((a.pearson_r.unwrap() - 1.0).abs() < 1e-15);
        let b = table.row("B").unwrap();
        assert_eq!(b.status, RowStatus::Insufficient);
        assert_eq!(b.pearson_r, None);

        let by_size = grouped_correlations(&points, Grouping::RatingSize);
        assert!(by_size.row("A/large").is_some());
        let by_sector = grouped_correlations(&points, Grouping::Sector);
        assert_eq!(by_sector.rows.len(), 1);
        assert_eq!(by_sector.rows[0].group, "D");
    }

    proptest! {
        #[test]
        fn pearson_matches_textbook(
            pairs in proptest::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..60)
        ) {
            let (xs, ys): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            if let Ok(r) = pearson(&xs, &ys) {
                prop_assert!((r - pearson_textbook(&xs, &ys)).abs() < 1e-9);
            }
        }

        #[test]
        fn pearson_affine_invariance(
            pairs in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..40),
            a in 0.1f64..10.0, b in -5.0f64..5.0,
        ) {
            let (xs, ys): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            if let Ok(r) = pearson(&xs, &ys) {
                let tx: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
                let neg: Vec<f64> = ys.iter().map(|y| -y).collect();
                prop_assert!((pearson(&tx, &ys).unwrap() - r).abs() < 1e-9);
                prop_assert!((pearson(&xs, &neg).unwrap() + r).abs() < 1e-12);
            }
        }

        #[test]
        fn ccdf_is_monotone(degrees in proptest::collection::vec(1usize..50, 1..200)) {
            let pts = ccdf_points(&degrees);
            prop_assert_eq!(pts[0].ccdf, 1.0);
            for w in pts.windows(2) {
                prop_assert!(w[1].ccdf < w[0].ccdf);
                prop_assert!(w[1].k > w[0].k);
            }
            for p in &pts {
                let brute = degrees.iter().filter(|&&d| d >= p.k).count() as f64 / degrees.len() as f64;
                prop_assert_eq!(p.ccdf, brute);
            }
        }

        #[test]
        fn grouped_rows_partition_points(
            specs in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0, 1u8..=9, 1e5f64..1e7), 0..50)
        ) {
            let points: Vec<CagrPoint> = specs
                .iter()
                .enumerate()
                .map(|(k, &(x, y, r, s))| cagr(&format!("f{k}"), x, y, r, s))
                .collect();
            for g in [Grouping::Rating, Grouping::RatingSize, Grouping::Sector] {
                let table = grouped_correlations(&points, g);
                prop_assert_eq!(table.rows.iter().map(|r| r.n).sum::<usize>(), points.len());
            }
        }
    }
}
