//! Actual and predicted log growth of supplier sales.
//!
//! The prediction assumes each customer spreads its change in purchases
//! uniformly over all of its suppliers and that the 2007 links persist in
//! the neighbouring years. For a period `(y0, y1)` the predicted growth of
//! supplier `i` is
//!
//! ```text
//! ln( Σ_j (P_j,y1 / P_j,2007) · R_ji  /  Σ_j (P_j,y0 / P_j,2007) · R_ji )
//! ```
//!
//! which for 2007→2008 has a plain `Σ R_ji` denominator and for 2006→2007 a
//! plain `Σ R_ji` numerator. All growth rates are natural logs.

use std::fmt;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::ingest::{Dataset, FirmId, Rating, SectorCode, Year};
use crate::network::TradeNetwork;
use crate::stats::{RatingClass, SizeClass};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GrowthError {
    #[error("balance-missing: no {year} balance for {firm}")]
    BalanceMissing { firm: FirmId, year: Year },
    #[error("customer {customer} lacks positive purchases for {year}")]
    CustomerDataMissing { customer: FirmId, year: Year },
    #[error("no-usable-customers")]
    NoUsableCustomers,
    #[error("degenerate-denominator")]
    DegenerateDenominator,
    #[error("empty point list")]
    Empty,
}

/// A pair of consecutive years.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Period {
    /// 2006 → 2007.
    Early,
    /// 2007 → 2008.
    Late,
}

impl Period {
    pub const BOTH: [Period; 2] = [Period::Early, Period::Late];

    pub fn base(self) -> Year {
        match self {
            Period::Early => Year::Y2006,
            Period::Late => Year::Y2007,
        }
    }

    pub fn next(self) -> Year {
        match self {
            Period::Early => Year::Y2007,
            Period::Late => Year::Y2008,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Period::Early => 0,
            Period::Late => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Period::Early => "2006-2007",
            Period::Late => "2007-2008",
        }
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl Serialize for Period {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

/// Treatment of customers whose purchases are missing for a needed year.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MissingPolicy {
    /// Leave them out of both sums.
    #[default]
    DropRenormalize,
    /// Refuse to compute.
    Fail,
}

fn sales(dataset: &Dataset, firm: &FirmId, year: Year) -> Result<f64, GrowthError> {
    dataset
        .sales(firm, year)
        .ok_or_else(|| GrowthError::BalanceMissing {
            firm: firm.clone(),
            year,
        })
}

/// `ln(R_i,y1 / R_i,y0)`.
pub fn actual_log_growth(
    dataset: &Dataset,
    supplier: &FirmId,
    period: Period,
) -> Result<f64, GrowthError> {
    let before = sales(dataset, supplier, period.base())?;
    let after = sales(dataset, supplier, period.next())?;
    Ok((after / before).ln())
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct PredictedGrowth {
    pub value: f64,
    /// Share of `P_i` carried by customers that entered the sums.
    pub usable_weight_fraction: f64,
}

/// Purchases of `customer` in `year` relative to 2007, if both are positive.
fn purchase_trend(dataset: &Dataset, customer: &FirmId, year: Year) -> Result<f64, Year> {
    let positive = |y| dataset.purchases(customer, y).filter(|p| *p > 0.0).ok_or(y);
    let reference = positive(Year::Y2007)?;
    let value = positive(year)?;
    Ok(value / reference)
}

/// Aggregated growth of orders placed with `supplier` over `period`.
pub fn predicted_log_growth(
    net: &TradeNetwork,
    supplier: &FirmId,
    period: Period,
    policy: MissingPolicy,
) -> Result<PredictedGrowth, GrowthError> {
    let dataset = net.dataset();
    let (mut numerator, mut denominator) = (0.0, 0.0);
    let (mut retained, mut total) = (0.0, 0.0);
    for (customer, weight) in net.in_edges(supplier) {
        total += weight;
        let trends = purchase_trend(dataset, customer, period.base())
            .and_then(|lo| purchase_trend(dataset, customer, period.next()).map(|hi| (lo, hi)));
        match trends {
            Ok((lo, hi)) => {
                numerator += hi * weight;
                denominator += lo * weight;
                retained += weight;
            }
            Err(year) if policy == MissingPolicy::Fail => {
                return Err(GrowthError::CustomerDataMissing {
                    customer: customer.clone(),
                    year,
                });
            }
            Err(_) => {}
        }
    }
    if retained == 0.0 {
        return Err(GrowthError::NoUsableCustomers);
    }
    if !(denominator > 0.0 && denominator.is_finite() && numerator.is_finite()) {
        return Err(GrowthError::DegenerateDenominator);
    }
    Ok(PredictedGrowth {
        value: (numerator / denominator).ln(),
        usable_weight_fraction: retained / total,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthPoint {
    pub supplier: FirmId,
    pub period: Period,
    pub predicted: f64,
    pub actual: f64,
    pub usable_weight_fraction: f64,
}

impl GrowthPoint {
    pub fn xy(&self) -> (f64, f64) {
        (self.predicted, self.actual)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Exclusion {
    pub supplier: FirmId,
    pub reason: String,
}

#[derive(Clone, Debug)]
pub struct Scatter {
    pub period: Period,
    /// Ascending by supplier.
    pub points: Vec<GrowthPoint>,
    pub exclusions: Vec<Exclusion>,
}

impl Scatter {
    pub fn xs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.predicted).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.actual).collect()
    }
}

fn growth_point(
    net: &TradeNetwork,
    supplier: &FirmId,
    period: Period,
    policy: MissingPolicy,
) -> Result<GrowthPoint, GrowthError> {
    let predicted = predicted_log_growth(net, supplier, period, policy)?;
    let actual = actual_log_growth(net.dataset(), supplier, period)?;
    Ok(GrowthPoint {
        supplier: supplier.clone(),
        period,
        predicted: predicted.value,
        actual,
        usable_weight_fraction: predicted.usable_weight_fraction,
    })
}

fn sorted_unique(suppliers: &[FirmId]) -> Vec<FirmId> {
    let mut ids = suppliers.to_vec();
    ids.sort();
    ids.dedup();
    ids
}

/// Per-supplier mapping run in parallel; results come back in ascending
/// supplier order regardless of thread count.
fn per_supplier<T: Send>(
    suppliers: &[FirmId],
    f: impl Fn(&FirmId) -> Result<T, GrowthError> + Sync,
) -> (Vec<T>, Vec<Exclusion>) {
    let results: Vec<(FirmId, Result<T, GrowthError>)> = sorted_unique(suppliers)
        .into_par_iter()
        .map(|s| {
            let r = f(&s);
            (s, r)
        })
        .collect();
    let mut ok = Vec::new();
    let mut excluded = Vec::new();
    for (supplier, r) in results {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => excluded.push(Exclusion {
                supplier,
                reason: e.to_string(),
            }),
        }
    }
    (ok, excluded)
}

/// Growth points for every supplier where both coordinates are defined.
pub fn build_scatter(
    net: &TradeNetwork,
    suppliers: &[FirmId],
    period: Period,
    policy: MissingPolicy,
) -> Scatter {
    let (points, exclusions) = per_supplier(suppliers, |s| growth_point(net, s, period, policy));
    Scatter {
        period,
        points,
        exclusions,
    }
}

/// Two-period mean log growth of one supplier, with its rating and size.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CagrPoint {
    pub supplier: FirmId,
    pub predicted_cagr: f64,
    pub actual_cagr: f64,
    pub rating: Rating,
    pub rating_class: RatingClass,
    pub size_class: SizeClass,
    pub sector: SectorCode,
}

#[derive(Clone, Debug)]
pub struct CagrSet {
    pub points: Vec<CagrPoint>,
    pub exclusions: Vec<Exclusion>,
}

/// Rating, size and sector are taken from the 2007 balance.
pub fn cagr_points(net: &TradeNetwork, suppliers: &[FirmId], policy: MissingPolicy) -> CagrSet {
    let (points, exclusions) = per_supplier(suppliers, |s| {
        let early = growth_point(net, s, Period::Early, policy)?;
        let late = growth_point(net, s, Period::Late, policy)?;
        let balance =
            net.dataset()
                .balance(s, Year::Y2007)
                .ok_or_else(|| GrowthError::BalanceMissing {
                    firm: s.clone(),
                    year: Year::Y2007,
                })?;
        Ok(CagrPoint {
            supplier: s.clone(),
            predicted_cagr: 0.5 * (early.predicted + late.predicted),
            actual_cagr: 0.5 * (early.actual + late.actual),
            rating: balance.rating,
            rating_class: balance.rating.class(),
            size_class: SizeClass::of_sales(balance.sales),
            sector: balance.sector,
        })
    });
    CagrSet { points, exclusions }
}

/// Scatter quadrant. Zero coordinates count as positive.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Quadrant {
    I,
    II,
    III,
    IV,
}

impl Quadrant {
    pub fn of(x: f64, y: f64) -> Self {
        match (x >= 0.0, y >= 0.0) {
            (true, true) => Quadrant::I,
            (false, true) => Quadrant::II,
            (false, false) => Quadrant::III,
            (true, false) => Quadrant::IV,
        }
    }

    fn index(self) -> usize {
        match self {
            Quadrant::I => 0,
            Quadrant::II => 1,
            Quadrant::III => 2,
            Quadrant::IV => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScatterStats {
    pub n: usize,
    pub median_x: f64,
    pub median_y: f64,
    pub quartiles_x: crate::stats::Quartiles,
    pub quartiles_y: crate::stats::Quartiles,
    pub mean_x: f64,
    pub mean_y: f64,
    /// Counts for quadrants I, II, III, IV.
    pub quadrant_counts: [usize; 4],
    /// Quadrant of the median point.
    pub centroid_quadrant: Quadrant,
}

/// Medians, quartiles, means and quadrant counts of `(x, y)` points.
pub fn scatter_stats(points: &[(f64, f64)]) -> Result<ScatterStats, GrowthError> {
    if points.is_empty() {
        return Err(GrowthError::Empty);
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
    let quartiles_x = crate::stats::Quartiles::of(&xs).map_err(|_| GrowthError::Empty)?;
    let quartiles_y = crate::stats::Quartiles::of(&ys).map_err(|_| GrowthError::Empty)?;
    let mut quadrant_counts = [0usize; 4];
    for &(x, y) in points {
        quadrant_counts[Quadrant::of(x, y).index()] += 1;
    }
    Ok(ScatterStats {
        n: points.len(),
        median_x: quartiles_x.median,
        median_y: quartiles_y.median,
        quartiles_x,
        quartiles_y,
        mean_x: crate::stats::mean(&xs),
        mean_y: crate::stats::mean(&ys),
        quadrant_counts,
        centroid_quadrant: Quadrant::of(quartiles_x.median, quartiles_y.median),
    })
}

pub fn write_growth_csv<'a>(
    mut out: impl Write,
    points: impl IntoIterator<Item = &'a GrowthPoint>,
) -> io::Result<()> {
    writeln!(
        out,
        "supplier_id,period,predicted,actual,usable_weight_fraction"
    )?;
    for p in points {
        writeln!(
            out,
            "{},{},{},{},{}",
            p.supplier, p.period, p.predicted, p.actual, p.usable_weight_fraction
        )?;
    }
    Ok(())
}

pub fn write_cagr_csv<'a>(
    mut out: impl Write,
    points: impl IntoIterator<Item = &'a CagrPoint>,
) -> io::Result<()> {
    writeln!(
        out,
        "supplier_id,predicted_cagr,actual_cagr,rating,rating_class,size_class,sector"
    )?;
    for p in points {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            p.supplier,
            p.predicted_cagr,
            p.actual_cagr,
            p.rating.get(),
            p.rating_class,
            p.size_class,
            p.sector
        )?;
    }
    Ok(())
}
