//! Synthetic trade-credit datasets with a planted contagion coefficient.
//!
//! Supplier sales growth is generated as `β·x + d + ε`, where `x` is the
//! aggregated growth of its customers' purchases computed exactly as the
//! analysis pipeline does, `d` an optional supplier drift and `ε` Gaussian
//! noise. Customer purchase growth carries the macro drift `μ`.
//!
//! Randomness comes from a single `ChaCha20Rng` (rand_chacha 0.9.0) seeded
//! with `seed_from_u64(seed)`; normals and Pareto draws use rand_distr 0.5.1.
//! The draw order is fixed:
//!
//! 1. in-degree of every supplier (truncated zeta, inverse CDF);
//! 2. per supplier, the distinct customer indices (`rand::seq::index::sample`);
//! 3. per supplier, one Pareto edge weight per customer in ascending order;
//! 4. per supplier, the matching draw `m ~ U(lo, hi)`;
//! 5. per active customer: coverage factor, two standard normals, rating
//!    and sector;
//! 6. per supplier: rating, sector, two standard normals, purchase fraction.
//!
//! Every draw happens regardless of parameter values (a zero σ still
//! consumes its normal), so changing a scale never shifts the stream.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Pareto, StandardNormal};
use serde::Serialize;
use thiserror::Error;

use crate::ingest::{
    assemble_dataset, write_balance_csv, write_invoices_csv, BalanceRecord, CoveragePolicy,
    Dataset, FirmId, InvoiceRecord, ParseOutcome, Rating, SectorCode, SectorLetter, Year,
};
use crate::stats::RatingClass;

/// Customers available per supplier when no pool size is given.
pub const DEFAULT_POOL_FACTOR: usize = 16;

/// Edge weights are clamped here so amounts stay exactly representable.
pub const WEIGHT_CAP: f64 = 1e12;

/// Customer sales as a multiple of their purchases.
const CUSTOMER_MARKUP: f64 = 1.25;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("customer pool of {0} firms cannot be represented")]
    PoolTooLarge(usize),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<io::Error> for SynthError {
    fn from(e: io::Error) -> Self {
        SynthError::Io(e.to_string())
    }
}

/// Contagion coefficient, global or per rating class.
#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BetaSpec {
    Scalar(f64),
    ByClass { a: f64, b: f64, c: f64 },
}

impl BetaSpec {
    pub fn for_class(self, class: RatingClass) -> f64 {
        match (self, class) {
            (BetaSpec::Scalar(b), _) => b,
            (BetaSpec::ByClass { a, .. }, RatingClass::A) => a,
            (BetaSpec::ByClass { b, .. }, RatingClass::B) => b,
            (BetaSpec::ByClass { c, .. }, RatingClass::C) => c,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SynthConfig {
    pub n_suppliers: usize,
    /// Size of the customer pool; `None` means `16 × n_suppliers`.
    pub customer_pool: Option<usize>,
    /// Density exponent of the in-degree distribution, `P(k) ∝ k^-γ`.
    pub degree_exponent: f64,
    /// Pareto shape of the edge weights.
    pub weight_tail_exponent: f64,
    /// Pareto scale (smallest edge weight), EUR.
    pub weight_scale: f64,
    /// Open interval every supplier's matching ratio is drawn from.
    pub matching_range: (f64, f64),
    /// Customer purchases are at least this multiple of in-network spend.
    pub coverage_min: f64,
    pub beta: BetaSpec,
    /// Per-sector coefficient overriding `beta`.
    pub sector_beta: BTreeMap<SectorLetter, f64>,
    /// Macro log-drift of customer purchases, per period (early, late).
    pub mu: [f64; 2],
    /// Extra log-drift added to supplier sales, per period.
    pub supplier_drift: [f64; 2],
    pub sigma_supplier: f64,
    pub sigma_customer: f64,
    /// Probabilities of ratings 1..=9.
    pub rating_mix: [f64; 9],
    pub sector_mix: Vec<(SectorLetter, f64)>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_suppliers: 500,
            customer_pool: None,
            degree_exponent: 2.3,
            weight_tail_exponent: 1.5,
            weight_scale: 5_000.0,
            matching_range: (0.8, 1.2),
            coverage_min: 1.25,
            beta: BetaSpec::Scalar(1.0),
            sector_beta: BTreeMap::new(),
            mu: [0.0, 0.0],
            supplier_drift: [0.0, 0.0],
            sigma_supplier: 0.05,
            sigma_customer: 0.1,
            rating_mix: [1.0 / 9.0; 9],
            sector_mix: vec![
                (SectorLetter::C, 0.025),
                (SectorLetter::D, 0.5),
                (SectorLetter::E, 0.025),
                (SectorLetter::F, 0.075),
                (SectorLetter::G, 0.125),
                (SectorLetter::H, 0.05),
                (SectorLetter::I, 0.075),
                (SectorLetter::K, 0.1),
                (SectorLetter::O, 0.025),
            ],
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn pool_size(&self) -> usize {
        self.customer_pool
            .unwrap_or(self.n_suppliers.saturating_mul(DEFAULT_POOL_FACTOR))
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |msg: &str| Err(SynthError::InvalidConfig(msg.to_string()));
        if self.n_suppliers == 0 {
            return bad("n_suppliers must be positive");
        }
        let pool = self.pool_size();
        if pool == 0 {
            return bad("customer pool must be positive");
        }
        // ids and the degree table must stay addressable
        if self.n_suppliers.checked_mul(DEFAULT_POOL_FACTOR).is_none() || pool > 100_000_000 {
            return Err(SynthError::PoolTooLarge(pool));
        }
        if !(self.degree_exponent > 1.0 && self.degree_exponent.is_finite()) {
            return bad("degree_exponent must be > 1");
        }
        if !(self.weight_tail_exponent > 1.0 && self.weight_tail_exponent.is_finite()) {
            return bad("weight_tail_exponent must be > 1");
        }
        if !(self.weight_scale > 0.0 && self.weight_scale <= WEIGHT_CAP) {
            return bad("weight_scale must be in (0, 1e12]");
        }
        let (lo, hi) = self.matching_range;
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return bad("matching_range must satisfy 0 < lo < hi < inf");
        }
        if !(self.coverage_min >= 1.0 && self.coverage_min.is_finite()) {
            return bad("coverage_min must be >= 1");
        }
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        let betas = match self.beta {
            BetaSpec::Scalar(b) => vec![b],
            BetaSpec::ByClass { a, b, c } => vec![a, b, c],
        };
        if !finite(&betas)
            || !finite(&self.sector_beta.values().copied().collect::<Vec<_>>())
            || !finite(&self.mu)
            || !finite(&self.supplier_drift)
        {
            return bad("beta, mu and drift must be finite");
        }
        if !(self.sigma_supplier >= 0.0 && self.sigma_supplier.is_finite())
            || !(self.sigma_customer >= 0.0 && self.sigma_customer.is_finite())
        {
            return bad("sigmas must be finite and non-negative");
        }
        check_mix(&self.rating_mix, "rating_mix")?;
        let sector_probs: Vec<f64> = self.sector_mix.iter().map(|(_, p)| *p).collect();
        check_mix(&sector_probs, "sector_mix")?;
        Ok(())
    }
}

fn check_mix(probs: &[f64], name: &str) -> Result<(), SynthError> {
    let sum: f64 = probs.iter().sum();
    if probs.is_empty()
        || probs.iter().any(|p| !p.is_finite() || *p < 0.0)
        || (sum - 1.0).abs() > 1e-12
    {
        return Err(SynthError::InvalidConfig(format!(
            "{name} must be non-negative probabilities summing to 1"
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlantedSupplier {
    pub supplier: FirmId,
    pub in_degree: usize,
    pub matching: f64,
    pub rating: Rating,
    pub rating_class: RatingClass,
    pub sector: SectorCode,
    pub beta: f64,
    /// Aggregated customer growth per period (early, late).
    pub x: [f64; 2],
    /// Idiosyncratic noise per period.
    pub epsilon: [f64; 2],
}

/// Ground truth behind a generated dataset.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlantedTruth {
    pub config: SynthConfig,
    pub mu: [f64; 2],
    pub supplier_drift: [f64; 2],
    /// Ascending by supplier id.
    pub suppliers: Vec<PlantedSupplier>,
}

impl PlantedTruth {
    pub fn supplier(&self, id: &FirmId) -> Option<&PlantedSupplier> {
        self.suppliers
            .binary_search_by(|s| s.supplier.cmp(id))
            .ok()
            .map(|k| &self.suppliers[k])
    }
}

/// Inverse-CDF sampler for `P(k) ∝ k^-γ`, `k = 1..=k_max`.
struct TruncatedZeta {
    cumulative: Vec<f64>,
}

impl TruncatedZeta {
    fn new(exponent: f64, k_max: usize) -> Self {
        let mut acc = 0.0;
        let cumulative = (1..=k_max)
            .map(|k| {
                acc += (k as f64).powf(-exponent);
                acc
            })
            .collect();
        TruncatedZeta { cumulative }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("k_max >= 1");
        let u = rng.random::<f64>() * total;
        let k = self.cumulative.partition_point(|&c| c <= u);
        k.min(self.cumulative.len() - 1) + 1
    }
}

fn pick<R: Rng, T: Copy>(rng: &mut R, items: &[(T, f64)]) -> T {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for &(item, p) in items {
        acc += p;
        if u < acc {
            return item;
        }
    }
    // rounding left u above the last partial sum
    items
        .iter()
        .rev()
        .find(|(_, p)| *p > 0.0)
        .expect("non-empty mix")
        .0
}

fn id_width(n: usize) -> usize {
    n.to_string().len().max(5)
}

/// Builds a dataset and its planted truth from `config`.
pub fn generate(config: &SynthConfig) -> Result<(Dataset, PlantedTruth), SynthError> {
    config.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let n = config.n_suppliers;
    let pool = config.pool_size();
    let (lo, hi) = config.matching_range;

    let supplier_ids: Vec<FirmId> = {
        let w = id_width(n);
        (0..n)
            .map(|k| FirmId::new(&format!("S{:0w$}", k + 1)).expect("valid id"))
            .collect()
    };
    let customer_id = {
        let w = id_width(pool);
        move |k: usize| FirmId::new(&format!("C{:0w$}", k + 1)).expect("valid id")
    };

    // 1. degrees
    let zeta = TruncatedZeta::new(config.degree_exponent, pool);
    let degrees: Vec<usize> = (0..n).map(|_| zeta.sample(&mut rng)).collect();

    // 2. customers, ascending
    let neighbours: Vec<Vec<usize>> = degrees
        .iter()
        .map(|&k| {
            let mut picked = index::sample(&mut rng, pool, k).into_vec();
            picked.sort_unstable();
            picked
        })
        .collect();

    // 3. weights
    let pareto = Pareto::new(config.weight_scale, config.weight_tail_exponent)
        .map_err(|e| SynthError::InvalidConfig(e.to_string()))?;
    let weights: Vec<Vec<f64>> = neighbours
        .iter()
        .map(|cs| {
            cs.iter()
                .map(|_| pareto.sample(&mut rng).min(WEIGHT_CAP))
                .collect()
        })
        .collect();

    // 4. 2007 sales from the matching draw; the ratio is re-checked in
    // floating point so the filter keeps every supplier.
    let mut matching = Vec::with_capacity(n);
    let mut sales_2007 = Vec::with_capacity(n);
    for w in &weights {
        let invoice_total: f64 = w.iter().sum();
        loop {
            let m = lo + (hi - lo) * rng.random::<f64>();
            let sales = invoice_total / m;
            let ratio = invoice_total / sales;
            if lo < ratio && ratio < hi {
                matching.push(ratio);
                sales_2007.push(sales);
                break;
            }
        }
    }

    // 5. customers with at least one supplier
    let mut spend: BTreeMap<usize, f64> = BTreeMap::new();
    for (cs, ws) in neighbours.iter().zip(&weights) {
        for (&c, &w) in cs.iter().zip(ws) {
            *spend.entry(c).or_insert(0.0) += w;
        }
    }
    let ratings: Vec<(Rating, f64)> = config
        .rating_mix
        .iter()
        .enumerate()
        .map(|(k, &p)| (Rating::new(k as u8 + 1).expect("1..=9"), p))
        .collect();
    let mut purchases: BTreeMap<usize, [f64; 3]> = BTreeMap::new();
    let mut balances: Vec<BalanceRecord> = Vec::new();
    for (&c, &total) in &spend {
        let coverage = config.coverage_min * (1.0 + rng.random::<f64>());
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        let rating = pick(&mut rng, &ratings);
        let sector = SectorCode::letter(pick(&mut rng, &config.sector_mix));
        let g1 = config.mu[0] + config.sigma_customer * z1;
        let g2 = config.mu[1] + config.sigma_customer * z2;
        let p07 = coverage * total;
        let p = [p07 * (-g1).exp(), p07, p07 * g2.exp()];
        purchases.insert(c, p);
        let firm = customer_id(c);
        for (k, year) in Year::ALL.into_iter().enumerate() {
            balances.push(BalanceRecord {
                firm: firm.clone(),
                year,
                sales: p[k] * CUSTOMER_MARKUP,
                purchases: p[k],
                rating,
                sector,
            });
        }
    }

    // 6. suppliers
    let mut planted = Vec::with_capacity(n);
    let mut invoices = Vec::new();
    for s in 0..n {
        let id = supplier_ids[s].clone();
        let rating = pick(&mut rng, &ratings);
        let sector = SectorCode::letter(pick(&mut rng, &config.sector_mix));
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        let purchase_share = 0.3 + 0.4 * rng.random::<f64>();

        let (mut early_num, mut early_den, mut late_num, mut late_den) = (0.0, 0.0, 0.0, 0.0);
        for (&c, &w) in neighbours[s].iter().zip(&weights[s]) {
            let p = purchases[&c];
            early_num += w;
            early_den += p[0] / p[1] * w;
            late_num += p[2] / p[1] * w;
            late_den += w;
            invoices.push(InvoiceRecord {
                supplier: id.clone(),
                customer: customer_id(c),
                amount: w,
                year: Year::Y2007,
            });
        }
        let x = [(early_num / early_den).ln(), (late_num / late_den).ln()];
        let beta = config
            .sector_beta
            .get(&sector.letter)
            .copied()
            .unwrap_or_else(|| config.beta.for_class(rating.class()));
        let epsilon = [config.sigma_supplier * z1, config.sigma_supplier * z2];
        let r07 = sales_2007[s];
        let sales = [
            r07 * (-(beta * x[0] + config.supplier_drift[0] + epsilon[0])).exp(),
            r07,
            r07 * (beta * x[1] + config.supplier_drift[1] + epsilon[1]).exp(),
        ];
        for (k, year) in Year::ALL.into_iter().enumerate() {
            balances.push(BalanceRecord {
                firm: id.clone(),
                year,
                sales: sales[k],
                purchases: sales[k] * purchase_share,
                rating,
                sector,
            });
        }
        planted.push(PlantedSupplier {
            supplier: id,
            in_degree: degrees[s],
            matching: matching[s],
            rating,
            rating_class: rating.class(),
            sector,
            beta,
            x,
            epsilon,
        });
    }

    let dataset = assemble_dataset(
        ParseOutcome::from_records(balances),
        ParseOutcome::from_records(invoices),
        &CoveragePolicy::keep(),
    );
    let truth = PlantedTruth {
        config: config.clone(),
        mu: config.mu,
        supplier_drift: config.supplier_drift,
        suppliers: planted,
    };
    Ok((dataset, truth))
}

/// `generate` with a positive drift in the first period and a negative one
/// in the second.
pub fn scenario_boom_bust(
    config: &SynthConfig,
    boom: f64,
    bust: f64,
) -> Result<(Dataset, PlantedTruth), SynthError> {
    if !(boom > 0.0 && bust < 0.0) {
        return Err(SynthError::InvalidConfig(format!(
            "boom-bust needs boom > 0 > bust, got ({boom}, {bust})"
        )));
    }
    generate(&SynthConfig {
        mu: [boom, bust],
        ..config.clone()
    })
}

pub const BALANCE_FILE: &str = "balance.csv";
pub const INVOICES_FILE: &str = "invoices.csv";
pub const TRUTH_FILE: &str = "truth.json";

/// Writes `balance.csv`, `invoices.csv` and `truth.json` into `dir`.
pub fn write_outputs(
    dir: &Path,
    dataset: &Dataset,
    truth: &PlantedTruth,
) -> Result<(), SynthError> {
    fs::create_dir_all(dir)?;
    let mut balance = Vec::new();
    write_balance_csv(&mut balance, dataset.balances())?;
    fs::write(dir.join(BALANCE_FILE), balance)?;
    let mut invoices = Vec::new();
    write_invoices_csv(&mut invoices, dataset.invoices())?;
    fs::write(dir.join(INVOICES_FILE), invoices)?;
    let mut json =
        serde_json::to_string_pretty(truth).map_err(|e| SynthError::Io(e.to_string()))?;
    json.push('\n');
    fs::write(dir.join(TRUTH_FILE), json)?;
    Ok(())
}
