//! The weighted directed trade-credit network.
//!
//! Edges point from customer `j` to supplier `i`, following the direction
//! of the money flow, and carry the 2007 invoice total for the pair.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{self, Write};
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::ingest::{Dataset, FirmId, Year};

/// Share of annual sales above which a single customer is "key".
pub const KEY_CUSTOMER_SHARE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("balance-missing: no {year} balance for {firm}")]
    BalanceMissing { firm: FirmId, year: Year },
    #[error("invalid matching range ({lo}, {hi}): need 0 <= lo < hi")]
    InvalidRange { lo: f64, hi: f64 },
}

/// Customer → supplier graph with aggregated pair weights.
#[derive(Clone, Debug)]
pub struct TradeNetwork {
    dataset: Arc<Dataset>,
    // supplier -> [(customer, weight)], customers ascending
    incoming: BTreeMap<FirmId, Vec<(FirmId, f64)>>,
    // customer -> [(supplier, weight)], suppliers ascending
    outgoing: BTreeMap<FirmId, Vec<(FirmId, f64)>>,
}

/// Sums every invoice of the dataset per (customer, supplier) pair.
pub fn build_network(dataset: Arc<Dataset>) -> TradeNetwork {
    let mut pairs: BTreeMap<(FirmId, FirmId), f64> = BTreeMap::new();
    for inv in dataset.invoices() {
        *pairs
            .entry((inv.customer.clone(), inv.supplier.clone()))
            .or_insert(0.0) += inv.amount;
    }
    TradeNetwork::from_pairs(dataset, pairs)
}

impl TradeNetwork {
    fn from_pairs(dataset: Arc<Dataset>, pairs: BTreeMap<(FirmId, FirmId), f64>) -> Self {
        let mut incoming: BTreeMap<FirmId, Vec<(FirmId, f64)>> = BTreeMap::new();
        let mut outgoing: BTreeMap<FirmId, Vec<(FirmId, f64)>> = BTreeMap::new();
        // Pairs iterate customer-major, so each outgoing list is already
        // sorted; incoming lists receive customers in ascending order too.
        for ((customer, supplier), weight) in pairs {
            debug_assert!(weight > 0.0);
            incoming
                .entry(supplier.clone())
                .or_default()
                .push((customer.clone(), weight));
            outgoing
                .entry(customer)
                .or_default()
                .push((supplier, weight));
        }
        TradeNetwork {
            dataset,
            incoming,
            outgoing,
        }
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn dataset_arc(&self) -> &Arc<Dataset> {
        &self.dataset
    }

    /// Firms with at least one incoming edge, ascending.
    pub fn suppliers(&self) -> impl Iterator<Item = &FirmId> {
        self.incoming.keys()
    }

    /// Firms with at least one outgoing edge, ascending.
    pub fn customers(&self) -> impl Iterator<Item = &FirmId> {
        self.outgoing.keys()
    }

    pub fn n_suppliers(&self) -> usize {
        self.incoming.len()
    }

    pub fn n_customers(&self) -> usize {
        self.outgoing.len()
    }

    pub fn n_links(&self) -> usize {
        self.incoming.values().map(Vec::len).sum()
    }

    pub fn is_supplier(&self, firm: &FirmId) -> bool {
        self.incoming.contains_key(firm)
    }

    /// Customers paying `supplier`, with the pair weight `R_ji`.
    pub fn in_edges(&self, supplier: &FirmId) -> &[(FirmId, f64)] {
        self.incoming.get(supplier).map_or(&[], Vec::as_slice)
    }

    /// Suppliers paid by `customer`.
    pub fn out_edges(&self, customer: &FirmId) -> &[(FirmId, f64)] {
        self.outgoing.get(customer).map_or(&[], Vec::as_slice)
    }

    pub fn edge_weight(&self, customer: &FirmId, supplier: &FirmId) -> Option<f64> {
        let edges = self.in_edges(supplier);
        edges
            .binary_search_by(|(c, _)| c.cmp(customer))
            .ok()
            .map(|k| edges[k].1)
    }

    /// Every edge as `(customer, supplier, weight)`, ordered by customer.
    pub fn edges(&self) -> impl Iterator<Item = (&FirmId, &FirmId, f64)> {
        self.outgoing
            .iter()
            .flat_map(|(c, out)| out.iter().map(move |(s, w)| (c, s, *w)))
    }

    /// Total invoiced to `supplier`, `P_i = Σ_j R_ji`.
    pub fn invoice_total(&self, supplier: &FirmId) -> f64 {
        self.in_edges(supplier).iter().map(|(_, w)| w).sum()
    }

    /// Subnetwork holding only the edges into `keep`.
    pub fn restrict_to_suppliers(&self, keep: &BTreeSet<FirmId>) -> TradeNetwork {
        let pairs = self
            .incoming
            .iter()
            .filter(|(s, _)| keep.contains(*s))
            .flat_map(|(s, ins)| ins.iter().map(move |(c, w)| ((c.clone(), s.clone()), *w)))
            .collect();
        TradeNetwork::from_pairs(Arc::clone(&self.dataset), pairs)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct NetworkSummary {
    pub n_suppliers: usize,
    pub n_customers: usize,
    pub n_links: usize,
    /// Unordered node pairs linked in both directions.
    pub n_reciprocal_pairs: usize,
    pub avg_in_neighbors: f64,
    pub avg_out_neighbors: f64,
}

pub fn network_summary(net: &TradeNetwork) -> NetworkSummary {
    let n_links = net.n_links();
    let n_reciprocal_pairs = net
        .edges()
        .filter(|(c, s, _)| c < s && net.edge_weight(s, c).is_some())
        .count();
    let avg = |count: usize| {
        if count == 0 {
            0.0
        } else {
            n_links as f64 / count as f64
        }
    };
    NetworkSummary {
        n_suppliers: net.n_suppliers(),
        n_customers: net.n_customers(),
        n_links,
        n_reciprocal_pairs,
        avg_in_neighbors: avg(net.n_suppliers()),
        avg_out_neighbors: avg(net.n_customers()),
    }
}

/// Completeness of a supplier's invoice coverage, `P_i / R_{i,2007}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatchingRatio {
    pub supplier: FirmId,
    pub invoice_total: f64,
    pub sales_2007: f64,
    pub ratio: f64,
}

impl MatchingRatio {
    /// Strict on both ends.
    pub fn in_range(&self, lo: f64, hi: f64) -> bool {
        lo < self.ratio && self.ratio < hi
    }
}

pub fn matching_ratio(
    net: &TradeNetwork,
    supplier: &FirmId,
) -> Result<MatchingRatio, NetworkError> {
    let sales_2007 =
        net.dataset()
            .sales(supplier, Year::Y2007)
            .ok_or_else(|| NetworkError::BalanceMissing {
                firm: supplier.clone(),
                year: Year::Y2007,
            })?;
    let invoice_total = net.invoice_total(supplier);
    Ok(MatchingRatio {
        supplier: supplier.clone(),
        invoice_total,
        sales_2007,
        ratio: invoice_total / sales_2007,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatchingReport {
    #[serde(flatten)]
    pub matching: MatchingRatio,
    pub in_range: bool,
}

/// Outcome of the completeness filter.
#[derive(Clone, Debug)]
pub struct MatchingFilter {
    pub lo: f64,
    pub hi: f64,
    /// One row per supplier that has a 2007 balance, ascending.
    pub reports: Vec<MatchingReport>,
    pub retained: Vec<FirmId>,
    /// Suppliers that could not be evaluated for lack of a 2007 balance.
    pub missing_balance: Vec<FirmId>,
    /// Edges into retained suppliers only.
    pub network: TradeNetwork,
}

/// Keeps suppliers with `lo < P_i / R_{i,2007} < hi`. Pass
/// `f64::INFINITY` for an open upper end.
pub fn filter_by_matching(
    net: &TradeNetwork,
    lo: f64,
    hi: f64,
) -> Result<MatchingFilter, NetworkError> {
    if !(lo >= 0.0 && lo < hi) {
        return Err(NetworkError::InvalidRange { lo, hi });
    }
    let mut reports = Vec::new();
    let mut missing_balance = Vec::new();
    for supplier in net.suppliers() {
        match matching_ratio(net, supplier) {
            Ok(m) => {
                let in_range = m.in_range(lo, hi);
                reports.push(MatchingReport {
                    matching: m,
                    in_range,
                });
            }
            Err(_) => missing_balance.push(supplier.clone()),
        }
    }
    let retained: Vec<FirmId> = reports
        .iter()
        .filter(|r| r.in_range)
        .map(|r| r.matching.supplier.clone())
        .collect();
    let keep: BTreeSet<FirmId> = retained.iter().cloned().collect();
    Ok(MatchingFilter {
        lo,
        hi,
        reports,
        retained,
        missing_balance,
        network: net.restrict_to_suppliers(&keep),
    })
}

/// Denominator used for the key-customer share.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KeyCustomerBasis {
    /// Balance-sheet sales `R_{i,2007}`.
    #[default]
    AnnualSales,
    /// Invoice total `P_i`.
    InvoiceTotal,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KeyCustomerFlag {
    pub supplier: FirmId,
    pub has_key_customer: bool,
    pub key_customer: Option<FirmId>,
    pub share: f64,
}

/// Largest payer of `supplier` and its share of the chosen denominator.
/// Ties on the largest weight go to the lexicographically smallest id.
pub fn key_customer(
    net: &TradeNetwork,
    supplier: &FirmId,
    basis: KeyCustomerBasis,
) -> Result<KeyCustomerFlag, NetworkError> {
    let m = matching_ratio(net, supplier)?;
    let denominator = match basis {
        KeyCustomerBasis::AnnualSales => m.sales_2007,
        KeyCustomerBasis::InvoiceTotal => m.invoice_total,
    };
    // in_edges is sorted by customer, so strict `>` keeps the smallest id on ties.
    let top = net
        .in_edges(supplier)
        .iter()
        .fold(None::<&(FirmId, f64)>, |best, e| match best {
            Some(b) if b.1 >= e.1 => Some(b),
            _ => Some(e),
        });
    let share = match top {
        Some((_, w)) if denominator > 0.0 => w / denominator,
        _ => 0.0,
    };
    let has_key_customer = top.is_some() && share >= KEY_CUSTOMER_SHARE;
    Ok(KeyCustomerFlag {
        supplier: supplier.clone(),
        has_key_customer,
        key_customer: if has_key_customer {
            top.map(|(c, _)| c.clone())
        } else {
            None
        },
        share,
    })
}

/// Sizes of the weakly connected components, largest first.
pub fn weak_components(net: &TradeNetwork) -> Vec<usize> {
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut index: HashMap<&FirmId, usize> = HashMap::new();
    for (c, s, _) in net.edges() {
        for firm in [c, s] {
            let next = index.len();
            index.entry(firm).or_insert(next);
        }
    }
    let mut parent: Vec<usize> = (0..index.len()).collect();
    for (c, s, _) in net.edges() {
        let (ra, rb) = (find(&mut parent, index[c]), find(&mut parent, index[s]));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut sizes: HashMap<usize, usize> = HashMap::new();
    for x in 0..parent.len() {
        *sizes.entry(find(&mut parent, x)).or_default() += 1;
    }
    let mut sizes: Vec<usize> = sizes.into_values().collect();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}

#[derive(Clone, Debug, PartialEq)]
pub struct DegreeSequences {
    /// `K_in` per supplier, ascending by id.
    pub in_degrees: Vec<(FirmId, usize)>,
    /// `K_out` per customer, ascending by id.
    pub out_degrees: Vec<(FirmId, usize)>,
}

impl DegreeSequences {
    pub fn in_values(&self) -> Vec<usize> {
        self.in_degrees.iter().map(|(_, k)| *k).collect()
    }

    pub fn out_values(&self) -> Vec<usize> {
        self.out_degrees.iter().map(|(_, k)| *k).collect()
    }
}

pub fn degree_sequences(net: &TradeNetwork) -> DegreeSequences {
    DegreeSequences {
        in_degrees: net
            .incoming
            .iter()
            .map(|(id, e)| (id.clone(), e.len()))
            .collect(),
        out_degrees: net
            .outgoing
            .iter()
            .map(|(id, e)| (id.clone(), e.len()))
            .collect(),
    }
}

/// `(degree, count)` pairs, ascending by degree.
pub fn degree_histogram(degrees: &[usize]) -> Vec<(usize, usize)> {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &k in degrees {
        *counts.entry(k).or_default() += 1;
    }
    counts.into_iter().collect()
}

pub fn write_degree_csv(mut out: impl Write, degrees: &[usize]) -> io::Result<()> {
    writeln!(out, "degree,count")?;
    for (k, n) in degree_histogram(degrees) {
        writeln!(out, "{k},{n}")?;
    }
    Ok(())
}
