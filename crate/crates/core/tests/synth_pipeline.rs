//! Generated datasets fed back through ingest, network and growth.

use std::sync::Arc;

use sha2::{Digest, Sha256};

use tcmesh_core::ingest::{write_balance_csv, write_invoices_csv};
use tcmesh_core::stats::{regress_size_on_degree, size_degree_regression};
use tcmesh_core::{
    actual_log_growth, assemble_dataset, build_network, build_scatter, filter_by_matching,
    generate, key_customer, matching_ratio, ols, parse_balance, parse_invoices,
    predicted_log_growth, BetaSpec, CoveragePolicy, KeyCustomerBasis, MissingPolicy, Period,
    SynthConfig,
};

fn config(n: usize, seed: u64) -> SynthConfig {
    SynthConfig {
        n_suppliers: n,
        seed,
        ..SynthConfig::default()
    }
}

#[test]
fn every_planted_supplier_passes_the_filter() {
    for seed in 0..5 {
        let (ds, truth) = generate(&config(300, seed)).unwrap();
        let net = build_network(Arc::new(ds));
        let filter = filter_by_matching(&net, 0.8, 1.2).unwrap();
        assert_eq!(filter.retained.len(), 300);
        for p in &truth.suppliers {
            let m = matching_ratio(&net, &p.supplier).unwrap();
            assert!((m.ratio - p.matching).abs() < 1e-12, "{}", p.supplier);
            assert_eq!(net.in_edges(&p.supplier).len(), p.in_degree);
        }
    }
}

#[test]
fn pipeline_reproduces_planted_growth() {
    let cfg = SynthConfig {
        beta: BetaSpec::ByClass {
            a: 0.9,
            b: 0.5,
            c: 0.2,
        },
        mu: [0.03, -0.02],
        supplier_drift: [0.01, -0.04],
        ..config(400, 3)
    };
    let (ds, truth) = generate(&cfg).unwrap();
    let net = build_network(Arc::new(ds));
    for p in &truth.suppliers {
        for period in [Period::Early, Period::Late] {
            let k = period.index();
            let x = predicted_log_growth(&net, &p.supplier, period, MissingPolicy::Fail).unwrap();
            assert!((x.value - p.x[k]).abs() < 1e-12, "{} {period}", p.supplier);
            assert_eq!(x.usable_weight_fraction, 1.0);
            let y = actual_log_growth(net.dataset(), &p.supplier, period).unwrap();
            let planted = p.beta * p.x[k] + truth.supplier_drift[k] + p.epsilon[k];
            assert!(
                (y - planted).abs() < 1e-12,
                "{} {period}: {y} vs {planted}",
                p.supplier
            );
        }
    }
}

#[test]
fn noiseless_slope_is_beta() {
    for beta in [0.0, 0.35, 1.0, 1.7] {
        let cfg = SynthConfig {
            beta: BetaSpec::Scalar(beta),
            sigma_supplier: 0.0,
            ..config(300, 9)
        };
        let (ds, _) = generate(&cfg).unwrap();
        let net = build_network(Arc::new(ds));
        let filter = filter_by_matching(&net, 0.8, 1.2).unwrap();
        for period in [Period::Early, Period::Late] {
            let s = build_scatter(
                &filter.network,
                &filter.retained,
                period,
                MissingPolicy::Fail,
            );
            assert!(s.exclusions.is_empty());
            let fit = ols(&s.xs(), &s.ys()).unwrap();
            assert!(
                (fit.slope - beta).abs() < 1e-9,
                "beta {beta}: slope {}",
                fit.slope
            );
            assert!(fit.intercept.abs() < 1e-9);
        }
    }
}

#[test]
fn csv_round_trip_preserves_dataset() {
    let (ds, _) = generate(&config(120, 5)).unwrap();
    let mut bal = Vec::new();
    write_balance_csv(&mut bal, ds.balances()).unwrap();
    let mut inv = Vec::new();
    write_invoices_csv(&mut inv, ds.invoices()).unwrap();

    let balances = parse_balance(bal.as_slice(), true).unwrap();
    let invoices = parse_invoices(inv.as_slice(), true).unwrap();
    let back = assemble_dataset(balances, invoices, &CoveragePolicy::keep());
    assert_eq!(back.invoices(), ds.invoices());
    assert!(back.balances().eq(ds.balances()));
    assert!(back.report().flags.is_empty());
}

// Frozen digest of a small generated table. A change here means the
// generator's draw sequence or output format changed.
const BALANCE_DIGEST: &str = "b7c9a4b45e00ac0278cfa27ce1bef57c619400c3f463fab6325d521a8a2f2a3c";

#[test]
fn generated_balance_digest_is_frozen() {
    let (ds, _) = generate(&config(25, 2024)).unwrap();
    let mut bal = Vec::new();
    write_balance_csv(&mut bal, ds.balances()).unwrap();
    assert_eq!(hex::encode(Sha256::digest(&bal)), BALANCE_DIGEST);
}

#[test]
fn single_customer_suppliers_have_a_key_customer() {
    let (ds, _) = generate(&config(500, 8)).unwrap();
    let net = build_network(Arc::new(ds));
    let suppliers: Vec<_> = net.suppliers().cloned().collect();
    let mut checked = 0;
    for s in &suppliers {
        let m = matching_ratio(&net, s).unwrap();
        if net.in_edges(s).len() == 1 && m.ratio > 0.5 {
            let flag = key_customer(&net, s, KeyCustomerBasis::AnnualSales).unwrap();
            assert!(flag.has_key_customer);
            assert_eq!(flag.key_customer.as_ref(), Some(&net.in_edges(s)[0].0));
            checked += 1;
        }
    }
    assert!(checked > 100);
}

#[test]
fn uncut_size_regression_is_plain_ols() {
    let (ds, _) = generate(&config(500, 4)).unwrap();
    let net = build_network(Arc::new(ds));
    let suppliers: Vec<_> = net.suppliers().cloned().collect();
    let fit = size_degree_regression(&net, &suppliers, None).unwrap();
    let (xs, ys): (Vec<f64>, Vec<f64>) = suppliers
        .iter()
        .map(|s| {
            let k = net.in_edges(s).len() as f64;
            (
                k.ln(),
                net.dataset()
                    .sales(s, tcmesh_core::Year::Y2007)
                    .unwrap()
                    .ln(),
            )
        })
        .unzip();
    let plain = ols(&xs, &ys).unwrap();
    assert_eq!(fit.regression.slope, plain.slope);
    assert_eq!(fit.regression.intercept, plain.intercept);
    assert_eq!(fit.regression.n, suppliers.len());

    // a cutoff only ever removes points
    let pairs: Vec<(usize, f64)> = suppliers
        .iter()
        .map(|s| {
            (
                net.in_edges(s).len(),
                net.dataset().sales(s, tcmesh_core::Year::Y2007).unwrap(),
            )
        })
        .collect();
    let cut = regress_size_on_degree(&pairs, Some(3)).unwrap();
    assert_eq!(
        cut.regression.n,
        pairs.iter().filter(|(k, _)| *k <= 3).count()
    );
}
