use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::Arc;

use serde_json::Value;

use tcmesh::report::{analyze, load, AnalysisOptions};
use tcmesh_core::{
    build_network, build_scatter, filter_by_matching, network_summary, scatter_stats, Grouping,
    MissingPolicy, Period,
};

fn tcmesh(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tcmesh"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn generated(dir: &Path, extra: &[&str]) -> (PathBuf, PathBuf) {
    let mut args = vec!["generate", "--out", s(dir), "--suppliers", "200"];
    args.extend_from_slice(extra);
    let out = tcmesh(&args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    (dir.join("balance.csv"), dir.join("invoices.csv"))
}

const BALANCE: &str = "firm_id,year,sales_eur,purchases_eur,rating,sector\n";
const INVOICES: &str = "supplier_id,customer_id,year,amount_eur\n";

/// Two suppliers whose invoices cover half of their 2007 sales.
fn half_matched(dir: &Path) -> (PathBuf, PathBuf) {
    let mut bal = String::from(BALANCE);
    for firm in ["S1", "S2", "C1", "C2"] {
        for year in [2006, 2007, 2008] {
            bal.push_str(&format!("{firm},{year},1000,400,4,D\n"));
        }
    }
    let inv = format!("{INVOICES}S1,C1,2007,500\nS2,C2,2007,300\nS2,C1,2007,200\n");
    let (b, i) = (dir.join("balance.csv"), dir.join("invoices.csv"));
    fs::write(&b, bal).unwrap();
    fs::write(&i, inv).unwrap();
    (b, i)
}

#[test]
fn no_supplier_in_range_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let (b, i) = half_matched(dir.path());
    let out_dir = dir.path().join("out");
    let out = tcmesh(&[
        "report",
        "--balance",
        s(&b),
        "--invoices",
        s(&i),
        "--out",
        s(&out_dir),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no suppliers pass filter"));
    assert!(!out_dir.join("report.json").exists());
    for sub in ["matching", "degrees", "growth", "cagr", "correlations"] {
        let out = tcmesh(&[sub, "--balance", s(&b), "--invoices", s(&i)]);
        assert_eq!(out.status.code(), Some(3), "{sub}");
    }
    // widening the range admits both
    let out = tcmesh(&[
        "matching",
        "--balance",
        s(&b),
        "--invoices",
        s(&i),
        "--matching",
        "0.4:1.2",
    ]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["aggregate"]["retained"], 2);
}

#[test]
fn bad_rows_exit_2_in_strict_mode_with_log() {
    let dir = tempfile::tempdir().unwrap();
    let (b, i) = generated(dir.path(), &[]);
    let mut bal = fs::read_to_string(&b).unwrap();
    bal.push_str("X1,2007,100,10,12,D\n");
    bal.push_str("X2,2007,1e5,10,3,D\n");
    fs::write(&b, bal).unwrap();

    let out_dir = dir.path().join("strict");
    let out = tcmesh(&[
        "report",
        "--balance",
        s(&b),
        "--invoices",
        s(&i),
        "--out",
        s(&out_dir),
        "--strict",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let log = fs::read_to_string(out_dir.join("balance_rejections.tsv")).unwrap();
    let lines: Vec<&str> = log.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].ends_with("rating out of range"), "{log}");
    assert!(lines[1].ends_with("non-numeric amount"), "{log}");

    // lenient mode reports and carries on
    let out_dir = dir.path().join("lenient");
    let out = tcmesh(&[
        "report",
        "--balance",
        s(&b),
        "--invoices",
        s(&i),
        "--out",
        s(&out_dir),
    ]);
    assert!(out.status.success());
    let doc: Value =
        serde_json::from_slice(&fs::read(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(doc["inputs"]["balance"]["rejected"], 2);
}

#[test]
fn missing_input_or_bad_flag_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = tcmesh(&[
        "summary",
        "--balance",
        "/nonexistent/b.csv",
        "--invoices",
        "/nonexistent/i.csv",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let (b, i) = generated(dir.path(), &[]);
    let out = tcmesh(&[
        "matching",
        "--balance",
        s(&b),
        "--invoices",
        s(&i),
        "--matching",
        "1.2:0.8",
    ]);
    assert_eq!(out.status.code(), Some(2));
    fs::write(&b, "firm,year\n").unwrap();
    let out = tcmesh(&["summary", "--balance", s(&b), "--invoices", s(&i)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn report_json_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (b, i) = generated(&dir.path().join("data"), &["--seed", "3"]);
    let mut bytes = Vec::new();
    for run in 0..2 {
        let out_dir = dir.path().join(format!("run{run}"));
        let out = tcmesh(&[
            "report",
            "--balance",
            s(&b),
            "--invoices",
            s(&i),
            "--out",
            s(&out_dir),
        ]);
        assert!(out.status.success());
        bytes.push(fs::read(out_dir.join("report.json")).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
    let text = String::from_utf8(bytes.remove(0)).unwrap();
    assert!(!text.contains("timestamp"));
}

#[test]
fn report_numbers_trace_to_operations() {
    let dir = tempfile::tempdir().unwrap();
    let (b, i) = generated(dir.path(), &["--seed", "11", "--scenario", "boom-bust"]);
    let loaded = load(&b, &i).unwrap();
    let doc = analyze(&loaded, &AnalysisOptions::default())
        .unwrap()
        .document;

    let net = build_network(Arc::new(tcmesh_core::assemble_dataset(
        tcmesh_core::parse_balance(fs::File::open(&b).unwrap(), true).unwrap(),
        tcmesh_core::parse_invoices(fs::File::open(&i).unwrap(), true).unwrap(),
        &tcmesh_core::CoveragePolicy::keep(),
    )));
    assert_eq!(doc.network, network_summary(&net));
    let filter = filter_by_matching(&net, 0.8, 1.2).unwrap();
    assert_eq!(doc.matching.retained, filter.retained.len());
    assert_eq!(doc.selected_network, network_summary(&filter.network));
    for (k, period) in [Period::Early, Period::Late].into_iter().enumerate() {
        let sc = build_scatter(
            &filter.network,
            &filter.retained,
            period,
            MissingPolicy::DropRenormalize,
        );
        let xy: Vec<(f64, f64)> = sc.points.iter().map(|p| p.xy()).collect();
        assert_eq!(
            doc.growth[k].stats.value.as_ref(),
            Some(&scatter_stats(&xy).unwrap())
        );
    }
    let cagr = tcmesh_core::cagr_points(
        &filter.network,
        &filter.retained,
        MissingPolicy::DropRenormalize,
    );
    assert_eq!(
        doc.correlations[0],
        tcmesh_core::grouped_correlations(&cagr.points, Grouping::Rating)
    );
}

#[test]
fn report_writes_side_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (b, i) = generated(&dir.path().join("data"), &[]);
    let out_dir = dir.path().join("out");
    let out = tcmesh(&[
        "report",
        "--balance",
        s(&b),
        "--invoices",
        s(&i),
        "--out",
        s(&out_dir),
        "--svg",
        "--group",
        "rating,sector",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for name in [
        "report.json",
        "matching.csv",
        "degrees_in.csv",
        "degrees_out.csv",
        "ccdf_in.csv",
        "key_customers.csv",
        "growth.csv",
        "cagr.csv",
        "balance_rejections.tsv",
        "invoice_rejections.tsv",
        "growth_2006-2007.svg",
        "growth_2007-2008.svg",
        "cagr.svg",
        "ccdf_in.svg",
    ] {
        assert!(out_dir.join(name).exists(), "{name}");
    }
    let growth = fs::read_to_string(out_dir.join("growth.csv")).unwrap();
    assert!(growth.starts_with("supplier_id,period,predicted,actual,usable_weight_fraction\n"));
    assert_eq!(growth.lines().count(), 1 + 2 * 200);
    let ccdf = fs::read_to_string(out_dir.join("ccdf_in.csv")).unwrap();
    assert!(ccdf.starts_with("k,ccdf\n1,1\n"));
    let doc: Value =
        serde_json::from_slice(&fs::read(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(doc["correlations"].as_array().unwrap().len(), 2);
    assert_eq!(doc["schema_version"], 1);
}

#[test]
fn subcommands_print_json() {
    let dir = tempfile::tempdir().unwrap();
    let (b, i) = generated(dir.path(), &[]);
    let summary: Value = serde_json::from_slice(
        &tcmesh(&["summary", "--balance", s(&b), "--invoices", s(&i)]).stdout,
    )
    .unwrap();
    assert_eq!(summary["network"]["n_suppliers"], 200);

    let degrees: Value = serde_json::from_slice(
        &tcmesh(&[
            "degrees",
            "--balance",
            s(&b),
            "--invoices",
            s(&i),
            "--cutoff",
            "none",
        ])
        .stdout,
    )
    .unwrap();
    assert!(
        degrees["in_degree_ccdf_fit"]["value"]["slope"]
            .as_f64()
            .unwrap()
            < 0.0
    );
    assert_eq!(
        degrees["size_degree"]["value"]["regression"]["cutoff_applied"],
        Value::Null
    );

    let growth: Value = serde_json::from_slice(
        &tcmesh(&["growth", "--balance", s(&b), "--invoices", s(&i)]).stdout,
    )
    .unwrap();
    assert_eq!(growth.as_array().unwrap().len(), 2);
    assert_eq!(growth[0]["period"], "2006-2007");

    let corr: Value = serde_json::from_slice(
        &tcmesh(&[
            "correlations",
            "--balance",
            s(&b),
            "--invoices",
            s(&i),
            "--group",
            "size",
        ])
        .stdout,
    )
    .unwrap();
    assert_eq!(corr[0]["grouping"], "rating-size");

    let cagr: Value =
        serde_json::from_slice(&tcmesh(&["cagr", "--balance", s(&b), "--invoices", s(&i)]).stdout)
            .unwrap();
    assert_eq!(cagr["n_points"], 200);
}

#[test]
fn generate_options_are_validated() {
    let dir = tempfile::tempdir().unwrap();
    let out = tcmesh(&["generate", "--out", s(dir.path()), "--suppliers", "0"]);
    assert_eq!(out.status.code(), Some(2));
    let out = tcmesh(&[
        "generate",
        "--out",
        s(dir.path()),
        "--scenario",
        "boom-bust",
        "--mu",
        "-0.1:0.1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = tcmesh(&[
        "generate",
        "--out",
        s(dir.path()),
        "--beta-class",
        "0.7,0.4",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = tcmesh(&[
        "generate",
        "--out",
        s(dir.path()),
        "--beta-class",
        "0.7,0.4,0.1",
        "--sector-beta",
        "D=0.2",
    ]);
    assert!(out.status.success());
    let truth: Value =
        serde_json::from_slice(&fs::read(dir.path().join("truth.json")).unwrap()).unwrap();
    for sup in truth["suppliers"].as_array().unwrap() {
        if sup["sector"] == "D" {
            assert_eq!(sup["beta"], 0.2);
        }
    }
}

#[test]
fn bad_thread_setting_is_an_input_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_tcmesh"))
        .env("TCMESH_THREADS", "zero")
        .args(["summary", "--balance", "x", "--invoices", "y"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn schema_matches_document_keys() {
    let schema: Value =
        serde_json::from_str(include_str!("../../../schema/report.schema.json")).unwrap();
    assert_eq!(
        schema["properties"]["schema_version"]["const"],
        tcmesh::report::REPORT_SCHEMA_VERSION
    );
    let dir = tempfile::tempdir().unwrap();
    let (b, i) = generated(dir.path(), &[]);
    let doc = analyze(&load(&b, &i).unwrap(), &AnalysisOptions::default())
        .unwrap()
        .document;
    let doc: Value = serde_json::from_str(&doc.to_json().unwrap()).unwrap();
    let mut keys: Vec<&String> = doc.as_object().unwrap().keys().collect();
    let mut required: Vec<&str> = schema["required"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    keys.sort();
    required.sort();
    assert_eq!(keys, required);
}
