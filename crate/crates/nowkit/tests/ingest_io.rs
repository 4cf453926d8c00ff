use std::path::{Path, PathBuf};

use nowkit::ingest::{
    read_catalog_csv, read_sdg_api_json, read_series_csv, read_trace_csv, write_catalog_csv, write_series_csv,
    write_trace_csv, IngestError,
};
use nowkit::synthetic::{generate, DgpConfig};
use nowkit_core::evaluation::{NowcastTrace, TracePoint};
use nowkit_core::feasibility::{classify_overall, Availability, FeasibilityLabel, FeasibilityParams, IndicatorRecord};
use nowkit_core::series::{Frequency, Period};
use nowkit_core::vintage::VintageDate;

fn repo_path(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn find<'a>(records: &'a [IndicatorRecord], code: &str, name: &str) -> &'a IndicatorRecord {
    records
        .iter()
        .find(|r| r.indicator_code == code && r.name.starts_with(name))
        .unwrap_or_else(|| panic!("{code} {name} not in catalog"))
}

#[test]
fn synthetic_pool_round_trips_through_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pool.csv");
    let pool = generate(&DgpConfig::default());
    write_series_csv(&pool, &path).unwrap();
    let back = read_series_csv(&path).unwrap();
    assert_eq!(back, pool);
    let again = dir.path().join("again.csv");
    write_series_csv(&back, &again).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn bundled_series_match_generator() {
    let bundled = read_series_csv(&repo_path("data/synthetic/series.csv")).unwrap();
    assert_eq!(bundled, generate(&DgpConfig::default()));
}

#[test]
fn catalog_rows_carry_their_labels() {
    let records = read_catalog_csv(&repo_path("data/catalog/full.csv")).unwrap();
    assert_eq!(records.len(), 362);
    let params = FeasibilityParams::default();

    let co2 = find(&records, "9.4.1", "Carbon dioxide emissions per unit of GDP");
    assert_eq!(co2.lag_months, Some(24));
    assert_eq!(co2.observation_count, 21);
    assert_eq!(co2.availability, Availability::Consistent);
    assert_eq!(co2.catalog_feasibility, FeasibilityLabel::HighlyLikely);
    assert_eq!(classify_overall(co2, &params).unwrap().label, FeasibilityLabel::HighlyLikely);

    let accounts = find(&records, "8.10.2", "Proportion of adults");
    assert_eq!(accounts.observation_count, 3);
    assert_eq!(accounts.catalog_feasibility, FeasibilityLabel::Unlikely);
    assert_eq!(classify_overall(accounts, &params).unwrap().label, FeasibilityLabel::Unlikely);
}

#[test]
fn sample_is_a_subset_of_full_catalog() {
    let full = read_catalog_csv(&repo_path("data/catalog/full.csv")).unwrap();
    let sample = read_catalog_csv(&repo_path("data/catalog/sample.csv")).unwrap();
    assert!(sample.len() >= 40);
    for r in &sample {
        assert!(full.contains(r), "{} {} not in full catalog", r.indicator_code, r.name);
    }
    for code in ["1.5.1", "2.a.2", "5.5.1", "8.10.2", "9.4.1"] {
        assert!(sample.iter().any(|r| r.indicator_code == code), "{code} missing from sample");
    }
}

#[test]
fn catalog_round_trips() {
    let records = read_catalog_csv(&repo_path("data/catalog/sample.csv")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("catalog.csv");
    write_catalog_csv(&records, &path).unwrap();
    assert_eq!(read_catalog_csv(&path).unwrap(), records);
}

#[test]
fn sdg_fixture_reads_as_annual_series() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/sdg_en_atm_co2gdp.json");
    let s = read_sdg_api_json(&path, 24).unwrap();
    assert_eq!(s.id(), "EN_ATM_CO2GDP");
    assert_eq!(s.frequency(), Frequency::Annual);
    assert_eq!(s.observations().len(), 19);
    assert_eq!(s.observations()[0].period, Period::annual(2000));
    assert_eq!(s.observations()[18].period, Period::annual(2018));
    assert_eq!(s.observations()[0].value, 0.42);
    assert_eq!(s.schedule().lag_months, 24);
}

#[test]
fn trace_round_trips_and_rejects_empty() {
    let points: Vec<TracePoint> = (1..=12)
        .map(|m| TracePoint {
            vintage: VintageDate::new(2015, m).unwrap(),
            growth_nowcast: 0.01 * m as f64 + 1e-17,
            level_nowcast: 100.0 + m as f64 / 3.0,
            anchor_year: 2013,
            filled_cells: 0,
        })
        .collect();
    let trace = NowcastTrace { target_year: 2015, points };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    write_trace_csv(&trace, &path).unwrap();
    let rows = read_trace_csv(&path).unwrap();
    assert_eq!(rows.len(), 12);
    for (row, p) in rows.iter().zip(&trace.points) {
        assert_eq!(
            (row.vintage, row.growth_nowcast, row.level_nowcast),
            (p.vintage, p.growth_nowcast, p.level_nowcast)
        );
    }
    let empty = NowcastTrace { target_year: 2015, points: Vec::new() };
    assert!(matches!(write_trace_csv(&empty, &path), Err(IngestError::EmptyTrace)));
}
