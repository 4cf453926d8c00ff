//! Readers and writers for the series, catalog, SDG API and trace formats.
//!
//! Floats are written with Rust's `Display` for `f64`, which produces the
//! shortest decimal that parses back to the same bits.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use nowkit_core::evaluation::NowcastTrace;
use nowkit_core::feasibility::{Availability, FeasibilityLabel, IndicatorFlags, IndicatorRecord, Periodicity};
use nowkit_core::series::{parse_period, Frequency, Observation, Period, PublicationSchedule, TimeSeries};
use nowkit_core::vintage::VintageDate;
use serde::Deserialize;

pub const SERIES_HEADER: [&str; 5] = ["series_id", "frequency", "period", "value", "lag_months"];

pub const CATALOG_HEADER: [&str; 12] = [
    "indicator_code",
    "name",
    "unit",
    "tier",
    "periodicity",
    "observation_count",
    "lag_months",
    "availability",
    "flags",
    "explanatory",
    "feasibility",
    "notes",
];

pub const TRACE_HEADER: [&str; 3] = ["vintage", "growth_nowcast", "level_nowcast"];

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}:{line}: {reason}", path.display())]
    Parse { path: PathBuf, line: u64, reason: String },
    #[error("{}: series '{series_id}': {violation}", path.display())]
    Validation { path: PathBuf, series_id: String, violation: String },
    #[error("{}:{line}: unknown label '{value}'", path.display())]
    UnknownLabel { path: PathBuf, line: u64, value: String },
    #[error("{}: mixed series codes '{first}' and '{second}'", path.display())]
    MixedSeriesCodes { path: PathBuf, first: String, second: String },
    #[error("trace has no points")]
    EmptyTrace,
}

impl IngestError {
    fn parse(path: &Path, line: u64, reason: impl Into<String>) -> Self {
        IngestError::Parse { path: path.to_path_buf(), line, reason: reason.into() }
    }

    fn io(path: &Path, source: io::Error) -> Self {
        IngestError::Io { path: path.to_path_buf(), source }
    }
}

fn open(path: &Path) -> Result<File, IngestError> {
    File::open(path).map_err(|e| IngestError::io(path, e))
}

fn create(path: &Path) -> Result<File, IngestError> {
    File::create(path).map_err(|e| IngestError::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> IngestError {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(source) => IngestError::io(path, source),
        kind => IngestError::parse(path, line, format!("{kind:?}")),
    }
}

fn check_header(path: &Path, reader: &mut csv::Reader<impl Read>, expected: &[&str]) -> Result<bool, IngestError> {
    let header = reader.headers().map_err(|e| csv_error(path, e))?;
    if header.is_empty() {
        return Ok(false);
    }
    if header.iter().ne(expected.iter().copied()) {
        return Err(IngestError::parse(
            path,
            1,
            format!(
                "expected header '{}', found '{}'",
                expected.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    Ok(true)
}

fn field<'r>(
    path: &Path,
    line: u64,
    record: &'r csv::StringRecord,
    index: usize,
    name: &str,
) -> Result<&'r str, IngestError> {
    record.get(index).ok_or_else(|| IngestError::parse(path, line, format!("missing field '{name}'")))
}

fn parse_f64(path: &Path, line: u64, token: &str, name: &str) -> Result<f64, IngestError> {
    token.trim().parse().map_err(|_| IngestError::parse(path, line, format!("{name} '{token}' is not a number")))
}

fn parse_u32(path: &Path, line: u64, token: &str, name: &str) -> Result<u32, IngestError> {
    token
        .trim()
        .parse()
        .map_err(|_| IngestError::parse(path, line, format!("{name} '{token}' is not a non-negative integer")))
}

pub fn read_series_csv(path: &Path) -> Result<Vec<TimeSeries>, IngestError> {
    parse_series_csv(open(path)?, path)
}

/// Parses series CSV from any reader; `origin` labels errors.
pub fn parse_series_csv(input: impl Read, origin: &Path) -> Result<Vec<TimeSeries>, IngestError> {
    struct Group {
        frequency: Frequency,
        lag: u32,
        observations: Vec<Observation>,
    }
    let path = origin;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    if !check_header(path, &mut reader, &SERIES_HEADER)? {
        return Ok(Vec::new());
    }
    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, Group> = HashMap::new();
    for result in reader.records() {
        let record = result.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let id = field(path, line, &record, 0, "series_id")?.trim();
        if id.is_empty() {
            return Err(IngestError::parse(path, line, "empty series_id"));
        }
        let freq_token = field(path, line, &record, 1, "frequency")?;
        let frequency = Frequency::from_code(freq_token.trim())
            .ok_or_else(|| IngestError::parse(path, line, format!("unknown frequency '{freq_token}'")))?;
        let period_token = field(path, line, &record, 2, "period")?;
        let period = parse_period(period_token, frequency)
            .map_err(|e| IngestError::parse(path, line, format!("period '{period_token}': {e}")))?;
        let value = parse_f64(path, line, field(path, line, &record, 3, "value")?, "value")?;
        let lag = parse_u32(path, line, field(path, line, &record, 4, "lag_months")?, "lag_months")?;

        let group = groups.entry(id.to_string()).or_insert_with(|| {
            order.push(id.to_string());
            Group { frequency, lag, observations: Vec::new() }
        });
        if group.frequency != frequency {
            return Err(IngestError::parse(path, line, format!("series '{id}' changes frequency to {frequency}")));
        }
        if group.lag != lag {
            return Err(IngestError::parse(path, line, format!("series '{id}' changes lag_months to {lag}")));
        }
        group.observations.push(Observation::new(period, value));
    }
    order
        .into_iter()
        .map(|id| {
            let g = groups.remove(&id).expect("grouped");
            TimeSeries::new(id.clone(), g.frequency, g.observations, PublicationSchedule::new(g.lag)).map_err(|e| {
                let violation = e.violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ");
                IngestError::Validation { path: path.to_path_buf(), series_id: id, violation }
            })
        })
        .collect()
}

pub fn write_series_csv(series: &[TimeSeries], path: &Path) -> Result<(), IngestError> {
    let mut out = create(path)?;
    write_series(series, &mut out).map_err(|e| IngestError::io(path, e))
}

pub fn write_series(series: &[TimeSeries], out: &mut impl Write) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SERIES_HEADER)?;
    for s in series {
        let lag = s.schedule().lag_months.to_string();
        let freq = s.frequency().code().to_string();
        for o in s.observations() {
            w.write_record([s.id(), &freq, &o.period.to_string(), &o.value.to_string(), &lag])?;
        }
    }
    w.flush()
}

pub fn read_catalog_csv(path: &Path) -> Result<Vec<IndicatorRecord>, IngestError> {
    parse_catalog_csv(open(path)?, path)
}

pub fn parse_catalog_csv(input: impl Read, origin: &Path) -> Result<Vec<IndicatorRecord>, IngestError> {
    let path = origin;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    if !check_header(path, &mut reader, &CATALOG_HEADER)? {
        return Ok(Vec::new());
    }
    let mut records = Vec::new();
    for result in reader.records() {
        let record = result.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let get = |i: usize| field(path, line, &record, i, CATALOG_HEADER[i]);
        let label = |i: usize| -> Result<FeasibilityLabel, IngestError> {
            let value = get(i)?;
            FeasibilityLabel::parse(value).ok_or_else(|| IngestError::UnknownLabel {
                path: path.to_path_buf(),
                line,
                value: value.to_string(),
            })
        };
        let tier = parse_u32(path, line, get(3)?, "tier")?;
        if !(1..=3).contains(&tier) {
            return Err(IngestError::parse(path, line, format!("tier {tier} is not 1, 2 or 3")));
        }
        let periodicity = Periodicity::parse(get(4)?)
            .ok_or_else(|| IngestError::parse(path, line, format!("unknown periodicity '{}'", get(4).unwrap_or(""))))?;
        let lag_token = get(6)?.trim();
        let lag_months = match lag_token {
            "" | "unknown" => None,
            t => Some(parse_u32(path, line, t, "lag_months")?),
        };
        let availability = Availability::parse(get(7)?).ok_or_else(|| {
            IngestError::parse(path, line, format!("unknown availability '{}'", get(7).unwrap_or("")))
        })?;
        let flags = IndicatorFlags::from_tokens(get(8)?)
            .map_err(|t| IngestError::parse(path, line, format!("unknown flag '{t}'")))?;
        records.push(IndicatorRecord {
            indicator_code: get(0)?.to_string(),
            name: get(1)?.to_string(),
            unit: get(2)?.to_string(),
            tier: tier as u8,
            periodicity,
            observation_count: parse_u32(path, line, get(5)?, "observation_count")?,
            lag_months,
            availability,
            flags,
            catalog_explanatory: label(9)?,
            catalog_feasibility: label(10)?,
            notes: get(11)?.to_string(),
        });
    }
    Ok(records)
}

/// The catalog columns of `r`, in header order.
pub fn catalog_fields(r: &IndicatorRecord) -> [String; 12] {
    [
        r.indicator_code.clone(),
        r.name.clone(),
        r.unit.clone(),
        r.tier.to_string(),
        r.periodicity.token().to_string(),
        r.observation_count.to_string(),
        r.lag_months.map_or_else(|| "unknown".to_string(), |l| l.to_string()),
        r.availability.token().to_string(),
        r.flags.to_tokens(),
        r.catalog_explanatory.to_string(),
        r.catalog_feasibility.to_string(),
        r.notes.clone(),
    ]
}

pub fn write_catalog_csv(records: &[IndicatorRecord], path: &Path) -> Result<(), IngestError> {
    let out = create(path)?;
    let mut w = csv::Writer::from_writer(out);
    let result: csv::Result<()> = (|| {
        w.write_record(CATALOG_HEADER)?;
        for r in records {
            w.write_record(catalog_fields(r))?;
        }
        w.flush()?;
        Ok(())
    })();
    result.map_err(|e| csv_error(path, e))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Scalar {
    Number(f64),
    Text(String),
}

impl Scalar {
    fn as_f64(&self) -> Option<f64> {
        match self {
            Scalar::Number(n) => Some(*n),
            Scalar::Text(s) => s.trim().parse().ok(),
        }
    }
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct SdgObservation {
    series_code: String,
    time_period: Scalar,
    value: Scalar,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SdgDocument {
    Bare(Vec<SdgObservation>),
    Paged { data: Vec<SdgObservation> },
}

/// Reads an annual series from SDG API observation records.
///
/// Accepts either a bare array of records or an object with a `data` array.
/// Only `seriesCode`, `timePeriod` and `value` are read; numbers may be given
/// as JSON numbers or numeric strings. Records are ordered by year. An empty
/// array yields an empty series named after the file stem.
pub fn read_sdg_api_json(path: &Path, lag_months: u32) -> Result<TimeSeries, IngestError> {
    let mut text = String::new();
    open(path)?.read_to_string(&mut text).map_err(|e| IngestError::io(path, e))?;
    parse_sdg_api_json(&text, path, lag_months)
}

pub fn parse_sdg_api_json(text: &str, origin: &Path, lag_months: u32) -> Result<TimeSeries, IngestError> {
    let path = origin;
    let doc: SdgDocument =
        serde_json::from_str(text).map_err(|e| IngestError::parse(path, e.line() as u64, e.to_string()))?;
    let rows = match doc {
        SdgDocument::Bare(rows) | SdgDocument::Paged { data: rows } => rows,
    };
    let mut code: Option<String> = None;
    let mut pairs = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        match &code {
            None => code = Some(row.series_code.clone()),
            Some(c) if *c != row.series_code => {
                return Err(IngestError::MixedSeriesCodes {
                    path: path.to_path_buf(),
                    first: c.clone(),
                    second: row.series_code.clone(),
                })
            }
            Some(_) => {}
        }
        let year = row
            .time_period
            .as_f64()
            .filter(|y| y.fract() == 0.0 && (1000.0..=9999.0).contains(y))
            .ok_or_else(|| IngestError::parse(path, 0, format!("record {i}: timePeriod is not a year")))?;
        let value = row
            .value
            .as_f64()
            .ok_or_else(|| IngestError::parse(path, 0, format!("record {i}: value is not a number")))?;
        pairs.push((Period::annual(year as i32), value));
    }
    pairs.sort_by_key(|(p, _)| *p);
    let id = code.unwrap_or_else(|| path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned()));
    let observations = pairs.into_iter().map(|(p, v)| Observation::new(p, v)).collect();
    TimeSeries::new(id.clone(), Frequency::Annual, observations, PublicationSchedule::new(lag_months)).map_err(|e| {
        let violation = e.violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ");
        IngestError::Validation { path: path.to_path_buf(), series_id: id, violation }
    })
}

pub fn write_trace_csv(trace: &NowcastTrace, path: &Path) -> Result<(), IngestError> {
    if trace.points.is_empty() {
        return Err(IngestError::EmptyTrace);
    }
    let out = create(path)?;
    let mut w = csv::Writer::from_writer(out);
    let result: csv::Result<()> = (|| {
        w.write_record(TRACE_HEADER)?;
        for p in &trace.points {
            w.write_record([p.vintage.to_string(), p.growth_nowcast.to_string(), p.level_nowcast.to_string()])?;
        }
        w.flush()?;
        Ok(())
    })();
    result.map_err(|e| csv_error(path, e))
}

/// One row of a trace CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub vintage: VintageDate,
    pub growth_nowcast: f64,
    pub level_nowcast: f64,
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceRow>, IngestError> {
    let mut reader = csv::Reader::from_reader(open(path)?);
    if !check_header(path, &mut reader, &TRACE_HEADER)? {
        return Ok(Vec::new());
    }
    let mut rows = Vec::new();
    for result in reader.records() {
        let record = result.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let token = field(path, line, &record, 0, "vintage")?;
        let vintage =
            token.parse().map_err(|_| IngestError::parse(path, line, format!("vintage '{token}' is not YYYY-MM")))?;
        rows.push(TraceRow {
            vintage,
            growth_nowcast: parse_f64(path, line, field(path, line, &record, 1, "growth_nowcast")?, "growth_nowcast")?,
            level_nowcast: parse_f64(path, line, field(path, line, &record, 2, "level_nowcast")?, "level_nowcast")?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn origin() -> &'static Path {
        Path::new("mem.csv")
    }

    #[test]
    fn series_rows_group_by_id() {
        let text = "series_id,frequency,period,value,lag_months\n\
                    co2gdp,A,2000,0.51,24\nco2gdp,A,2001,0.5,24\nipi,M,2001-01,101.5,1\n";
        let pool = parse_series_csv(text.as_bytes(), origin()).unwrap();
        assert_eq!(pool.len(), 2);
        assert_eq!(pool[0].id(), "co2gdp");
        assert_eq!(pool[0].frequency(), Frequency::Annual);
        assert_eq!(pool[0].schedule().lag_months, 24);
        assert_eq!(pool[0].observations().len(), 2);
        assert_eq!(pool[1].get(&Period::monthly(2001, 1).unwrap()), Some(101.5));
    }

    #[test]
    fn header_only_is_empty() {
        assert!(parse_series_csv("series_id,frequency,period,value,lag_months\n".as_bytes(), origin())
            .unwrap()
            .is_empty());
        assert!(parse_series_csv("".as_bytes(), origin()).unwrap().is_empty());
    }

    #[test]
    fn bad_period_names_token_and_line() {
        let text = "series_id,frequency,period,value,lag_months\nx,M,2020-12,1,0\nx,M,2020-13,1,0\n";
        let err = parse_series_csv(text.as_bytes(), origin()).unwrap_err();
        match &err {
            IngestError::Parse { line, reason, .. } => {
                assert_eq!(*line, 3);
                assert!(reason.contains("2020-13"), "{reason}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn out_of_order_rows_fail_validation() {
        let text = "series_id,frequency,period,value,lag_months\nx,A,2001,1,0\nx,A,2000,1,0\n";
        assert!(matches!(parse_series_csv(text.as_bytes(), origin()), Err(IngestError::Validation { .. })));
    }

    #[test]
    fn wrong_header_rejected() {
        let text = "id,frequency,period,value,lag_months\n";
        assert!(matches!(parse_series_csv(text.as_bytes(), origin()), Err(IngestError::Parse { line: 1, .. })));
    }

    #[test]
    fn malformed_inputs_never_panic() {
        for text in [
            "series_id,frequency,period,value,lag_months\nx,W,2000,1,0\n",
            "series_id,frequency,period,value,lag_months\nx,A,2000\n",
            "series_id,frequency,period,value,lag_months\nx,A,2000,abc,0\n",
            "series_id,frequency,period,value,lag_months\nx,A,2000,1,-3\n",
            "series_id,frequency,period,value,lag_months\n,A,2000,1,0\n",
        ] {
            assert!(
                matches!(parse_series_csv(text.as_bytes(), origin()), Err(IngestError::Parse { line: 2, .. })),
                "{text}"
            );
        }
    }

    #[test]
    fn series_round_trip_is_exact() {
        let s = TimeSeries::from_pairs(
            "x",
            Frequency::Quarterly,
            (0..8)
                .map(|i| (Period::quarterly(2000 + i / 4, (i % 4 + 1) as u32).unwrap(), 0.1 + i as f64 / 3.0 + 1e-17)),
            3,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_series(std::slice::from_ref(&s), &mut buf).unwrap();
        let back = parse_series_csv(buf.as_slice(), origin()).unwrap();
        assert_eq!(back, vec![s]);
    }

    const CATALOG: &str = "indicator_code,name,unit,tier,periodicity,observation_count,lag_months,availability,flags,explanatory,feasibility,notes\n\
        8.10.2,Proportion of adults with an account,Percent,1,irregular,3,36,irregular_interval,,Highly likely,Unlikely,Insufficient data for nowcasting purposes\n\
        9.4.1,Carbon dioxide emissions per unit of GDP,kg CO2/constant 2010 USD,1,A,21,24,consistent,,Highly likely,Highly likely,\n";

    #[test]
    fn catalog_rows_parse() {
        let records = parse_catalog_csv(CATALOG.as_bytes(), origin()).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].catalog_feasibility, FeasibilityLabel::Unlikely);
        assert_eq!(records[0].notes, "Insufficient data for nowcasting purposes");
        assert_eq!(records[1].catalog_feasibility, FeasibilityLabel::HighlyLikely);
        assert_eq!(records[1].lag_months, Some(24));
    }

    #[test]
    fn unknown_label_reported() {
        let text = CATALOG.replace("Highly likely,Highly likely,\n", "Highly likely,Maybe,\n");
        match parse_catalog_csv(text.as_bytes(), origin()) {
            Err(IngestError::UnknownLabel { value, line, .. }) => {
                assert_eq!(value, "Maybe");
                assert_eq!(line, 3);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sdg_json_variants() {
        let text = r#"{"data":[{"seriesCode":"EN_ATM_CO2GDP","timePeriod":2001,"value":"0.5","geoAreaCode":"1"},
                               {"seriesCode":"EN_ATM_CO2GDP","timePeriod":2000.0,"value":0.51}]}"#;
        let s = parse_sdg_api_json(text, Path::new("co2.json"), 24).unwrap();
        assert_eq!(s.id(), "EN_ATM_CO2GDP");
        assert_eq!(s.values().collect::<Vec<_>>(), vec![0.51, 0.5]);
        assert_eq!(s.schedule().lag_months, 24);

        let empty = parse_sdg_api_json("[]", Path::new("dir/co2.json"), 24).unwrap();
        assert!(empty.is_empty());
        assert_eq!(empty.id(), "co2");

        let mixed =
            r#"[{"seriesCode":"A","timePeriod":2000,"value":1},{"seriesCode":"B","timePeriod":2001,"value":1}]"#;
        assert!(matches!(parse_sdg_api_json(mixed, origin(), 0), Err(IngestError::MixedSeriesCodes { .. })));
        assert!(matches!(parse_sdg_api_json("{", origin(), 0), Err(IngestError::Parse { .. })));
    }
}
