//! Output artifacts: model JSON, search report, backtest metrics and the labeled catalog.

use std::fs::{self, File};
use std::io::{self, Write};
use std::path::Path;

use nowkit_core::evaluation::BacktestReport;
use nowkit_core::feasibility::{
    classify_explanatory, classify_overall, FeasibilityLabel, FeasibilityParams, IndicatorRecord,
};
use nowkit_core::lstm::TrainedModel;
use nowkit_core::selection::{SearchReport, TrialResult, TrialStatus};

use crate::config::{HyperSpec, InlineModel};
use crate::ingest::{catalog_fields, CATALOG_HEADER};

pub const SEARCH_HEADER: [&str; 9] =
    ["trial_id", "variables", "hidden_size", "n_timesteps", "learning_rate", "epochs", "val_mae", "val_rmse", "status"];

pub const METRICS_HEADER: [&str; 5] = ["split", "vintage", "mae", "rmse", "n"];

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("{}: {source}", path.display())]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}: {source}", path.display())]
    Json {
        path: std::path::PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> ReportError + '_ {
    move |source| ReportError::Io { path: path.to_path_buf(), source }
}

fn write_with(path: &Path, body: impl FnOnce(&mut File) -> io::Result<()>) -> Result<(), ReportError> {
    let mut file = File::create(path).map_err(io_err(path))?;
    body(&mut file).and_then(|_| file.flush()).map_err(io_err(path))
}

fn csv_io(e: csv::Error) -> io::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => e,
        other => io::Error::other(format!("{other:?}")),
    }
}

pub fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<(), ReportError> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|source| ReportError::Json { path: path.to_path_buf(), source })?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

pub fn write_model_json(model: &TrainedModel, path: &Path) -> Result<(), ReportError> {
    write_json(model, path)
}

pub fn read_model_json(path: &Path) -> Result<TrainedModel, ReportError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| ReportError::Json { path: path.to_path_buf(), source })
}

/// Winner of a search in the same shape as a config's inline model.
pub fn selected_model(winner: &TrialResult) -> InlineModel {
    InlineModel { variables: winner.spec.variables.clone(), hyper: HyperSpec::from(winner.spec.hyper) }
}

fn trial_row(t: &TrialResult, winner_id: Option<usize>) -> [String; 9] {
    let h = &t.spec.hyper;
    let (mae, rmse, status) = match &t.status {
        TrialStatus::Ok { val_mae, val_rmse } => {
            let status = if Some(t.trial_id) == winner_id { "winner" } else { "ok" };
            (val_mae.to_string(), val_rmse.to_string(), status.to_string())
        }
        TrialStatus::Failed(why) => (String::new(), String::new(), format!("failed: {why}")),
    };
    [
        t.trial_id.to_string(),
        t.spec.variables.join(";"),
        h.hidden_size.to_string(),
        h.n_timesteps.to_string(),
        h.learning_rate.to_string(),
        h.epochs.to_string(),
        mae,
        rmse,
        status,
    ]
}

/// Search reports in order, each as ranked trials followed by failed ones.
pub fn write_search_csv(reports: &[&SearchReport], winner_id: Option<usize>, path: &Path) -> Result<(), ReportError> {
    write_with(path, |file| {
        let mut w = csv::Writer::from_writer(file);
        w.write_record(SEARCH_HEADER).map_err(csv_io)?;
        for report in reports {
            for t in report.ranked.iter().chain(&report.failed) {
                w.write_record(trial_row(t, winner_id)).map_err(csv_io)?;
            }
        }
        w.flush()
    })
}

pub fn write_metrics_csv(report: &BacktestReport, path: &Path) -> Result<(), ReportError> {
    write_with(path, |file| {
        let mut w = csv::Writer::from_writer(file);
        w.write_record(METRICS_HEADER).map_err(csv_io)?;
        for row in &report.rows {
            let m = &row.metrics;
            w.write_record([row.split.name(), &row.vintage, &m.mae.to_string(), &m.rmse.to_string(), &m.n.to_string()])
                .map_err(csv_io)?;
        }
        w.flush()
    })
}

/// Derived labels for one record. Records outside tier 1 get Unlikely with
/// the `not_tier1` rule.
pub fn derive_labels(r: &IndicatorRecord, params: &FeasibilityParams) -> (FeasibilityLabel, FeasibilityLabel, String) {
    let explanatory = classify_explanatory(r).label;
    match classify_overall(r, params) {
        Ok(c) => (explanatory, c.label, c.trace.fired_tokens()),
        Err(_) => (explanatory, FeasibilityLabel::Unlikely, "not_tier1".to_string()),
    }
}

pub fn write_labeled_catalog(
    records: &[IndicatorRecord],
    params: &FeasibilityParams,
    path: &Path,
) -> Result<(), ReportError> {
    write_with(path, |file| {
        let mut w = csv::Writer::from_writer(file);
        let header =
            CATALOG_HEADER.iter().copied().chain(["derived_explanatory", "derived_feasibility", "rules_fired"]);
        w.write_record(header).map_err(csv_io)?;
        for r in records {
            let (explanatory, overall, fired) = derive_labels(r, params);
            let row = catalog_fields(r).into_iter().chain([explanatory.to_string(), overall.to_string(), fired]);
            w.write_record(row).map_err(csv_io)?;
        }
        w.flush()
    })
}
