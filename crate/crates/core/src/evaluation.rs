//! Splits, error metrics, vintage backtests, naive baselines and nowcast traces.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::lstm::TrainedModel;
use crate::pipeline::{Experiment, ModelSpec, PipelineError};
use crate::series::{Period, TimeSeries, YearRange};
use crate::vintage::{trace_schedule, VintageDate, VintageSchedule};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
pub enum EvalError {
    LengthMismatch { predictions: usize, actuals: usize },
    EmptyInput,
    InsufficientHistory { year: i32 },
    InvalidSplits,
    EmptyTrace,
    Pipeline(PipelineError),
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::LengthMismatch { predictions, actuals } => {
                write!(f, "{predictions} predictions for {actuals} actuals")
            }
            EvalError::EmptyInput => f.write_str("metrics need at least one prediction"),
            EvalError::InsufficientHistory { year } => write!(f, "no history before {year}"),
            EvalError::InvalidSplits => f.write_str("splits must be ordered train < validation < test"),
            EvalError::EmptyTrace => f.write_str("trace has no points"),
            EvalError::Pipeline(e) => e.fmt(f),
        }
    }
}

impl core::error::Error for EvalError {}

impl From<PipelineError> for EvalError {
    fn from(e: PipelineError) -> Self {
        EvalError::Pipeline(e)
    }
}

/// Year ranges of the three splits, disjoint and ascending.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SplitSpec {
    pub train: YearRange,
    pub validation: YearRange,
    pub test: YearRange,
}

impl SplitSpec {
    pub fn new(train: YearRange, validation: YearRange, test: YearRange) -> Result<Self, EvalError> {
        if train.last >= validation.first || validation.last >= test.first {
            return Err(EvalError::InvalidSplits);
        }
        Ok(SplitSpec { train, validation, test })
    }

    /// Training span used before the test evaluation (train through validation).
    pub fn final_train(&self) -> YearRange {
        self.train.span(&self.validation)
    }
}

/// Train 2001–2011, validate 2012–2014, test 2015–2018.
pub fn default_splits() -> SplitSpec {
    SplitSpec {
        train: YearRange { first: 2001, last: 2011 },
        validation: YearRange { first: 2012, last: 2014 },
        test: YearRange { first: 2015, last: 2018 },
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Metrics {
    pub mae: f64,
    pub rmse: f64,
    pub n: usize,
}

impl Metrics {
    pub fn compute(predictions: &[f64], actuals: &[f64]) -> Result<Self, EvalError> {
        Ok(Metrics { mae: mae(predictions, actuals)?, rmse: rmse(predictions, actuals)?, n: predictions.len() })
    }
}

fn check(predictions: &[f64], actuals: &[f64]) -> Result<(), EvalError> {
    if predictions.len() != actuals.len() {
        return Err(EvalError::LengthMismatch { predictions: predictions.len(), actuals: actuals.len() });
    }
    if predictions.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    Ok(())
}

pub fn mae(predictions: &[f64], actuals: &[f64]) -> Result<f64, EvalError> {
    check(predictions, actuals)?;
    let sum: f64 = predictions.iter().zip(actuals).map(|(p, a)| libm::fabs(p - a)).sum();
    Ok(sum / predictions.len() as f64)
}

pub fn rmse(predictions: &[f64], actuals: &[f64]) -> Result<f64, EvalError> {
    check(predictions, actuals)?;
    let sum: f64 = predictions.iter().zip(actuals).map(|(p, a)| (p - a) * (p - a)).sum();
    Ok(libm::sqrt(sum / predictions.len() as f64))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselinePrediction {
    pub year: i32,
    /// Previous year's actual growth.
    pub persistence: f64,
    /// Mean of every growth strictly before `year`.
    pub historical_mean: f64,
}

/// Persistence and historical-mean forecasts from an annual growth series.
pub fn naive_baselines(growth: &TimeSeries, years: &[i32]) -> Result<Vec<BaselinePrediction>, EvalError> {
    years
        .iter()
        .map(|&year| {
            let prior: Vec<f64> =
                growth.observations().iter().take_while(|o| o.period.year() < year).map(|o| o.value).collect();
            let persistence = growth.get(&Period::annual(year - 1)).ok_or(EvalError::InsufficientHistory { year })?;
            let historical_mean = prior.iter().sum::<f64>() / prior.len() as f64;
            Ok(BaselinePrediction { year, persistence, historical_mean })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Validation,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

/// One scored nowcast of a backtest.
#[derive(Debug, Clone, PartialEq)]
pub struct BacktestPoint {
    pub split: Split,
    pub year: i32,
    /// `None` for the full-data evaluation.
    pub vintage: Option<VintageDate>,
    pub prediction: f64,
    pub actual: f64,
    pub filled_cells: usize,
}

/// Metrics for one split at one schedule entry (or on full data).
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub split: Split,
    /// `"full"` or the schedule label (e.g. `M+6`).
    pub vintage: String,
    pub metrics: Metrics,
    pub filled_cells: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestReport {
    pub rows: Vec<MetricsRow>,
    pub points: Vec<BacktestPoint>,
}

impl BacktestReport {
    pub fn row(&self, split: Split, vintage: &str) -> Option<&MetricsRow> {
        self.rows.iter().find(|r| r.split == split && r.vintage == vintage)
    }
}

/// Validation years are scored by a model trained on the train years; test
/// years by a model retrained on train plus validation years. Each split is
/// scored on full data and at every entry of `schedule`.
pub fn backtest(
    spec: &ModelSpec,
    splits: &SplitSpec,
    exp: &Experiment,
    schedule: &VintageSchedule,
) -> Result<BacktestReport, EvalError> {
    let mut rows = Vec::new();
    let mut points = Vec::new();
    for (split, fit_years, eval_years) in
        [(Split::Validation, splits.train, splits.validation), (Split::Test, splits.final_train(), splits.test)]
    {
        let model = exp.fit(spec, fit_years)?;
        let mut score = |vintage_of: &dyn Fn(i32) -> Option<VintageDate>, label: String| -> Result<(), EvalError> {
            let mut preds = Vec::new();
            let mut actuals = Vec::new();
            let mut filled = 0;
            for year in eval_years.years() {
                let vintage = vintage_of(year);
                let (prediction, window) = exp.nowcast(&model, year, vintage)?;
                let actual = exp.actual(year)?;
                filled += window.filled_count();
                preds.push(prediction);
                actuals.push(actual);
                points.push(BacktestPoint {
                    split,
                    year,
                    vintage,
                    prediction,
                    actual,
                    filled_cells: window.filled_count(),
                });
            }
            rows.push(MetricsRow {
                split,
                vintage: label,
                metrics: Metrics::compute(&preds, &actuals)?,
                filled_cells: filled,
            });
            Ok(())
        };
        score(&|_| None, "full".into())?;
        for k in 0..schedule.len() {
            score(&|year| Some(schedule.vintages_for(year)[k]), schedule.label(k))?;
        }
    }
    Ok(BacktestReport { rows, points })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub vintage: VintageDate,
    pub growth_nowcast: f64,
    /// Latest published target level times `1 + growth_nowcast`.
    pub level_nowcast: f64,
    /// Year of the published level used as the anchor.
    pub anchor_year: i32,
    pub filled_cells: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NowcastTrace {
    pub target_year: i32,
    pub points: Vec<TracePoint>,
}

/// Nowcasts for `target_year` at every monthly vintage from January of the
/// target year to July of the next.
pub fn nowcast_trace(model: &TrainedModel, exp: &Experiment, target_year: i32) -> Result<NowcastTrace, EvalError> {
    let points = trace_schedule(target_year)
        .into_iter()
        .map(|vintage| {
            let (growth, window) = exp.nowcast(model, target_year, Some(vintage))?;
            let anchor = exp.last_published_level(vintage).ok_or(PipelineError::NoPublishedLevel { vintage })?;
            Ok(TracePoint {
                vintage,
                growth_nowcast: growth,
                level_nowcast: anchor.value * (1.0 + growth),
                anchor_year: anchor.period.year(),
                filled_cells: window.filled_count(),
            })
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    Ok(NowcastTrace { target_year, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::Frequency;
    use alloc::vec;

    #[test]
    fn metric_examples() {
        assert_eq!(mae(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mae(&[1.0, 2.0], &[2.0, 4.0]).unwrap(), 1.5);
        assert!((rmse(&[1.0, 2.0], &[2.0, 4.0]).unwrap() - 1.581_138_830_084_19).abs() < 1e-12);
        let big = rmse(&[0.0, 0.0, 3.0], &[0.0; 3]).unwrap();
        assert!((big - 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(mae(&[0.0, 0.0, 3.0], &[0.0; 3]).unwrap(), 1.0);
        assert!(matches!(mae(&[1.0], &[1.0, 2.0]), Err(EvalError::LengthMismatch { .. })));
        assert_eq!(rmse(&[], &[]), Err(EvalError::EmptyInput));
    }

    #[test]
    fn single_point_rmse_equals_mae() {
        let m = Metrics::compute(&[0.3], &[-0.2]).unwrap();
        assert_eq!(m.mae, m.rmse);
        assert_eq!(m.n, 1);
    }

    #[test]
    fn default_split_years() {
        let s = default_splits();
        assert_eq!((s.train.first, s.train.last), (2001, 2011));
        assert_eq!(s.validation.len(), 3);
        assert_eq!(s.test.len(), 4);
        assert!(SplitSpec::new(s.train, s.validation, s.test).is_ok());
        assert_eq!(s.final_train(), YearRange::new(2001, 2014).unwrap());
        assert!(SplitSpec::new(s.validation, s.train, s.test).is_err());
    }

    fn growth(values: &[f64]) -> TimeSeries {
        TimeSeries::from_pairs(
            "g",
            Frequency::Annual,
            values.iter().enumerate().map(|(i, &v)| (Period::annual(2001 + i as i32), v)),
            0,
        )
        .unwrap()
    }

    #[test]
    fn baselines() {
        let b = naive_baselines(&growth(&[1.0, 2.0, 3.0]), &[2004]).unwrap();
        assert_eq!(b, vec![BaselinePrediction { year: 2004, persistence: 3.0, historical_mean: 2.0 }]);
        let c = naive_baselines(&growth(&[0.02; 5]), &[2003, 2005]).unwrap();
        assert!(c.iter().all(|p| p.persistence == 0.02 && (p.historical_mean - 0.02).abs() < 1e-15));
        assert_eq!(naive_baselines(&growth(&[1.0]), &[2001]), Err(EvalError::InsufficientHistory { year: 2001 }));
    }
}
