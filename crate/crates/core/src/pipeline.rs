//! Shared plumbing between selection and evaluation: a level-series pool with
//! one annual target, turned into training sets and nowcast windows.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::lstm::{self, Hyperparams, LstmError, TrainedModel};
use crate::series::{Frequency, Observation, Period, TimeSeries, YearRange};
use crate::transform::{self, DesignMatrix, MonthRange, StandardizationParams, TransformError, TransformOptions};
use crate::vintage::{snapshot_at, DatasetSnapshot, VintageDate};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
pub enum PipelineError {
    UnknownSeries(String),
    TargetNotAnnual(String),
    /// No actual target growth for a year that needs one.
    MissingTarget {
        year: i32,
    },
    /// No published target level exists at a vintage.
    NoPublishedLevel {
        vintage: VintageDate,
    },
    NoVariables,
    Transform(TransformError),
    Lstm(LstmError),
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PipelineError::UnknownSeries(id) => write!(f, "unknown series '{id}'"),
            PipelineError::TargetNotAnnual(id) => write!(f, "target series '{id}' must be annual"),
            PipelineError::MissingTarget { year } => write!(f, "no target growth for {year}"),
            PipelineError::NoPublishedLevel { vintage } => write!(f, "no target level published by {vintage}"),
            PipelineError::NoVariables => f.write_str("model needs at least one variable"),
            PipelineError::Transform(e) => e.fmt(f),
            PipelineError::Lstm(e) => e.fmt(f),
        }
    }
}

impl core::error::Error for PipelineError {}

impl From<TransformError> for PipelineError {
    fn from(e: TransformError) -> Self {
        PipelineError::Transform(e)
    }
}

impl From<LstmError> for PipelineError {
    fn from(e: LstmError) -> Self {
        PipelineError::Lstm(e)
    }
}

/// The explanatory variables and hyperparameters of one candidate model.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ModelSpec {
    pub variables: Vec<String>,
    pub hyper: Hyperparams,
}

/// A pool of level series with one annual target.
#[derive(Debug, Clone)]
pub struct Experiment {
    pool: Vec<TimeSeries>,
    target: usize,
    options: TransformOptions,
    /// Growth-rate form of each pool series (seasonally adjusted where enabled).
    growth: Vec<Result<TimeSeries, TransformError>>,
}

impl Experiment {
    pub fn new(pool: Vec<TimeSeries>, target_id: &str, options: TransformOptions) -> Result<Self, PipelineError> {
        let target = pool
            .iter()
            .position(|s| s.id() == target_id)
            .ok_or_else(|| PipelineError::UnknownSeries(target_id.into()))?;
        if pool[target].frequency() != Frequency::Annual {
            return Err(PipelineError::TargetNotAnnual(target_id.into()));
        }
        let growth = pool
            .iter()
            .enumerate()
            .map(|(i, s)| if i == target { transform::growth_rate(s) } else { transform::to_growth(s, options) })
            .collect();
        Ok(Experiment { pool, target, options, growth })
    }

    pub fn pool(&self) -> &[TimeSeries] {
        &self.pool
    }

    pub fn options(&self) -> TransformOptions {
        self.options
    }

    pub fn target(&self) -> &TimeSeries {
        &self.pool[self.target]
    }

    /// Every pool series except the target.
    pub fn candidate_ids(&self) -> Vec<String> {
        self.pool.iter().enumerate().filter(|(i, _)| *i != self.target).map(|(_, s)| s.id().to_string()).collect()
    }

    /// The same experiment restricted to what was published by `vintage`.
    pub fn as_of(&self, vintage: VintageDate) -> Result<Self, PipelineError> {
        let pool = snapshot_at(&self.pool, vintage).to_series();
        Experiment::new(pool, self.target().id(), self.options)
    }

    pub fn target_growth(&self) -> Result<&TimeSeries, PipelineError> {
        self.growth[self.target].as_ref().map_err(|e| e.clone().into())
    }

    /// Actual target growth for `year`.
    pub fn actual(&self, year: i32) -> Result<f64, PipelineError> {
        self.target_growth()?.get(&Period::annual(year)).ok_or(PipelineError::MissingTarget { year })
    }

    fn growth_of(&self, id: &str) -> Result<&TimeSeries, PipelineError> {
        let i = self.pool.iter().position(|s| s.id() == id).ok_or_else(|| PipelineError::UnknownSeries(id.into()))?;
        self.growth[i].as_ref().map_err(|e| e.clone().into())
    }

    /// Growth series for `ids`, standardized with statistics fitted over `fit_years`.
    pub fn prepare(
        &self,
        ids: &[String],
        fit_years: YearRange,
    ) -> Result<(Vec<TimeSeries>, Vec<StandardizationParams>), PipelineError> {
        let fit = MonthRange::years(fit_years.first, fit_years.last);
        let mut series = Vec::with_capacity(ids.len());
        let mut params = Vec::with_capacity(ids.len());
        for id in ids {
            let g = self.growth_of(id)?;
            let p = transform::standardize_fit(g, fit)?;
            series.push(transform::standardize_apply(g, &p));
            params.push(p);
        }
        Ok((series, params))
    }

    /// Growth series for `ids` standardized with previously fitted statistics.
    pub fn prepare_with(
        &self,
        ids: &[String],
        params: &[StandardizationParams],
    ) -> Result<Vec<TimeSeries>, PipelineError> {
        ids.iter().zip(params).map(|(id, p)| Ok(transform::standardize_apply(self.growth_of(id)?, p))).collect()
    }

    /// Trains `spec` on full-data windows for every year of `train_years`.
    pub fn fit(&self, spec: &ModelSpec, train_years: YearRange) -> Result<TrainedModel, PipelineError> {
        if spec.variables.is_empty() {
            return Err(PipelineError::NoVariables);
        }
        spec.hyper.validate()?;
        let (prepared, params) = self.prepare(&spec.variables, train_years)?;
        let snapshot = DatasetSnapshot::full(&prepared);
        let mut dataset = Vec::with_capacity(train_years.len());
        for year in train_years.years() {
            let actual = self.actual(year)?;
            let matrix = transform::build_design_matrix(&snapshot, &spec.variables, year, spec.hyper.n_timesteps)?;
            dataset.push((matrix, actual));
        }
        Ok(lstm::train(&dataset, &spec.hyper, params)?)
    }

    /// Window for `year` as seen at `vintage` (`None` for full data), using the
    /// model's variables and standardization.
    ///
    /// When nothing in the window has been published yet, the all-fill window
    /// is returned, which makes the nowcast the model's unconditional output.
    pub fn window(
        &self,
        model: &TrainedModel,
        year: i32,
        vintage: Option<VintageDate>,
    ) -> Result<DesignMatrix, PipelineError> {
        let prepared = self.prepare_with(&model.variable_ids, &model.standardization)?;
        let snapshot = match vintage {
            Some(v) => snapshot_at(&prepared, v),
            None => DatasetSnapshot::full(&prepared),
        };
        match transform::build_design_matrix(&snapshot, &model.variable_ids, year, model.hyper.n_timesteps) {
            Err(TransformError::AllMissing { .. }) => {
                Ok(DesignMatrix::all_filled(year, model.variable_ids.clone(), model.hyper.n_timesteps))
            }
            other => Ok(other?),
        }
    }

    pub fn nowcast(
        &self,
        model: &TrainedModel,
        year: i32,
        vintage: Option<VintageDate>,
    ) -> Result<(f64, DesignMatrix), PipelineError> {
        let window = self.window(model, year, vintage)?;
        Ok((lstm::predict(model, &window)?, window))
    }

    /// Latest target level published by `vintage`.
    pub fn last_published_level(&self, vintage: VintageDate) -> Option<&Observation> {
        self.target().published_by(vintage.month_index()).last()
    }
}
