//! Level series to model-ready monthly windows.
//!
//! Per variable the chain is: seasonal adjustment (monthly and quarterly only),
//! growth rate, standardization, monthly alignment, then zero fill. Because
//! values are standardized before filling, a filled zero is the training-span
//! mean.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::series::{Frequency, MonthIndex, Observation, Period, TimeSeries};
use crate::vintage::DatasetSnapshot;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
pub enum TransformError {
    /// A growth-rate denominator was zero or negative.
    NonPositiveBase {
        series: String,
        period: Period,
    },
    InsufficientData {
        series: String,
        reason: &'static str,
    },
    /// Seasonal adjustment was requested for annual data.
    NotApplicable {
        series: String,
    },
    ZeroVariance {
        series: String,
    },
    EmptyOverlap {
        series: String,
    },
    AllMissing {
        series: String,
    },
    UnknownVariable(String),
    InvalidWindow,
}

impl fmt::Display for TransformError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransformError::NonPositiveBase { series, period } => {
                write!(f, "series '{series}': non-positive growth base at {period}")
            }
            TransformError::InsufficientData { series, reason } => {
                write!(f, "series '{series}': insufficient data ({reason})")
            }
            TransformError::NotApplicable { series } => {
                write!(f, "series '{series}': seasonal adjustment does not apply to annual data")
            }
            TransformError::ZeroVariance { series } => write!(f, "series '{series}': zero variance in fit range"),
            TransformError::EmptyOverlap { series } => write!(f, "series '{series}': no observation inside grid"),
            TransformError::AllMissing { series } => write!(f, "series '{series}': every value is missing"),
            TransformError::UnknownVariable(id) => write!(f, "unknown variable '{id}'"),
            TransformError::InvalidWindow => f.write_str("window needs at least one timestep"),
        }
    }
}

impl core::error::Error for TransformError {}

fn rebuild(s: &TimeSeries, observations: Vec<Observation>) -> TimeSeries {
    s.with_observations(observations).expect("transform preserves series invariants")
}

/// Period-over-period simple growth `v_t / v_{t-1} - 1`.
///
/// Only consecutive periods produce an output; a gap drops the period after it.
pub fn growth_rate(s: &TimeSeries) -> Result<TimeSeries, TransformError> {
    let mut out = Vec::with_capacity(s.observations().len());
    for w in s.observations().windows(2) {
        if !w[0].period.is_followed_by(&w[1].period) {
            continue;
        }
        if w[0].value <= 0.0 {
            return Err(TransformError::NonPositiveBase { series: s.id().into(), period: w[0].period });
        }
        out.push(Observation::new(w[1].period, w[1].value / w[0].value - 1.0));
    }
    if out.is_empty() {
        return Err(TransformError::InsufficientData { series: s.id().into(), reason: "no consecutive pair" });
    }
    Ok(rebuild(s, out))
}

/// Inverse of [`growth_rate`]: `[l0, l0(1+g1), ...]`.
pub fn reconstruct_level(initial_level: f64, growths: &[f64]) -> Vec<f64> {
    let mut levels = Vec::with_capacity(growths.len() + 1);
    levels.push(initial_level);
    let mut level = initial_level;
    for g in growths {
        level *= 1.0 + g;
        levels.push(level);
    }
    levels
}

/// Classical additive decomposition: subtracts a zero-sum seasonal index per
/// subperiod, estimated from deviations around a centered moving average.
pub fn seasonal_adjust(s: &TimeSeries) -> Result<TimeSeries, TransformError> {
    let ppy = s.frequency().periods_per_year() as usize;
    if s.frequency() == Frequency::Annual {
        return Err(TransformError::NotApplicable { series: s.id().into() });
    }
    let obs = s.observations();

    // Contiguous runs as [start, end) index ranges.
    let mut runs = Vec::new();
    let mut start = 0;
    for i in 1..=obs.len() {
        if i == obs.len() || !obs[i - 1].period.is_followed_by(&obs[i].period) {
            if i > start {
                runs.push((start, i));
            }
            start = i;
        }
    }
    if !runs.iter().any(|&(a, b)| b - a >= 2 * ppy) {
        return Err(TransformError::InsufficientData {
            series: s.id().into(),
            reason: "fewer than two complete seasonal cycles",
        });
    }

    // Centered moving average of length ppy; even lengths use a 2 x ppy average
    // with half weights on the two end points.
    let half = ppy / 2;
    let even = ppy.is_multiple_of(2);
    let mut sums = vec![0.0; ppy];
    let mut counts = vec![0usize; ppy];
    for &(a, b) in &runs {
        if b - a < 2 * half + 1 {
            continue;
        }
        for i in (a + half)..(b - half) {
            let mut trend = 0.0;
            for (k, o) in obs[i - half..=i + half].iter().enumerate() {
                let w = if even && (k == 0 || k == 2 * half) { 0.5 } else { 1.0 };
                trend += w * o.value;
            }
            trend /= ppy as f64;
            let sub = obs[i].period.subperiod() as usize - 1;
            sums[sub] += obs[i].value - trend;
            counts[sub] += 1;
        }
    }
    if counts.contains(&0) {
        return Err(TransformError::InsufficientData {
            series: s.id().into(),
            reason: "a subperiod has no detrended value",
        });
    }
    let mut index: Vec<f64> = sums.iter().zip(&counts).map(|(s, &c)| s / c as f64).collect();
    let centre = index.iter().sum::<f64>() / ppy as f64;
    for v in &mut index {
        *v -= centre;
    }
    let adjusted =
        obs.iter().map(|o| Observation::new(o.period, o.value - index[o.period.subperiod() as usize - 1])).collect();
    Ok(rebuild(s, adjusted))
}

/// Inclusive range of calendar months.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct MonthRange {
    pub start: MonthIndex,
    pub end: MonthIndex,
}

impl MonthRange {
    pub fn new(start: MonthIndex, end: MonthIndex) -> Self {
        MonthRange { start, end }
    }

    /// January of `first` through December of `last`.
    pub fn years(first: i32, last: i32) -> Self {
        MonthRange::new(MonthIndex::from_year_month(first, 1), MonthIndex::from_year_month(last, 12))
    }

    pub fn contains(&self, m: MonthIndex) -> bool {
        self.start <= m && m <= self.end
    }

    pub fn len(&self) -> usize {
        (self.end.0 - self.start.0 + 1).max(0) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct StandardizationParams {
    pub mean: f64,
    /// Population standard deviation, always positive.
    pub sd: f64,
    pub fitted_on: MonthRange,
}

/// Mean and population standard deviation of the observations whose period
/// ends inside `fit_range`.
pub fn standardize_fit(s: &TimeSeries, fit_range: MonthRange) -> Result<StandardizationParams, TransformError> {
    let inside: Vec<f64> =
        s.observations().iter().filter(|o| fit_range.contains(o.period.end_month())).map(|o| o.value).collect();
    if inside.len() < 2 {
        return Err(TransformError::InsufficientData {
            series: s.id().into(),
            reason: "fewer than two observations in fit range",
        });
    }
    let n = inside.len() as f64;
    let mean = inside.iter().sum::<f64>() / n;
    let var = inside.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sd = libm::sqrt(var);
    // Relative floor so rounding noise on a constant series still counts as constant.
    if sd.is_nan() || sd <= 1e-12 * (1.0 + libm::fabs(mean)) {
        return Err(TransformError::ZeroVariance { series: s.id().into() });
    }
    Ok(StandardizationParams { mean, sd, fitted_on: fit_range })
}

pub fn standardize_apply(s: &TimeSeries, params: &StandardizationParams) -> TimeSeries {
    let z = s.observations().iter().map(|o| Observation::new(o.period, (o.value - params.mean) / params.sd)).collect();
    rebuild(s, z)
}

/// One variable on a contiguous monthly grid; `None` marks a missing month.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedColumn {
    pub variable_id: String,
    pub grid: MonthRange,
    pub values: Vec<Option<f64>>,
}

impl AlignedColumn {
    pub fn missing_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }
}

fn align_observations(id: &str, observations: &[Observation], grid: MonthRange) -> AlignedColumn {
    let mut values = vec![None; grid.len()];
    for o in observations {
        let m = o.period.end_month();
        if grid.contains(m) {
            values[(m.0 - grid.start.0) as usize] = Some(o.value);
        }
    }
    AlignedColumn { variable_id: id.into(), grid, values }
}

/// Places each observation at the last month of its period.
pub fn align_to_monthly(s: &TimeSeries, grid: MonthRange) -> Result<AlignedColumn, TransformError> {
    let col = align_observations(s.id(), s.observations(), grid);
    if col.values.iter().all(Option::is_none) {
        return Err(TransformError::EmptyOverlap { series: s.id().into() });
    }
    Ok(col)
}

/// Replaces every missing cell with 0.0.
pub fn fill_missing(col: &AlignedColumn) -> Result<AlignedColumn, TransformError> {
    if col.values.iter().all(Option::is_none) {
        return Err(TransformError::AllMissing { series: col.variable_id.clone() });
    }
    Ok(AlignedColumn {
        variable_id: col.variable_id.clone(),
        grid: col.grid,
        values: col.values.iter().map(|v| Some(v.unwrap_or(0.0))).collect(),
    })
}

/// Window of monthly values ending in December of the target year.
///
/// Stored row-major: row `t` holds every variable for month `t` of the window.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    target_year: i32,
    n_timesteps: usize,
    variable_ids: Vec<String>,
    values: Vec<f64>,
    observed: Vec<bool>,
}

impl DesignMatrix {
    /// Matrix from explicit row-major values, every cell marked observed.
    pub fn from_rows(
        target_year: i32,
        variable_ids: Vec<String>,
        n_timesteps: usize,
        values: Vec<f64>,
    ) -> Result<Self, TransformError> {
        if n_timesteps == 0 || values.len() != n_timesteps * variable_ids.len() {
            return Err(TransformError::InvalidWindow);
        }
        let observed = vec![true; values.len()];
        Ok(DesignMatrix { target_year, n_timesteps, variable_ids, values, observed })
    }

    pub fn target_year(&self) -> i32 {
        self.target_year
    }

    pub fn n_timesteps(&self) -> usize {
        self.n_timesteps
    }

    pub fn n_vars(&self) -> usize {
        self.variable_ids.len()
    }

    pub fn variable_ids(&self) -> &[String] {
        &self.variable_ids
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, t: usize) -> &[f64] {
        let v = self.n_vars();
        &self.values[t * v..(t + 1) * v]
    }

    pub fn get(&self, t: usize, var: usize) -> f64 {
        self.values[t * self.n_vars() + var]
    }

    /// Whether cell `(t, var)` came from a published value rather than the fill.
    pub fn is_observed(&self, t: usize, var: usize) -> bool {
        self.observed[t * self.n_vars() + var]
    }

    pub fn filled_count(&self) -> usize {
        self.observed.iter().filter(|o| !**o).count()
    }

    /// First calendar month of the window.
    pub fn first_month(&self) -> MonthIndex {
        MonthIndex::from_year_month(self.target_year, 12).offset(1 - self.n_timesteps as i64)
    }

    /// Same shape and ids with all cells set to the fill value.
    pub fn all_filled(target_year: i32, variable_ids: Vec<String>, n_timesteps: usize) -> Self {
        let cells = n_timesteps * variable_ids.len();
        DesignMatrix { target_year, n_timesteps, variable_ids, values: vec![0.0; cells], observed: vec![false; cells] }
    }
}

/// Builds the window for `target_year` from the series visible in `snapshot`.
///
/// The snapshot's series must already be transformed and standardized. A
/// variable with nothing published inside the window becomes an all-fill
/// column; the call only fails when that is true of every variable.
pub fn build_design_matrix(
    snapshot: &DatasetSnapshot<'_>,
    variable_ids: &[String],
    target_year: i32,
    n_timesteps: usize,
) -> Result<DesignMatrix, TransformError> {
    if n_timesteps == 0 {
        return Err(TransformError::InvalidWindow);
    }
    let end = MonthIndex::from_year_month(target_year, 12);
    let grid = MonthRange::new(end.offset(1 - n_timesteps as i64), end);
    let n_vars = variable_ids.len();
    let mut values = vec![0.0; n_timesteps * n_vars];
    let mut observed = vec![false; n_timesteps * n_vars];
    for (j, id) in variable_ids.iter().enumerate() {
        let obs = snapshot.observations_of(id).ok_or_else(|| TransformError::UnknownVariable(id.clone()))?;
        let aligned = align_observations(id, obs, grid);
        let Ok(filled) = fill_missing(&aligned) else {
            continue;
        };
        for (t, (raw, v)) in aligned.values.iter().zip(&filled.values).enumerate() {
            values[t * n_vars + j] = v.expect("filled");
            observed[t * n_vars + j] = raw.is_some();
        }
    }
    if n_vars > 0 && observed.iter().all(|o| !o) {
        return Err(TransformError::AllMissing { series: variable_ids.join(",") });
    }
    Ok(DesignMatrix { target_year, n_timesteps, variable_ids: variable_ids.to_vec(), values, observed })
}

/// Options applied before standardization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct TransformOptions {
    pub seasonal_adjust: bool,
}

impl Default for TransformOptions {
    fn default() -> Self {
        TransformOptions { seasonal_adjust: true }
    }
}

/// Seasonal adjustment (monthly and quarterly series, when enabled) followed by
/// the growth rate.
pub fn to_growth(s: &TimeSeries, options: TransformOptions) -> Result<TimeSeries, TransformError> {
    if options.seasonal_adjust && s.frequency() != Frequency::Annual {
        growth_rate(&seasonal_adjust(s)?)
    } else {
        growth_rate(s)
    }
}

impl TransformError {
    pub fn series(&self) -> String {
        match self {
            TransformError::NonPositiveBase { series, .. }
            | TransformError::InsufficientData { series, .. }
            | TransformError::NotApplicable { series }
            | TransformError::ZeroVariance { series }
            | TransformError::EmptyOverlap { series }
            | TransformError::AllMissing { series } => series.clone(),
            TransformError::UnknownVariable(id) => id.clone(),
            TransformError::InvalidWindow => "".to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vintage::{snapshot_at, VintageDate};

    fn annual(values: &[f64]) -> TimeSeries {
        TimeSeries::from_pairs(
            "x",
            Frequency::Annual,
            values.iter().enumerate().map(|(i, &v)| (Period::annual(2000 + i as i32), v)),
            0,
        )
        .unwrap()
    }

    fn monthly_from(id: &str, start_year: i32, values: &[f64], lag: u32) -> TimeSeries {
        let start = MonthIndex::from_year_month(start_year, 1);
        TimeSeries::from_pairs(
            id,
            Frequency::Monthly,
            values.iter().enumerate().map(|(i, &v)| {
                let m = start.offset(i as i64);
                (Period::monthly(m.year(), m.month()).unwrap(), v)
            }),
            lag,
        )
        .unwrap()
    }

    #[test]
    fn growth_examples() {
        let g: Vec<f64> = growth_rate(&annual(&[100.0, 110.0, 121.0])).unwrap().values().collect();
        assert_eq!(g.len(), 2);
        assert!((g[0] - 0.10).abs() < 1e-12 && (g[1] - 0.10).abs() < 1e-12);

        let g: Vec<f64> = growth_rate(&annual(&[5.0; 4])).unwrap().values().collect();
        assert_eq!(g, [0.0, 0.0, 0.0]);

        assert!(matches!(growth_rate(&annual(&[0.0, 3.0])), Err(TransformError::NonPositiveBase { .. })));
        assert!(matches!(growth_rate(&annual(&[1.0])), Err(TransformError::InsufficientData { .. })));
    }

    #[test]
    fn growth_skips_gaps() {
        let s = TimeSeries::from_pairs(
            "g",
            Frequency::Annual,
            [(2000, 1.0), (2001, 2.0), (2003, 3.0), (2004, 6.0)].map(|(y, v)| (Period::annual(y), v)),
            0,
        )
        .unwrap();
        let g = growth_rate(&s).unwrap();
        let periods: Vec<i32> = g.observations().iter().map(|o| o.period.year()).collect();
        assert_eq!(periods, [2001, 2004]);
    }

    #[test]
    fn level_reconstruction() {
        let l = reconstruct_level(100.0, &[0.10, 0.10]);
        assert_eq!(l.len(), 3);
        assert_eq!(l[0], 100.0);
        assert!((l[1] - 110.0).abs() < 1e-12 && (l[2] - 121.0).abs() < 1e-9);
        assert_eq!(reconstruct_level(7.5, &[]), [7.5]);
    }

    #[test]
    fn seasonal_pattern_removed() {
        let pattern = [3.0, -1.0, 2.0, -4.0, 0.5, 1.5, -2.5, 0.0, 1.0, -0.5, 2.0, -2.0];
        let sum: f64 = pattern.iter().sum();
        let values: Vec<f64> = (0..48).map(|i| 10.0 + pattern[i % 12] - sum / 12.0).collect();
        let adj = seasonal_adjust(&monthly_from("s", 2000, &values, 0)).unwrap();
        let worst = adj.values().map(|v| (v - 10.0).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-9, "max deviation {worst}");
    }

    #[test]
    fn constant_series_unchanged_and_annual_rejected() {
        let s = monthly_from("c", 2000, &[4.0; 30], 0);
        let adj = seasonal_adjust(&s).unwrap();
        assert!(adj.values().all(|v| (v - 4.0).abs() < 1e-12));
        assert!(matches!(seasonal_adjust(&annual(&[1.0; 10])), Err(TransformError::NotApplicable { .. })));
        let short = monthly_from("c", 2000, &[4.0; 23], 0);
        assert!(matches!(seasonal_adjust(&short), Err(TransformError::InsufficientData { .. })));
    }

    #[test]
    fn quarterly_seasonal_adjust() {
        let pattern = [1.0, -2.0, 3.0, -2.0];
        let s = TimeSeries::from_pairs(
            "q",
            Frequency::Quarterly,
            (0..16).map(|i| {
                (
                    Period::quarterly(2000 + i / 4, (i % 4) as u32 + 1).unwrap(),
                    50.0 + 0.5 * i as f64 + pattern[i as usize % 4],
                )
            }),
            0,
        )
        .unwrap();
        let adj = seasonal_adjust(&s).unwrap();
        for (i, v) in adj.values().enumerate().skip(2).take(12) {
            assert!((v - (50.0 + 0.5 * i as f64)).abs() < 1e-9);
        }
    }

    #[test]
    fn standardization_examples() {
        let s = annual(&[1.0, 2.0, 3.0]);
        let p = standardize_fit(&s, MonthRange::years(2000, 2002)).unwrap();
        assert!((p.mean - 2.0).abs() < 1e-15);
        assert!((p.sd - 0.816_496_580_927_726).abs() < 1e-12);
        let z: Vec<f64> = standardize_apply(&s, &p).values().collect();
        assert!((z[0] + 1.224_744_871_391_589).abs() < 1e-9);
        assert_eq!(z[1], 0.0);
        assert!((z[2] - 1.224_744_871_391_589).abs() < 1e-9);
        let four = standardize_apply(&annual(&[4.0]), &p);
        assert!((four.values().next().unwrap() - 2.449_489_742_783_178).abs() < 1e-9);

        assert!(matches!(
            standardize_fit(&annual(&[3.0; 5]), MonthRange::years(2000, 2004)),
            Err(TransformError::ZeroVariance { .. })
        ));
    }

    #[test]
    fn fit_range_excludes_later_years() {
        let mut values = vec![1.0; 11];
        values[0] = 0.0;
        values.extend([1000.0, 2000.0]);
        let s = TimeSeries::from_pairs(
            "r",
            Frequency::Annual,
            values.iter().enumerate().map(|(i, &v)| (Period::annual(2001 + i as i32), v)),
            0,
        )
        .unwrap();
        let p = standardize_fit(&s, MonthRange::years(2001, 2011)).unwrap();
        assert!((p.mean - 10.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn alignment_placement() {
        let grid = MonthRange::years(2020, 2020);
        let q =
            TimeSeries::from_pairs("q", Frequency::Quarterly, [(Period::quarterly(2020, 1).unwrap(), 2.5)], 0).unwrap();
        let col = align_to_monthly(&q, grid).unwrap();
        assert_eq!(&col.values[..3], &[None, None, Some(2.5)]);

        let a = TimeSeries::from_pairs("a", Frequency::Annual, [(Period::annual(2020), 1.0)], 0).unwrap();
        let col = align_to_monthly(&a, grid).unwrap();
        assert_eq!(col.missing_count(), 11);
        assert_eq!(col.values[11], Some(1.0));

        let m = monthly_from("m", 2020, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0], 0);
        let col = align_to_monthly(&m, grid).unwrap();
        assert_eq!(col.missing_count(), 0);
        assert_eq!(col.values[4], Some(5.0));

        let outside = TimeSeries::from_pairs("o", Frequency::Annual, [(Period::annual(2010), 1.0)], 0).unwrap();
        assert!(matches!(align_to_monthly(&outside, grid), Err(TransformError::EmptyOverlap { .. })));
    }

    #[test]
    fn fill_examples() {
        let col = AlignedColumn {
            variable_id: "v".into(),
            grid: MonthRange::years(2020, 2020),
            values: vec![None, Some(1.0), None],
        };
        assert_eq!(fill_missing(&col).unwrap().values, [Some(0.0), Some(1.0), Some(0.0)]);
        let full = AlignedColumn { values: vec![Some(2.0), Some(3.0)], ..col.clone() };
        assert_eq!(fill_missing(&full).unwrap(), full);
        let none = AlignedColumn { values: vec![None, None], ..col };
        assert!(matches!(fill_missing(&none), Err(TransformError::AllMissing { .. })));
    }

    #[test]
    fn design_matrix_ragged_edge() {
        let pool = vec![monthly_from("v", 2014, &(1..=36).map(f64::from).collect::<Vec<_>>(), 1)];
        let ids = vec![String::from("v")];
        let snap = snapshot_at(&pool, VintageDate::new(2015, 3).unwrap());
        let dm = build_design_matrix(&snap, &ids, 2015, 12).unwrap();
        assert!(dm.is_observed(0, 0) && dm.is_observed(1, 0));
        assert!((2..12).all(|t| !dm.is_observed(t, 0) && dm.get(t, 0) == 0.0));
        assert_eq!(dm.get(1, 0), 14.0);
        assert_eq!(dm.filled_count(), 10);

        let late = snapshot_at(&pool, VintageDate::new(2016, 7).unwrap());
        assert_eq!(build_design_matrix(&late, &ids, 2015, 12).unwrap().filled_count(), 0);

        let one = build_design_matrix(&late, &ids, 2015, 1).unwrap();
        assert_eq!(one.n_timesteps(), 1);
        assert_eq!(one.get(0, 0), 24.0);
        assert_eq!(one.first_month(), MonthIndex::from_year_month(2015, 12));

        let early = snapshot_at(&pool, VintageDate::new(2015, 1).unwrap());
        assert!(matches!(build_design_matrix(&early, &ids, 2015, 12), Err(TransformError::AllMissing { .. })));
        assert!(matches!(
            build_design_matrix(&late, &["nope".into()], 2015, 12),
            Err(TransformError::UnknownVariable(_))
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn growth_level_round_trip(start in 0.1f64..1000.0, steps in proptest::collection::vec(-0.5f64..0.5, 1..60)) {
                let levels = reconstruct_level(start, &steps);
                let g: Vec<f64> = growth_rate(&annual(&levels)).unwrap().values().collect();
                let back = reconstruct_level(start, &g);
                for (a, b) in back.iter().zip(&levels) {
                    prop_assert!(((a - b) / b).abs() < 1e-10);
                }
            }

            #[test]
            fn standardized_fit_span_moments(values in proptest::collection::vec(-1e3f64..1e3, 3..40)) {
                let s = annual(&values);
                let range = MonthRange::years(2000, 2000 + values.len() as i32 - 1);
                if let Ok(p) = standardize_fit(&s, range) {
                    let z: Vec<f64> = standardize_apply(&s, &p).values().collect();
                    let n = z.len() as f64;
                    let mean = z.iter().sum::<f64>() / n;
                    let sd = (z.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
                    prop_assert!(mean.abs() < 1e-12);
                    prop_assert!((sd - 1.0).abs() < 1e-12);
                }
            }

            #[test]
            fn pure_trend_survives_adjustment(a in -50.0f64..50.0, b in -2.0f64..2.0, n in 24usize..72) {
                let values: Vec<f64> = (0..n).map(|i| a + b * i as f64).collect();
                let adj: Vec<f64> = seasonal_adjust(&monthly_from("t", 2000, &values, 0)).unwrap().values().collect();
                for (x, y) in adj.iter().zip(&values).skip(6).take(n - 12) {
                    prop_assert!((x - y).abs() < 1e-9);
                }
            }
        }
    }
}
