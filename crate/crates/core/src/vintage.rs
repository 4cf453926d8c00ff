//! Synthetic data vintages: a series pool as it would have looked on a given date.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::series::{MonthIndex, Observation, Period, TimeSeries};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Calendar month at which a dataset is observed. Rendered as `YYYY-MM`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct VintageDate {
    year: i32,
    month: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvalidVintage(pub alloc::string::String);

impl fmt::Display for InvalidVintage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid vintage '{}' (expected YYYY-MM)", self.0)
    }
}

impl core::error::Error for InvalidVintage {}

impl VintageDate {
    pub fn new(year: i32, month: u32) -> Option<Self> {
        (1..=12).contains(&month).then_some(VintageDate { year, month })
    }

    pub const fn from_month_index(m: MonthIndex) -> Self {
        VintageDate { year: m.year(), month: m.month() }
    }

    pub const fn year(&self) -> i32 {
        self.year
    }

    pub const fn month(&self) -> u32 {
        self.month
    }

    pub const fn month_index(&self) -> MonthIndex {
        MonthIndex::from_year_month(self.year, self.month)
    }

    pub const fn offset(&self, months: i64) -> Self {
        Self::from_month_index(self.month_index().offset(months))
    }

    /// December of `year`, the month in which an annual target period ends.
    pub const fn end_of_year(year: i32) -> Self {
        VintageDate { year, month: 12 }
    }
}

impl fmt::Display for VintageDate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for VintageDate {
    type Err = InvalidVintage;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || InvalidVintage(s.into());
        let (y, m) = s.trim().split_once('-').ok_or_else(bad)?;
        if y.len() != 4 || m.len() != 2 || !y.bytes().chain(m.bytes()).all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let year = y.parse().map_err(|_| bad())?;
        let month = m.parse().map_err(|_| bad())?;
        VintageDate::new(year, month).ok_or_else(bad)
    }
}

/// Immutable view of a series pool restricted to what was published by a vintage.
#[derive(Debug, Clone)]
pub struct DatasetSnapshot<'a> {
    vintage: Option<VintageDate>,
    pool: &'a [TimeSeries],
    visible: Vec<usize>,
}

impl<'a> DatasetSnapshot<'a> {
    /// Snapshot that exposes every stored observation ("full data").
    pub fn full(pool: &'a [TimeSeries]) -> Self {
        DatasetSnapshot { vintage: None, pool, visible: pool.iter().map(|s| s.observations().len()).collect() }
    }

    /// `None` for a full-data snapshot.
    pub fn vintage(&self) -> Option<VintageDate> {
        self.vintage
    }

    pub fn pool(&self) -> &'a [TimeSeries] {
        self.pool
    }

    /// Latest period of series `index` whose publication month is on or before the
    /// vintage, whether or not the series stores a value for it.
    pub fn cutoff(&self, index: usize) -> Option<Period> {
        let vintage = self.vintage?;
        let s = &self.pool[index];
        let last_end = vintage.month_index().offset(-(s.schedule().lag_months as i64));
        Some(Period::latest_ending_by(last_end, s.frequency()))
    }

    /// Observations of series `index` visible at this vintage.
    pub fn observations(&self, index: usize) -> &'a [Observation] {
        &self.pool[index].observations()[..self.visible[index]]
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.pool.iter().position(|s| s.id() == id)
    }

    /// Visible observations of the series named `id`.
    pub fn observations_of(&self, id: &str) -> Option<&'a [Observation]> {
        self.position(id).map(|i| self.observations(i))
    }

    /// Total number of visible observations across the pool.
    pub fn visible_count(&self) -> usize {
        self.visible.iter().sum()
    }

    /// Materializes the visible observations as standalone series.
    pub fn to_series(&self) -> Vec<TimeSeries> {
        self.pool
            .iter()
            .enumerate()
            .map(|(i, s)| {
                s.with_observations(self.observations(i).to_vec()).expect("a prefix of a valid series is valid")
            })
            .collect()
    }
}

/// Drops every observation published after `vintage`.
pub fn snapshot_at(pool: &[TimeSeries], vintage: VintageDate) -> DatasetSnapshot<'_> {
    let month = vintage.month_index();
    let visible = pool.iter().map(|s| s.published_by(month).len()).collect();
    DatasetSnapshot { vintage: Some(vintage), pool, visible }
}

/// Monthly vintages from January of `target_year` through July of the next year (19 dates).
pub fn trace_schedule(target_year: i32) -> Vec<VintageDate> {
    let start = VintageDate::new(target_year, 1).expect("january");
    (0..19).map(|k| start.offset(k)).collect()
}

/// December of the target year plus offsets of 6 and 10 months.
pub fn checkpoint_schedule(target_year: i32) -> Vec<VintageDate> {
    let end = VintageDate::end_of_year(target_year);
    [0, 6, 10].iter().map(|&k| end.offset(k)).collect()
}

/// Vintages to evaluate for each target year, expressed either relative to
/// December of the target year or as fixed calendar dates.
#[derive(Debug, Clone, PartialEq)]
pub enum VintageSchedule {
    /// Month offsets from December of the target year.
    Relative(Vec<i64>),
    Absolute(Vec<VintageDate>),
}

impl VintageSchedule {
    pub fn checkpoint() -> Self {
        VintageSchedule::Relative([0, 6, 10].into())
    }

    pub fn trace() -> Self {
        VintageSchedule::Relative((-11..=7).collect())
    }

    pub fn vintages_for(&self, target_year: i32) -> Vec<VintageDate> {
        match self {
            VintageSchedule::Relative(offsets) => {
                let end = VintageDate::end_of_year(target_year);
                offsets.iter().map(|&k| end.offset(k)).collect()
            }
            VintageSchedule::Absolute(dates) => dates.clone(),
        }
    }

    /// Label of the `k`-th schedule entry, shared across target years.
    pub fn label(&self, k: usize) -> alloc::string::String {
        use alloc::format;
        match self {
            VintageSchedule::Relative(offsets) => format!("M{:+}", offsets[k]),
            VintageSchedule::Absolute(dates) => format!("{}", dates[k]),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            VintageSchedule::Relative(v) => v.len(),
            VintageSchedule::Absolute(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
