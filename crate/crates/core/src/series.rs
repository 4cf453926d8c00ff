//! Calendar-aware time-series primitives.
//!
//! Missing values are never stored: a period that has no [`Observation`] is
//! missing. Explicit missing markers only appear once a series is aligned to a
//! monthly grid (see [`crate::transform`]).

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Sampling frequency of a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum Frequency {
    Monthly,
    Quarterly,
    Annual,
}

impl Frequency {
    pub const fn periods_per_year(self) -> u32 {
        match self {
            Frequency::Monthly => 12,
            Frequency::Quarterly => 4,
            Frequency::Annual => 1,
        }
    }

    /// Calendar months covered by one period.
    pub const fn months_per_period(self) -> u32 {
        12 / self.periods_per_year()
    }

    /// Single-letter code used in CSV files (`M`, `Q`, `A`).
    pub const fn code(self) -> char {
        match self {
            Frequency::Monthly => 'M',
            Frequency::Quarterly => 'Q',
            Frequency::Annual => 'A',
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        match code {
            "M" => Some(Frequency::Monthly),
            "Q" => Some(Frequency::Quarterly),
            "A" => Some(Frequency::Annual),
            _ => None,
        }
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Frequency::Monthly => "monthly",
            Frequency::Quarterly => "quarterly",
            Frequency::Annual => "annual",
        };
        f.write_str(name)
    }
}

/// Calendar month counted from January of year 0 (`year * 12 + month - 1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct MonthIndex(pub i64);

impl MonthIndex {
    /// `month` is 1-based.
    pub const fn from_year_month(year: i32, month: u32) -> Self {
        MonthIndex(year as i64 * 12 + month as i64 - 1)
    }

    pub const fn year(self) -> i32 {
        self.0.div_euclid(12) as i32
    }

    /// 1-based calendar month.
    pub const fn month(self) -> u32 {
        self.0.rem_euclid(12) as u32 + 1
    }

    pub const fn offset(self, months: i64) -> Self {
        MonthIndex(self.0 + months)
    }
}

impl fmt::Display for MonthIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year(), self.month())
    }
}

/// Error raised when a (year, subperiod) pair is outside the frequency's range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InvalidPeriod {
    pub year: i32,
    pub subperiod: u32,
    pub frequency: Frequency,
}

impl fmt::Display for InvalidPeriod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "subperiod {} of {} is outside 1..={} for {} data",
            self.subperiod,
            self.year,
            self.frequency.periods_per_year(),
            self.frequency
        )
    }
}

impl core::error::Error for InvalidPeriod {}

/// A year plus a 1-based subperiod; annual periods always use subperiod 1.
///
/// Ordering is by `(year, subperiod)` and is only meaningful between periods of
/// the same frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Period {
    year: i32,
    subperiod: u32,
    frequency: Frequency,
}

impl Period {
    pub fn new(year: i32, subperiod: u32, frequency: Frequency) -> Result<Self, InvalidPeriod> {
        if subperiod == 0 || subperiod > frequency.periods_per_year() {
            return Err(InvalidPeriod { year, subperiod, frequency });
        }
        Ok(Period { year, subperiod, frequency })
    }

    pub fn monthly(year: i32, month: u32) -> Result<Self, InvalidPeriod> {
        Self::new(year, month, Frequency::Monthly)
    }

    pub fn quarterly(year: i32, quarter: u32) -> Result<Self, InvalidPeriod> {
        Self::new(year, quarter, Frequency::Quarterly)
    }

    pub const fn annual(year: i32) -> Self {
        Period { year, subperiod: 1, frequency: Frequency::Annual }
    }

    pub const fn year(&self) -> i32 {
        self.year
    }

    pub const fn subperiod(&self) -> u32 {
        self.subperiod
    }

    pub const fn frequency(&self) -> Frequency {
        self.frequency
    }

    /// Sequential index of this period within its frequency.
    const fn ordinal(&self) -> i64 {
        self.year as i64 * self.frequency.periods_per_year() as i64 + self.subperiod as i64 - 1
    }

    const fn from_ordinal(ordinal: i64, frequency: Frequency) -> Self {
        let ppy = frequency.periods_per_year() as i64;
        Period { year: ordinal.div_euclid(ppy) as i32, subperiod: ordinal.rem_euclid(ppy) as u32 + 1, frequency }
    }

    pub const fn succ(&self) -> Self {
        Self::from_ordinal(self.ordinal() + 1, self.frequency)
    }

    pub const fn pred(&self) -> Self {
        Self::from_ordinal(self.ordinal() - 1, self.frequency)
    }

    /// True when `next` immediately follows `self` at the same frequency.
    pub fn is_followed_by(&self, next: &Period) -> bool {
        self.frequency == next.frequency && self.ordinal() + 1 == next.ordinal()
    }

    /// Last calendar month covered by this period.
    pub const fn end_month(&self) -> MonthIndex {
        MonthIndex(self.year as i64 * 12 + (self.subperiod * self.frequency.months_per_period()) as i64 - 1)
    }

    /// The latest period of `frequency` whose last month is at or before `month`.
    pub const fn latest_ending_by(month: MonthIndex, frequency: Frequency) -> Self {
        let per = frequency.months_per_period() as i64;
        // Number of whole periods completed once `month` has ended.
        let completed = (month.0 + 1).div_euclid(per);
        Self::from_ordinal(completed - 1, frequency)
    }
}

impl PartialOrd for Period {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Period {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        (self.year, self.subperiod, self.frequency).cmp(&(other.year, other.subperiod, other.frequency))
    }
}

impl fmt::Display for Period {
    /// Renders the CSV period format: `YYYY-MM`, `YYYY-Qn` or `YYYY`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.frequency {
            Frequency::Monthly => write!(f, "{:04}-{:02}", self.year, self.subperiod),
            Frequency::Quarterly => write!(f, "{:04}-Q{}", self.year, self.subperiod),
            Frequency::Annual => write!(f, "{:04}", self.year),
        }
    }
}

/// Why a period token could not be parsed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PeriodParseError {
    Malformed,
    Invalid(InvalidPeriod),
}

impl fmt::Display for PeriodParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PeriodParseError::Malformed => f.write_str("malformed period"),
            PeriodParseError::Invalid(e) => e.fmt(f),
        }
    }
}

impl core::error::Error for PeriodParseError {}

fn parse_year(token: &str) -> Result<i32, PeriodParseError> {
    if token.len() != 4 || !token.bytes().all(|b| b.is_ascii_digit()) {
        return Err(PeriodParseError::Malformed);
    }
    token.parse().map_err(|_| PeriodParseError::Malformed)
}

fn parse_sub(token: &str) -> Result<u32, PeriodParseError> {
    if token.is_empty() || token.len() > 2 || !token.bytes().all(|b| b.is_ascii_digit()) {
        return Err(PeriodParseError::Malformed);
    }
    token.parse().map_err(|_| PeriodParseError::Malformed)
}

/// Parses a period token for the given frequency.
pub fn parse_period(token: &str, frequency: Frequency) -> Result<Period, PeriodParseError> {
    let token = token.trim();
    let (year, sub) = match frequency {
        Frequency::Annual => (parse_year(token)?, 1),
        Frequency::Monthly => {
            let (y, m) = token.split_once('-').ok_or(PeriodParseError::Malformed)?;
            (parse_year(y)?, parse_sub(m)?)
        }
        Frequency::Quarterly => {
            let (y, q) = token.split_once("-Q").ok_or(PeriodParseError::Malformed)?;
            (parse_year(y)?, parse_sub(q)?)
        }
    };
    Period::new(year, sub, frequency).map_err(PeriodParseError::Invalid)
}

/// Index of the last calendar month covered by `p`.
pub const fn period_to_month(p: &Period) -> MonthIndex {
    p.end_month()
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Observation {
    pub period: Period,
    pub value: f64,
}

impl Observation {
    pub const fn new(period: Period, value: f64) -> Self {
        Observation { period, value }
    }
}

/// Months between the end of a period and the availability of its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct PublicationSchedule {
    pub lag_months: u32,
}

impl PublicationSchedule {
    pub const fn new(lag_months: u32) -> Self {
        PublicationSchedule { lag_months }
    }

    pub const fn publication_month(&self, period: &Period) -> MonthIndex {
        period.end_month().offset(self.lag_months as i64)
    }
}

/// A single invariant violation found by [`validate_observations`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Observation at `index` is not later than its predecessor.
    OutOfOrder {
        index: usize,
    },
    DuplicatePeriod(Period),
    FrequencyMismatch {
        index: usize,
        found: Frequency,
    },
    NonFiniteValue {
        index: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::OutOfOrder { index } => write!(f, "observation {index} is out of order"),
            Violation::DuplicatePeriod(p) => write!(f, "duplicate period {p}"),
            Violation::FrequencyMismatch { index, found } => {
                write!(f, "observation {index} has {found} frequency")
            }
            Violation::NonFiniteValue { index } => write!(f, "observation {index} is not finite"),
        }
    }
}

/// Returns every invariant violation in `observations`; an empty list means valid.
pub fn validate_observations(frequency: Frequency, observations: &[Observation]) -> Vec<Violation> {
    let mut out = Vec::new();
    for (index, obs) in observations.iter().enumerate() {
        if obs.period.frequency() != frequency {
            out.push(Violation::FrequencyMismatch { index, found: obs.period.frequency() });
        }
        if !obs.value.is_finite() {
            out.push(Violation::NonFiniteValue { index });
        }
        if index > 0 {
            let prev = &observations[index - 1].period;
            if *prev == obs.period {
                out.push(Violation::DuplicatePeriod(obs.period));
            } else if *prev > obs.period {
                out.push(Violation::OutOfOrder { index });
            }
        }
    }
    out
}

/// Validation failure carrying the offending series id.
#[derive(Debug, Clone, PartialEq)]
pub struct InvalidSeries {
    pub id: String,
    pub violations: Vec<Violation>,
}

impl fmt::Display for InvalidSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "series '{}' is invalid:", self.id)?;
        for v in &self.violations {
            write!(f, " {v};")?;
        }
        Ok(())
    }
}

impl core::error::Error for InvalidSeries {}

/// Observations of one variable at a single frequency, strictly ordered by period.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct TimeSeries {
    id: String,
    frequency: Frequency,
    observations: Vec<Observation>,
    schedule: PublicationSchedule,
}

impl TimeSeries {
    pub fn new(
        id: impl Into<String>,
        frequency: Frequency,
        observations: Vec<Observation>,
        schedule: PublicationSchedule,
    ) -> Result<Self, InvalidSeries> {
        let id = id.into();
        let violations = validate_observations(frequency, &observations);
        if !violations.is_empty() {
            return Err(InvalidSeries { id, violations });
        }
        Ok(TimeSeries { id, frequency, observations, schedule })
    }

    /// Builds a series from `(period, value)` pairs; periods must already be valid.
    pub fn from_pairs(
        id: impl Into<String>,
        frequency: Frequency,
        pairs: impl IntoIterator<Item = (Period, f64)>,
        lag_months: u32,
    ) -> Result<Self, InvalidSeries> {
        let observations = pairs.into_iter().map(|(p, v)| Observation::new(p, v)).collect();
        Self::new(id, frequency, observations, PublicationSchedule::new(lag_months))
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn frequency(&self) -> Frequency {
        self.frequency
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn schedule(&self) -> PublicationSchedule {
        self.schedule
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.observations.iter().map(|o| o.value)
    }

    pub fn get(&self, period: &Period) -> Option<f64> {
        self.observations.binary_search_by(|o| o.period.cmp(period)).ok().map(|i| self.observations[i].value)
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// Same id, frequency and schedule with replacement observations.
    pub fn with_observations(&self, observations: Vec<Observation>) -> Result<Self, InvalidSeries> {
        Self::new(self.id.clone(), self.frequency, observations, self.schedule)
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    /// Observations published no later than `month`, as a prefix slice.
    pub fn published_by(&self, month: MonthIndex) -> &[Observation] {
        let n = self.observations.partition_point(|o| self.schedule.publication_month(&o.period) <= month);
        &self.observations[..n]
    }
}

/// Inclusive range of calendar years.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct YearRange {
    pub first: i32,
    pub last: i32,
}

impl YearRange {
    /// `None` when `first > last`.
    pub fn new(first: i32, last: i32) -> Option<Self> {
        (first <= last).then_some(YearRange { first, last })
    }

    pub fn years(&self) -> core::ops::RangeInclusive<i32> {
        self.first..=self.last
    }

    pub fn len(&self) -> usize {
        (self.last - self.first + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, year: i32) -> bool {
        self.first <= year && year <= self.last
    }

    /// Smallest range covering both.
    pub fn span(&self, other: &YearRange) -> YearRange {
        YearRange { first: self.first.min(other.first), last: self.last.max(other.last) }
    }
}

impl fmt::Display for YearRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.first, self.last)
    }
}

pub fn observation_count(s: &TimeSeries) -> usize {
    s.observations().len()
}
