//! Rule cascade that classifies indicator catalog rows for nowcasting feasibility.
//!
//! Overall classification, first match wins:
//!
//! 1. tier other than 1: rejected ([`FeasibilityError::NotTier1`]);
//! 2. fewer than `min_obs` observations: Unlikely;
//! 3. publication lag known and below the periodicity's minimum, or the
//!    `NO_LAG` flag: Unlikely;
//! 4. data score Highly likely for consistent availability, else Likely;
//!    a `DISASTER_EVENT` flag caps it at Likely; the result is the lower of
//!    the data score and the explanatory-variable label.
//!
//! Explanatory-variable label: `BINARY_POLICY` or `STRUCTURAL_CONSTANT` gives
//! Unlikely, else `BUDGET_TYPE` or `ELECTION_BASED` gives Likely, else Highly
//! likely.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use bitflags::bitflags;

use crate::series::Frequency;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeasibilityError {
    NotTier1 { code: String, tier: u8 },
    NoEligibleRecords,
}

impl fmt::Display for FeasibilityError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeasibilityError::NotTier1 { code, tier } => {
                write!(f, "indicator {code} is tier {tier}; only tier 1 indicators can be nowcast")
            }
            FeasibilityError::NoEligibleRecords => f.write_str("no tier 1 records to compare"),
        }
    }
}

impl core::error::Error for FeasibilityError {}

/// Three-level scale, ordered `Unlikely < Likely < HighlyLikely`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeasibilityLabel {
    Unlikely,
    Likely,
    HighlyLikely,
}

impl FeasibilityLabel {
    pub const ALL: [FeasibilityLabel; 3] =
        [FeasibilityLabel::HighlyLikely, FeasibilityLabel::Likely, FeasibilityLabel::Unlikely];

    /// Catalog spelling: `Highly likely`, `Likely`, `Unlikely`.
    pub fn as_str(self) -> &'static str {
        match self {
            FeasibilityLabel::HighlyLikely => "Highly likely",
            FeasibilityLabel::Likely => "Likely",
            FeasibilityLabel::Unlikely => "Unlikely",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "Highly likely" => Some(FeasibilityLabel::HighlyLikely),
            "Likely" => Some(FeasibilityLabel::Likely),
            "Unlikely" => Some(FeasibilityLabel::Unlikely),
            _ => None,
        }
    }
}

impl fmt::Display for FeasibilityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Periodicity {
    Regular(Frequency),
    Irregular,
}

impl Periodicity {
    pub fn token(self) -> &'static str {
        match self {
            Periodicity::Regular(Frequency::Monthly) => "M",
            Periodicity::Regular(Frequency::Quarterly) => "Q",
            Periodicity::Regular(Frequency::Annual) => "A",
            Periodicity::Irregular => "irregular",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "irregular" => Some(Periodicity::Irregular),
            other => Frequency::from_code(other).map(Periodicity::Regular),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Availability {
    Consistent,
    VariesByRegion,
    Sporadic,
    IrregularInterval,
}

impl Availability {
    pub fn token(self) -> &'static str {
        match self {
            Availability::Consistent => "consistent",
            Availability::VariesByRegion => "varies_by_region",
            Availability::Sporadic => "sporadic",
            Availability::IrregularInterval => "irregular_interval",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "consistent" => Some(Availability::Consistent),
            "varies_by_region" => Some(Availability::VariesByRegion),
            "sporadic" => Some(Availability::Sporadic),
            "irregular_interval" => Some(Availability::IrregularInterval),
            _ => None,
        }
    }
}

bitflags! {
    /// Subject-matter properties recorded by whoever transcribes a catalog row.
    #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
    pub struct IndicatorFlags: u8 {
        const BINARY_POLICY = 1;
        const BUDGET_TYPE = 1 << 1;
        const ELECTION_BASED = 1 << 2;
        const STRUCTURAL_CONSTANT = 1 << 3;
        const DISASTER_EVENT = 1 << 4;
        const NO_LAG = 1 << 5;
    }
}

const FLAG_TOKENS: [(IndicatorFlags, &str); 6] = [
    (IndicatorFlags::BINARY_POLICY, "binary_policy"),
    (IndicatorFlags::BUDGET_TYPE, "budget_type"),
    (IndicatorFlags::ELECTION_BASED, "election_based"),
    (IndicatorFlags::STRUCTURAL_CONSTANT, "structural_constant"),
    (IndicatorFlags::DISASTER_EVENT, "disaster_event"),
    (IndicatorFlags::NO_LAG, "no_lag"),
];

impl IndicatorFlags {
    /// `;`-separated snake_case tokens; empty string for no flags.
    pub fn to_tokens(self) -> String {
        let mut out = String::new();
        for (flag, token) in FLAG_TOKENS {
            if self.contains(flag) {
                if !out.is_empty() {
                    out.push(';');
                }
                out.push_str(token);
            }
        }
        out
    }

    /// Inverse of [`Self::to_tokens`]; returns the first unknown token on failure.
    pub fn from_tokens(s: &str) -> Result<Self, String> {
        let mut flags = IndicatorFlags::empty();
        for token in s.split(';').map(str::trim).filter(|t| !t.is_empty()) {
            let (flag, _) = FLAG_TOKENS.iter().find(|(_, t)| *t == token).ok_or_else(|| String::from(token))?;
            flags |= *flag;
        }
        Ok(flags)
    }
}

/// One catalog row.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorRecord {
    pub indicator_code: String,
    pub name: String,
    pub unit: String,
    pub tier: u8,
    pub periodicity: Periodicity,
    pub observation_count: u32,
    /// `None` when the lag is not known.
    pub lag_months: Option<u32>,
    pub availability: Availability,
    pub flags: IndicatorFlags,
    pub catalog_explanatory: FeasibilityLabel,
    pub catalog_feasibility: FeasibilityLabel,
    pub notes: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleOutcome {
    Label(FeasibilityLabel),
    /// Upper bound on the data score.
    Cap(FeasibilityLabel),
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RuleStep {
    pub rule: &'static str,
    pub fired: bool,
    pub outcome: Option<RuleOutcome>,
}

/// Every rule evaluated for a record, in evaluation order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RuleTrace {
    pub steps: Vec<RuleStep>,
}

impl RuleTrace {
    fn record(&mut self, rule: &'static str, fired: bool, outcome: Option<RuleOutcome>) {
        self.steps.push(RuleStep { rule, fired, outcome: if fired { outcome } else { None } });
    }

    pub fn fired(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.steps.iter().filter(|s| s.fired).map(|s| s.rule)
    }

    /// Fired rule ids joined with `;`.
    pub fn fired_tokens(&self) -> String {
        self.fired().collect::<Vec<_>>().join(";")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    pub label: FeasibilityLabel,
    pub trace: RuleTrace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeasibilityParams {
    pub min_obs: u32,
    pub min_lag_monthly: u32,
    pub min_lag_quarterly: u32,
    /// Also used for irregular periodicity.
    pub min_lag_annual: u32,
}

impl Default for FeasibilityParams {
    fn default() -> Self {
        FeasibilityParams { min_obs: 10, min_lag_monthly: 2, min_lag_quarterly: 3, min_lag_annual: 6 }
    }
}

impl FeasibilityParams {
    pub fn min_lag(&self, periodicity: Periodicity) -> u32 {
        match periodicity {
            Periodicity::Regular(Frequency::Monthly) => self.min_lag_monthly,
            Periodicity::Regular(Frequency::Quarterly) => self.min_lag_quarterly,
            Periodicity::Regular(Frequency::Annual) | Periodicity::Irregular => self.min_lag_annual,
        }
    }
}

pub fn classify_explanatory(record: &IndicatorRecord) -> Classification {
    let mut trace = RuleTrace::default();
    let label = explanatory_into(record, &mut trace);
    Classification { label, trace }
}

fn explanatory_into(record: &IndicatorRecord, trace: &mut RuleTrace) -> FeasibilityLabel {
    use FeasibilityLabel::*;
    let f = record.flags;
    let unlikely = f.intersects(IndicatorFlags::BINARY_POLICY | IndicatorFlags::STRUCTURAL_CONSTANT);
    trace.record("explanatory_binary_or_structural", unlikely, Some(RuleOutcome::Label(Unlikely)));
    if unlikely {
        return Unlikely;
    }
    let likely = f.intersects(IndicatorFlags::BUDGET_TYPE | IndicatorFlags::ELECTION_BASED);
    trace.record("explanatory_budget_or_election", likely, Some(RuleOutcome::Label(Likely)));
    if likely {
        return Likely;
    }
    trace.record("explanatory_default", true, Some(RuleOutcome::Label(HighlyLikely)));
    HighlyLikely
}

pub fn classify_overall(
    record: &IndicatorRecord,
    params: &FeasibilityParams,
) -> Result<Classification, FeasibilityError> {
    use FeasibilityLabel::*;
    let mut trace = RuleTrace::default();
    if record.tier != 1 {
        return Err(FeasibilityError::NotTier1 { code: record.indicator_code.clone(), tier: record.tier });
    }
    trace.record("tier1", false, Some(RuleOutcome::Rejected));

    let too_short = record.observation_count < params.min_obs;
    trace.record("min_observations", too_short, Some(RuleOutcome::Label(Unlikely)));
    if too_short {
        return Ok(Classification { label: Unlikely, trace });
    }

    let short_lag = record.flags.contains(IndicatorFlags::NO_LAG)
        || record.lag_months.is_some_and(|lag| lag < params.min_lag(record.periodicity));
    trace.record("insignificant_lag", short_lag, Some(RuleOutcome::Label(Unlikely)));
    if short_lag {
        return Ok(Classification { label: Unlikely, trace });
    }

    let consistent = record.availability == Availability::Consistent;
    let mut data_score = if consistent { HighlyLikely } else { Likely };
    trace.record("data_consistent", consistent, Some(RuleOutcome::Label(HighlyLikely)));
    trace.record("data_partial", !consistent, Some(RuleOutcome::Label(Likely)));

    let disaster = record.flags.contains(IndicatorFlags::DISASTER_EVENT);
    trace.record("disaster_cap", disaster, Some(RuleOutcome::Cap(Likely)));
    if disaster {
        data_score = data_score.min(Likely);
    }

    let explanatory = explanatory_into(record, &mut trace);
    Ok(Classification { label: data_score.min(explanatory), trace })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelSource {
    Catalog,
    Derived,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LabelCounts {
    pub highly_likely: usize,
    pub likely: usize,
    pub unlikely: usize,
    pub total: usize,
}

impl LabelCounts {
    fn add(&mut self, label: FeasibilityLabel) {
        match label {
            FeasibilityLabel::HighlyLikely => self.highly_likely += 1,
            FeasibilityLabel::Likely => self.likely += 1,
            FeasibilityLabel::Unlikely => self.unlikely += 1,
        }
        self.total += 1;
    }
}

impl fmt::Display for LabelCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "highly_likely={} likely={} unlikely={} total={}",
            self.highly_likely, self.likely, self.unlikely, self.total
        )
    }
}

/// Label counts over `records`. With derived labels, a record rejected by the
/// tier rule counts as Unlikely.
pub fn aggregate_counts(records: &[IndicatorRecord], source: LabelSource, params: &FeasibilityParams) -> LabelCounts {
    let mut counts = LabelCounts::default();
    for r in records {
        let label = match source {
            LabelSource::Catalog => r.catalog_feasibility,
            LabelSource::Derived => classify_overall(r, params).map_or(FeasibilityLabel::Unlikely, |c| c.label),
        };
        counts.add(label);
    }
    counts
}

/// Share of tier 1 records whose derived overall label equals the catalog label.
pub fn agreement(records: &[IndicatorRecord], params: &FeasibilityParams) -> Result<f64, FeasibilityError> {
    let mut eligible = 0usize;
    let mut agree = 0usize;
    for r in records.iter().filter(|r| r.tier == 1) {
        eligible += 1;
        if classify_overall(r, params)?.label == r.catalog_feasibility {
            agree += 1;
        }
    }
    if eligible == 0 {
        return Err(FeasibilityError::NoEligibleRecords);
    }
    Ok(agree as f64 / eligible as f64)
}
