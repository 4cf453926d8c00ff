//! Synthetic data-generating process with a known answer.
//!
//! Three monthly variables drive the annual target: its growth in year `Y` is
//! a fixed linear mix of their cumulative monthly growth over `Y` plus noise.
//! Seventeen distractors of mixed frequency follow the same kind of process
//! independently of the target.

use nowkit_core::series::{Frequency, MonthIndex, Period, TimeSeries};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub const TARGET_ID: &str = "target";
pub const INFORMATIVE: [&str; 3] = ["inf_1", "inf_2", "inf_3"];
const LOADINGS: [f64; 3] = [0.5, 0.35, -0.4];
const TARGET_LAG: u32 = 24;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DgpConfig {
    pub first_year: i32,
    pub last_year: i32,
    pub noise_sd: f64,
    pub seed: u64,
}

impl Default for DgpConfig {
    fn default() -> Self {
        DgpConfig { first_year: 1988, last_year: 2019, noise_sd: 0.01, seed: 2021 }
    }
}

struct Spec {
    id: String,
    frequency: Frequency,
    lag: u32,
    seasonal: f64,
}

fn distractor_specs() -> Vec<Spec> {
    let mut specs = Vec::new();
    for i in 0..17u32 {
        let frequency = match i % 4 {
            0 | 1 => Frequency::Monthly,
            2 => Frequency::Quarterly,
            _ => Frequency::Annual,
        };
        let lag = match frequency {
            Frequency::Monthly => 1 + i % 3,
            Frequency::Quarterly => 2 + i % 3,
            Frequency::Annual => 4 + i % 4,
        };
        let seasonal = if i % 3 == 0 { 1.5 } else { 0.0 };
        specs.push(Spec { id: format!("dis_{:02}", i + 1), frequency, lag, seasonal });
    }
    specs
}

/// Monthly growth path of an AR(1) process.
fn ar_growth(rng: &mut ChaCha8Rng, months: usize) -> Vec<f64> {
    let shock = Normal::new(0.0, 0.01).expect("valid sd");
    let mut g = Vec::with_capacity(months);
    let mut prev = 0.0;
    for _ in 0..months {
        prev = 0.6 * prev + shock.sample(rng);
        g.push(0.002 + prev);
    }
    g
}

fn monthly_levels(growth: &[f64], seasonal: f64, phase: f64) -> Vec<f64> {
    let mut level = 100.0;
    growth
        .iter()
        .enumerate()
        .map(|(t, g)| {
            level *= 1.0 + g;
            let angle = 2.0 * std::f64::consts::PI * (t % 12) as f64 / 12.0 + phase;
            level + seasonal * angle.sin()
        })
        .collect()
}

fn to_series(id: &str, frequency: Frequency, lag: u32, start: MonthIndex, monthly: &[f64]) -> TimeSeries {
    let step = frequency.months_per_period() as usize;
    let pairs = monthly.chunks_exact(step).enumerate().map(|(k, chunk)| {
        let end = start.offset(((k + 1) * step - 1) as i64);
        let value = chunk.iter().sum::<f64>() / step as f64;
        (Period::latest_ending_by(end, frequency), value)
    });
    TimeSeries::from_pairs(id, frequency, pairs, lag).expect("generated series are valid")
}

/// The target followed by the three informative variables and the distractors.
pub fn generate(config: &DgpConfig) -> Vec<TimeSeries> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let years = (config.last_year - config.first_year + 1) as usize;
    let months = years * 12;
    let start = MonthIndex::from_year_month(config.first_year, 1);

    let mut pool = Vec::with_capacity(21);
    let drivers: Vec<Vec<f64>> = (0..3).map(|_| ar_growth(&mut rng, months)).collect();
    let noise = Normal::new(0.0, config.noise_sd).expect("valid sd");
    let mut level = 100.0;
    let mut target = vec![(Period::annual(config.first_year), level)];
    for y in 1..years {
        let mut growth = 0.02 + noise.sample(&mut rng);
        for (driver, loading) in drivers.iter().zip(LOADINGS) {
            growth += loading * driver[y * 12..(y + 1) * 12].iter().sum::<f64>();
        }
        level *= 1.0 + growth;
        target.push((Period::annual(config.first_year + y as i32), level));
    }
    pool.push(TimeSeries::from_pairs(TARGET_ID, Frequency::Annual, target, TARGET_LAG).expect("valid target"));

    for (k, (id, driver)) in INFORMATIVE.iter().zip(&drivers).enumerate() {
        let seasonal = if k == 1 { 2.0 } else { 0.0 };
        let levels = monthly_levels(driver, seasonal, 0.0);
        pool.push(to_series(id, Frequency::Monthly, 1 + k as u32, start, &levels));
    }
    for spec in distractor_specs() {
        let growth = ar_growth(&mut rng, months);
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        let levels = monthly_levels(&growth, spec.seasonal, phase);
        pool.push(to_series(&spec.id, spec.frequency, spec.lag, start, &levels));
    }
    pool
}
