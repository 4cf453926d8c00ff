use nowkit_core::series::{Frequency, MonthIndex, Period, TimeSeries};
use nowkit_core::vintage::{snapshot_at, VintageDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_series(rng: &mut ChaCha8Rng, id: usize) -> TimeSeries {
    let freq = [Frequency::Monthly, Frequency::Quarterly, Frequency::Annual][rng.random_range(0..3)];
    let mut p = Period::latest_ending_by(
        MonthIndex::from_year_month(rng.random_range(1990..2010), rng.random_range(1..=12)),
        freq,
    );
    let mut pairs = Vec::new();
    for _ in 0..rng.random_range(0..60) {
        if rng.random_bool(0.8) {
            pairs.push((p, rng.random_range(-5.0..5.0)));
        }
        p = p.succ();
    }
    TimeSeries::from_pairs(format!("s{id}"), freq, pairs, rng.random_range(0..=30)).unwrap()
}

#[test]
fn snapshot_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let pool: Vec<TimeSeries> = (0..rng.random_range(1..8)).map(|i| random_series(&mut rng, i)).collect();
        let vintage = VintageDate::new(rng.random_range(1989..2020), rng.random_range(1..=12)).unwrap();
        let snap = snapshot_at(&pool, vintage);
        for (i, s) in pool.iter().enumerate() {
            let lag = s.schedule().lag_months as i64;
            let expected: Vec<_> = s
                .observations()
                .iter()
                .filter(|o| o.period.end_month().offset(lag) <= vintage.month_index())
                .copied()
                .collect();
            assert_eq!(snap.observations(i), expected.as_slice());

            let cutoff = snap.cutoff(i).unwrap();
            assert!(cutoff.end_month().offset(lag) <= vintage.month_index());
            assert!(cutoff.succ().end_month().offset(lag) > vintage.month_index());
            assert!(expected.iter().all(|o| o.period <= cutoff));
        }
        let earlier = snapshot_at(&pool, vintage.offset(-1));
        for i in 0..pool.len() {
            assert!(earlier.observations(i).len() <= snap.observations(i).len());
        }
    }
}
