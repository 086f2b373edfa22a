//! Seeded synthetic data: bimodal demand panels and trip files that
//! aggregate back to them.

use chrono::{Days, NaiveDate, NaiveTime, TimeDelta};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{DemandPanel, TripRecord};

/// Per-location demand is a two-component Poisson mixture: with probability
/// `high_weight` the day draws from `Poisson(high * scale_k)`, otherwise from
/// `Poisson(low * scale_k)`, where `scale_k = 1 + spread * k` for the `k`-th
/// location. Days and locations are independent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BimodalSpec {
    pub location_ids: Vec<u32>,
    pub low: f64,
    pub high: f64,
    pub high_weight: f64,
    pub spread: f64,
    pub start: NaiveDate,
    pub days: usize,
}

impl Default for BimodalSpec {
    fn default() -> Self {
        Self {
            location_ids: vec![1, 2, 3, 4],
            low: 10.0,
            high: 40.0,
            high_weight: 0.5,
            spread: 0.25,
            start: NaiveDate::from_ymd_opt(2018, 1, 1).expect("valid date"),
            days: 500,
        }
    }
}

impl BimodalSpec {
    pub fn component_means(&self, k: usize) -> (f64, f64) {
        let scale = 1.0 + self.spread * k as f64;
        (self.low * scale, self.high * scale)
    }
}

pub fn bimodal_panel(spec: &BimodalSpec, seed: u64) -> Result<DemandPanel> {
    if spec.location_ids.is_empty() || spec.days == 0 {
        return Err(Error::InvalidArgument("synthetic panel needs locations and days".into()));
    }
    if !(0.0..=1.0).contains(&spec.high_weight) || !(spec.low > 0.0) || !(spec.high > 0.0) || spec.spread < 0.0 {
        return Err(Error::InvalidArgument("mixture parameters out of range".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let components: Vec<(Poisson<f64>, Poisson<f64>)> = (0..spec.location_ids.len())
        .map(|k| {
            let (lo, hi) = spec.component_means(k);
            let p = |m: f64| Poisson::new(m).map_err(|e| Error::InvalidArgument(e.to_string()));
            Ok((p(lo)?, p(hi)?))
        })
        .collect::<Result<_>>()?;
    let mut dates = Vec::with_capacity(spec.days);
    let mut counts = Vec::with_capacity(spec.days);
    for d in 0..spec.days {
        dates.push(spec.start + Days::new(d as u64));
        counts.push(
            components
                .iter()
                .map(|(lo, hi)| {
                    let dist = if rng.random_bool(spec.high_weight) { hi } else { lo };
                    dist.sample(&mut rng) as u64
                })
                .collect(),
        );
    }
    DemandPanel::new(dates, spec.location_ids.clone(), counts)
}

/// Expands a panel into individual trips: one record per unit of demand,
/// picked up at a random time of its day. Dropoffs go to a random zone from
/// `dropoff_ids`. Aggregating the result reproduces `panel` whenever its first
/// and last days have demand.
pub fn trips_from_panel(panel: &DemandPanel, dropoff_ids: &[u32], seed: u64) -> Result<Vec<TripRecord>> {
    if dropoff_ids.is_empty() {
        return Err(Error::InvalidArgument("need at least one dropoff zone".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(panel.total() as usize);
    for (date, row) in panel.dates().iter().zip(panel.counts()) {
        for (&zone, &count) in panel.location_ids().iter().zip(row) {
            for _ in 0..count {
                let second = rng.random_range(0..86_400 - 3_600);
                let pickup = date.and_time(NaiveTime::MIN) + TimeDelta::seconds(second);
                let minutes = rng.random_range(3..50);
                let distance = (minutes as f64 * rng.random_range(0.15..0.45) * 100.0).round() / 100.0;
                records.push(TripRecord {
                    pickup_datetime: pickup,
                    dropoff_datetime: pickup + TimeDelta::minutes(minutes),
                    pickup_location_id: zone,
                    dropoff_location_id: dropoff_ids[rng.random_range(0..dropoff_ids.len())],
                    trip_distance: distance,
                    fare_amount: (250.0 + 250.0 * distance).round() / 100.0,
                });
            }
        }
    }
    records.sort_by(|a, b| a.pickup_datetime.cmp(&b.pickup_datetime).then(a.pickup_location_id.cmp(&b.pickup_location_id)));
    Ok(records)
}
