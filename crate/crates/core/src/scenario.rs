//! Equiprobable demand scenario sets.

use std::io::{Read, Write};

use num_rational::Ratio;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::density::DemandDistributionSet;
use crate::error::{Error, Result};
use crate::ingest::DemandPanel;
use crate::scalar::Scalar;

/// Scenario probability, kept exact so that the probabilities sum to one.
pub type Probability = Ratio<u64>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioSet {
    location_ids: Vec<u32>,
    demands: Vec<Vec<u64>>,
    probabilities: Vec<Probability>,
}

impl ScenarioSet {
    /// Equiprobable scenarios.
    pub fn uniform(location_ids: Vec<u32>, demands: Vec<Vec<u64>>) -> Result<Self> {
        let n = demands.len() as u64;
        if n == 0 {
            return Err(Error::EmptyInput("a scenario set needs at least one scenario".into()));
        }
        let probabilities = vec![Ratio::new(1, n); demands.len()];
        Self::new(location_ids, demands, probabilities)
    }

    pub fn new(location_ids: Vec<u32>, demands: Vec<Vec<u64>>, probabilities: Vec<Probability>) -> Result<Self> {
        if demands.is_empty() {
            return Err(Error::EmptyInput("a scenario set needs at least one scenario".into()));
        }
        if probabilities.len() != demands.len() {
            return Err(Error::Dimension("one probability per scenario is required".into()));
        }
        if demands.iter().any(|d| d.len() != location_ids.len()) {
            return Err(Error::Dimension(format!("every scenario needs {} demands", location_ids.len())));
        }
        let total: Probability = probabilities.iter().copied().sum();
        if total != Ratio::from_integer(1) {
            return Err(Error::InvalidArgument(format!("scenario probabilities sum to {total}, not 1")));
        }
        Ok(Self { location_ids, demands, probabilities })
    }

    /// Samples `n` scenarios, drawing each location independently from its
    /// model. Location `i` uses stream `i` of a ChaCha generator seeded with
    /// `seed`, so columns do not depend on one another.
    pub fn generate<T: Scalar>(dist: &DemandDistributionSet<T>, n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("scenario count must be positive".into()));
        }
        let columns: Vec<Vec<u64>> = dist
            .models()
            .iter()
            .enumerate()
            .map(|(i, model)| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                model.sample_with(&mut rng, n)
            })
            .collect();
        let demands = (0..n).map(|s| columns.iter().map(|c| c[s]).collect()).collect();
        Self::uniform(dist.location_ids().to_vec(), demands)
    }

    /// One equiprobable scenario per panel day.
    pub fn from_panel(panel: &DemandPanel) -> Result<Self> {
        if panel.is_empty() {
            return Err(Error::EmptyInput("panel has no days".into()));
        }
        Self::uniform(panel.location_ids().to_vec(), panel.counts().to_vec())
    }

    pub fn location_ids(&self) -> &[u32] {
        &self.location_ids
    }

    pub fn demands(&self) -> &[Vec<u64>] {
        &self.demands
    }

    pub fn probabilities(&self) -> &[Probability] {
        &self.probabilities
    }

    pub fn probability<T: Scalar>(&self, s: usize) -> T {
        let p = self.probabilities[s];
        T::of(*p.numer() as f64 / *p.denom() as f64)
    }

    pub fn len(&self) -> usize {
        self.demands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demands.is_empty()
    }

    pub fn num_locations(&self) -> usize {
        self.location_ids.len()
    }

    /// Probability-weighted mean demand per location.
    pub fn mean_demand(&self) -> Vec<f64> {
        (0..self.num_locations())
            .map(|i| {
                self.demands
                    .iter()
                    .enumerate()
                    .map(|(s, d)| d[i] as f64 * self.probability::<f64>(s))
                    .sum()
            })
            .collect()
    }

    /// Largest demand seen at each location.
    pub fn max_demand(&self) -> Vec<u64> {
        (0..self.num_locations())
            .map(|i| self.demands.iter().map(|d| d[i]).max().unwrap_or(0))
            .collect()
    }

    /// One row per scenario: the location columns followed by `probability`
    /// written as an exact fraction.
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        let mut header: Vec<String> = self.location_ids.iter().map(|id| id.to_string()).collect();
        header.push("probability".into());
        w.write_record(&header)?;
        for (d, p) in self.demands.iter().zip(&self.probabilities) {
            let mut rec: Vec<String> = d.iter().map(|v| v.to_string()).collect();
            rec.push(p.to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(source: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(source);
        let headers = r.headers()?.clone();
        if headers.iter().last() != Some("probability") {
            return Err(Error::MissingColumn("probability".into()));
        }
        let k = headers.len() - 1;
        let location_ids = headers
            .iter()
            .take(k)
            .map(|h| h.parse().map_err(|_| Error::Parse(format!("bad location id `{h}`"))))
            .collect::<Result<Vec<u32>>>()?;
        let mut demands = Vec::new();
        let mut probabilities = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            demands.push(
                rec.iter()
                    .take(k)
                    .map(|v| v.parse().map_err(|_| Error::Parse(format!("bad demand `{v}`"))))
                    .collect::<Result<Vec<u64>>>()?,
            );
            let p = &rec[k];
            probabilities.push(p.parse::<Probability>().map_err(|_| Error::Parse(format!("bad probability `{p}`")))?);
        }
        Self::new(location_ids, demands, probabilities)
    }
}
