use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{solve_benders, TraceEntry, solve_extensive, BendersOptions, ExtensiveOptions, SolveMethod};
use crate::density::DemandDistributionSet;
use crate::error::{Error, Result};
use crate::model::{CsrpInstance, FirstStagePlan, ModelVariant};
use crate::scalar::Scalar;
use crate::scenario::ScenarioSet;

#[derive(Debug, Clone, Copy)]
pub struct SaaOptions {
    pub replications: usize,
    pub scenarios: usize,
    pub seed: u64,
    pub method: SolveMethod,
    pub variant: ModelVariant,
    pub benders: BendersOptions,
    pub extensive: ExtensiveOptions,
}

impl Default for SaaOptions {
    fn default() -> Self {
        Self {
            replications: 10,
            scenarios: 100,
            seed: 0,
            method: SolveMethod::Benders,
            variant: ModelVariant::FlowBalance,
            benders: BendersOptions::default(),
            extensive: ExtensiveOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub index: usize,
    pub seed: u64,
    pub objective: Option<f64>,
    pub plan: Option<FirstStagePlan>,
    /// Wall-clock seconds; diagnostic only.
    #[serde(skip)]
    pub seconds: f64,
    pub error: Option<String>,
    /// Benders iteration log; empty for extensive-form solves.
    #[serde(skip)]
    pub trace: Vec<TraceEntry>,
}

#[derive(Debug, Clone)]
pub struct SaaResult {
    pub replications: Vec<ReplicationRecord>,
}

impl SaaResult {
    pub fn objectives(&self) -> Vec<f64> {
        self.replications.iter().filter_map(|r| r.objective).collect()
    }

    pub fn plans(&self) -> Vec<&FirstStagePlan> {
        self.replications.iter().filter_map(|r| r.plan.as_ref()).collect()
    }

    pub fn failures(&self) -> usize {
        self.replications.iter().filter(|r| r.error.is_some()).count()
    }

    pub fn wall_times(&self) -> Vec<f64> {
        self.replications.iter().map(|r| r.seconds).collect()
    }

    /// Mean objective over successful replications.
    pub fn mean_objective(&self) -> Option<f64> {
        let obj = self.objectives();
        (!obj.is_empty()).then(|| obj.iter().sum::<f64>() / obj.len() as f64)
    }

    /// Elementwise mean of the replication plans, rounded half-up. If rounding
    /// pushes the fleet above `capacity`, the largest entry (first on ties) is
    /// decremented one unit at a time.
    pub fn mean_plan(&self, capacity: u64) -> Option<FirstStagePlan> {
        let plans = self.plans();
        let first = plans.first()?;
        let r = first.x.len();
        let mut x: Vec<u64> = (0..r)
            .map(|i| {
                let mean = plans.iter().map(|p| p.x[i] as f64).sum::<f64>() / plans.len() as f64;
                crate::scalar::round_half_up_nonneg(mean)
            })
            .collect();
        while x.iter().sum::<u64>() > capacity {
            let (k, _) = x.iter().enumerate().rev().max_by_key(|&(_, &v)| v).expect("non-empty");
            x[k] -= 1;
        }
        Some(FirstStagePlan::new(x))
    }
}

/// Runs `replications` independent SAA problems; replication `m` samples its
/// scenarios with seed `seed + m`. A failed replication is recorded, not fatal.
pub fn solve_saa<T: Scalar>(
    instance: &CsrpInstance<T>,
    distributions: &DemandDistributionSet<T>,
    options: &SaaOptions,
) -> Result<SaaResult> {
    if options.replications == 0 || options.scenarios == 0 {
        return Err(Error::InvalidArgument("replications and scenarios must be positive".into()));
    }
    if distributions.location_ids() != instance.location_ids.as_slice() {
        return Err(Error::Dimension("distribution and instance location ids differ".into()));
    }
    let mut replications = Vec::with_capacity(options.replications);
    for index in 0..options.replications {
        let seed = options.seed.wrapping_add(index as u64);
        let started = Instant::now();
        let outcome = ScenarioSet::generate(distributions, options.scenarios, seed).and_then(|set| match options.method {
            SolveMethod::Extensive => {
                solve_extensive(instance, &set, options.variant, &options.extensive).map(|s| (s.objective, s.plan, Vec::new()))
            }
            SolveMethod::Benders => {
                let opts = BendersOptions { variant: options.variant, ..options.benders };
                solve_benders(instance, &set, &opts).map(|o| (o.objective, o.plan, o.trace))
            }
        });
        let seconds = started.elapsed().as_secs_f64();
        let record = match outcome {
            Ok((objective, plan, trace)) => ReplicationRecord {
                index,
                seed,
                objective: Some(objective.as_f64()),
                plan: Some(plan),
                seconds,
                error: None,
                trace,
            },
            Err(e) => {
                log::warn!("replication {index} (seed {seed}) failed: {e}");
                ReplicationRecord {
                    index,
                    seed,
                    objective: None,
                    plan: None,
                    seconds,
                    error: Some(e.to_string()),
                    trace: Vec::new(),
                }
            }
        };
        replications.push(record);
    }
    Ok(SaaResult { replications })
}
