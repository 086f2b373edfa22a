//! Car-sharing relocation models and their LP/MIP formulations.
//!
//! Every formulation maximizes revenue from served demand minus holding and
//! transfer costs. Served demand is linearized with an auxiliary `f` bounded
//! by demand and by the cars available after relocation (own allocation plus
//! inflow). Two recourse variants differ in how outflow is limited:
//!
//! * [`ModelVariant::PaperLiteral`]: a location ships at most its surplus
//!   `max{0, x_i - d_i}`.
//! * [`ModelVariant::FlowBalance`]: cars are conserved,
//!   `f_i + outflow_i <= x_i + inflow_i`. Its recourse is a network LP whose
//!   value is concave in `x`, which is what Benders cuts need.

mod builders;
mod config;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use builders::{
    build_deterministic, build_extensive, build_recourse, recourse_template, ExtensiveLayout, ExtensiveModel,
    RecourseLayout, RecourseModel, RecourseTemplate, TemplateSplit,
};
pub use config::{HoldingSpec, InstanceSpec, RevenueSpec, TransferSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelVariant {
    PaperLiteral,
    #[default]
    FlowBalance,
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelVariant::PaperLiteral => "paper-literal",
            ModelVariant::FlowBalance => "flow-balance",
        })
    }
}

impl FromStr for ModelVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "paper-literal" | "paperliteral" | "literal" => Ok(ModelVariant::PaperLiteral),
            "flow-balance" | "flowbalance" | "balance" => Ok(ModelVariant::FlowBalance),
            other => Err(Error::InvalidArgument(format!("unknown model variant `{other}`"))),
        }
    }
}

/// Economic data of a relocation instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CsrpInstance<T> {
    pub location_ids: Vec<u32>,
    /// Revenue per served car.
    pub revenue: Vec<T>,
    /// Holding cost per allocated car.
    pub holding: Vec<T>,
    /// `transfer[i][j]`: cost of moving one car from `i` to `j`.
    pub transfer: Vec<Vec<T>>,
    /// Fleet size.
    pub capacity: u64,
}

impl<T: Scalar> CsrpInstance<T> {
    pub fn new(location_ids: Vec<u32>, revenue: Vec<T>, holding: Vec<T>, transfer: Vec<Vec<T>>, capacity: u64) -> Result<Self> {
        let inst = Self { location_ids, revenue, holding, transfer, capacity };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.location_ids.len();
        if self.revenue.len() != r || self.holding.len() != r || self.transfer.len() != r {
            return Err(Error::Dimension(format!("instance data must cover {r} locations")));
        }
        if self.transfer.iter().any(|row| row.len() != r) {
            return Err(Error::Dimension(format!("transfer matrix must be {r}x{r}")));
        }
        if self.revenue.iter().any(|&v| !(v > T::zero()) || !v.is_finite()) {
            return Err(Error::InvalidArgument("revenues must be positive".into()));
        }
        if self.holding.iter().any(|&v| !(v >= T::zero()) || !v.is_finite()) {
            return Err(Error::InvalidArgument("holding costs must be nonnegative".into()));
        }
        for (i, row) in self.transfer.iter().enumerate() {
            for (j, &t) in row.iter().enumerate() {
                if !(t >= T::zero()) || !t.is_finite() {
                    return Err(Error::InvalidArgument(format!("transfer cost t[{i}][{j}] must be nonnegative")));
                }
                if i == j && t != T::zero() {
                    return Err(Error::InvalidArgument(format!("transfer cost t[{i}][{i}] must be zero")));
                }
            }
        }
        Ok(())
    }

    pub fn num_locations(&self) -> usize {
        self.location_ids.len()
    }

    /// Same revenue, holding cost and transfer cost everywhere.
    pub fn homogeneous(r: usize, revenue: T, holding: T, transfer: T, capacity: u64) -> Result<Self> {
        let t = (0..r)
            .map(|i| (0..r).map(|j| if i == j { T::zero() } else { transfer }).collect())
            .collect();
        Self::new((1..=r as u32).collect(), vec![revenue; r], vec![holding; r], t, capacity)
    }

    pub fn holding_cost(&self, plan: &FirstStagePlan) -> T {
        self.holding
            .iter()
            .zip(&plan.x)
            .map(|(&h, &x)| h * T::of(x as f64))
            .sum()
    }

    /// Multiplies every price by `k`.
    pub fn scaled(&self, k: T) -> Self {
        Self {
            location_ids: self.location_ids.clone(),
            revenue: self.revenue.iter().map(|&v| v * k).collect(),
            holding: self.holding.iter().map(|&v| v * k).collect(),
            transfer: self.transfer.iter().map(|row| row.iter().map(|&v| v * k).collect()).collect(),
            capacity: self.capacity,
        }
    }
}

/// First-stage allocation of cars to locations.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FirstStagePlan {
    pub x: Vec<u64>,
}

impl FirstStagePlan {
    pub fn new(x: Vec<u64>) -> Self {
        Self { x }
    }

    pub fn zeros(r: usize) -> Self {
        Self { x: vec![0; r] }
    }

    pub fn total(&self) -> u64 {
        self.x.iter().sum()
    }

    pub fn check<T: Scalar>(&self, instance: &CsrpInstance<T>) -> Result<()> {
        if self.x.len() != instance.num_locations() {
            return Err(Error::InvalidArgument(format!(
                "plan covers {} locations, instance has {}",
                self.x.len(),
                instance.num_locations()
            )));
        }
        if self.total() > instance.capacity {
            return Err(Error::InvalidArgument(format!(
                "plan allocates {} cars but the fleet has {}",
                self.total(),
                instance.capacity
            )));
        }
        Ok(())
    }

    /// Reads integral values out of solver output.
    pub fn from_values<T: Scalar>(values: &[T]) -> Self {
        Self { x: values.iter().map(|&v| v.round().max(T::zero()).to_u64().unwrap_or(0)).collect() }
    }
}

/// Second-stage decisions for every scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RecourseDecision<T> {
    /// `moves[s][i][j]`: cars moved from `i` to `j` in scenario `s`; the
    /// diagonal is always zero.
    pub moves: Vec<Vec<Vec<u64>>>,
    /// `served[s][i]`: demand served at `i` in scenario `s`.
    pub served: Vec<Vec<T>>,
}
