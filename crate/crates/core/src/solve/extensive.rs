use crate::error::{Error, Result};
use crate::lp::{solve_mip_with, MipOptions, Status};
use crate::model::{build_deterministic, build_extensive, CsrpInstance, FirstStagePlan, ModelVariant, RecourseDecision};
use crate::scalar::Scalar;
use crate::scenario::ScenarioSet;

#[derive(Debug, Clone, Copy)]
pub struct ExtensiveOptions {
    /// Largest accepted `scenarios * locations^2`.
    pub size_limit: usize,
    pub mip: MipOptions,
}

impl Default for ExtensiveOptions {
    fn default() -> Self {
        Self { size_limit: 2_000_000, mip: MipOptions::default() }
    }
}

#[derive(Debug, Clone)]
pub struct ExtensiveSolution<T> {
    pub objective: T,
    pub plan: FirstStagePlan,
    pub recourse: RecourseDecision<T>,
    pub nodes: usize,
}

/// Solves the SAA extensive form exactly with branch-and-bound.
pub fn solve_extensive<T: Scalar>(
    instance: &CsrpInstance<T>,
    scenarios: &ScenarioSet,
    variant: ModelVariant,
    options: &ExtensiveOptions,
) -> Result<ExtensiveSolution<T>> {
    let r = instance.num_locations();
    let size = scenarios.len().saturating_mul(r * r);
    if size > options.size_limit {
        return Err(Error::TooLarge { variables: size, limit: options.size_limit });
    }
    let model = build_extensive(instance, scenarios, variant)?;
    let sol = solve_mip_with(&model.problem, &options.mip)?;
    if sol.status != Status::Optimal {
        return Err(Error::State(format!("extensive form solve ended {:?}", sol.status)));
    }
    let (plan, recourse) = model.decode(&sol.x);
    Ok(ExtensiveSolution { objective: sol.objective, plan, recourse, nodes: sol.nodes })
}

/// Optimal plan for the single mean-demand scenario.
pub fn solve_deterministic<T: Scalar>(
    instance: &CsrpInstance<T>,
    mean_demand: &[f64],
    variant: ModelVariant,
    mip: &MipOptions,
) -> Result<(T, FirstStagePlan)> {
    let model = build_deterministic(instance, mean_demand, variant)?;
    let sol = solve_mip_with(&model.problem, mip)?;
    if sol.status != Status::Optimal {
        return Err(Error::State(format!("deterministic solve ended {:?}", sol.status)));
    }
    Ok((sol.objective, model.decode(&sol.x).0))
}
