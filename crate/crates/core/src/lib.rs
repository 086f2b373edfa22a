//! Data-driven two-stage stochastic programming for car-sharing relocation.
//!
//! Pipeline: trip records are aggregated into a daily demand panel
//! ([`ingest`]), per-location demand distributions are fitted ([`density`]),
//! scenario sets are sampled ([`scenario`]), relocation models are built
//! ([`model`]) and solved by sample average approximation with either a direct
//! extensive-form MIP or Benders decomposition ([`solve`]), and first-stage
//! plans are replayed against held-out days ([`evaluate`]). All numerics run on
//! the embedded simplex / branch-and-bound engine in [`lp`].
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix it to `f64`, which is what the pipeline uses.

pub mod density;
pub mod error;
pub mod evaluate;
pub mod ingest;
pub mod lp;
pub mod model;
pub mod scalar;
pub mod scenario;
pub mod solve;
pub mod synthetic;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type LpProblem = lp::LpProblem<f64>;
pub type LpSolution = lp::LpSolution<f64>;
pub type DensityModel = density::DensityModel<f64>;
pub type DemandDistributionSet = density::DemandDistributionSet<f64>;
pub type CsrpInstance = model::CsrpInstance<f64>;
pub type RecourseDecision = model::RecourseDecision<f64>;
pub type ExtensiveSolution = solve::ExtensiveSolution<f64>;
pub type BendersOutcome = solve::BendersOutcome<f64>;

pub use evaluate::{compare_approaches, evaluate_plan, scenario_sweep, Approach, EvaluationReport};
pub use ingest::{aggregate_daily, parse_trips, split_by_date, top_k_locations, DemandPanel, TripRecord, TripSchema};
pub use model::{FirstStagePlan, ModelVariant};
pub use scenario::ScenarioSet;
pub use solve::{solve_benders, solve_extensive, solve_saa, BendersOptions, SaaOptions, SolveMethod};
