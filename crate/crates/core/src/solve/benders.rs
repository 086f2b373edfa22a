//! L-shaped Benders decomposition in maximization form.
//!
//! The master holds the integer allocation `x` (plus, under
//! [`TemplateSplit::FixedService`], the served demand of every scenario) and
//! recourse estimates `theta`. Each subproblem is solved in dual form: an
//! optimal dual point yields an optimality cut `theta <= alpha + beta . m`, a
//! dual ray yields a feasibility cut `0 <= alpha + beta . m`.
//!
//! Bounds: the master optimum is an upper bound (`UB`, non-increasing as cuts
//! accumulate); the true objective of any evaluated master point is a lower
//! bound (`LB`, the best seen). Iteration stops once
//! `UB - LB <= xi * (1 + |UB|)`.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{extract_ray, solve_lp, solve_mip_with, LpProblem, MipOptions, ObjectiveSense, RowSense, Status};
use crate::model::{recourse_template, CsrpInstance, FirstStagePlan, ModelVariant, TemplateSplit};
use crate::scalar::Scalar;
use crate::scenario::ScenarioSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CutMode {
    /// One aggregated optimality cut per iteration.
    #[default]
    Single,
    /// One optimality cut per scenario.
    Multi,
}

#[derive(Debug, Clone, Copy)]
pub struct BendersOptions {
    pub xi: f64,
    pub max_iterations: usize,
    pub cut_mode: CutMode,
    pub split: TemplateSplit,
    pub variant: ModelVariant,
    pub mip: MipOptions,
}

impl Default for BendersOptions {
    fn default() -> Self {
        Self {
            xi: 1e-6,
            max_iterations: 500,
            cut_mode: CutMode::Single,
            split: TemplateSplit::LShaped,
            variant: ModelVariant::FlowBalance,
            mip: MipOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CutKind {
    Optimality,
    Feasibility,
}

/// `theta_target <= constant + coefficients . m` for optimality cuts (the
/// target is the aggregate `theta`, or `theta_s` for a per-scenario cut) and
/// `0 <= constant + coefficients . m` for feasibility cuts. `m` ranges over
/// the master's non-`theta` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Cut<T> {
    pub kind: CutKind,
    pub scenario: Option<usize>,
    pub constant: T,
    pub coefficients: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BendersStatus {
    Converged,
    NonConverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub gap: f64,
    pub optimality_cuts: usize,
    pub feasibility_cuts: usize,
    pub subproblem_seconds: f64,
}

impl TraceEntry {
    pub fn cut_label(&self) -> String {
        match (self.optimality_cuts, self.feasibility_cuts) {
            (0, 0) => "none".into(),
            (o, 0) => format!("optimality x{o}"),
            (0, f) => format!("feasibility x{f}"),
            (o, f) => format!("optimality x{o} + feasibility x{f}"),
        }
    }

    /// One line of the solver trace log.
    pub fn log_line(&self) -> String {
        format!(
            "iter={} lb={:.6} ub={:.6} gap={:.3e} cuts={} subproblem_s={:.6}",
            self.iteration,
            self.lower_bound,
            self.upper_bound,
            self.gap,
            self.cut_label(),
            self.subproblem_seconds
        )
    }
}

#[derive(Debug, Clone)]
pub struct BendersState<T> {
    pub upper_bound: T,
    pub lower_bound: T,
    pub tolerance: f64,
    pub iterations: usize,
    pub cuts: Vec<Cut<T>>,
    pub incumbent: Option<FirstStagePlan>,
}

#[derive(Debug, Clone)]
pub struct BendersOutcome<T> {
    /// Value of the incumbent, i.e. the final lower bound.
    pub objective: T,
    pub plan: FirstStagePlan,
    pub state: BendersState<T>,
    pub status: BendersStatus,
    pub trace: Vec<TraceEntry>,
}

enum SubResult<T> {
    Point { value: T, cut: Cut<T> },
    Ray { cut: Cut<T> },
}

/// Column layout of the master problem.
struct Master {
    r: usize,
    n: usize,
    service: bool,
    multi: bool,
}

impl Master {
    fn f(&self, s: usize, i: usize) -> usize {
        self.r + s * self.r + i
    }

    /// Number of non-`theta` columns.
    fn first_stage_cols(&self) -> usize {
        self.r + if self.service { self.n * self.r } else { 0 }
    }

    fn theta(&self, s: usize) -> usize {
        self.first_stage_cols() + if self.multi { s } else { 0 }
    }

    fn thetas(&self) -> usize {
        if self.multi {
            self.n
        } else {
            1
        }
    }

    /// Master column of a template coordinate for scenario `s`.
    fn column(&self, s: usize, k: usize) -> usize {
        if k < self.r {
            k
        } else {
            self.f(s, k - self.r)
        }
    }
}

pub fn solve_benders<T: Scalar>(
    instance: &CsrpInstance<T>,
    scenarios: &ScenarioSet,
    options: &BendersOptions,
) -> Result<BendersOutcome<T>> {
    instance.validate()?;
    if !(1e-7..=1e-4).contains(&options.xi) {
        return Err(Error::InvalidArgument(format!("xi = {} must lie in [1e-7, 1e-4]", options.xi)));
    }
    if scenarios.num_locations() != instance.num_locations() {
        return Err(Error::Dimension("scenario set and instance disagree on the location count".into()));
    }
    if options.variant == ModelVariant::PaperLiteral {
        log::warn!(
            "Benders on the paper-literal variant: the surplus cap makes recourse nonconvex in x, cuts may exclude optima"
        );
    }
    let r = instance.num_locations();
    let n = scenarios.len();
    let layout = Master {
        r,
        n,
        service: options.split == TemplateSplit::FixedService,
        multi: options.cut_mode == CutMode::Multi,
    };
    let cap = T::of(instance.capacity as f64);
    let probs: Vec<T> = (0..n).map(|s| scenarios.probability(s)).collect();
    let n_cols = layout.first_stage_cols() + layout.thetas();

    // Cars at one location beyond the busiest scenario's total demand sit idle
    // in every scenario, so some optimal plan respects this bound.
    let busiest = T::of(scenarios.demands().iter().map(|d| d.iter().sum::<u64>()).max().unwrap_or(0) as f64);
    let mut master = LpProblem::new(ObjectiveSense::Maximize, n_cols);
    for i in 0..r {
        master.objective[i] = -instance.holding[i];
        master.set_bounds(i, T::zero(), cap.min(busiest));
        master.set_integer(i, true);
    }
    master.add_sparse_row(&(0..r).map(|i| (i, T::one())).collect::<Vec<_>>(), RowSense::Le, cap);
    if layout.service {
        for (s, d) in scenarios.demands().iter().enumerate() {
            for i in 0..r {
                let f = layout.f(s, i);
                master.objective[f] = probs[s] * instance.revenue[i];
                master.set_bounds(f, T::zero(), T::of(d[i] as f64));
            }
        }
    }
    // Recourse ceilings keep the first master bounded.
    let ceiling = |d: &[u64]| -> T { (0..r).map(|i| instance.revenue[i] * T::of(d[i] as f64)).sum() };
    for k in 0..layout.thetas() {
        let col = layout.first_stage_cols() + k;
        let (lo, hi) = match (layout.service, layout.multi) {
            (true, _) => (T::neg_infinity(), T::zero()),
            (false, true) => (T::zero(), ceiling(&scenarios.demands()[k])),
            (false, false) => {
                let expected = scenarios.demands().iter().zip(&probs).map(|(d, &p)| p * ceiling(d)).sum();
                (T::zero(), expected)
            }
        };
        master.set_bounds(col, lo, hi);
        master.objective[col] = if layout.multi { probs[k] } else { T::one() };
    }

    // The master only needs to be solved well inside the convergence test.
    let master_mip = MipOptions { relative_gap: options.mip.relative_gap.max(0.1 * options.xi), ..options.mip };

    let mut state = BendersState {
        upper_bound: T::infinity(),
        lower_bound: T::neg_infinity(),
        tolerance: options.xi,
        iterations: 0,
        cuts: Vec::new(),
        incumbent: None,
    };
    let mut trace = Vec::new();
    let mut status = BendersStatus::NonConverged;

    for iteration in 1..=options.max_iterations {
        state.iterations = iteration;
        let sol = solve_mip_with(&master, &master_mip)?;
        match sol.status {
            Status::Optimal => {}
            Status::Infeasible => return Err(Error::State("Benders master is infeasible".into())),
            other => return Err(Error::State(format!("Benders master solve ended {other:?}"))),
        }
        state.upper_bound = state.upper_bound.min(sol.bound);
        let m_bar = &sol.x[..layout.first_stage_cols()];
        let first_stage_value: T = (0..layout.first_stage_cols()).map(|k| master.objective[k] * m_bar[k]).sum();

        let started = Instant::now();
        let results = (0..n)
            .into_par_iter()
            .map(|s| evaluate_scenario(instance, scenarios, s, options, &layout, m_bar))
            .collect::<Result<Vec<_>>>()?;
        let subproblem_seconds = started.elapsed().as_secs_f64();

        let mut opt_cuts = 0;
        let mut feas_cuts = 0;
        let tol = |v: T| T::of(0.1 * options.xi) * (T::one() + v.abs());
        if results.iter().all(|res| matches!(res, SubResult::Point { .. })) {
            let values: Vec<T> = results
                .iter()
                .map(|res| match res {
                    SubResult::Point { value, .. } => *value,
                    SubResult::Ray { .. } => unreachable!(),
                })
                .collect();
            let expected: T = values.iter().zip(&probs).map(|(&v, &p)| v * p).sum();
            let value = first_stage_value + expected;
            if value > state.lower_bound {
                state.lower_bound = value;
                state.incumbent = Some(FirstStagePlan::from_values(&m_bar[..r]));
            }
            match layout.multi {
                true => {
                    for (s, res) in results.into_iter().enumerate() {
                        let SubResult::Point { value, cut } = res else { unreachable!() };
                        if sol.x[layout.theta(s)] > value + tol(value) {
                            add_cut(&mut master, &layout, &cut);
                            state.cuts.push(cut);
                            opt_cuts += 1;
                        }
                    }
                }
                false => {
                    if sol.x[layout.theta(0)] > expected + tol(expected) {
                        let mut agg = Cut {
                            kind: CutKind::Optimality,
                            scenario: None,
                            constant: T::zero(),
                            coefficients: vec![T::zero(); layout.first_stage_cols()],
                        };
                        for (res, &p) in results.iter().zip(&probs) {
                            let SubResult::Point { cut, .. } = res else { unreachable!() };
                            agg.constant = agg.constant + p * cut.constant;
                            for (a, &c) in agg.coefficients.iter_mut().zip(&cut.coefficients) {
                                *a = *a + p * c;
                            }
                        }
                        add_cut(&mut master, &layout, &agg);
                        state.cuts.push(agg);
                        opt_cuts += 1;
                    }
                }
            }
        } else {
            for res in results {
                if let SubResult::Ray { cut } = res {
                    add_cut(&mut master, &layout, &cut);
                    state.cuts.push(cut);
                    feas_cuts += 1;
                }
            }
        }

        let gap = (state.upper_bound - state.lower_bound).as_f64();
        trace.push(TraceEntry {
            iteration,
            lower_bound: state.lower_bound.as_f64(),
            upper_bound: state.upper_bound.as_f64(),
            gap,
            optimality_cuts: opt_cuts,
            feasibility_cuts: feas_cuts,
            subproblem_seconds,
        });
        log::debug!("benders {}", trace.last().expect("just pushed").log_line());
        let ub = state.upper_bound.as_f64();
        if gap <= options.xi * (1.0 + ub.abs()) {
            status = BendersStatus::Converged;
            break;
        }
        if opt_cuts == 0 && feas_cuts == 0 {
            log::warn!("Benders stalled at iteration {iteration} with gap {gap:e}");
            break;
        }
    }

    let Some(plan) = state.incumbent.clone() else {
        return Err(Error::State(format!(
            "Benders found no feasible plan in {} iterations",
            state.iterations
        )));
    };
    Ok(BendersOutcome { objective: state.lower_bound, plan, state, status, trace })
}

fn add_cut<T: Scalar>(master: &mut LpProblem<T>, layout: &Master, cut: &Cut<T>) {
    let mut row = vec![T::zero(); master.num_vars()];
    for (k, &c) in cut.coefficients.iter().enumerate() {
        row[k] = -c;
    }
    if cut.kind == CutKind::Optimality {
        row[layout.theta(cut.scenario.unwrap_or(0))] = T::one();
    }
    master.add_row(row, RowSense::Le, cut.constant);
}

/// Solves scenario `s`'s recourse in dual form at master point `m_bar`:
/// `min b(m) . u  s.t.  A^T u >= c,  u >= 0`.
fn evaluate_scenario<T: Scalar>(
    instance: &CsrpInstance<T>,
    scenarios: &ScenarioSet,
    s: usize,
    options: &BendersOptions,
    layout: &Master,
    m_bar: &[T],
) -> Result<SubResult<T>> {
    let r = layout.r;
    let x_bar = &m_bar[..r];
    let template = recourse_template(instance, &scenarios.demands()[s], options.variant, options.split, x_bar);
    let local: Vec<T> = match options.split {
        TemplateSplit::LShaped => x_bar.to_vec(),
        TemplateSplit::FixedService => x_bar.iter().copied().chain((0..r).map(|i| m_bar[layout.f(s, i)])).collect(),
    };
    let rhs = template.rhs_at(&local);
    let rows = template.rows.len();
    let mut dual = LpProblem::minimize(rhs);
    for (j, &c) in template.objective.iter().enumerate() {
        dual.add_row(template.rows.iter().map(|row| row[j]).collect(), RowSense::Ge, c);
    }
    let sol = solve_lp(&dual)?;

    let cut_from = |u: &[T], kind: CutKind| {
        let mut coefficients = vec![T::zero(); layout.first_stage_cols()];
        let mut constant = T::zero();
        for k in 0..rows {
            if u[k] == T::zero() {
                continue;
            }
            constant = constant + u[k] * template.rhs_constant[k];
            for &(l, a) in &template.rhs_coupling[k] {
                let col = layout.column(s, l);
                coefficients[col] = coefficients[col] + u[k] * a;
            }
        }
        let scenario = (kind == CutKind::Feasibility || layout.multi).then_some(s);
        Cut { kind, scenario, constant, coefficients }
    };
    match sol.status {
        Status::Optimal => Ok(SubResult::Point { value: sol.objective, cut: cut_from(&sol.x, CutKind::Optimality) }),
        Status::Unbounded => Ok(SubResult::Ray { cut: cut_from(extract_ray(&sol)?, CutKind::Feasibility) }),
        other => Err(Error::State(format!("scenario {s} dual subproblem ended {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solve::{solve_extensive, ExtensiveOptions};
    use approx::assert_abs_diff_eq;

    fn instance() -> CsrpInstance<f64> {
        let mut inst = CsrpInstance::homogeneous(3, 100.0, 20.0, 0.0, 14).unwrap();
        inst.holding = vec![18.0, 23.0, 20.0];
        inst.transfer = vec![vec![0.0, 15.0, 60.0], vec![22.0, 0.0, 35.0], vec![48.0, 12.0, 0.0]];
        inst
    }

    fn scenarios() -> ScenarioSet {
        ScenarioSet::uniform(vec![1, 2, 3], vec![vec![5, 1, 2], vec![0, 6, 3], vec![2, 2, 7], vec![4, 0, 0]]).unwrap()
    }

    #[test]
    fn matches_extensive_in_every_mode() {
        let inst = instance();
        let set = scenarios();
        let exact = solve_extensive(&inst, &set, ModelVariant::FlowBalance, &ExtensiveOptions::default()).unwrap();
        for cut_mode in [CutMode::Single, CutMode::Multi] {
            for split in [TemplateSplit::LShaped, TemplateSplit::FixedService] {
                let opts = BendersOptions { cut_mode, split, ..Default::default() };
                let out = solve_benders(&inst, &set, &opts).unwrap();
                assert_eq!(out.status, BendersStatus::Converged, "{cut_mode:?} {split:?}");
                assert_abs_diff_eq!(out.objective, exact.objective, epsilon = 1e-6 * (1.0 + exact.objective.abs()));
                if split == TemplateSplit::FixedService {
                    assert!(out.trace.iter().any(|t| t.feasibility_cuts > 0), "expected feasibility cuts");
                }
            }
        }
    }

    #[test]
    fn no_fleet_converges_immediately() {
        let mut inst = instance();
        inst.capacity = 0;
        let out = solve_benders(&inst, &scenarios(), &BendersOptions::default()).unwrap();
        assert!(out.state.iterations <= 2);
        assert_abs_diff_eq!(out.objective, 0.0, epsilon = 1e-9);
        assert_eq!(out.plan.x, vec![0, 0, 0]);
    }

    #[test]
    fn xi_outside_range_rejected() {
        let opts = BendersOptions { xi: 1e-3, ..Default::default() };
        assert!(solve_benders(&instance(), &scenarios(), &opts).is_err());
    }

    #[test]
    fn bounds_are_monotone() {
        let out = solve_benders(&instance(), &scenarios(), &BendersOptions::default()).unwrap();
        for w in out.trace.windows(2) {
            assert!(w[1].lower_bound >= w[0].lower_bound - 1e-9);
            assert!(w[1].upper_bound <= w[0].upper_bound + 1e-9);
        }
        assert!(out.trace.last().unwrap().log_line().starts_with("iter="));
    }
}
