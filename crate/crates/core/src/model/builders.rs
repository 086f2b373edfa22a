use crate::error::{Error, Result};
use crate::lp::{LpProblem, ObjectiveSense, RowSense};
use crate::model::{CsrpInstance, FirstStagePlan, ModelVariant, RecourseDecision};
use crate::scalar::{round_half_up_nonneg, Scalar};
use crate::scenario::ScenarioSet;

/// Index of arc `i -> j` (`i != j`) among the `r * (r - 1)` off-diagonal arcs.
#[inline]
fn arc(r: usize, i: usize, j: usize) -> usize {
    debug_assert!(i != j);
    i * (r - 1) + if j < i { j } else { j - 1 }
}

fn arcs(r: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..r).flat_map(move |i| (0..r).filter(move |&j| j != i).map(move |j| (i, j)))
}

/// Column layout of an extensive form: `x`, then per scenario `f`, the
/// off-diagonal `y`, and (paper-literal only) the surplus switches `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExtensiveLayout {
    pub locations: usize,
    pub scenarios: usize,
    pub switches: bool,
}

impl ExtensiveLayout {
    fn block(&self) -> usize {
        let r = self.locations;
        r + r * (r - 1) + if self.switches { r } else { 0 }
    }

    pub fn num_vars(&self) -> usize {
        self.locations + self.scenarios * self.block()
    }

    pub fn x(&self, i: usize) -> usize {
        i
    }

    pub fn f(&self, s: usize, i: usize) -> usize {
        self.locations + s * self.block() + i
    }

    pub fn y(&self, s: usize, i: usize, j: usize) -> usize {
        let r = self.locations;
        r + s * self.block() + r + arc(r, i, j)
    }

    pub fn b(&self, s: usize, i: usize) -> usize {
        assert!(self.switches, "layout has no surplus switches");
        let r = self.locations;
        r + s * self.block() + r + r * (r - 1) + i
    }

    /// Second-stage variable count, the quantity the direct-solve size guard limits.
    pub fn second_stage_vars(&self) -> usize {
        self.scenarios * self.block()
    }
}

#[derive(Debug, Clone)]
pub struct ExtensiveModel<T> {
    pub problem: LpProblem<T>,
    pub layout: ExtensiveLayout,
}

impl<T: Scalar> ExtensiveModel<T> {
    pub fn decode(&self, values: &[T]) -> (FirstStagePlan, RecourseDecision<T>) {
        let l = &self.layout;
        let r = l.locations;
        let plan = FirstStagePlan::from_values(&(0..r).map(|i| values[l.x(i)]).collect::<Vec<_>>());
        let mut moves = Vec::with_capacity(l.scenarios);
        let mut served = Vec::with_capacity(l.scenarios);
        for s in 0..l.scenarios {
            let mut m = vec![vec![0u64; r]; r];
            for (i, j) in arcs(r) {
                m[i][j] = round_half_up_nonneg(values[l.y(s, i, j)]);
            }
            moves.push(m);
            served.push((0..r).map(|i| values[l.f(s, i)]).collect());
        }
        (plan, RecourseDecision { moves, served })
    }
}

fn check_demands<T: Scalar>(instance: &CsrpInstance<T>, r_got: usize) -> Result<()> {
    if r_got != instance.num_locations() {
        return Err(Error::Dimension(format!(
            "demand covers {r_got} locations, instance has {}",
            instance.num_locations()
        )));
    }
    Ok(())
}

/// SAA extensive form: `x` integer and shared, `f` and `y` per scenario.
/// The objective is `sum_s p_s (r . f^s - t . y^s) - h . x`.
pub fn build_extensive<T: Scalar>(
    instance: &CsrpInstance<T>,
    scenarios: &ScenarioSet,
    variant: ModelVariant,
) -> Result<ExtensiveModel<T>> {
    instance.validate()?;
    check_demands(instance, scenarios.num_locations())?;
    let r = instance.num_locations();
    let layout = ExtensiveLayout {
        locations: r,
        scenarios: scenarios.len(),
        switches: variant == ModelVariant::PaperLiteral,
    };
    let cap = T::of(instance.capacity as f64);
    let mut p = LpProblem::new(ObjectiveSense::Maximize, layout.num_vars());
    for i in 0..r {
        let x = layout.x(i);
        p.objective[x] = -instance.holding[i];
        p.set_bounds(x, T::zero(), cap);
        p.set_integer(x, true);
    }
    p.add_sparse_row(&(0..r).map(|i| (layout.x(i), T::one())).collect::<Vec<_>>(), RowSense::Le, cap);

    for (s, demand) in scenarios.demands().iter().enumerate() {
        let prob: T = scenarios.probability(s);
        for i in 0..r {
            let f = layout.f(s, i);
            p.objective[f] = prob * instance.revenue[i];
            p.set_bounds(f, T::zero(), T::of(demand[i] as f64));
        }
        for (i, j) in arcs(r) {
            let y = layout.y(s, i, j);
            p.objective[y] = -prob * instance.transfer[i][j];
            p.set_integer(y, true);
        }
        for i in 0..r {
            let d = T::of(demand[i] as f64);
            // availability: f_i - inflow_i (+ outflow_i) - x_i <= 0
            let mut terms = vec![(layout.f(s, i), T::one()), (layout.x(i), -T::one())];
            terms.extend((0..r).filter(|&j| j != i).map(|j| (layout.y(s, j, i), -T::one())));
            if variant == ModelVariant::FlowBalance {
                terms.extend((0..r).filter(|&j| j != i).map(|j| (layout.y(s, i, j), T::one())));
            }
            p.add_sparse_row(&terms, RowSense::Le, T::zero());

            if variant == ModelVariant::PaperLiteral {
                // outflow_i <= max{0, x_i - d_i} through a switch b with
                //   outflow_i <= x_i - d_i b,  outflow_i <= C b,  x_i >= d_i b
                let b = layout.b(s, i);
                p.set_bounds(b, T::zero(), T::one());
                p.set_integer(b, true);
                let out: Vec<(usize, T)> = (0..r).filter(|&j| j != i).map(|j| (layout.y(s, i, j), T::one())).collect();
                let mut surplus = out.clone();
                surplus.push((layout.x(i), -T::one()));
                surplus.push((b, d));
                p.add_sparse_row(&surplus, RowSense::Le, T::zero());
                let mut gate = out;
                gate.push((b, -cap));
                p.add_sparse_row(&gate, RowSense::Le, T::zero());
                p.add_sparse_row(&[(layout.x(i), -T::one()), (b, d)], RowSense::Le, T::zero());
            }
        }
    }
    Ok(ExtensiveModel { problem: p, layout })
}

/// Single-scenario model on mean demand (rounded half-up).
pub fn build_deterministic<T: Scalar>(
    instance: &CsrpInstance<T>,
    avg_demand: &[f64],
    variant: ModelVariant,
) -> Result<ExtensiveModel<T>> {
    check_demands(instance, avg_demand.len())?;
    if avg_demand.iter().any(|&d| !(d >= 0.0) || !d.is_finite()) {
        return Err(Error::InvalidArgument("average demands must be finite and nonnegative".into()));
    }
    let demand: Vec<u64> = avg_demand.iter().map(|&d| round_half_up_nonneg(d)).collect();
    let scenarios = ScenarioSet::uniform(instance.location_ids.clone(), vec![demand])?;
    build_extensive(instance, &scenarios, variant)
}

/// Columns of a single recourse problem: `f`, then off-diagonal `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecourseLayout {
    pub locations: usize,
}

impl RecourseLayout {
    pub fn f(&self, i: usize) -> usize {
        i
    }

    pub fn y(&self, i: usize, j: usize) -> usize {
        self.locations + arc(self.locations, i, j)
    }

    pub fn num_vars(&self) -> usize {
        self.locations * self.locations
    }
}

/// Second-stage problem for a fixed plan and a realized demand vector. The
/// objective `r . f - t . y` excludes the holding cost, which is reported in
/// `holding_cost`.
#[derive(Debug, Clone)]
pub struct RecourseModel<T> {
    pub problem: LpProblem<T>,
    pub layout: RecourseLayout,
    pub holding_cost: T,
}

impl<T: Scalar> RecourseModel<T> {
    /// Move matrix and served demand from a solution vector.
    pub fn decode(&self, values: &[T]) -> (Vec<Vec<u64>>, Vec<T>) {
        let r = self.layout.locations;
        let mut moves = vec![vec![0u64; r]; r];
        for (i, j) in arcs(r) {
            moves[i][j] = round_half_up_nonneg(values[self.layout.y(i, j)]);
        }
        (moves, (0..r).map(|i| values[self.layout.f(i)]).collect())
    }
}

pub fn build_recourse<T: Scalar>(
    instance: &CsrpInstance<T>,
    plan: &FirstStagePlan,
    demand: &[u64],
    variant: ModelVariant,
) -> Result<RecourseModel<T>> {
    instance.validate()?;
    plan.check(instance)?;
    check_demands(instance, demand.len())?;
    let r = instance.num_locations();
    let layout = RecourseLayout { locations: r };
    let mut p = LpProblem::new(ObjectiveSense::Maximize, layout.num_vars());
    for i in 0..r {
        p.objective[layout.f(i)] = instance.revenue[i];
        p.set_bounds(layout.f(i), T::zero(), T::of(demand[i] as f64));
    }
    for (i, j) in arcs(r) {
        p.objective[layout.y(i, j)] = -instance.transfer[i][j];
        p.set_integer(layout.y(i, j), true);
    }
    for i in 0..r {
        let x = T::of(plan.x[i] as f64);
        let mut terms = vec![(layout.f(i), T::one())];
        terms.extend((0..r).filter(|&j| j != i).map(|j| (layout.y(j, i), -T::one())));
        let out: Vec<(usize, T)> = (0..r).filter(|&j| j != i).map(|j| (layout.y(i, j), T::one())).collect();
        match variant {
            ModelVariant::FlowBalance => {
                terms.extend(out);
                p.add_sparse_row(&terms, RowSense::Le, x);
            }
            ModelVariant::PaperLiteral => {
                p.add_sparse_row(&terms, RowSense::Le, x);
                let surplus = plan.x[i].saturating_sub(demand[i]);
                p.add_sparse_row(&out, RowSense::Le, T::of(surplus as f64));
            }
        }
    }
    Ok(RecourseModel { problem: p, holding_cost: instance.holding_cost(plan), layout })
}

/// Which first-stage quantities a Benders subproblem takes from the master.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TemplateSplit {
    /// Master fixes `x`; the subproblem optimizes `f` and `y`.
    #[default]
    LShaped,
    /// Master fixes `x` and the scenario's `f`; the subproblem only moves cars.
    FixedService,
}

/// A recourse LP whose right-hand side is affine in master coordinates:
/// `max c . z  s.t.  A z <= b0 + B m,  z >= 0`.
///
/// Master coordinates are `x_0..x_{R-1}` followed, under
/// [`TemplateSplit::FixedService`], by the scenario's `f_0..f_{R-1}`.
#[derive(Debug, Clone)]
pub struct RecourseTemplate<T> {
    pub objective: Vec<T>,
    pub rows: Vec<Vec<T>>,
    pub rhs_constant: Vec<T>,
    pub rhs_coupling: Vec<Vec<(usize, T)>>,
}

impl<T: Scalar> RecourseTemplate<T> {
    pub fn rhs_at(&self, master: &[T]) -> Vec<T> {
        self.rhs_constant
            .iter()
            .zip(&self.rhs_coupling)
            .map(|(&b, terms)| terms.iter().fold(b, |acc, &(k, a)| acc + a * master[k]))
            .collect()
    }
}

/// Builds the subproblem template for one scenario. Under the paper-literal
/// variant the surplus cap `max{0, x_i - d_i}` is replaced by the affine piece
/// active at `x_bar`, so cuts are only locally valid there.
pub fn recourse_template<T: Scalar>(
    instance: &CsrpInstance<T>,
    demand: &[u64],
    variant: ModelVariant,
    split: TemplateSplit,
    x_bar: &[T],
) -> RecourseTemplate<T> {
    let r = instance.num_locations();
    let n_arcs = r * (r - 1);
    let (offset, nz) = match split {
        TemplateSplit::LShaped => (r, r + n_arcs),
        TemplateSplit::FixedService => (0, n_arcs),
    };
    let y = |i: usize, j: usize| offset + arc(r, i, j);
    let mut objective = vec![T::zero(); nz];
    for (i, j) in arcs(r) {
        objective[y(i, j)] = -instance.transfer[i][j];
    }
    if split == TemplateSplit::LShaped {
        objective[..r].copy_from_slice(&instance.revenue);
    }

    let mut t = RecourseTemplate { objective, rows: Vec::new(), rhs_constant: Vec::new(), rhs_coupling: Vec::new() };
    let mut push = |row: Vec<T>, b0: T, coupling: Vec<(usize, T)>| {
        t.rows.push(row);
        t.rhs_constant.push(b0);
        t.rhs_coupling.push(coupling);
    };
    for i in 0..r {
        let d = T::of(demand[i] as f64);
        // availability
        let mut row = vec![T::zero(); nz];
        for j in (0..r).filter(|&j| j != i) {
            row[y(j, i)] = -T::one();
            if variant == ModelVariant::FlowBalance {
                row[y(i, j)] = T::one();
            }
        }
        let mut coupling = vec![(i, T::one())];
        match split {
            TemplateSplit::LShaped => row[i] = T::one(),
            TemplateSplit::FixedService => coupling.push((r + i, -T::one())),
        }
        push(row, T::zero(), coupling);

        if split == TemplateSplit::LShaped {
            let mut cap = vec![T::zero(); nz];
            cap[i] = T::one();
            push(cap, d, Vec::new());
        }

        if variant == ModelVariant::PaperLiteral {
            let mut out = vec![T::zero(); nz];
            for j in (0..r).filter(|&j| j != i) {
                out[y(i, j)] = T::one();
            }
            if x_bar[i] - d >= -T::integrality_tol() {
                push(out, -d, vec![(i, T::one())]);
            } else {
                push(out, T::zero(), Vec::new());
            }
        }
    }
    t
}
