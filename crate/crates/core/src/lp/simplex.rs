use crate::error::Result;
use crate::lp::problem::{LpProblem, LpSolution, ObjectiveSense, RowSense, Status};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, Default)]
pub struct SimplexOptions {
    /// Pivot cap over both phases. Defaults to `50 * (rows + columns)` of the
    /// internal standard-form tableau.
    pub max_iterations: Option<usize>,
}

/// Solves the LP relaxation of `problem` (integrality flags are ignored).
pub fn solve_lp<T: Scalar>(problem: &LpProblem<T>) -> Result<LpSolution<T>> {
    solve_lp_with(problem, &SimplexOptions::default())
}

pub fn solve_lp_with<T: Scalar>(problem: &LpProblem<T>, options: &SimplexOptions) -> Result<LpSolution<T>> {
    problem.validate()?;
    let form = StandardForm::build(problem);
    let mut tableau = Tableau::new(&form);
    let cap = options
        .max_iterations
        .unwrap_or(50 * (tableau.m + tableau.ncols));
    let n = problem.num_vars();

    // Phase 1: drive the artificial sum to zero.
    if tableau.has_artificials() {
        tableau.load_phase_one();
        match tableau.run(cap, false) {
            Outcome::Optimal => {}
            Outcome::Limit => return Ok(limit(n, tableau.iterations)),
            Outcome::Unbounded(_) => unreachable!("phase one objective is bounded below"),
        }
        let scale = T::one() + form.rhs.iter().fold(T::zero(), |a, &b| a.max(b.abs()));
        if tableau.objective_value() > T::feasibility_tol() * scale {
            let mut s = LpSolution::with_status(Status::Infeasible, n);
            s.iterations = tableau.iterations;
            return Ok(s);
        }
        tableau.evict_artificials();
    }

    tableau.load_phase_two(&form.cost);
    let outcome = tableau.run(cap, true);
    let iterations = tableau.iterations;
    match outcome {
        Outcome::Limit => Ok(limit(n, iterations)),
        Outcome::Unbounded(q) => {
            let dz = tableau.ray_direction(q);
            let ray = form.map_direction(&dz);
            let mut s = LpSolution::with_status(Status::Unbounded, n);
            s.ray = Some(ray);
            s.objective = match problem.sense {
                ObjectiveSense::Maximize => T::infinity(),
                ObjectiveSense::Minimize => T::neg_infinity(),
            };
            s.bound = s.objective;
            s.iterations = iterations;
            Ok(s)
        }
        Outcome::Optimal => {
            let z = tableau.primal();
            let x = form.map_point(&z);
            let objective = problem.objective_value(&x);
            let orientation = match problem.sense {
                ObjectiveSense::Maximize => -T::one(),
                ObjectiveSense::Minimize => T::one(),
            };
            let duals = (0..form.orig_rows)
                .map(|i| {
                    let y = -tableau.reduced_cost(tableau.unit_col[i]);
                    let flip = if form.flipped[i] { -T::one() } else { T::one() };
                    let d = y * flip * orientation;
                    if d == T::zero() {
                        T::zero()
                    } else {
                        d
                    }
                })
                .collect();
            Ok(LpSolution {
                status: Status::Optimal,
                x,
                objective,
                bound: objective,
                duals: Some(duals),
                ray: None,
                iterations,
                nodes: 0,
            })
        }
    }
}

fn limit<T: Scalar>(n: usize, iterations: usize) -> LpSolution<T> {
    let mut s = LpSolution::with_status(Status::IterationLimit, n);
    s.iterations = iterations;
    s
}

/// How an original variable is expressed through nonnegative internal columns.
#[derive(Debug, Clone, Copy)]
enum ColMap<T> {
    /// `x = offset + z`
    Shift { col: usize, offset: T },
    /// `x = offset - z`
    Mirror { col: usize, offset: T },
    /// `x = z_pos - z_neg`
    Split { pos: usize, neg: usize },
}

/// `min cost . z  s.t.  rows z (sense) rhs,  z >= 0,  rhs >= 0`.
struct StandardForm<T> {
    maps: Vec<ColMap<T>>,
    cols: usize,
    rows: Vec<Vec<T>>,
    senses: Vec<RowSense>,
    rhs: Vec<T>,
    flipped: Vec<bool>,
    orig_rows: usize,
    cost: Vec<T>,
}

impl<T: Scalar> StandardForm<T> {
    fn build(p: &LpProblem<T>) -> Self {
        let n = p.num_vars();
        let mut maps = Vec::with_capacity(n);
        let mut cols = 0;
        for j in 0..n {
            let (l, u) = (p.lower[j], p.upper[j]);
            let map = if l.is_finite() {
                ColMap::Shift { col: cols, offset: l }
            } else if u.is_finite() {
                ColMap::Mirror { col: cols, offset: u }
            } else {
                cols += 1;
                ColMap::Split { pos: cols - 1, neg: cols }
            };
            cols += 1;
            maps.push(map);
        }

        let orient = match p.sense {
            ObjectiveSense::Maximize => -T::one(),
            ObjectiveSense::Minimize => T::one(),
        };
        let mut cost = vec![T::zero(); cols];
        for (j, map) in maps.iter().enumerate() {
            let c = p.objective[j] * orient;
            match *map {
                ColMap::Shift { col, .. } => cost[col] = c,
                ColMap::Mirror { col, .. } => cost[col] = -c,
                ColMap::Split { pos, neg } => {
                    cost[pos] = c;
                    cost[neg] = -c;
                }
            }
        }

        let mut rows = Vec::with_capacity(p.num_rows());
        let mut senses = Vec::with_capacity(p.num_rows());
        let mut rhs = Vec::with_capacity(p.num_rows());
        for (i, orig) in p.rows.iter().enumerate() {
            let mut row = vec![T::zero(); cols];
            let mut b = p.rhs[i];
            for (j, &a) in orig.iter().enumerate() {
                if a == T::zero() {
                    continue;
                }
                match maps[j] {
                    ColMap::Shift { col, offset } => {
                        row[col] = a;
                        b = b - a * offset;
                    }
                    ColMap::Mirror { col, offset } => {
                        row[col] = -a;
                        b = b - a * offset;
                    }
                    ColMap::Split { pos, neg } => {
                        row[pos] = a;
                        row[neg] = -a;
                    }
                }
            }
            rows.push(row);
            senses.push(p.row_senses[i]);
            rhs.push(b);
        }
        let orig_rows = rows.len();
        // Finite upper bounds on shifted columns become explicit rows.
        for (j, map) in maps.iter().enumerate() {
            if let ColMap::Shift { col, offset } = *map {
                if p.upper[j].is_finite() {
                    let mut row = vec![T::zero(); cols];
                    row[col] = T::one();
                    rows.push(row);
                    senses.push(RowSense::Le);
                    rhs.push(p.upper[j] - offset);
                }
            }
        }

        let mut flipped = vec![false; rows.len()];
        for i in 0..rows.len() {
            if rhs[i] < T::zero() {
                flipped[i] = true;
                rhs[i] = -rhs[i];
                for a in rows[i].iter_mut() {
                    *a = -*a;
                }
                senses[i] = match senses[i] {
                    RowSense::Le => RowSense::Ge,
                    RowSense::Ge => RowSense::Le,
                    RowSense::Eq => RowSense::Eq,
                };
            }
        }

        Self { maps, cols, rows, senses, rhs, flipped, orig_rows, cost }
    }

    fn map_point(&self, z: &[T]) -> Vec<T> {
        self.maps
            .iter()
            .map(|m| match *m {
                ColMap::Shift { col, offset } => offset + z[col],
                ColMap::Mirror { col, offset } => offset - z[col],
                ColMap::Split { pos, neg } => z[pos] - z[neg],
            })
            .collect()
    }

    fn map_direction(&self, dz: &[T]) -> Vec<T> {
        self.maps
            .iter()
            .map(|m| match *m {
                ColMap::Shift { col, .. } => dz[col],
                ColMap::Mirror { col, .. } => -dz[col],
                ColMap::Split { pos, neg } => dz[pos] - dz[neg],
            })
            .collect()
    }
}

enum Outcome {
    Optimal,
    Unbounded(usize),
    Limit,
}

/// Row-major dense tableau; row `m` holds reduced costs and `-objective`.
struct Tableau<T> {
    m: usize,
    ncols: usize,
    width: usize,
    data: Vec<T>,
    basis: Vec<usize>,
    artificial: Vec<bool>,
    unit_col: Vec<usize>,
    iterations: usize,
}

impl<T: Scalar> Tableau<T> {
    fn new(form: &StandardForm<T>) -> Self {
        let m = form.rows.len();
        let n_slack = form.senses.iter().filter(|s| **s != RowSense::Eq).count();
        let n_art = form.senses.iter().filter(|s| **s != RowSense::Le).count();
        let ncols = form.cols + n_slack + n_art;
        let width = ncols + 1;
        let mut data = vec![T::zero(); (m + 1) * width];
        let mut basis = vec![0; m];
        let mut unit_col = vec![0; m];
        let mut artificial = vec![false; ncols];
        let mut next_slack = form.cols;
        let mut next_art = form.cols + n_slack;
        for i in 0..m {
            let r = i * width;
            data[r..r + form.cols].copy_from_slice(&form.rows[i]);
            data[r + ncols] = form.rhs[i];
            match form.senses[i] {
                RowSense::Le => {
                    data[r + next_slack] = T::one();
                    basis[i] = next_slack;
                    unit_col[i] = next_slack;
                    next_slack += 1;
                }
                RowSense::Ge => {
                    data[r + next_slack] = -T::one();
                    next_slack += 1;
                    data[r + next_art] = T::one();
                    artificial[next_art] = true;
                    basis[i] = next_art;
                    unit_col[i] = next_art;
                    next_art += 1;
                }
                RowSense::Eq => {
                    data[r + next_art] = T::one();
                    artificial[next_art] = true;
                    basis[i] = next_art;
                    unit_col[i] = next_art;
                    next_art += 1;
                }
            }
        }
        Self { m, ncols, width, data, basis, artificial, unit_col, iterations: 0 }
    }

    fn has_artificials(&self) -> bool {
        self.artificial.iter().any(|&a| a)
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> T {
        self.data[i * self.width + j]
    }

    fn rhs(&self, i: usize) -> T {
        self.at(i, self.ncols)
    }

    fn reduced_cost(&self, j: usize) -> T {
        self.at(self.m, j)
    }

    /// Current internal objective value.
    fn objective_value(&self) -> T {
        -self.at(self.m, self.ncols)
    }

    fn load_phase_one(&mut self) {
        let obj = self.m * self.width;
        for k in 0..self.width {
            self.data[obj + k] = T::zero();
        }
        for i in 0..self.m {
            if !self.artificial[self.basis[i]] {
                continue;
            }
            let r = i * self.width;
            for k in 0..self.width {
                if k < self.ncols && self.artificial[k] {
                    continue;
                }
                self.data[obj + k] = self.data[obj + k] - self.data[r + k];
            }
        }
    }

    fn load_phase_two(&mut self, cost: &[T]) {
        let obj = self.m * self.width;
        for k in 0..self.width {
            self.data[obj + k] = if k < cost.len() { cost[k] } else { T::zero() };
        }
        for i in 0..self.m {
            let cb = if self.basis[i] < cost.len() { cost[self.basis[i]] } else { T::zero() };
            if cb == T::zero() {
                continue;
            }
            let r = i * self.width;
            for k in 0..self.width {
                self.data[obj + k] = self.data[obj + k] - cb * self.data[r + k];
            }
        }
    }

    /// Pivots every artificial variable that is still basic (at level zero)
    /// out of the basis where a structural column can replace it. Rows where
    /// none can are redundant and keep their artificial at zero.
    fn evict_artificials(&mut self) {
        for i in 0..self.m {
            if !self.artificial[self.basis[i]] {
                continue;
            }
            let mut best: Option<(usize, T)> = None;
            for j in 0..self.ncols {
                if self.artificial[j] {
                    continue;
                }
                let a = self.at(i, j).abs();
                if a > T::pivot_tol() * T::of(1e3) && best.is_none_or(|(_, b)| a > b) {
                    best = Some((j, a));
                }
            }
            if let Some((j, _)) = best {
                self.pivot(i, j);
            }
        }
    }

    /// Bland's rule: the lowest-index improving column enters; among rows tied
    /// in the ratio test, the one whose basic variable has the lowest index leaves.
    fn run(&mut self, cap: usize, block_artificials: bool) -> Outcome {
        let tol = T::optimality_tol();
        loop {
            let entering = (0..self.ncols)
                .find(|&j| !(block_artificials && self.artificial[j]) && self.reduced_cost(j) < -tol);
            let Some(q) = entering else {
                return Outcome::Optimal;
            };
            let mut leave: Option<(usize, T)> = None;
            for i in 0..self.m {
                let a = self.at(i, q);
                if a <= T::pivot_tol() {
                    continue;
                }
                let ratio = self.rhs(i).max(T::zero()) / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((r, best)) => {
                        let tie = T::pivot_tol() * (T::one() + best.abs());
                        if ratio < best - tie || (ratio <= best + tie && self.basis[i] < self.basis[r]) {
                            Some((i, ratio))
                        } else {
                            Some((r, best))
                        }
                    }
                };
            }
            let Some((r, _)) = leave else {
                return Outcome::Unbounded(q);
            };
            if self.iterations >= cap {
                return Outcome::Limit;
            }
            self.pivot(r, q);
            self.iterations += 1;
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let w = self.width;
        let start = r * w;
        let inv = T::one() / self.data[start + q];
        for k in start..start + w {
            self.data[k] = self.data[k] * inv;
        }
        self.data[start + q] = T::one();
        let pivot_row: Vec<T> = self.data[start..start + w].to_vec();
        for i in 0..=self.m {
            if i == r {
                continue;
            }
            let row = &mut self.data[i * w..(i + 1) * w];
            let f = row[q];
            if f == T::zero() {
                continue;
            }
            for (a, &p) in row.iter_mut().zip(&pivot_row) {
                *a = *a - f * p;
            }
            row[q] = T::zero();
        }
        self.basis[r] = q;
    }

    fn primal(&self) -> Vec<T> {
        let mut z = vec![T::zero(); self.ncols];
        for i in 0..self.m {
            z[self.basis[i]] = self.rhs(i).max(T::zero());
        }
        z
    }

    fn ray_direction(&self, q: usize) -> Vec<T> {
        let mut dz = vec![T::zero(); self.ncols];
        dz[q] = T::one();
        for i in 0..self.m {
            dz[self.basis[i]] = -self.at(i, q);
        }
        dz
    }
}
