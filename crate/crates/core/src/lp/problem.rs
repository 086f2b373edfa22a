use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObjectiveSense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowSense {
    Le,
    Eq,
    Ge,
}

impl RowSense {
    fn symbol(self) -> &'static str {
        match self {
            RowSense::Le => "<=",
            RowSense::Eq => "=",
            RowSense::Ge => ">=",
        }
    }
}

/// A linear program with dense constraint rows, optional variable bounds and
/// integrality flags. Variables default to `[0, +inf)` and continuous.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem<T> {
    pub sense: ObjectiveSense,
    pub objective: Vec<T>,
    pub rows: Vec<Vec<T>>,
    pub row_senses: Vec<RowSense>,
    pub rhs: Vec<T>,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
    pub integer: Vec<bool>,
}

impl<T: Scalar> LpProblem<T> {
    pub fn new(sense: ObjectiveSense, num_vars: usize) -> Self {
        Self {
            sense,
            objective: vec![T::zero(); num_vars],
            rows: Vec::new(),
            row_senses: Vec::new(),
            rhs: Vec::new(),
            lower: vec![T::zero(); num_vars],
            upper: vec![T::infinity(); num_vars],
            integer: vec![false; num_vars],
        }
    }

    pub fn maximize(objective: Vec<T>) -> Self {
        let mut p = Self::new(ObjectiveSense::Maximize, objective.len());
        p.objective = objective;
        p
    }

    pub fn minimize(objective: Vec<T>) -> Self {
        let mut p = Self::new(ObjectiveSense::Minimize, objective.len());
        p.objective = objective;
        p
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Appends a constraint row and returns its index.
    pub fn add_row(&mut self, coeffs: Vec<T>, sense: RowSense, rhs: T) -> usize {
        self.rows.push(coeffs);
        self.row_senses.push(sense);
        self.rhs.push(rhs);
        self.rows.len() - 1
    }

    /// Appends a constraint given as `(column, coefficient)` pairs.
    pub fn add_sparse_row(&mut self, terms: &[(usize, T)], sense: RowSense, rhs: T) -> usize {
        let mut row = vec![T::zero(); self.num_vars()];
        for &(j, a) in terms {
            row[j] = row[j] + a;
        }
        self.add_row(row, sense, rhs)
    }

    pub fn set_bounds(&mut self, var: usize, lower: T, upper: T) {
        self.lower[var] = lower;
        self.upper[var] = upper;
    }

    pub fn set_integer(&mut self, var: usize, integer: bool) {
        self.integer[var] = integer;
    }

    pub fn has_integers(&self) -> bool {
        self.integer.iter().any(|&b| b)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        let m = self.rows.len();
        if self.row_senses.len() != m || self.rhs.len() != m {
            return Err(Error::Dimension(format!(
                "{m} rows but {} senses and {} right-hand sides",
                self.row_senses.len(),
                self.rhs.len()
            )));
        }
        if self.lower.len() != n || self.upper.len() != n || self.integer.len() != n {
            return Err(Error::Dimension(format!("bound or integrality vectors do not have {n} entries")));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Dimension(format!("row {i} has {} coefficients, expected {n}", row.len())));
            }
            if row.iter().any(|a| !a.is_finite()) || !self.rhs[i].is_finite() {
                return Err(Error::InvalidArgument(format!("row {i} has a non-finite entry")));
            }
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("objective has a non-finite coefficient".into()));
        }
        for j in 0..n {
            if self.lower[j].is_nan() || self.upper[j].is_nan() || self.lower[j] > self.upper[j] {
                return Err(Error::InvalidArgument(format!(
                    "variable {j} has bounds [{}, {}]",
                    self.lower[j], self.upper[j]
                )));
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[T]) -> T {
        self.objective.iter().zip(x).map(|(&c, &v)| c * v).sum()
    }

    /// Row activities `A x`.
    pub fn activities(&self, x: &[T]) -> Vec<T> {
        self.rows
            .iter()
            .map(|row| row.iter().zip(x).map(|(&a, &v)| a * v).sum())
            .collect()
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[T]) -> T {
        let mut worst = T::zero();
        for ((act, &sense), &b) in self.activities(x).into_iter().zip(&self.row_senses).zip(&self.rhs) {
            let v = match sense {
                RowSense::Le => act - b,
                RowSense::Ge => b - act,
                RowSense::Eq => (act - b).abs(),
            };
            worst = worst.max(v);
        }
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        worst
    }

    /// Human-readable LP-file style dump, one constraint per line.
    pub fn to_lp_string(&self) -> String {
        let mut out = String::new();
        let head = match self.sense {
            ObjectiveSense::Maximize => "Maximize",
            ObjectiveSense::Minimize => "Minimize",
        };
        let _ = writeln!(out, "{head}\n obj: {}", linear_expr(&self.objective));
        let _ = writeln!(out, "Subject To");
        for (i, row) in self.rows.iter().enumerate() {
            let _ = writeln!(out, " r{i}: {} {} {}", linear_expr(row), self.row_senses[i].symbol(), self.rhs[i]);
        }
        let _ = writeln!(out, "Bounds");
        for j in 0..self.num_vars() {
            let (l, u) = (self.lower[j], self.upper[j]);
            if l == T::zero() && u == T::infinity() {
                continue;
            }
            let lo = if l == T::neg_infinity() { "-inf".to_string() } else { l.to_string() };
            let hi = if u == T::infinity() { "+inf".to_string() } else { u.to_string() };
            let _ = writeln!(out, " {lo} <= x{j} <= {hi}");
        }
        let ints: Vec<String> = (0..self.num_vars()).filter(|&j| self.integer[j]).map(|j| format!("x{j}")).collect();
        if !ints.is_empty() {
            let _ = writeln!(out, "General\n {}", ints.join(" "));
        }
        out.push_str("End\n");
        out
    }
}

fn linear_expr<T: Scalar>(coeffs: &[T]) -> String {
    let terms: Vec<String> = coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(j, c)| {
            if *c < T::zero() {
                format!("- {} x{j}", c.abs())
            } else {
                format!("+ {c} x{j}")
            }
        })
        .collect();
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join(" ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution<T> {
    pub status: Status,
    /// Primal point. Meaningful when optimal, and for a MIP that hit its node
    /// limit while holding an incumbent.
    pub x: Vec<T>,
    pub objective: T,
    /// Best proven bound on the optimum. Equals `objective` for an LP; for a
    /// MIP solved to a nonzero gap it may be better than `objective`.
    pub bound: T,
    /// Shadow price of every row (`d objective / d rhs`). Present for optimal
    /// pure-LP solves.
    pub duals: Option<Vec<T>>,
    /// Improving direction over the original variables. Present when unbounded.
    pub ray: Option<Vec<T>>,
    /// Simplex pivots (summed over nodes for a MIP).
    pub iterations: usize,
    /// Branch-and-bound nodes evaluated; zero for a pure LP solve.
    pub nodes: usize,
}

impl<T: Scalar> LpSolution<T> {
    pub(crate) fn with_status(status: Status, n: usize) -> Self {
        Self {
            status,
            x: vec![T::zero(); n],
            objective: T::nan(),
            bound: T::nan(),
            duals: None,
            ray: None,
            iterations: 0,
            nodes: 0,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }
}

/// Row duals of an optimal LP solution.
pub fn extract_duals<T: Scalar>(solution: &LpSolution<T>) -> Result<&[T]> {
    match (&solution.status, &solution.duals) {
        (Status::Optimal, Some(d)) => Ok(d),
        (Status::Optimal, None) => Err(Error::State("duals are only available for pure LP solves".into())),
        (s, _) => Err(Error::State(format!("duals requested from a {s:?} solution"))),
    }
}

/// Improving ray of an unbounded LP solution.
pub fn extract_ray<T: Scalar>(solution: &LpSolution<T>) -> Result<&[T]> {
    match (&solution.status, &solution.ray) {
        (Status::Unbounded, Some(r)) => Ok(r),
        (s, _) => Err(Error::State(format!("ray requested from a {s:?} solution"))),
    }
}
