use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::Result;
use crate::lp::problem::{LpProblem, LpSolution, ObjectiveSense, Status};
use crate::lp::simplex::{solve_lp_with, SimplexOptions};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy)]
pub struct MipOptions {
    pub node_limit: usize,
    /// Absolute optimality gap used for pruning.
    pub gap: f64,
    /// Relative gap: a node is pruned when its bound is within
    /// `max(gap, relative_gap * (1 + |incumbent|))` of the incumbent.
    pub relative_gap: f64,
    pub simplex: SimplexOptions,
}

impl Default for MipOptions {
    fn default() -> Self {
        Self { node_limit: 1_000_000, gap: 1e-6, relative_gap: 0.0, simplex: SimplexOptions::default() }
    }
}

pub fn solve_mip<T: Scalar>(problem: &LpProblem<T>) -> Result<LpSolution<T>> {
    solve_mip_with(problem, &MipOptions::default())
}

struct Node<T> {
    /// Relaxation bound in maximization orientation.
    bound: f64,
    seq: usize,
    lower: Vec<T>,
    upper: Vec<T>,
    x: Vec<T>,
}

impl<T> PartialEq for Node<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T> Eq for Node<T> {}
impl<T> PartialOrd for Node<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Node<T> {
    // Max-heap: best bound first, then the node created earliest.
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound.total_cmp(&other.bound).then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Best-first branch-and-bound. Branches on the most fractional integer
/// variable (lowest index on ties); the floor child is created first and wins
/// ties in the queue.
pub fn solve_mip_with<T: Scalar>(problem: &LpProblem<T>, options: &MipOptions) -> Result<LpSolution<T>> {
    problem.validate()?;
    let n = problem.num_vars();
    let orient = match problem.sense {
        ObjectiveSense::Maximize => 1.0,
        ObjectiveSense::Minimize => -1.0,
    };
    let mut work = problem.clone();
    // Integer variables get integral bounds up front.
    for j in 0..n {
        if problem.integer[j] {
            work.lower[j] = work.lower[j].ceil();
            work.upper[j] = work.upper[j].floor();
            if work.lower[j] > work.upper[j] {
                return Ok(LpSolution::with_status(Status::Infeasible, n));
            }
        }
    }

    let root = solve_lp_with(&work, &options.simplex)?;
    let mut iterations = root.iterations;
    let mut nodes = 1;
    match root.status {
        Status::Optimal => {}
        _ => {
            let mut s = root;
            s.duals = None;
            s.nodes = nodes;
            return Ok(s);
        }
    }

    let mut incumbent: Option<(f64, Vec<T>)> = None;
    let mut heap = BinaryHeap::new();
    let mut seq = 0;
    // Best bound among nodes pruned or left unexplored.
    let mut open_bound = f64::NEG_INFINITY;
    let tolerance = |best: f64| options.gap.max(options.relative_gap * (1.0 + best.abs()));
    let offer = |incumbent: &mut Option<(f64, Vec<T>)>, value: f64, x: Vec<T>| {
        if incumbent.as_ref().is_none_or(|(best, _)| value > *best) {
            *incumbent = Some((value, x));
        }
    };

    let mut pending = vec![(work.lower.clone(), work.upper.clone(), root)];
    let mut hit_limit = false;
    loop {
        for (lower, upper, sol) in pending.drain(..) {
            let bound = orient * sol.objective.as_f64();
            match branching_variable(problem, &sol.x) {
                None => {
                    let x = snap(problem, sol.x);
                    let value = orient * problem.objective_value(&x).as_f64();
                    offer(&mut incumbent, value, x);
                }
                Some(_) => {
                    if incumbent.is_none() || seq % HEURISTIC_EVERY == 0 {
                        if let Some((value, x)) = rounding_heuristic(&work, &lower, &upper, &sol.x, orient, options)? {
                            offer(&mut incumbent, value, x);
                        }
                    }
                    heap.push(Node { bound, seq, lower, upper, x: sol.x });
                    seq += 1;
                }
            }
        }
        let Some(node) = heap.pop() else { break };
        if let Some((best, _)) = &incumbent {
            if node.bound <= *best + tolerance(*best) {
                open_bound = open_bound.max(node.bound);
                break;
            }
        }
        if nodes >= options.node_limit {
            open_bound = open_bound.max(node.bound);
            hit_limit = true;
            break;
        }
        let j = branching_variable(problem, &node.x).expect("queued nodes are fractional");
        let v = node.x[j];
        for (lo, hi) in [(node.lower[j], v.floor()), (v.ceil(), node.upper[j])] {
            if lo > hi {
                continue;
            }
            work.lower.clone_from(&node.lower);
            work.upper.clone_from(&node.upper);
            work.lower[j] = lo;
            work.upper[j] = hi;
            let sol = solve_lp_with(&work, &options.simplex)?;
            iterations += sol.iterations;
            nodes += 1;
            if sol.status == Status::Optimal {
                pending.push((work.lower.clone(), work.upper.clone(), sol));
            }
        }
    }

    let status = if hit_limit {
        Status::IterationLimit
    } else if incumbent.is_some() {
        Status::Optimal
    } else {
        Status::Infeasible
    };
    let mut out = LpSolution::with_status(status, n);
    out.iterations = iterations;
    out.nodes = nodes;
    if let Some((value, x)) = incumbent {
        out.objective = problem.objective_value(&x);
        out.bound = T::of(orient * value.max(open_bound));
        out.x = x;
    }
    Ok(out)
}

/// Nodes between rounding-heuristic calls once an incumbent exists.
const HEURISTIC_EVERY: usize = 32;

/// Fixes the integer variables at `x` rounded down (then to nearest) within
/// the node box and re-optimizes the continuous ones. Returns a feasible point
/// and its max-oriented value if either rounding works.
fn rounding_heuristic<T: Scalar>(
    work: &LpProblem<T>,
    lower: &[T],
    upper: &[T],
    x: &[T],
    orient: f64,
    options: &MipOptions,
) -> Result<Option<(f64, Vec<T>)>> {
    let mut fixed = work.clone();
    fixed.lower.copy_from_slice(lower);
    fixed.upper.copy_from_slice(upper);
    let continuous = work.integer.iter().any(|&i| !i);
    for round in [T::floor as fn(T) -> T, T::round] {
        for j in 0..x.len() {
            if work.integer[j] {
                let v = round(x[j]).max(lower[j]).min(upper[j]);
                fixed.lower[j] = v;
                fixed.upper[j] = v;
            }
        }
        let point = if continuous {
            let sol = solve_lp_with(&fixed, &options.simplex)?;
            if sol.status != Status::Optimal {
                continue;
            }
            snap(work, sol.x)
        } else {
            let p = fixed.lower.clone();
            if fixed.max_violation(&p) > T::feasibility_tol() {
                continue;
            }
            p
        };
        let value = orient * work.objective_value(&point).as_f64();
        return Ok(Some((value, point)));
    }
    Ok(None)
}

fn branching_variable<T: Scalar>(problem: &LpProblem<T>, x: &[T]) -> Option<usize> {
    let tol = T::integrality_tol();
    let mut best: Option<(usize, T)> = None;
    for j in 0..x.len() {
        if !problem.integer[j] {
            continue;
        }
        let frac = x[j] - x[j].floor();
        let dist = frac.min(T::one() - frac);
        if dist > tol && best.is_none_or(|(_, d)| dist > d) {
            best = Some((j, dist));
        }
    }
    best.map(|(j, _)| j)
}

fn snap<T: Scalar>(problem: &LpProblem<T>, mut x: Vec<T>) -> Vec<T> {
    for (j, v) in x.iter_mut().enumerate() {
        if problem.integer[j] {
            *v = v.round();
        }
    }
    x
}
